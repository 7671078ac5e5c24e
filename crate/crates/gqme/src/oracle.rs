//! Numerically exact reference dynamics by full diagonalization.
//!
//! The composite Hamiltonian is diagonalized once; afterwards each time point
//! costs a handful of elementwise matrix operations, so dense time grids are
//! cheap and points can be evaluated in parallel.
//!
//! With `H = V E V^H` and `U(t) = exp(-i H t)`, conjugation by `U(t)` acts on
//! an eigenbasis-rotated operator elementwise: `(V^H U A U^H V)_qp =
//! A~_qp u_q conj(u_p)` with `u_q = exp(-i E_q t)`. Every quantity produced
//! here - the reduced propagator, the projection-free input `F`, and its
//! analytic derivative - is a trace of such a modulated operator against a
//! rotated observable, so the engine stores the rotated operators and sums
//! elementwise products per time point.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::liouville::SuperOperator;
use crate::scalar::{c, ci, cr, RealScalar};
use crate::series::{PfiSeries, PropagatorSeries};
use crate::spinboson::{
    build_hamiltonians, full_hamiltonian, thermal_bath_state, BathModes, SpinBosonError,
    SpinBosonParams, TruncatedBathSpace,
};
use crate::{CMatrix, CVector};

/// Errors from the exact-dynamics engine.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] SpinBosonError),
    #[error(
        "exact dynamics not converged: propagator entries change by {change:.3e} \
         when fock_dim grows from {from} to {to} (tolerance {tol:.1e})"
    )]
    NotConverged {
        change: f64,
        from: usize,
        to: usize,
        tol: f64,
    },
}

/// Trace out the bath of an operator on the system (x) bath space.
pub fn partial_trace_bath<T: RealScalar>(full: &CMatrix<T>, ne: usize) -> CMatrix<T> {
    let bath = full.nrows() / ne;
    assert_eq!(full.nrows(), ne * bath, "dimension not divisible by ne");
    let mut out = CMatrix::zeros(ne, ne);
    for a in 0..ne {
        for b in 0..ne {
            let mut sum = Complex::new(T::zero(), T::zero());
            for m in 0..bath {
                sum += full[(a * bath + m, b * bath + m)];
            }
            out[(a, b)] = sum;
        }
    }
    out
}

/// Spectral engine for the exact reduced dynamics of one spin-boson model.
///
/// Does not enforce the full parameter invariants, so degenerate inputs such
/// as a vanishing electronic coupling stay representable for sanity checks.
#[derive(Debug, Clone)]
pub struct ExactEngine<T: RealScalar> {
    energies: Vec<T>,
    /// Rotated basis initial operators `V^H (|c><d| (x) rho_n) V`, index `c*ne+d`.
    x_tilde: Vec<CMatrix<T>>,
    /// Energy-commutator of `x_tilde`: entries scaled by `E_q - E_p`.
    xp_tilde: Vec<CMatrix<T>>,
    /// Transposed rotated readout projectors `(V^H (|b><a| (x) I) V)^T`, index `a*ne+b`.
    ot: Vec<CMatrix<T>>,
    /// `ot` entries scaled by `E_q - E_p`: the transposed rotated `[|b><a| (x) I, H]`.
    mt: Vec<CMatrix<T>>,
    ne: usize,
    dim: usize,
}

impl<T: RealScalar> ExactEngine<T> {
    /// Diagonalize the composite Hamiltonian and cache the rotated operators.
    pub fn new(
        params: &SpinBosonParams<T>,
        modes: &BathModes<T>,
        space: &TruncatedBathSpace,
    ) -> Result<Self, OracleError> {
        let ne = 2;
        let branches = build_hamiltonians(params, modes, space)?;
        let h = full_hamiltonian(&branches);
        let rho_n = thermal_bath_state(params, modes, space)?.rho;
        let dim = h.nrows();
        let bath = space.bath_dim();

        let eig = h.symmetric_eigen();
        let v = eig.eigenvectors;
        let vh = v.adjoint();
        let energies: Vec<T> = eig.eigenvalues.iter().copied().collect();
        let delta = CMatrix::from_fn(dim, dim, |q, p| cr(energies[q] - energies[p]));

        let mut x_tilde = Vec::with_capacity(ne * ne);
        let mut xp_tilde = Vec::with_capacity(ne * ne);
        for cd in 0..ne * ne {
            let mut sys = CMatrix::<T>::zeros(ne, ne);
            sys[(cd / ne, cd % ne)] = cr(T::one());
            let xt = &vh * sys.kronecker(&rho_n) * &v;
            xp_tilde.push(xt.component_mul(&delta));
            x_tilde.push(xt);
        }

        let eye_bath = CMatrix::<T>::identity(bath, bath);
        let mut ot = Vec::with_capacity(ne * ne);
        let mut mt = Vec::with_capacity(ne * ne);
        for ab in 0..ne * ne {
            let mut sys = CMatrix::<T>::zeros(ne, ne);
            // Reading out element (a, b) traces against |b><a| (x) I.
            sys[(ab % ne, ab / ne)] = cr(T::one());
            let o_t = (&vh * sys.kronecker(&eye_bath) * &v).transpose();
            mt.push(o_t.component_mul(&delta));
            ot.push(o_t);
        }

        Ok(Self {
            energies,
            x_tilde,
            xp_tilde,
            ot,
            mt,
            ne,
            dim,
        })
    }

    /// Composite-space dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenphases `u_q = exp(-i E_q t)`.
    fn phases(&self, t: T) -> CVector<T> {
        CVector::from_iterator(
            self.dim,
            self.energies.iter().map(|&e| {
                let a = -(e * t);
                c(a.cos(), a.sin())
            }),
        )
    }

    /// `out_qp = m_qp u_q conj(u_p)`: conjugation by `U(t)` in the eigenbasis.
    fn modulated(&self, m: &CMatrix<T>, u: &CVector<T>) -> CMatrix<T> {
        let mut out = m.clone();
        for p in 0..self.dim {
            let up = u[p].conj();
            let mut col = out.column_mut(p);
            for q in 0..self.dim {
                col[q] *= u[q] * up;
            }
        }
        out
    }

    fn contract(&self, readout: &[CMatrix<T>], evolved: &[CMatrix<T>]) -> SuperOperator<T> {
        let side = self.ne * self.ne;
        let mut out = CMatrix::zeros(side, side);
        for ab in 0..side {
            for cd in 0..side {
                out[(ab, cd)] = readout[ab].dot(&evolved[cd]);
            }
        }
        SuperOperator::new(out).expect("ne^2 side is a perfect square")
    }

    /// Exact reduced propagator `G(t)` on the system's Liouville space.
    pub fn propagator_at(&self, t: T) -> SuperOperator<T> {
        let u = self.phases(t);
        let evolved: Vec<CMatrix<T>> =
            self.x_tilde.iter().map(|x| self.modulated(x, &u)).collect();
        self.contract(&self.ot, &evolved)
    }

    /// Projection-free input `F(t)` and its analytic derivative `Fdot(t)`.
    ///
    /// `F` traces the evolved basis operators against the commutator
    /// observable; `Fdot` applies one more commutator to the initial
    /// operator (exactly, via eigenvalue differences) instead of
    /// differentiating `F` numerically.
    pub fn pfi_at(&self, t: T) -> (SuperOperator<T>, SuperOperator<T>) {
        let u = self.phases(t);
        let evolved: Vec<CMatrix<T>> =
            self.x_tilde.iter().map(|x| self.modulated(x, &u)).collect();
        let evolved_prime: Vec<CMatrix<T>> =
            self.xp_tilde.iter().map(|x| self.modulated(x, &u)).collect();
        let f = self.contract(&self.mt, &evolved);
        let fdot_raw = self.contract(&self.mt, &evolved_prime);
        let fdot = SuperOperator::new(fdot_raw.into_matrix() * ci(-T::one()))
            .expect("scaling preserves shape");
        (f, fdot)
    }
}

/// Sample the exact reduced propagator on `steps` grid points `n * dt`.
pub fn exact_reduced_propagator<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
    steps: usize,
) -> Result<PropagatorSeries<T>, OracleError> {
    let engine = ExactEngine::new(params, modes, space)?;
    let dt = params.dt;
    let g = (0..steps)
        .into_par_iter()
        .map(|n| engine.propagator_at(dt * T::lit(n as f64)))
        .collect();
    Ok(PropagatorSeries { dt, g })
}

/// Sample the projection-free inputs on `steps` grid points `n * dt`.
pub fn compute_pfis<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
    steps: usize,
) -> Result<PfiSeries<T>, OracleError> {
    let engine = ExactEngine::new(params, modes, space)?;
    let dt = params.dt;
    let (f, fdot) = (0..steps)
        .into_par_iter()
        .map(|n| engine.pfi_at(dt * T::lit(n as f64)))
        .unzip();
    Ok(PfiSeries { dt, f, fdot })
}

/// Bath-averaged commutator generator by explicit partial trace, as an
/// independent check of the analytic reduction in the model module.
pub fn projected_liouvillian_brute<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
) -> Result<SuperOperator<T>, OracleError> {
    let ne = 2;
    let branches = build_hamiltonians(params, modes, space)?;
    let h = full_hamiltonian(&branches);
    let rho_n = thermal_bath_state(params, modes, space)?.rho;
    let mut out = CMatrix::zeros(ne * ne, ne * ne);
    for cd in 0..ne * ne {
        let mut sys = CMatrix::<T>::zeros(ne, ne);
        sys[(cd / ne, cd % ne)] = cr(T::one());
        let x = sys.kronecker(&rho_n);
        let comm = &h * &x - &x * &h;
        let reduced = partial_trace_bath(&comm, ne);
        for ab in 0..ne * ne {
            out[(ab, cd)] = reduced[(ab / ne, ab % ne)];
        }
    }
    Ok(SuperOperator::new(out).expect("ne^2 side is a perfect square"))
}

/// Largest propagator-entry change when the Fock truncation grows by
/// `increment`, over `steps` grid points.
pub fn fock_convergence_change<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
    steps: usize,
    increment: usize,
) -> Result<T, OracleError> {
    let bigger = TruncatedBathSpace::new(space.fock_dim() + increment, space.n_modes())?;
    let coarse = exact_reduced_propagator(params, modes, space, steps)?;
    let fine = exact_reduced_propagator(params, modes, &bigger, steps)?;
    let mut change = T::zero();
    for (a, b) in coarse.g.iter().zip(&fine.g) {
        let dev = crate::liouville::max_abs(&(a.matrix() - b.matrix()));
        if dev > change {
            change = dev;
        }
    }
    Ok(change)
}

/// Error unless growing the Fock space by 2 leaves the propagator unchanged
/// within `tol`; returns the observed change.
pub fn ensure_fock_converged<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
    steps: usize,
    tol: T,
) -> Result<T, OracleError> {
    let change = fock_convergence_change(params, modes, space, steps, 2)?;
    if change > tol {
        return Err(OracleError::NotConverged {
            change: change.as_f64(),
            from: space.fock_dim(),
            to: space.fock_dim() + 2,
            tol: tol.as_f64(),
        });
    }
    Ok(change)
}

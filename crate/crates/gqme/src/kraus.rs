//! Amplitude-damping channel evolved through dilated circuits.
//!
//! A channel step `rho -> sum_k M_k rho M_k†` is flattened to Liouville
//! space, where each branch factors into two commuting Kronecker lifts,
//! `M (x) conj(M) = (M (x) I) (I (x) conj(M))`. Both lifts are contractions
//! whenever the Kraus set is complete, so each branch becomes a product of
//! two composable dilations, padded to a four-qubit register and run as a
//! circuit. Populations come back out of the first and fourth statevector
//! components, rescaled by the Frobenius norm the input was normalized with;
//! the branch outputs sum classically.
//!
//! This module works in SI seconds (the decay rate is a physical rate in
//! 1/s), unlike the propagation modules, which use units of the electronic
//! coupling.

use nalgebra::ComplexField;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{run_statevector, sample_shots, transpile, CircuitError};
use crate::dilation::{dilate_2, embed_pow2, DilatedUnitary, DilationError};
use crate::liouville::{max_abs, vectorize, DensityMatrix};
use crate::scalar::{cr, RealScalar};
use crate::{CMatrix, CVector};

/// Deviation allowed in the completeness sum `sum_k M_k† M_k = I`.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Errors from channel construction or circuit evolution.
#[derive(Debug, Error)]
pub enum KrausError {
    #[error("time must be nonnegative, got {t}")]
    NegativeTime { t: f64 },
    #[error("decay rate must be nonnegative, got {gamma}")]
    NegativeRate { gamma: f64 },
    #[error("operator sum deviates from identity by {dev:.3e} (limit {limit:.3e})")]
    Incomplete { dev: f64, limit: f64 },
    #[error("expected a 2x2 density matrix, got {dim}x{dim}")]
    NotQubit { dim: usize },
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// A complete set of Kraus operators for one channel step.
#[derive(Debug, Clone)]
pub struct KrausSet<T: RealScalar> {
    operators: Vec<CMatrix<T>>,
}

impl<T: RealScalar> KrausSet<T> {
    /// Validate completeness and wrap the operators.
    pub fn new(operators: Vec<CMatrix<T>>) -> Result<Self, KrausError> {
        let n = operators
            .first()
            .map(|m| m.nrows())
            .ok_or(KrausError::Incomplete {
                dev: 1.0,
                limit: COMPLETENESS_TOL,
            })?;
        let mut sum = CMatrix::<T>::zeros(n, n);
        for m in &operators {
            sum += m.adjoint() * m;
        }
        let dev = max_abs(&(sum - CMatrix::<T>::identity(n, n))).as_f64();
        if dev.is_nan() || dev > COMPLETENESS_TOL {
            return Err(KrausError::Incomplete {
                dev,
                limit: COMPLETENESS_TOL,
            });
        }
        Ok(Self { operators })
    }

    pub fn operators(&self) -> &[CMatrix<T>] {
        &self.operators
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Kraus operators of spontaneous emission at rate `gamma` after time `t`.
///
/// `M0 = diag(1, e^{-gamma t / 2})` damps the excited amplitude and
/// `M1 = sqrt(1 - e^{-gamma t}) |0><1|` carries the decayed population to
/// the ground state.
pub fn amplitude_damping_kraus<T: RealScalar>(
    gamma: T,
    t: T,
) -> Result<KrausSet<T>, KrausError> {
    if t < T::zero() {
        return Err(KrausError::NegativeTime { t: t.as_f64() });
    }
    if gamma < T::zero() {
        return Err(KrausError::NegativeRate {
            gamma: gamma.as_f64(),
        });
    }
    let survival = (-gamma * t).exp();
    let mut m0 = CMatrix::<T>::identity(2, 2);
    m0[(1, 1)] = cr(survival.sqrt());
    let mut m1 = CMatrix::<T>::zeros(2, 2);
    m1[(0, 1)] = cr((T::one() - survival).sqrt());
    KrausSet::new(vec![m0, m1])
}

/// Kronecker lifts `(M (x) I, I (x) conj(M))` acting on row-major flattened
/// density matrices: their product applied to `vec(rho)` is `vec(M rho M†)`.
pub fn lift_kraus<T: RealScalar>(m: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let n = m.nrows();
    let eye = CMatrix::<T>::identity(n, n);
    let conj = m.map(|z| z.conjugate());
    (m.kronecker(&eye), eye.kronecker(&conj))
}

/// How circuit outputs are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KrausReadout {
    /// Read signed amplitudes straight off the statevector.
    Exact,
    /// Estimate populations from measurement frequencies; branch `k` of a
    /// single evolution draws with seed `seed + k`.
    Sampled { shots: u64, seed: u64 },
}

/// Ground and excited populations recovered from one channel evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPopulations<T: RealScalar> {
    pub rho00: T,
    pub rho11: T,
}

/// One point of a population-decay curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T: RealScalar> {
    pub t: T,
    pub rho00: T,
    pub rho11: T,
}

/// Evolve a qubit density matrix under amplitude damping, one dilated
/// circuit per Kraus branch.
///
/// Each branch's lifted pair is dilated in the composable (three-block)
/// form, multiplied, padded to 16x16, transpiled, and run on the normalized
/// flattened state `(v_rho / ||v_rho||_F, 0, ...)`. Components 0 and 3 of
/// the output hold that branch's share of the populations; the shares are
/// rescaled by the Frobenius norm and summed over branches.
pub fn evolve_kraus_circuit<T: RealScalar>(
    rho0: &DensityMatrix<T>,
    gamma: T,
    t: T,
    readout: KrausReadout,
) -> Result<ChannelPopulations<T>, KrausError> {
    if rho0.dim() != 2 {
        return Err(KrausError::NotQubit { dim: rho0.dim() });
    }
    let kraus = amplitude_damping_kraus(gamma, t)?;
    let v = vectorize(rho0).into_vector();
    let fnorm = v.norm();
    let normalized = &v / cr(fnorm);

    let mut rho00 = T::zero();
    let mut rho11 = T::zero();
    for (k, m) in kraus.operators().iter().enumerate() {
        let (m_tilde, n_tilde) = lift_kraus(m);
        let branch = DilatedUnitary {
            matrix: &dilate_2(&n_tilde, T::one())?.matrix * &dilate_2(&m_tilde, T::one())?.matrix,
            n_c: T::one(),
        };
        let padded = embed_pow2(&branch);
        let seq = transpile(&padded.matrix)?;
        let mut input = CVector::<T>::zeros(padded.dim());
        input.rows_mut(0, 4).copy_from(&normalized);
        let out = run_statevector(&seq, &input)?;
        match readout {
            KrausReadout::Exact => {
                rho00 += out[0].real() * fnorm;
                rho11 += out[3].real() * fnorm;
            }
            KrausReadout::Sampled { shots, seed } => {
                let hist = sample_shots(&out, shots, seed.wrapping_add(k as u64))?;
                rho00 += T::lit(hist.probability(0)).sqrt() * fnorm;
                rho11 += T::lit(hist.probability(3)).sqrt() * fnorm;
            }
        }
    }
    Ok(ChannelPopulations { rho00, rho11 })
}

/// Population decay over the grid `t = 0, dt, ..., t_max` (inclusive).
///
/// Points are independent and evaluated in parallel; in sampled mode each
/// point gets its own seed offset so the draw is reproducible regardless of
/// scheduling.
pub fn amplitude_damping_curve<T: RealScalar>(
    rho0: &DensityMatrix<T>,
    gamma: T,
    t_max: T,
    dt: T,
    readout: KrausReadout,
) -> Result<Vec<CurvePoint<T>>, KrausError> {
    if dt <= T::zero() {
        return Err(KrausError::NegativeTime { t: dt.as_f64() });
    }
    let steps = (t_max / dt).as_f64().round() as usize;
    (0..=steps)
        .into_par_iter()
        .map(|i| {
            let t = dt * T::from_usize(i).expect("step index fits the scalar");
            let point_readout = match readout {
                KrausReadout::Exact => KrausReadout::Exact,
                KrausReadout::Sampled { shots, seed } => KrausReadout::Sampled {
                    shots,
                    seed: seed.wrapping_add(2 * i as u64),
                },
            };
            let pops = evolve_kraus_circuit(rho0, gamma, t, point_readout)?;
            Ok(CurvePoint {
                t,
                rho00: pops.rho00,
                rho11: pops.rho11,
            })
        })
        .collect()
}

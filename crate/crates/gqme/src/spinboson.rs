//! Spin-boson model: two electronic states (donor/acceptor) coupled to a bath
//! of harmonic modes sampled from an Ohmic spectral density.
//!
//! Everything here uses natural units with `hbar = 1`; energies are quoted in
//! units of the electronic coupling and times in its inverse.
//!
//! Basis conventions, used consistently by the exact-dynamics code:
//! * system index 0 is the donor, 1 the acceptor;
//! * the composite space is system (x) bath, so a full-space basis index is
//!   `s * bath_dim + b`;
//! * bath mode 0 is the leftmost Kronecker factor of the bath space.

use num_complex::Complex;
use thiserror::Error;

use crate::liouville::{hermiticity_deviation, liouvillian_of, SuperOperator};
use crate::scalar::{c, cr, RealScalar};
use crate::CMatrix;

/// Guard against accidentally exponential bath spaces.
pub const DEFAULT_BATH_DIM_CAP: usize = 4096;

/// Highest-Fock thermal population above which the truncation is suspect.
pub const TRUNCATION_POPULATION_TOL: f64 = 1e-6;

/// Errors from model construction.
#[derive(Debug, Error)]
pub enum SpinBosonError {
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("bath dimension {dim} = {fock_dim}^{n_modes} exceeds the cap {cap}")]
    BathTooLarge {
        fock_dim: usize,
        n_modes: usize,
        dim: usize,
        cap: usize,
    },
    #[error("mode count mismatch: {modes} discretized modes but the bath space declares {space}")]
    ModeCountMismatch { modes: usize, space: usize },
}

/// Physical and numerical parameters of one spin-boson model.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBosonParams<T: RealScalar> {
    /// Half the donor-acceptor energy bias (may be zero).
    pub epsilon: T,
    /// Electronic coupling between donor and acceptor (constant, Condon).
    pub gamma_coupling: T,
    /// Inverse temperature.
    pub beta: T,
    /// Kondo parameter (dimensionless spectral-density prefactor).
    pub xi: T,
    /// Exponential cutoff frequency of the spectral density.
    pub omega_c: T,
    /// Hard frequency truncation of the discretized bath.
    pub omega_max: T,
    /// Number of discretized bath modes.
    pub n_modes: usize,
    /// Propagation time step.
    pub dt: T,
}

/// Names accepted by [`SpinBosonParams::preset`].
pub const PRESET_NAMES: [&str; 4] = ["model1", "model2", "model3", "model4"];

impl SpinBosonParams<f64> {
    /// Named benchmark parameter sets.
    ///
    /// All four share `gamma_coupling = 1`, `beta = 5`, `n_modes = 60` and are
    /// propagated for 4000 steps in the reference workflow.
    pub fn preset(name: &str) -> Option<Self> {
        let base = Self {
            epsilon: 1.0,
            gamma_coupling: 1.0,
            beta: 5.0,
            xi: 0.1,
            omega_c: 1.0,
            omega_max: 5.0,
            n_modes: 60,
            dt: 1.50083e-3,
        };
        match name {
            "model1" => Some(base),
            "model2" => Some(Self {
                omega_c: 2.0,
                omega_max: 10.0,
                ..base
            }),
            "model3" => Some(Self {
                xi: 0.4,
                omega_c: 2.0,
                omega_max: 10.0,
                ..base
            }),
            "model4" => Some(Self {
                epsilon: 0.0,
                xi: 0.2,
                omega_c: 2.5,
                omega_max: 12.0,
                dt: 4.50249e-3,
                ..base
            }),
            _ => None,
        }
    }
}

impl<T: RealScalar> SpinBosonParams<T> {
    /// Check the parameter invariants.
    pub fn validate(&self) -> Result<(), SpinBosonError> {
        fn positive<T: RealScalar>(name: &'static str, v: T) -> Result<(), SpinBosonError> {
            if v > T::zero() {
                Ok(())
            } else {
                Err(SpinBosonError::InvalidParameter {
                    name,
                    message: format!("must be positive, got {}", v.as_f64()),
                })
            }
        }
        positive("gamma_coupling", self.gamma_coupling)?;
        positive("beta", self.beta)?;
        positive("omega_c", self.omega_c)?;
        positive("omega_max", self.omega_max)?;
        positive("dt", self.dt)?;
        if self.xi < T::zero() {
            return Err(SpinBosonError::InvalidParameter {
                name: "xi",
                message: format!("must be non-negative, got {}", self.xi.as_f64()),
            });
        }
        if self.omega_max <= self.omega_c {
            return Err(SpinBosonError::InvalidParameter {
                name: "omega_max",
                message: format!(
                    "must exceed omega_c = {}, got {}",
                    self.omega_c.as_f64(),
                    self.omega_max.as_f64()
                ),
            });
        }
        if self.n_modes == 0 {
            return Err(SpinBosonError::InvalidParameter {
                name: "n_modes",
                message: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Copy with a different mode count (for exact-diagonalization scales).
    pub fn with_modes(mut self, n_modes: usize) -> Self {
        self.n_modes = n_modes;
        self
    }
}

/// Frequencies and couplings of the discretized bath.
#[derive(Debug, Clone, PartialEq)]
pub struct BathModes<T: RealScalar> {
    pub omegas: Vec<T>,
    pub couplings: Vec<T>,
}

impl<T: RealScalar> BathModes<T> {
    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// Sample the Ohmic spectral density `J(w) = (pi/2) xi w exp(-w/w_c)` onto a
/// uniform grid of `n_modes` modes covering `(0, omega_max]`.
///
/// Frequencies sit at the interval midpoints `w_k = (k - 1/2) dw` with
/// `dw = omega_max / n_modes`, and `c_k = w_k sqrt(xi dw exp(-w_k/w_c))`.
/// Midpoint sampling makes the discrete reorganization energy
/// `sum_k c_k^2 / (2 w_k^2)` match the continuum integral to second order in
/// `dw`, which is what the discretization sanity check downstream relies on.
pub fn discretize_spectral_density<T: RealScalar>(
    params: &SpinBosonParams<T>,
) -> Result<BathModes<T>, SpinBosonError> {
    params.validate()?;
    let n = params.n_modes;
    let dw = params.omega_max / T::lit(n as f64);
    let half = T::lit(0.5);
    let mut omegas = Vec::with_capacity(n);
    let mut couplings = Vec::with_capacity(n);
    for k in 1..=n {
        let w = (T::lit(k as f64) - half) * dw;
        let c_k = w * (params.xi * dw * (-w / params.omega_c).exp()).sqrt();
        omegas.push(w);
        couplings.push(c_k);
    }
    Ok(BathModes { omegas, couplings })
}

/// Reorganization energy `sum_k c_k^2 / (2 w_k^2)` of a discretized bath.
pub fn reorganization_energy<T: RealScalar>(modes: &BathModes<T>) -> T {
    let two = T::lit(2.0);
    modes
        .omegas
        .iter()
        .zip(&modes.couplings)
        .map(|(&w, &c)| c * c / (two * w * w))
        .fold(T::zero(), |a, b| a + b)
}

/// Continuum reorganization energy `(1/pi) int_0^wmax J(w)/w dw` of the
/// truncated Ohmic density: `(xi w_c / 2)(1 - exp(-wmax/w_c))`.
pub fn reorganization_energy_continuum<T: RealScalar>(params: &SpinBosonParams<T>) -> T {
    params.xi * params.omega_c * T::lit(0.5)
        * (T::one() - (-params.omega_max / params.omega_c).exp())
}

/// Truncated multi-mode Fock space of the bath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedBathSpace {
    fock_dim: usize,
    n_modes: usize,
}

impl TruncatedBathSpace {
    /// A space of `n_modes` oscillators with `fock_dim` levels each, kept
    /// under [`DEFAULT_BATH_DIM_CAP`].
    pub fn new(fock_dim: usize, n_modes: usize) -> Result<Self, SpinBosonError> {
        Self::with_cap(fock_dim, n_modes, DEFAULT_BATH_DIM_CAP)
    }

    /// Same as [`TruncatedBathSpace::new`] with an explicit dimension cap.
    pub fn with_cap(fock_dim: usize, n_modes: usize, cap: usize) -> Result<Self, SpinBosonError> {
        if fock_dim < 2 {
            return Err(SpinBosonError::InvalidParameter {
                name: "fock_dim",
                message: format!("must be at least 2, got {fock_dim}"),
            });
        }
        if n_modes == 0 {
            return Err(SpinBosonError::InvalidParameter {
                name: "n_modes",
                message: "must be at least 1".into(),
            });
        }
        let mut dim: usize = 1;
        for _ in 0..n_modes {
            dim = dim.saturating_mul(fock_dim);
            if dim > cap {
                return Err(SpinBosonError::BathTooLarge {
                    fock_dim,
                    n_modes,
                    dim,
                    cap,
                });
            }
        }
        Ok(Self { fock_dim, n_modes })
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Total bath dimension `fock_dim ^ n_modes`.
    pub fn bath_dim(&self) -> usize {
        self.fock_dim.pow(self.n_modes as u32)
    }
}

/// Bosonic lowering operator `a` on a `d`-level Fock space.
pub fn lowering_operator<T: RealScalar>(d: usize) -> CMatrix<T> {
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = cr(T::lit(n as f64).sqrt());
    }
    a
}

/// Mass-weighted position `R = (a + a^dag) / sqrt(2 w)`.
pub fn position_operator<T: RealScalar>(d: usize, omega: T) -> CMatrix<T> {
    let a = lowering_operator::<T>(d);
    let scale = cr((T::lit(2.0) * omega).sqrt().recip());
    (&a + a.adjoint()) * scale
}

/// Mass-weighted momentum `P = i sqrt(w/2) (a^dag - a)`.
pub fn momentum_operator<T: RealScalar>(d: usize, omega: T) -> CMatrix<T> {
    let a = lowering_operator::<T>(d);
    let scale = c(T::zero(), (omega * T::lit(0.5)).sqrt());
    (a.adjoint() - &a) * scale
}

/// Embed a single-mode operator as `I (x) .. (x) op (x) .. (x) I`, acting on
/// `mode` (0-based, leftmost factor first).
pub fn lift_mode<T: RealScalar>(
    op: &CMatrix<T>,
    mode: usize,
    space: &TruncatedBathSpace,
) -> CMatrix<T> {
    assert!(mode < space.n_modes(), "mode index out of range");
    let d = space.fock_dim();
    let left = CMatrix::<T>::identity(d.pow(mode as u32), d.pow(mode as u32));
    let right_dim = d.pow((space.n_modes() - 1 - mode) as u32);
    let right = CMatrix::<T>::identity(right_dim, right_dim);
    left.kronecker(op).kronecker(&right)
}

/// Donor/acceptor nuclear Hamiltonians on the bath space, plus the constant
/// electronic coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchHamiltonians<T: RealScalar> {
    /// `H_D = +epsilon + sum_k (P^2/2 + w^2 R^2/2 - c R)` on the bath space.
    pub h_donor: CMatrix<T>,
    /// `H_A = -epsilon + sum_k (P^2/2 + w^2 R^2/2 + c R)` on the bath space.
    pub h_acceptor: CMatrix<T>,
    /// Donor-acceptor coupling (the same in both directions).
    pub coupling: T,
}

/// Build the donor and acceptor nuclear Hamiltonians from discretized modes.
pub fn build_hamiltonians<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
) -> Result<BranchHamiltonians<T>, SpinBosonError> {
    if modes.len() != space.n_modes() {
        return Err(SpinBosonError::ModeCountMismatch {
            modes: modes.len(),
            space: space.n_modes(),
        });
    }
    let dim = space.bath_dim();
    let d = space.fock_dim();
    let half = cr(T::lit(0.5));
    let mut bare = CMatrix::<T>::zeros(dim, dim);
    let mut shift = CMatrix::<T>::zeros(dim, dim);
    for (k, (&w, &c_k)) in modes.omegas.iter().zip(&modes.couplings).enumerate() {
        let r = position_operator::<T>(d, w);
        let p = momentum_operator::<T>(d, w);
        let h_mode = (&p * &p) * half + (&r * &r) * (half * cr(w * w));
        bare += lift_mode(&h_mode, k, space);
        shift += lift_mode(&(&r * cr(c_k)), k, space);
    }
    let eps = CMatrix::<T>::identity(dim, dim) * cr(params.epsilon);
    let h_donor = &eps + &bare - &shift;
    let h_acceptor = &bare + &shift - &eps;
    Ok(BranchHamiltonians {
        h_donor,
        h_acceptor,
        coupling: params.gamma_coupling,
    })
}

/// Pauli Z on the donor/acceptor basis (`diag(1, -1)`).
pub fn sigma_z<T: RealScalar>() -> CMatrix<T> {
    CMatrix::from_diagonal(&crate::CVector::from_vec(vec![
        cr(T::one()),
        cr(-T::one()),
    ]))
}

/// Pauli X on the donor/acceptor basis.
pub fn sigma_x<T: RealScalar>() -> CMatrix<T> {
    let one = cr(T::one());
    let zero = Complex::new(T::zero(), T::zero());
    CMatrix::from_row_slice(2, 2, &[zero, one, one, zero])
}

/// Assemble the full system-bath Hamiltonian
/// `|D><D| (x) H_D + |A><A| (x) H_A + coupling * sigma_x (x) I`,
/// symmetrized as `(H + H^dag)/2` to keep it Hermitian to rounding.
pub fn full_hamiltonian<T: RealScalar>(branches: &BranchHamiltonians<T>) -> CMatrix<T> {
    let dim = branches.h_donor.nrows();
    let mut proj_d = CMatrix::<T>::zeros(2, 2);
    proj_d[(0, 0)] = cr(T::one());
    let mut proj_a = CMatrix::<T>::zeros(2, 2);
    proj_a[(1, 1)] = cr(T::one());
    let eye = CMatrix::<T>::identity(dim, dim);
    let h = proj_d.kronecker(&branches.h_donor)
        + proj_a.kronecker(&branches.h_acceptor)
        + sigma_x::<T>().kronecker(&eye) * cr(branches.coupling);
    let sym = (&h + h.adjoint()) * cr(T::lit(0.5));
    debug_assert!(hermiticity_deviation(&sym) <= T::lit(1e-12));
    sym
}

/// Thermal state of the bare bath, with its worst truncation diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalBath<T: RealScalar> {
    /// `exp(-beta H_bath) / Z` on the bath space; diagonal in the Fock basis.
    pub rho: CMatrix<T>,
    /// Largest highest-Fock-level population over the modes.
    pub top_level_population: T,
}

impl<T: RealScalar> ThermalBath<T> {
    /// Whether every mode keeps its highest Fock level essentially empty.
    pub fn truncation_ok(&self) -> bool {
        self.top_level_population.as_f64() <= TRUNCATION_POPULATION_TOL
    }
}

/// Thermal state `exp(-beta (H_D + H_A)/2) / Z` of the bath.
///
/// The donor and acceptor displacements (and the electronic bias) cancel in
/// the average, leaving independent bare oscillators, so the state is built
/// as a product of per-mode Gibbs factors. Exponentials are shifted by each
/// mode's ground energy before normalization so very low temperatures stay
/// finite.
pub fn thermal_bath_state<T: RealScalar>(
    params: &SpinBosonParams<T>,
    modes: &BathModes<T>,
    space: &TruncatedBathSpace,
) -> Result<ThermalBath<T>, SpinBosonError> {
    if modes.len() != space.n_modes() {
        return Err(SpinBosonError::ModeCountMismatch {
            modes: modes.len(),
            space: space.n_modes(),
        });
    }
    if params.beta <= T::zero() {
        return Err(SpinBosonError::InvalidParameter {
            name: "beta",
            message: format!("must be positive, got {}", params.beta.as_f64()),
        });
    }
    let d = space.fock_dim();
    let half = cr(T::lit(0.5));
    let mut rho = CMatrix::<T>::identity(1, 1);
    let mut worst_top = T::zero();
    for &w in &modes.omegas {
        let r = position_operator::<T>(d, w);
        let p = momentum_operator::<T>(d, w);
        let h_mode = (&p * &p) * half + (&r * &r) * (half * cr(w * w));
        let eig = h_mode.symmetric_eigen();
        let ground = eig.eigenvalues.min();
        let mut right = eig.eigenvectors.adjoint();
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            let boltz = cr((-params.beta * (*lam - ground)).exp());
            for j in 0..d {
                right[(i, j)] *= boltz;
            }
        }
        let mut gibbs = &eig.eigenvectors * right;
        let z = gibbs.trace();
        gibbs /= z;
        let top = gibbs[(d - 1, d - 1)].re;
        if top > worst_top {
            worst_top = top;
        }
        rho = rho.kronecker(&gibbs);
    }
    let trace = rho.trace();
    rho /= trace;
    Ok(ThermalBath {
        rho,
        top_level_population: worst_top,
    })
}

/// The system-only Hamiltonian `epsilon sigma_z + coupling sigma_x`.
pub fn system_hamiltonian<T: RealScalar>(params: &SpinBosonParams<T>) -> CMatrix<T> {
    sigma_z::<T>() * cr(params.epsilon) + sigma_x::<T>() * cr(params.gamma_coupling)
}

/// Bath-averaged commutator generator on the reduced system (a 4x4 map).
///
/// Every bath operator enters the Hamiltonian linearly and has zero mean in
/// the thermal state, so the average reduces to the commutator with the bare
/// system Hamiltonian. The exact-dynamics module cross-checks this against a
/// brute-force partial trace.
pub fn projected_liouvillian<T: RealScalar>(params: &SpinBosonParams<T>) -> SuperOperator<T> {
    liouvillian_of(&system_hamiltonian(params))
        .expect("system Hamiltonian is Hermitian by construction")
}

//! Noiseless statevector emulator with multinomial shot sampling.
//!
//! Gates act in place on the amplitude vector (qubit 0 = least-significant
//! index bit). Sampling owns its RNG: a seed goes in, a histogram comes out,
//! and the same seed always reproduces the same counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::ComplexField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gates::Block;
use super::{CircuitError, Gate, GateSequence};
use crate::scalar::{c, RealScalar};
use crate::{CMatrix, CVector};

/// Input states may deviate from unit norm by at most this much.
const INPUT_NORM_TOL: f64 = 1e-10;

/// Measurement record of one emulated circuit run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotHistogram {
    /// Total number of shots drawn.
    pub shots: u64,
    /// Basis index -> count; indices with zero counts are omitted.
    pub counts: BTreeMap<usize, u64>,
    /// Seed the histogram was drawn with.
    pub seed: u64,
}

impl ShotHistogram {
    /// Empirical probability of a basis index.
    pub fn probability(&self, index: usize) -> f64 {
        self.counts.get(&index).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    /// Write as CSV with a `basis_index,count` header.
    pub fn write_csv(&self, path: &Path) -> Result<(), CircuitError> {
        let mut out = String::from("basis_index,count\n");
        for (idx, count) in &self.counts {
            writeln!(out, "{idx},{count}").expect("string writes cannot fail");
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Populations recovered from a dilated-circuit readout.
#[derive(Debug, Clone, PartialEq)]
pub struct Populations<T: RealScalar> {
    /// Diagonal entries `sigma_jj`, one per system state.
    pub diag: Vec<T>,
    /// `sigma_00 - sigma_11`, the reported observable.
    pub sigma_z: T,
}

fn check_input<T: RealScalar>(dim: usize, input: &CVector<T>) -> Result<(), CircuitError> {
    if input.len() != dim {
        return Err(CircuitError::DimensionMismatch {
            expected: dim,
            found: input.len(),
        });
    }
    let dev = (input.norm() - T::one()).abs();
    if dev > T::lit(INPUT_NORM_TOL) {
        return Err(CircuitError::NotNormalized { dev: dev.as_f64() });
    }
    Ok(())
}

fn apply_one_qubit<T: RealScalar>(state: &mut CVector<T>, q: usize, m: &Block<T>) {
    let bit = 1usize << q;
    for base in 0..state.len() {
        if base & bit != 0 {
            continue;
        }
        let a = state[base];
        let b = state[base | bit];
        state[base] = m[(0, 0)] * a + m[(0, 1)] * b;
        state[base | bit] = m[(1, 0)] * a + m[(1, 1)] * b;
    }
}

fn apply_cx<T: RealScalar>(state: &mut CVector<T>, c: usize, t: usize) {
    let (cbit, tbit) = (1usize << c, 1usize << t);
    for i in 0..state.len() {
        if i & cbit != 0 && i & tbit == 0 {
            state.swap_rows(i, i | tbit);
        }
    }
}

fn apply_dense<T: RealScalar>(state: &mut CVector<T>, qubits: &[usize], m: &CMatrix<T>) {
    let k = qubits.len();
    let sub = 1usize << k;
    debug_assert_eq!(m.nrows(), sub);
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let spread = |s: usize| -> usize {
        qubits
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &q)| acc | (((s >> j) & 1) << q))
    };
    let mut gathered = vec![c(T::zero(), T::zero()); sub];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (s, slot) in gathered.iter_mut().enumerate() {
            *slot = state[base | spread(s)];
        }
        for (r, row) in (0..sub).map(|r| (r, base | spread(r))) {
            let mut acc = c(T::zero(), T::zero());
            for (s, &amp) in gathered.iter().enumerate() {
                acc += m[(r, s)] * amp;
            }
            state[row] = acc;
        }
    }
}

/// Apply a sequence's gates (without the global phase) in place.
///
/// Shared by the public runner and `reconstruct`, so circuits evaluate and
/// reconstruct through the same arithmetic.
pub(super) fn apply_gates<T: RealScalar>(
    seq: &GateSequence<T>,
    state: &mut CVector<T>,
) -> Result<(), CircuitError> {
    for g in &seq.gates {
        match g {
            Gate::Rz { q, lambda } => {
                apply_one_qubit(state, *q, &super::gates::rz_block(*lambda))
            }
            Gate::SqrtX { q } => apply_one_qubit(state, *q, &super::gates::sqrt_x_block()),
            Gate::Cx { c, t } => apply_cx(state, *c, *t),
            Gate::Unitary { qubits, m } => apply_dense(state, qubits, m),
        }
    }
    Ok(())
}

/// Run a gate sequence on a normalized input state; exact (noiseless) output.
pub fn run_statevector<T: RealScalar>(
    seq: &GateSequence<T>,
    input: &CVector<T>,
) -> Result<CVector<T>, CircuitError> {
    seq.check_indices()?;
    check_input(seq.dim(), input)?;
    let mut state = input.clone();
    apply_gates(seq, &mut state)?;
    Ok(state * c(seq.phase.cos(), seq.phase.sin()))
}

/// Apply a dense unitary directly to a normalized input state.
pub fn run_unitary<T: RealScalar>(
    u: &CMatrix<T>,
    input: &CVector<T>,
) -> Result<CVector<T>, CircuitError> {
    check_input(u.nrows(), input)?;
    Ok(u * input)
}

/// Draw a multinomial shot histogram from an amplitude vector.
///
/// The total probability must be 1 within 1e-10; the draw is reproducible
/// bit-for-bit for a fixed seed.
pub fn sample_shots<T: RealScalar>(
    amplitudes: &CVector<T>,
    shots: u64,
    seed: u64,
) -> Result<ShotHistogram, CircuitError> {
    if shots == 0 {
        return Err(CircuitError::ZeroShots);
    }
    let probs: Vec<f64> = amplitudes
        .iter()
        .map(|a| a.modulus_squared().as_f64())
        .collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > INPUT_NORM_TOL {
        return Err(CircuitError::NotNormalized {
            dev: (total - 1.0).abs(),
        });
    }
    let mut cumulative = probs;
    let mut acc = 0.0;
    for p in cumulative.iter_mut() {
        acc += *p;
        *p = acc;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let idx = cumulative
            .partition_point(|&edge| edge <= u)
            .min(cumulative.len() - 1);
        *counts.entry(idx).or_insert(0) += 1;
    }
    Ok(ShotHistogram {
        shots,
        counts,
        seed,
    })
}

/// Recover populations from shot frequencies.
///
/// The basis index of `sigma_jj` is `j * ne + j` (the Liouville diagonal);
/// `sigma_jj = sqrt(P_j) * n_c * sigma0_fnorm`, and `sigma_z` is the
/// difference of the first two diagonals.
pub fn retrieve_populations<T: RealScalar>(
    hist: &ShotHistogram,
    ne: usize,
    n_c: T,
    sigma0_fnorm: T,
) -> Populations<T> {
    let diag: Vec<T> = (0..ne)
        .map(|j| T::lit(hist.probability(j * ne + j)).sqrt() * n_c * sigma0_fnorm)
        .collect();
    let sigma_z = if ne >= 2 {
        diag[0] - diag[1]
    } else {
        diag[0]
    };
    Populations { diag, sigma_z }
}

/// Infinite-shot readout: signed populations straight from the amplitudes.
///
/// This is the noiseless limit of the shot path — the statevector is exact,
/// so `sigma_jj = Re(amp[j*ne+j]) * n_c * sigma0_fnorm` keeps the sign
/// information the square-root retrieval would discard.
pub fn exact_populations<T: RealScalar>(
    amplitudes: &CVector<T>,
    ne: usize,
    n_c: T,
    sigma0_fnorm: T,
) -> Populations<T> {
    let diag: Vec<T> = (0..ne)
        .map(|j| amplitudes[j * ne + j].real() * n_c * sigma0_fnorm)
        .collect();
    let sigma_z = if ne >= 2 {
        diag[0] - diag[1]
    } else {
        diag[0]
    };
    Populations { diag, sigma_z }
}

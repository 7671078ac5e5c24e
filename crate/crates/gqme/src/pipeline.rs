//! Per-step readout of a propagated series through dilated circuits.
//!
//! For each emitted step the propagator entry is scaled into a contraction,
//! dilated to a unitary, padded to a qubit register, transpiled, and run on
//! the flattened initial state. The classical populations (the propagator
//! applied directly) ride along in the same row, so downstream plots can
//! overlay the two curves without a second pass.

use nalgebra::ComplexField;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{
    exact_populations, retrieve_populations, run_statevector, sample_shots, transpile,
    CircuitError,
};
use crate::dilation::{contraction_normalize, dilate_1, embed_pow2, DilationError, NcMode};
use crate::liouville::{operator_norm, vectorize, DensityMatrix};
use crate::scalar::{cr, RealScalar};
use crate::series::PropagatorSeries;
use crate::CVector;

/// Errors from assembling or running the per-step readout chain.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("propagator series is empty")]
    EmptySeries,
    #[error("initial state is {found}x{found} but the series propagates {expected}x{expected} systems")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Dilation(#[from] DilationError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// How the emulated populations are read off the output state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmulatorReadout {
    /// Signed amplitudes straight from the statevector.
    Exact,
    /// Measurement frequencies; step `n` draws with seed `base_seed + n`,
    /// so histograms are reproducible independent of stride or scheduling.
    Sampled { shots: u64, base_seed: u64 },
}

/// One emitted row of a pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReadout<T: RealScalar> {
    /// Index into the propagated series.
    pub step: usize,
    /// Time of this step, `step * dt`.
    pub t: T,
    /// `sigma_z` from applying the propagator entry directly.
    pub sigma_z_classical: T,
    /// `sigma_z` recovered through the dilated circuit.
    pub sigma_z_emulated: T,
    /// Normalization factor the readout was rescaled by.
    pub n_c: T,
}

/// Run the dilate-transpile-emulate chain on every `stride`-th step.
///
/// With [`NcMode::Global`] every step is scaled by the largest operator norm
/// in the whole series, so one readout factor serves all circuits; the
/// default scales each step by its own norm.
pub fn readout_series<T: RealScalar>(
    propagator: &PropagatorSeries<T>,
    initial: &DensityMatrix<T>,
    nc_mode: NcMode,
    readout: EmulatorReadout,
    stride: usize,
) -> Result<Vec<StepReadout<T>>, PipelineError> {
    if stride == 0 {
        return Err(PipelineError::ZeroStride);
    }
    if propagator.g.is_empty() {
        return Err(PipelineError::EmptySeries);
    }
    let ne = propagator.g[0].ne();
    if initial.dim() != ne {
        return Err(PipelineError::DimensionMismatch {
            expected: ne,
            found: initial.dim(),
        });
    }
    let v0 = vectorize(initial).into_vector();
    let fnorm = v0.norm();
    let normalized = &v0 / cr(fnorm);
    let global_norm = match nc_mode {
        NcMode::PerStep => None,
        NcMode::Global => {
            let worst = propagator
                .g
                .par_iter()
                .map(|g| operator_norm(g.matrix()))
                .reduce(T::zero, |a, b| if b > a { b } else { a });
            Some(if worst > T::one() { worst } else { T::one() })
        }
    };

    (0..propagator.g.len())
        .into_par_iter()
        .step_by(stride)
        .map(|step| {
            let g = &propagator.g[step];
            let w = g.matrix() * &v0;
            let sigma_z_classical = w[0].real() - w[ne + 1].real();

            let (contraction, n_c) = match global_norm {
                Some(n_c) => (g.matrix() / cr(n_c), n_c),
                None => {
                    let scaled = contraction_normalize(g);
                    (scaled.g_prime.into_matrix(), scaled.n_c)
                }
            };
            let padded = embed_pow2(&dilate_1(&contraction, n_c)?);
            let seq = transpile(&padded.matrix)?;
            let mut input = CVector::<T>::zeros(padded.dim());
            input.rows_mut(0, ne * ne).copy_from(&normalized);
            let out = run_statevector(&seq, &input)?;
            let pops = match readout {
                EmulatorReadout::Exact => exact_populations(&out, ne, n_c, fnorm),
                EmulatorReadout::Sampled { shots, base_seed } => {
                    let hist = sample_shots(&out, shots, base_seed.wrapping_add(step as u64))?;
                    retrieve_populations(&hist, ne, n_c, fnorm)
                }
            };
            Ok(StepReadout {
                step,
                t: propagator.dt * T::from_usize(step).expect("step index fits the scalar"),
                sigma_z_classical,
                sigma_z_emulated: pops.sigma_z,
                n_c,
            })
        })
        .collect()
}

/// Render readout rows as CSV with the standard header.
pub fn rows_to_csv<T: RealScalar>(rows: &[StepReadout<T>]) -> String {
    let mut out = String::from("step,t,sigma_z_classical,sigma_z_emulated,n_c\n");
    for row in rows {
        out.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            row.step,
            row.t.as_f64(),
            row.sigma_z_classical.as_f64(),
            row.sigma_z_emulated.as_f64(),
            row.n_c.as_f64(),
        ));
    }
    out
}

//! Shared fixtures for the acceptance suite: a recorded reduced-propagator
//! snapshot used as a cross-check, and lazily built end-to-end preset runs
//! that several criteria read from.

use std::sync::OnceLock;

use gqme::dilation::NcMode;
use gqme::pipeline::{readout_series, EmulatorReadout, StepReadout};
use gqme::scalar::{c, cr};
use gqme::series::PropagatorSeries;
use gqme::solver::{propagate_gqme, solve_volterra};
use gqme::spinboson::{
    discretize_spectral_density, projected_liouvillian, SpinBosonParams, TruncatedBathSpace,
};
use gqme::{DensityMatrix, Mat64, Vec64};

/// Recorded reduced-propagator snapshot (two-level system, mid-run step of
/// a biased model), printed to two decimals. Serves as a fixed cross-check
/// target for norm, trace-structure, and hermiticity-structure assertions.
pub fn g3_reference() -> Mat64 {
    Mat64::from_row_slice(
        4,
        4,
        &[
            c(0.38, -3.76e-10),
            c(0.04, 2.90e-2),
            c(0.04, -2.90e-2),
            c(0.06, -1.88e-10),
            c(-0.13, 7.04e-2),
            c(0.28, -2.63e-2),
            c(0.02, 2.37e-2),
            c(-0.15, -3.06e-2),
            c(-0.13, -7.04e-2),
            c(0.02, -2.37e-2),
            c(0.28, 2.63e-2),
            c(-0.15, 3.06e-2),
            c(0.62, 3.77e-10),
            c(-0.04, -2.90e-2),
            c(-0.04, 2.90e-2),
            c(0.94, 1.87e-10),
        ],
    )
}

/// Companion snapshot from the strongly coupled model at the same step,
/// printed at two decimals. Its operator norm equals the recorded
/// normalization factor within print precision, which pins the norm
/// computation against published numbers.
pub fn g4_reference() -> Mat64 {
    Mat64::from_row_slice(
        4,
        4,
        &[
            c(0.54, 4.7e-11),
            c(-1.7e-6, 5.7e-2),
            c(-1.6e-6, -5.6e-2),
            c(0.46, 7.1e-11),
            c(-0.46, 5.7e-2),
            c(3.6e-2, 6.1e-5),
            c(-1.6e-2, -5.7e-5),
            c(-0.46, -5.7e-2),
            c(-0.46, -5.7e-2),
            c(-1.6e-2, 5.7e-5),
            c(3.7e-2, -6.1e-5),
            c(-0.46, 5.7e-2),
            c(0.54, -4.7e-11),
            c(1.6e-6, -5.6e-2),
            c(1.6e-6, 5.6e-2),
            c(0.54, -7.1e-11),
        ],
    )
}

/// Normalization factor recorded alongside both snapshots. It bounds the
/// first snapshot's norm (a whole-run factor) and matches the second
/// snapshot's norm at print precision.
pub const G3_NC: f64 = 1.376;

/// Steps per preset run; every criterion that consumes the runs reads all
/// of them.
pub const PRESET_STEPS: usize = 4000;

/// Shots per step in the sampled readout pass.
pub const PRESET_SHOTS: u64 = 2000;

/// Pure donor (ground-state projector) initial state.
pub fn donor_state() -> DensityMatrix<f64> {
    let mut m = Mat64::zeros(2, 2);
    m[(0, 0)] = cr(1.0);
    DensityMatrix::new(m).expect("the donor projector is a valid state")
}

/// Flattened donor state.
pub fn donor_vector() -> Vec64 {
    let mut v = Vec64::zeros(4);
    v[0] = cr(1.0);
    v
}

/// One full end-to-end run of a parameter preset at reduced bath size.
pub struct PresetRun {
    pub name: &'static str,
    pub propagator: PropagatorSeries<f64>,
    pub exact_rows: Vec<StepReadout<f64>>,
    pub sampled_rows: Vec<StepReadout<f64>>,
}

/// All four presets, built once: kernel from the exact engine with two bath
/// modes and four Fock levels, propagated for [`PRESET_STEPS`], then read
/// out both exactly and with [`PRESET_SHOTS`] shots per step.
pub fn preset_runs() -> &'static [PresetRun] {
    static RUNS: OnceLock<Vec<PresetRun>> = OnceLock::new();
    RUNS.get_or_init(|| {
        ["model1", "model2", "model3", "model4"]
            .iter()
            .enumerate()
            .map(|(i, name)| build_run(name, 0x5EED_0000 + 0x1000 * i as u64))
            .collect()
    })
}

fn build_run(name: &'static str, base_seed: u64) -> PresetRun {
    let params = SpinBosonParams::<f64>::preset(name)
        .unwrap_or_else(|| panic!("{name} is a shipped preset"))
        .with_modes(2);
    let modes = discretize_spectral_density(&params).expect("preset parameters are valid");
    let space = TruncatedBathSpace::new(4, params.n_modes).expect("4^2 levels fit the cap");
    let proj_l = projected_liouvillian(&params);
    let pfis =
        compute_pfis_checked(&params, &modes, &space, PRESET_STEPS);
    let kernel = solve_volterra(&pfis, &proj_l).expect("preset kernels are well-conditioned");
    let propagator =
        propagate_gqme(&proj_l, &kernel, PRESET_STEPS).expect("kernel covers the horizon");
    let donor = donor_state();
    let exact_rows = readout_series(
        &propagator,
        &donor,
        NcMode::PerStep,
        EmulatorReadout::Exact,
        1,
    )
    .expect("exact readout of a propagated series succeeds");
    let sampled_rows = readout_series(
        &propagator,
        &donor,
        NcMode::PerStep,
        EmulatorReadout::Sampled {
            shots: PRESET_SHOTS,
            base_seed,
        },
        1,
    )
    .expect("sampled readout of a propagated series succeeds");
    PresetRun {
        name,
        propagator,
        exact_rows,
        sampled_rows,
    }
}

fn compute_pfis_checked(
    params: &SpinBosonParams<f64>,
    modes: &gqme::spinboson::BathModes<f64>,
    space: &TruncatedBathSpace,
    steps: usize,
) -> gqme::series::PfiSeries<f64> {
    gqme::oracle::compute_pfis(params, modes, space, steps)
        .expect("the exact engine handles reduced preset spaces")
}

//! End-to-end acceptance gate for the toolkit.
//!
//! Each test checks one release criterion and prints a single verdict line
//! (`criterion N: PASS/FAIL — ...`); run with `--nocapture` to see all nine
//! lines. The criteria exercise the full workflow: kernel extraction against
//! the exact engine, generator consistency, dilation round trips, the
//! recorded propagator snapshot, exact and shot-sampled circuit readout,
//! transpiler fidelity and gate budgets, the damping channel, and the bath
//! discretization.

mod common;

use std::time::Instant;

use gqme::circuit::{reconstruct, transpile};
use gqme::dilation::{
    contraction_normalize, dilate_1, dilate_series, embed_pow2, unitarity_deviation, NcMode,
};
use gqme::kraus::{amplitude_damping_curve, KrausReadout};
use gqme::oracle::{compute_pfis, exact_reduced_propagator};
use gqme::scalar::{c, cr};
use gqme::solver::{propagate_gqme, solve_volterra};
use gqme::spinboson::{
    discretize_spectral_density, projected_liouvillian, reorganization_energy,
    reorganization_energy_continuum, SpinBosonParams, TruncatedBathSpace,
};
use gqme::{operator_norm, vectorize, CMatrix, Mat64, SuperOperator, Vec64};

use common::{
    donor_state, donor_vector, g3_reference, g4_reference, preset_runs, G3_NC, PRESET_SHOTS,
    PRESET_STEPS,
};

/// Print the verdict line for one criterion, then enforce it.
fn report(num: u32, what: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {num}: {verdict} — {what} ({detail})");
    assert!(ok, "criterion {num} failed — {what} ({detail})");
}

fn max_abs_diff(a: &Mat64, b: &Mat64) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Deterministic generator for fixture matrices; same xorshift recipe the
/// unit tests use so failures replay exactly.
struct XorShift(u64);

impl XorShift {
    fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    fn next_signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    fn matrix(&mut self, n: usize) -> Mat64 {
        Mat64::from_fn(n, n, |_, _| c(self.next_signed(), self.next_signed()))
    }

    fn vector(&mut self, n: usize) -> Vec64 {
        Vec64::from_fn(n, |_, _| c(self.next_signed(), self.next_signed()))
    }
}

/// sigma_z read from a propagator column: donor minus acceptor population of
/// `G(t) . vec(donor)`.
fn sigma_z_of(g: &SuperOperator<f64>) -> f64 {
    let w = g.matrix() * donor_vector();
    w[0].re - w[3].re
}

#[test]
fn criterion_1_extracted_kernel_reproduces_the_exact_dynamics() {
    let start = Instant::now();
    let mut params = SpinBosonParams::<f64>::preset("model4")
        .expect("model4 is a shipped preset")
        .with_modes(2);
    params.dt = 1e-3;
    let steps = 2001; // t in [0, 2] at dt = 1e-3
    let modes = discretize_spectral_density(&params).expect("preset parameters are valid");
    let space = TruncatedBathSpace::new(8, params.n_modes).expect("8^2 levels fit the cap");

    let pfis = compute_pfis(&params, &modes, &space, steps).expect("pfi sampling succeeds");
    let proj_l = projected_liouvillian(&params);
    let kernel = solve_volterra(&pfis, &proj_l).expect("kernel extraction succeeds");
    let recovered = propagate_gqme(&proj_l, &kernel, steps).expect("propagation succeeds");
    let exact = exact_reduced_propagator(&params, &modes, &space, steps)
        .expect("exact propagator sampling succeeds");

    let worst = recovered
        .g
        .iter()
        .zip(&exact.g)
        .map(|(a, b)| (sigma_z_of(a) - sigma_z_of(b)).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        "kernel-based propagation matches the exact engine",
        worst <= 1e-4 && elapsed < 120.0,
        &format!("max |sigma_z| gap {worst:.3e} <= 1e-4, {elapsed:.1}s < 120s"),
    );
}

#[test]
fn criterion_2_projection_free_inputs_are_consistent() {
    let params = SpinBosonParams::<f64>::preset("model1")
        .expect("model1 is a shipped preset")
        .with_modes(2);
    let modes = discretize_spectral_density(&params).expect("preset parameters are valid");
    let space = TruncatedBathSpace::new(5, params.n_modes).expect("5^2 levels fit the cap");
    let proj_l = projected_liouvillian(&params);

    // F(0) must equal the bath-averaged generator.
    let mut coarse = params.clone();
    coarse.dt = 4e-3;
    let pfis_coarse = compute_pfis(&coarse, &modes, &space, 65).expect("pfi sampling succeeds");
    let f0_gap = max_abs_diff(pfis_coarse.f[0].matrix(), proj_l.matrix());

    // Centered differences of F must converge to the sampled derivative at
    // second order: halving dt divides the worst gap by about four.
    let mut fine = params.clone();
    fine.dt = 2e-3;
    let pfis_fine = compute_pfis(&fine, &modes, &space, 129).expect("pfi sampling succeeds");
    let fd_error = |pfis: &gqme::series::PfiSeries<f64>| -> f64 {
        let two_dt = cr(2.0 * pfis.dt);
        (1..pfis.f.len() - 1)
            .map(|n| {
                let diff = (pfis.f[n + 1].matrix() - pfis.f[n - 1].matrix()) / two_dt;
                max_abs_diff(&diff, pfis.fdot[n].matrix())
            })
            .fold(0.0, f64::max)
    };
    let err_coarse = fd_error(&pfis_coarse);
    let err_fine = fd_error(&pfis_fine);
    let ratio = err_coarse / err_fine;

    report(
        2,
        "F(0) matches the generator and dF/dt converges at second order",
        f0_gap <= 1e-8 && ratio > 3.0 && ratio < 6.0,
        &format!("|F(0) - <L>| = {f0_gap:.3e} <= 1e-8, dt-halving error ratio {ratio:.2} in (3, 6)"),
    );
}

#[test]
fn criterion_3_dilations_are_unitary_and_read_back_exactly() {
    let mut rng = XorShift(0x9E37_79B9_7F4A_7C15);
    let mut worst_unitarity = 0.0f64;
    let mut worst_readout = 0.0f64;
    let mut blocks_exact = true;

    for _ in 0..200 {
        let g = SuperOperator::new(rng.matrix(4)).expect("4 is a perfect square");
        let normalized = contraction_normalize(&g);
        let d = dilate_1(normalized.g_prime.matrix(), normalized.n_c)
            .expect("normalized matrices are contractions");
        worst_unitarity = worst_unitarity.max(unitarity_deviation(&d.matrix));
        blocks_exact &= (0..4).all(|i| {
            (0..4).all(|j| d.matrix[(i, j)] == normalized.g_prime.matrix()[(i, j)])
        });

        let v = rng.vector(4);
        let scale = v.norm();
        let mut input = Vec64::zeros(8);
        input.rows_mut(0, 4).copy_from(&(&v / cr(scale)));
        let out = &d.matrix * &input;
        let expected = g.matrix() * &v;
        let gap = (0..4)
            .map(|i| (out[i] * cr(d.n_c * scale) - expected[i]).norm())
            .fold(0.0, f64::max);
        worst_readout = worst_readout.max(gap);
    }

    // Same checks across every step of a propagated preset series.
    let run = &preset_runs()[0];
    let series = dilate_series(&run.propagator, NcMode::PerStep)
        .expect("propagated series dilate cleanly");
    let v0 = donor_vector();
    let mut input = Vec64::zeros(8);
    input.rows_mut(0, 4).copy_from(&v0);
    for (n, u) in series.u.iter().enumerate() {
        worst_unitarity = worst_unitarity.max(unitarity_deviation(u));
        let n_c = series.n_c[n];
        let out = u * &input;
        let expected = run.propagator.g[n].matrix() * &v0;
        let gap = (0..4)
            .map(|i| (out[i] * cr(n_c) - expected[i]).norm())
            .fold(0.0, f64::max);
        worst_readout = worst_readout.max(gap);
    }

    report(
        3,
        "dilations stay unitary with exact block and readout recovery",
        worst_unitarity <= 1e-12 && blocks_exact && worst_readout <= 1e-10,
        &format!(
            "unitarity {worst_unitarity:.3e} <= 1e-12, blocks exact: {blocks_exact}, \
             readout {worst_readout:.3e} <= 1e-10 over 200 + {PRESET_STEPS} cases"
        ),
    );
}

#[test]
fn criterion_4_recorded_snapshots_have_the_published_structure() {
    let g3 = g3_reference();
    let g4 = g4_reference();

    // The recorded factor is the norm of the strongly coupled snapshot at
    // print precision, and a valid contraction bound for the other one
    // (whose own norm sits below the whole-run factor).
    let norm4 = operator_norm(&g4);
    let norm3 = operator_norm(&g3);
    let norm_ok = (norm4 - G3_NC).abs() <= 0.03 && norm3 > 1.0 && norm3 <= G3_NC + 0.03;

    // Columns of the first and last rows sum to the trace-preservation
    // pattern (1, 0, 0, 1).
    let targets = [1.0, 0.0, 0.0, 1.0];
    let worst_column = (0..4)
        .map(|j| (g3[(0, j)] + g3[(3, j)] - cr(targets[j])).norm())
        .fold(0.0, f64::max);

    // Hermiticity preservation pairs entry (a, b) with the conjugate of
    // (p(a), p(b)) where p swaps the two coherence components.
    let p = [0usize, 2, 1, 3];
    let mut worst_pairing = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            worst_pairing = worst_pairing.max((g3[(a, b)] - g3[(p[a], p[b])].conj()).norm());
        }
    }

    report(
        4,
        "snapshot norms, trace pattern, and hermiticity pairing hold",
        norm_ok && worst_column <= 0.01 && worst_pairing <= 0.01,
        &format!(
            "norms {norm4:.4} within 1.376±0.03 and {norm3:.4} <= bound, \
             column-sum gap {worst_column:.3e} <= 0.01, pairing gap {worst_pairing:.3e} <= 0.01"
        ),
    );
}

#[test]
fn criterion_5_exact_circuit_readout_equals_classical_arithmetic() {
    let mut worst = 0.0f64;
    let mut worst_name = "";
    for run in preset_runs() {
        let gap = run
            .exact_rows
            .iter()
            .map(|row| (row.sigma_z_emulated - row.sigma_z_classical).abs())
            .fold(0.0, f64::max);
        if gap >= worst {
            worst = gap;
            worst_name = run.name;
        }
    }
    report(
        5,
        "exact-mode emulation matches classical readout on every preset step",
        worst <= 1e-10,
        &format!("max gap {worst:.3e} <= 1e-10 across 4 presets x {PRESET_STEPS} steps (worst: {worst_name})"),
    );
}

#[test]
fn criterion_6_shot_noise_stays_inside_the_binomial_envelope() {
    let mut all_ok = true;
    let mut details = Vec::new();
    for run in preset_runs() {
        let v0 = donor_vector();
        let inside = run
            .sampled_rows
            .iter()
            .filter(|row| {
                let w = run.propagator.g[row.step].matrix() * &v0;
                let p0 = (w[0].re / row.n_c).powi(2);
                let p3 = (w[3].re / row.n_c).powi(2);
                let var = ((1.0 - p0) + (1.0 - p3)) / (4.0 * PRESET_SHOTS as f64);
                let sigma = row.n_c * var.sqrt();
                (row.sigma_z_emulated - row.sigma_z_classical).abs() <= 4.0 * sigma
            })
            .count();
        let fraction = inside as f64 / run.sampled_rows.len() as f64;
        all_ok &= fraction >= 0.99;
        details.push(format!("{} {:.4}", run.name, fraction));
    }
    report(
        6,
        "sampled sigma_z stays within 4 binomial sigma on >= 99% of steps",
        all_ok,
        &format!("inside-fraction per preset: {}", details.join(", ")),
    );
}

#[test]
fn criterion_7_transpiled_circuits_are_faithful_and_within_budget() {
    // Budget: four times the reference single-step cost for an 8x8 dilated
    // unitary.
    const BUDGET: (usize, usize, usize) = (4 * 153, 4 * 98, 4 * 41);

    let mut rng = XorShift(0xDEAD_BEEF_CAFE_F00D);
    let mut worst_error = 0.0f64;
    let mut worst_counts = (0usize, 0usize, 0usize);
    let mut dense_free = true;

    let mut cases: Vec<CMatrix<f64>> = Vec::new();
    let snapshot = contraction_normalize(
        &SuperOperator::new(g3_reference()).expect("the snapshot is 4x4"),
    );
    cases.push(
        embed_pow2(
            &dilate_1(snapshot.g_prime.matrix(), snapshot.n_c)
                .expect("the normalized snapshot dilates"),
        )
        .matrix,
    );
    for _ in 0..7 {
        let g = SuperOperator::new(rng.matrix(4)).expect("4 is a perfect square");
        let normalized = contraction_normalize(&g);
        cases.push(
            embed_pow2(
                &dilate_1(normalized.g_prime.matrix(), normalized.n_c)
                    .expect("normalized matrices dilate"),
            )
            .matrix,
        );
    }

    for u in &cases {
        let seq = transpile(u).expect("dilated unitaries transpile");
        let rebuilt = reconstruct(&seq).expect("gate lists rebuild");
        worst_error = worst_error.max(max_abs_diff(&rebuilt, u));
        let counts = seq.counts();
        dense_free &= counts.dense == 0;
        worst_counts.0 = worst_counts.0.max(counts.rz);
        worst_counts.1 = worst_counts.1.max(counts.sqrt_x);
        worst_counts.2 = worst_counts.2.max(counts.cx);
    }
    let budget_ok = worst_counts.0 <= BUDGET.0
        && worst_counts.1 <= BUDGET.1
        && worst_counts.2 <= BUDGET.2;

    // Growth stays polynomial in the dimension: log2 of the step-to-step
    // ratio is bounded as the unitary doubles 8 -> 16 -> 32. The strict
    // reconstruction bound above is for the production 8x8 size; the larger
    // sizes only need to rebuild to a looser roundoff-scaled tolerance.
    let mut totals = Vec::new();
    let mut growth_rebuilds = true;
    for block in [4usize, 8, 16] {
        let raw = rng.matrix(block);
        let scaled = &raw / cr(operator_norm(&raw) * 1.01);
        let padded = embed_pow2(&dilate_1(&scaled, 1.0).expect("scaled matrices are contractions"));
        let seq = transpile(&padded.matrix).expect("dilated unitaries transpile");
        let counts = seq.counts();
        let rebuilt = reconstruct(&seq).expect("gate lists rebuild");
        growth_rebuilds &= max_abs_diff(&rebuilt, &padded.matrix) <= 1e-8;
        totals.push((counts.rz + counts.sqrt_x + counts.cx) as f64);
    }
    let monotone = totals[0] < totals[1] && totals[1] < totals[2];
    let slopes = [
        (totals[1] / totals[0]).log2(),
        (totals[2] / totals[1]).log2(),
    ];
    let polynomial = slopes.iter().all(|s| *s > 0.0 && *s < 5.5);

    report(
        7,
        "transpiled circuits rebuild exactly and fit the gate budget",
        worst_error <= 1e-10 && budget_ok && dense_free && monotone && polynomial && growth_rebuilds,
        &format!(
            "8x8 reconstruction {worst_error:.3e} <= 1e-10, counts rz/sx/cx {}/{}/{} within \
             {}/{}/{}, growth slopes {:.2}/{:.2} in (0, 5.5)",
            worst_counts.0, worst_counts.1, worst_counts.2, BUDGET.0, BUDGET.1, BUDGET.2,
            slopes[0], slopes[1]
        ),
    );
}

#[test]
fn criterion_8_damping_channel_reproduces_the_analytic_decay() {
    let rho0 = gqme::DensityMatrix::new(Mat64::from_row_slice(
        2,
        2,
        &[cr(0.25), cr(0.25), cr(0.25), cr(0.75)],
    ))
    .expect("the fixture state is valid");
    let gamma = 1.52e9; // 1/s
    let t_max = 1000e-12;
    let dt = 10e-12;
    let shots = 2000u64;

    let exact = amplitude_damping_curve(&rho0, gamma, t_max, dt, KrausReadout::Exact)
        .expect("the exact curve evaluates");
    let mut worst_decay = 0.0f64;
    let mut worst_trace = 0.0f64;
    for point in &exact {
        let analytic = 0.75 * (-gamma * point.t).exp();
        worst_decay = worst_decay.max((point.rho11 - analytic).abs());
        worst_trace = worst_trace.max((point.rho00 + point.rho11 - 1.0).abs());
    }

    // Shot mode must track the same curve within the per-branch binomial
    // error model: each population is a sum of square-root estimators, one
    // per damping branch, whose variances add.
    let sampled = amplitude_damping_curve(
        &rho0,
        gamma,
        t_max,
        dt,
        KrausReadout::Sampled {
            shots,
            seed: 0xADDA_2026,
        },
    )
    .expect("the sampled curve evaluates");
    let fnorm = vectorize(&rho0).norm();
    let var_of = |p: f64| (1.0 - p) / (4.0 * shots as f64);
    let all_sampled_ok = sampled.iter().all(|point| {
        let s = (-gamma * point.t).exp();
        // Branch statevector populations at the readout components.
        let p0_keep = (0.25 / fnorm).powi(2);
        let p3_keep = (0.75 * s / fnorm).powi(2);
        let p0_jump = (0.75 * (1.0 - s) / fnorm).powi(2);
        let sigma00 = fnorm * (var_of(p0_keep) + var_of(p0_jump)).sqrt();
        let sigma11 = fnorm * var_of(p3_keep).sqrt();
        let rho00_ref = 1.0 - 0.75 * s;
        let rho11_ref = 0.75 * s;
        (point.rho00 - rho00_ref).abs() <= 4.0 * sigma00
            && (point.rho11 - rho11_ref).abs() <= 4.0 * sigma11
    });

    report(
        8,
        "damping circuit matches rho11 = 0.75 exp(-gamma t) and stays normalized",
        worst_decay <= 1e-10 && worst_trace <= 1e-10 && all_sampled_ok,
        &format!(
            "decay gap {worst_decay:.3e} <= 1e-10, trace gap {worst_trace:.3e} <= 1e-10, \
             {} sampled points inside 4 sigma",
            sampled.len()
        ),
    );
}

#[test]
fn criterion_9_discretized_bath_recovers_the_continuum_reorganization_energy() {
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for name in ["model1", "model2", "model3", "model4"] {
        let params = SpinBosonParams::<f64>::preset(name).expect("shipped preset");
        let modes = discretize_spectral_density(&params).expect("preset parameters are valid");
        let discrete = reorganization_energy(&modes);
        let continuum = reorganization_energy_continuum(&params);
        let rel = ((discrete - continuum) / continuum).abs();
        worst = worst.max(rel);
        details.push(format!("{name} {rel:.2e}"));
    }
    report(
        9,
        "discretized reorganization energy is within 2% of the continuum value",
        worst <= 0.02,
        &format!("relative gaps: {}", details.join(", ")),
    );
}

// The snapshot criteria above read the donor state through helpers; keep
// the fixture constructors exercised even when criteria are filtered.
#[test]
fn fixtures_are_well_formed() {
    assert_eq!(g3_reference().nrows(), 4);
    assert_eq!(g4_reference().nrows(), 4);
    assert!((donor_state().trace() - cr(1.0)).norm() <= 1e-15);
}

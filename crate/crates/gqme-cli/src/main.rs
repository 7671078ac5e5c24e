//! Command-line front end for the gqme toolkit.
//!
//! Each stage of the workflow is its own subcommand (kernel generation,
//! propagation, dilation, transpilation, emulation), and `pipeline` chains
//! them end to end from a single configuration, writing every intermediate
//! artifact plus the final readout CSV. `kraus-demo` runs the standalone
//! amplitude-damping example.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{KernelSource, PartialConfig, RunConfig};
use gqme::circuit::{
    exact_populations, retrieve_populations, run_statevector, sample_shots, transpile,
    GateCounts, GateSequence,
};
use gqme::dilation::{dilate_series, NcMode};
use gqme::kraus::{amplitude_damping_curve, KrausReadout};
use gqme::liouville::SuperOperator;
use gqme::oracle::compute_pfis;
use gqme::pipeline::{readout_series, rows_to_csv, EmulatorReadout};
use gqme::series::{MemoryKernelSeries, PropagatorSeries, UnitarySeries};
use gqme::solver::{propagate_gqme, solve_volterra};
use gqme::spinboson::{
    discretize_spectral_density, projected_liouvillian, SpinBosonParams, TruncatedBathSpace,
};
use gqme::{DensityMatrix, Mat64, Vec64};

#[derive(Parser)]
#[command(name = "gqme", version, about = "Memory-kernel dynamics on a gate emulator")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a memory kernel with the exact-diagonalization engine.
    KernelGen(KernelGenArgs),
    /// Integrate the reduced equation of motion from a kernel file.
    GqmePropagate(PropagateArgs),
    /// Scale each propagator entry into a contraction and dilate to unitaries.
    Dilate(DilateArgs),
    /// Compile unitary series entries to RZ / sqrt(X) / CX circuits.
    Transpile(TranspileArgs),
    /// Run one circuit file on the statevector emulator.
    Emulate(EmulateArgs),
    /// Full run: kernel, propagation, dilation, circuits, readout CSV.
    Pipeline(PipelineArgs),
    /// Amplitude-damping channel demo emitting a population-decay CSV.
    KrausDemo(KrausDemoArgs),
}

#[derive(Args)]
struct KernelGenArgs {
    /// Model preset (model1..model4).
    #[arg(long, default_value = "model1")]
    model: String,
    /// Override the preset's number of bath modes.
    #[arg(long)]
    modes: Option<usize>,
    /// Fock levels kept per bath mode.
    #[arg(long, default_value_t = 6)]
    fock_dim: usize,
    /// Number of kernel grid points.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    /// Output kernel series file.
    #[arg(long)]
    out: PathBuf,
    /// Also write the projection-free inputs into this directory.
    #[arg(long)]
    pfi_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PropagateArgs {
    /// Kernel series file.
    #[arg(long)]
    kernel: PathBuf,
    /// Model preset supplying the memoryless generator.
    #[arg(long, default_value = "model1")]
    model: String,
    /// Steps to integrate (default: the kernel's full length).
    #[arg(long)]
    steps: Option<usize>,
    /// Output propagator series file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DilateArgs {
    /// Propagator series file.
    #[arg(long)]
    propagator: PathBuf,
    /// Output unitary series file.
    #[arg(long)]
    out: PathBuf,
    /// Share one normalization factor across the whole series.
    #[arg(long)]
    global_nc: bool,
}

#[derive(Args)]
struct TranspileArgs {
    /// Unitary series file.
    #[arg(long)]
    unitaries: PathBuf,
    /// Directory for the emitted circuit files.
    #[arg(long)]
    out_dir: PathBuf,
    /// Compile only this entry (default: all of them).
    #[arg(long)]
    step: Option<usize>,
}

#[derive(Args)]
struct EmulateArgs {
    /// Circuit file to run (input is the first basis state).
    #[arg(long)]
    circuit: PathBuf,
    /// Shots to sample; 0 reads exact amplitudes.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Normalization factor to rescale populations by.
    #[arg(long, default_value_t = 1.0)]
    nc: f64,
    /// System dimension the flattened state encodes.
    #[arg(long, default_value_t = 2)]
    ne: usize,
}

#[derive(Args)]
struct PipelineArgs {
    /// `key = value` configuration file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model preset (model1..model4) or `custom` with a config file.
    #[arg(long)]
    model: Option<String>,
    /// Override the number of bath modes.
    #[arg(long)]
    modes: Option<usize>,
    /// Fock levels kept per bath mode for the kernel engine.
    #[arg(long)]
    fock_dim: Option<usize>,
    /// `oracle` or `file:<path>` with a precomputed kernel.
    #[arg(long)]
    kernel_source: Option<KernelSource>,
    /// Steps to integrate.
    #[arg(long)]
    steps: Option<usize>,
    /// Shots per emitted step.
    #[arg(long)]
    shots: Option<u64>,
    /// Base seed; step n samples with seed + n.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit every k-th step.
    #[arg(long)]
    stride: Option<usize>,
    /// Directory for all artifacts.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Read amplitudes exactly instead of sampling shots.
    #[arg(long)]
    exact: bool,
    /// Share one normalization factor across the whole series.
    #[arg(long)]
    global_nc: bool,
}

#[derive(Args)]
struct KrausDemoArgs {
    /// Decay rate in 1/s.
    #[arg(long, default_value_t = 1.52e9)]
    gamma: f64,
    /// Final time in seconds.
    #[arg(long, default_value_t = 1e-9)]
    t_max: f64,
    /// Grid spacing in seconds.
    #[arg(long, default_value_t = 1e-11)]
    dt: f64,
    /// Shots per Kraus branch; 0 reads exact amplitudes.
    #[arg(long, default_value_t = 0)]
    shots: u64,
    #[arg(long, default_value_t = 1234)]
    seed: u64,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("initializing the worker pool")?;
    }
    match cli.command {
        Command::KernelGen(args) => run_kernel_gen(args),
        Command::GqmePropagate(args) => run_propagate(args),
        Command::Dilate(args) => run_dilate(args),
        Command::Transpile(args) => run_transpile(args),
        Command::Emulate(args) => run_emulate(args),
        Command::Pipeline(args) => run_pipeline(args),
        Command::KrausDemo(args) => run_kraus_demo(args),
    }
}

fn preset(name: &str) -> Result<SpinBosonParams<f64>> {
    SpinBosonParams::preset(name)
        .with_context(|| format!("unknown model `{name}` (expected model1..model4)"))
}

/// Pure ground-state (donor) density matrix, the workflow's initial state.
fn donor_state() -> DensityMatrix<f64> {
    let mut m = Mat64::zeros(2, 2);
    m[(0, 0)] = gqme::scalar::cr(1.0);
    DensityMatrix::new(m).expect("the donor projector is a valid state")
}

/// Generate a kernel from model parameters via the exact engine.
fn oracle_kernel(
    params: &SpinBosonParams<f64>,
    fock_dim: usize,
    steps: usize,
) -> Result<MemoryKernelSeries<f64>> {
    let modes = discretize_spectral_density(params)?;
    let space = TruncatedBathSpace::new(fock_dim, params.n_modes)?;
    let pfis = compute_pfis(params, &modes, &space, steps).context("sampling the correlation inputs")?;
    let kernel = solve_volterra(&pfis, &projected_liouvillian(params))
        .context("extracting the memory kernel")?;
    Ok(kernel)
}

fn run_kernel_gen(args: KernelGenArgs) -> Result<()> {
    let mut params = preset(&args.model)?;
    if let Some(n) = args.modes {
        params = params.with_modes(n);
    }
    params.validate()?;
    let modes = discretize_spectral_density(&params)?;
    let space = TruncatedBathSpace::new(args.fock_dim, params.n_modes)?;
    let pfis = compute_pfis(&params, &modes, &space, args.steps)
        .context("sampling the correlation inputs")?;
    if let Some(dir) = &args.pfi_dir {
        fs::create_dir_all(dir)?;
        pfis.write(&dir.join("pfi_f.series"), &dir.join("pfi_fdot.series"))?;
        println!("pfis: wrote {}", dir.display());
    }
    let kernel = solve_volterra(&pfis, &projected_liouvillian(&params))
        .context("extracting the memory kernel")?;
    kernel.write(&args.out)?;
    println!(
        "kernel: {} steps at dt = {:.6e}, wrote {}",
        kernel.k.len(),
        kernel.dt,
        args.out.display()
    );
    Ok(())
}

fn run_propagate(args: PropagateArgs) -> Result<()> {
    let params = preset(&args.model)?;
    let kernel = MemoryKernelSeries::<f64>::read(&args.kernel)?;
    let steps = args.steps.unwrap_or(kernel.k.len());
    let prop = propagate_gqme(&projected_liouvillian(&params), &kernel, steps)?;
    warn_if_unphysical(&prop);
    prop.write(&args.out)?;
    println!(
        "propagator: {} steps at dt = {:.6e}, wrote {}",
        prop.g.len(),
        prop.dt,
        args.out.display()
    );
    Ok(())
}

fn run_dilate(args: DilateArgs) -> Result<()> {
    let prop = PropagatorSeries::<f64>::read(&args.propagator)?;
    let mode = nc_mode(args.global_nc);
    let unis = dilate_series(&prop, mode)?;
    let worst = unis.n_c.iter().cloned().fold(0.0f64, f64::max);
    unis.write(&args.out)?;
    println!(
        "unitaries: {} entries of dimension {}, max factor {:.4}, wrote {}",
        unis.u.len(),
        unis.u.first().map_or(0, |u| u.nrows()),
        worst,
        args.out.display()
    );
    Ok(())
}

fn run_transpile(args: TranspileArgs) -> Result<()> {
    let unis = UnitarySeries::<f64>::read(&args.unitaries)?;
    fs::create_dir_all(&args.out_dir)?;
    let steps: Vec<usize> = match args.step {
        Some(s) => {
            if s >= unis.u.len() {
                bail!("step {s} out of range (series has {} entries)", unis.u.len());
            }
            vec![s]
        }
        None => (0..unis.u.len()).collect(),
    };
    let mut total = GateCounts::default();
    for &s in &steps {
        let seq = transpile(&unis.u[s])?;
        let counts = seq.counts();
        seq.write(&circuit_path(&args.out_dir, s))?;
        total.rz += counts.rz;
        total.sqrt_x += counts.sqrt_x;
        total.cx += counts.cx;
    }
    println!(
        "circuits: {} files in {}, total {} rz + {} sqrt-x + {} cx",
        steps.len(),
        args.out_dir.display(),
        total.rz,
        total.sqrt_x,
        total.cx
    );
    Ok(())
}

fn run_emulate(args: EmulateArgs) -> Result<()> {
    let seq = GateSequence::<f64>::read(&args.circuit)?;
    let mut input = Vec64::zeros(seq.dim());
    input[0] = gqme::scalar::cr(1.0);
    let out = run_statevector(&seq, &input)?;
    let pops = if args.shots == 0 {
        exact_populations(&out, args.ne, args.nc, 1.0)
    } else {
        let hist = sample_shots(&out, args.shots, args.seed)?;
        retrieve_populations(&hist, args.ne, args.nc, 1.0)
    };
    for (j, p) in pops.diag.iter().enumerate() {
        println!("population[{j}] = {p:.6}");
    }
    println!("sigma_z = {:.6}", pops.sigma_z);
    Ok(())
}

fn run_pipeline(args: PipelineArgs) -> Result<()> {
    let file_layer = match &args.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        model: args.model,
        modes: args.modes,
        fock_dim: args.fock_dim,
        kernel_source: args.kernel_source,
        steps: args.steps,
        shots: args.shots,
        seed: args.seed,
        stride: args.stride,
        output_dir: args.output_dir,
        exact_mode: args.exact.then_some(true),
        global_nc: args.global_nc.then_some(true),
        ..Default::default()
    };
    let cfg = file_layer.overlay(flags).resolve()?;
    execute_pipeline(&cfg)
}

fn execute_pipeline(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    println!(
        "pipeline: {} ({} modes), {} steps, {}",
        cfg.model_name,
        cfg.params.n_modes,
        cfg.steps,
        if cfg.exact_mode {
            "exact readout".to_string()
        } else {
            format!("{} shots per step", cfg.shots)
        }
    );

    let kernel = match &cfg.kernel_source {
        KernelSource::Oracle => oracle_kernel(&cfg.params, cfg.fock_dim, cfg.steps)?,
        KernelSource::File(path) => {
            let k = MemoryKernelSeries::<f64>::read(path)?;
            if (k.dt - cfg.params.dt).abs() > 1e-12 * cfg.params.dt.abs() {
                println!(
                    "note: kernel file dt = {:.6e} replaces the model dt = {:.6e}",
                    k.dt, cfg.params.dt
                );
            }
            k
        }
    };
    if kernel.k.len() < cfg.steps {
        bail!(
            "kernel has {} entries but {} steps were requested",
            kernel.k.len(),
            cfg.steps
        );
    }
    kernel.write(&cfg.output_dir.join("kernel.series"))?;
    println!("kernel: {} entries at dt = {:.6e}", kernel.k.len(), kernel.dt);

    let prop = propagate_gqme(&projected_liouvillian(&cfg.params), &kernel, cfg.steps)?;
    warn_if_unphysical(&prop);
    prop.write(&cfg.output_dir.join("propagator.series"))?;
    println!("propagator: {} entries", prop.g.len());

    // Artifacts cover the emitted (strided) steps, matching the CSV rows.
    let strided = PropagatorSeries {
        dt: prop.dt * cfg.stride as f64,
        g: prop.g.iter().step_by(cfg.stride).cloned().collect::<Vec<SuperOperator<f64>>>(),
    };
    let mode = nc_mode(cfg.global_nc);
    let unis = dilate_series(&strided, mode)?;
    unis.write(&cfg.output_dir.join("unitaries.series"))?;
    let circuits_dir = cfg.output_dir.join("circuits");
    fs::create_dir_all(&circuits_dir)?;
    let mut total = GateCounts::default();
    for (i, u) in unis.u.iter().enumerate() {
        let seq = transpile(u)?;
        let counts = seq.counts();
        total.rz += counts.rz;
        total.sqrt_x += counts.sqrt_x;
        total.cx += counts.cx;
        seq.write(&circuit_path(&circuits_dir, i * cfg.stride))?;
    }
    println!(
        "circuits: {} files, total {} rz + {} sqrt-x + {} cx",
        unis.u.len(),
        total.rz,
        total.sqrt_x,
        total.cx
    );

    let readout = if cfg.exact_mode {
        EmulatorReadout::Exact
    } else {
        EmulatorReadout::Sampled {
            shots: cfg.shots,
            base_seed: cfg.seed,
        }
    };
    let rows = readout_series(&prop, &donor_state(), mode, readout, cfg.stride)?;
    fs::write(cfg.output_dir.join("sigma_z.csv"), rows_to_csv(&rows))?;
    let last = rows.last().expect("a nonempty run emits at least one row");
    println!(
        "readout: {} rows, sigma_z(0) = {:.6}, sigma_z({:.4}) = {:.6} (classical {:.6})",
        rows.len(),
        rows[0].sigma_z_classical,
        last.t,
        last.sigma_z_emulated,
        last.sigma_z_classical
    );
    println!("wrote {}", cfg.output_dir.join("sigma_z.csv").display());
    Ok(())
}

fn run_kraus_demo(args: KrausDemoArgs) -> Result<()> {
    let rho0 = DensityMatrix::new(Mat64::from_row_slice(
        2,
        2,
        &[
            gqme::scalar::cr(0.25),
            gqme::scalar::cr(0.25),
            gqme::scalar::cr(0.25),
            gqme::scalar::cr(0.75),
        ],
    ))
    .expect("the demo initial state is square");
    let readout = if args.shots == 0 {
        KrausReadout::Exact
    } else {
        KrausReadout::Sampled {
            shots: args.shots,
            seed: args.seed,
        }
    };
    let curve = amplitude_damping_curve(&rho0, args.gamma, args.t_max, args.dt, readout)?;
    let mut csv = String::from("t,rho00,rho11\n");
    for p in &curve {
        writeln!(csv, "{:.12e},{:.12e},{:.12e}", p.t, p.rho00, p.rho11)
            .expect("string writes cannot fail");
    }
    match &args.out {
        Some(path) => {
            fs::write(path, csv)?;
            println!("wrote {} rows to {}", curve.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn nc_mode(global: bool) -> NcMode {
    if global {
        NcMode::Global
    } else {
        NcMode::PerStep
    }
}

fn circuit_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:05}.qcirc"))
}

/// Print a warning when the propagated series drifts off the physical
/// manifold; the readout columns stay self-consistent either way.
fn warn_if_unphysical(prop: &PropagatorSeries<f64>) {
    if let Err(err) = prop.validate(1e-8, 1e-3) {
        eprintln!("warning: propagator diagnostics: {err}");
    }
}

//! Pipeline run configuration: a flat `key = value` file merged with
//! command-line overrides, resolved into validated parameters.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use gqme::spinboson::SpinBosonParams;

/// Where the pipeline's memory kernel comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KernelSource {
    /// Generate from the exact-diagonalization engine.
    Oracle,
    /// Read a previously written kernel series file.
    File(PathBuf),
}

impl FromStr for KernelSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "oracle" {
            return Ok(Self::Oracle);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: needs a path after the colon".into());
            }
            return Ok(Self::File(PathBuf::from(path)));
        }
        Err(format!("expected `oracle` or `file:<path>`, got `{s}`"))
    }
}

/// Fully resolved configuration for one pipeline run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model_name: String,
    pub params: SpinBosonParams<f64>,
    pub kernel_source: KernelSource,
    pub steps: usize,
    pub shots: u64,
    pub seed: u64,
    pub stride: usize,
    pub output_dir: PathBuf,
    pub exact_mode: bool,
    pub fock_dim: usize,
    pub global_nc: bool,
}

/// Accumulated settings with everything optional; later layers override
/// earlier ones, and [`PartialConfig::resolve`] fills in defaults.
#[derive(Debug, Clone, Default)]
pub struct PartialConfig {
    pub model: Option<String>,
    pub modes: Option<usize>,
    pub fock_dim: Option<usize>,
    pub kernel_source: Option<KernelSource>,
    pub steps: Option<usize>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub stride: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub exact_mode: Option<bool>,
    pub global_nc: Option<bool>,
    // Model parameters, only accepted with `model = custom`.
    pub epsilon: Option<f64>,
    pub gamma_coupling: Option<f64>,
    pub beta: Option<f64>,
    pub xi: Option<f64>,
    pub omega_c: Option<f64>,
    pub omega_max: Option<f64>,
    pub dt: Option<f64>,
}

impl PartialConfig {
    /// Parse a `key = value` file; `#` starts a comment, blank lines are
    /// skipped, unknown keys are errors.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected `key = value`", path.display(), lineno + 1);
            };
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow::anyhow!("bad value for {key}: {e}"))
        }
        match key {
            "model" => self.model = Some(value.to_string()),
            "modes" => self.modes = Some(parse(key, value)?),
            "fock_dim" => self.fock_dim = Some(parse(key, value)?),
            "kernel_source" => {
                self.kernel_source =
                    Some(value.parse::<KernelSource>().map_err(anyhow::Error::msg)?)
            }
            "steps" => self.steps = Some(parse(key, value)?),
            "shots" => self.shots = Some(parse(key, value)?),
            "seed" => self.seed = Some(parse(key, value)?),
            "stride" => self.stride = Some(parse(key, value)?),
            "output_dir" => self.output_dir = Some(PathBuf::from(value)),
            "exact_mode" => self.exact_mode = Some(parse(key, value)?),
            "global_nc" => self.global_nc = Some(parse(key, value)?),
            "epsilon" => self.epsilon = Some(parse(key, value)?),
            "gamma_coupling" => self.gamma_coupling = Some(parse(key, value)?),
            "beta" => self.beta = Some(parse(key, value)?),
            "xi" => self.xi = Some(parse(key, value)?),
            "omega_c" => self.omega_c = Some(parse(key, value)?),
            "omega_max" => self.omega_max = Some(parse(key, value)?),
            "dt" => self.dt = Some(parse(key, value)?),
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    /// Apply another layer on top; its `Some` fields win.
    pub fn overlay(mut self, over: Self) -> Self {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            model,
            modes,
            fock_dim,
            kernel_source,
            steps,
            shots,
            seed,
            stride,
            output_dir,
            exact_mode,
            global_nc,
            epsilon,
            gamma_coupling,
            beta,
            xi,
            omega_c,
            omega_max,
            dt,
        );
        self
    }

    /// Fill defaults and validate into a runnable configuration.
    pub fn resolve(self) -> Result<RunConfig> {
        let model_name = self.model.unwrap_or_else(|| "model1".to_string());
        let params = if model_name == "custom" {
            let require = |name: &str, v: Option<f64>| {
                v.with_context(|| format!("model = custom needs `{name} = <value>`"))
            };
            SpinBosonParams {
                epsilon: require("epsilon", self.epsilon)?,
                gamma_coupling: require("gamma_coupling", self.gamma_coupling)?,
                beta: require("beta", self.beta)?,
                xi: require("xi", self.xi)?,
                omega_c: require("omega_c", self.omega_c)?,
                omega_max: require("omega_max", self.omega_max)?,
                n_modes: self.modes.context("model = custom needs `modes = <n>`")?,
                dt: require("dt", self.dt)?,
            }
        } else {
            if self.epsilon.is_some()
                || self.gamma_coupling.is_some()
                || self.beta.is_some()
                || self.xi.is_some()
                || self.omega_c.is_some()
                || self.omega_max.is_some()
            {
                bail!("model parameter keys require `model = custom` (got `{model_name}`)");
            }
            let mut p = SpinBosonParams::preset(&model_name).with_context(|| {
                format!("unknown model `{model_name}` (expected model1..model4 or custom)")
            })?;
            if let Some(n) = self.modes {
                p = p.with_modes(n);
            }
            if let Some(dt) = self.dt {
                p.dt = dt;
            }
            p
        };
        params.validate()?;

        let exact_mode = self.exact_mode.unwrap_or(false);
        let shots = self.shots.unwrap_or(2000);
        if !exact_mode && shots == 0 {
            bail!("shots = 0 only makes sense with exact_mode = true");
        }
        let stride = self.stride.unwrap_or(1);
        if stride == 0 {
            bail!("stride must be at least 1");
        }
        let steps = self.steps.unwrap_or(4000);
        if steps == 0 {
            bail!("steps must be at least 1");
        }
        Ok(RunConfig {
            model_name,
            params,
            kernel_source: self.kernel_source.unwrap_or(KernelSource::Oracle),
            steps,
            shots,
            seed: self.seed.unwrap_or(1234),
            stride,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from("gqme-out")),
            exact_mode,
            fock_dim: self.fock_dim.unwrap_or(6),
            global_nc: self.global_nc.unwrap_or(false),
        })
    }
}

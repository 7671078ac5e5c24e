//! Uniform-grid time series of superoperators and their text file format.
//!
//! All solver stages exchange data as series sampled at `t = n * dt`:
//! projection-free inputs, memory kernels, reduced propagators, and dilated
//! unitaries. The on-disk format is line-oriented text,
//!
//! ```text
//! GQME-SERIES v1 kind=<kind> ne=<N> dt=<decimal> steps=<M>
//! <record 0>
//! ...
//! <record M-1>
//! ```
//!
//! where each record holds one matrix as `re im` pairs in row-major order,
//! written with 17 significant digits so `f64` values round-trip bit-exactly.
//! Superoperator kinds (`kernel`, `propagator`, `pfi-f`, `pfi-fdot`) store
//! `2*N^4` fields per record; the `unitary` kind stores matrices of side
//! `2*N^2` (the dilation of an `N^2`-dimensional map) and each record carries
//! the step's normalization factor as one extra leading field.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::liouville::SuperOperator;
use crate::scalar::{c, RealScalar};
use crate::CMatrix;

/// Errors from series file I/O and series invariant checks.
#[derive(Debug, Error)]
pub enum SeriesError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed header: {detail} (line: {line:?})")]
    MalformedHeader { detail: String, line: String },
    #[error("unknown series kind {kind:?}")]
    UnknownKind { kind: String },
    #[error("series has kind {found}, expected {expected}")]
    WrongKind { expected: SeriesKind, found: SeriesKind },
    #[error("record {record}: expected {expected} fields, found {found}")]
    FieldCount {
        record: usize,
        expected: usize,
        found: usize,
    },
    #[error("record {record}, field {field}: cannot parse {text:?} as a number")]
    BadNumber {
        record: usize,
        field: usize,
        text: String,
    },
    #[error("header declares {expected} records but the file holds {found}")]
    RecordCount { expected: usize, found: usize },
    #[error("series invariant violated: {what}")]
    InvariantViolation { what: String },
}

/// What a series file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Kernel,
    Propagator,
    PfiF,
    PfiFdot,
    Unitary,
}

impl SeriesKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesKind::Kernel => "kernel",
            SeriesKind::Propagator => "propagator",
            SeriesKind::PfiF => "pfi-f",
            SeriesKind::PfiFdot => "pfi-fdot",
            SeriesKind::Unitary => "unitary",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SeriesError> {
        match s {
            "kernel" => Ok(SeriesKind::Kernel),
            "propagator" => Ok(SeriesKind::Propagator),
            "pfi-f" => Ok(SeriesKind::PfiF),
            "pfi-fdot" => Ok(SeriesKind::PfiFdot),
            "unitary" => Ok(SeriesKind::Unitary),
            other => Err(SeriesError::UnknownKind { kind: other.into() }),
        }
    }

    /// Matrix side stored per record, given the system dimension `ne`.
    pub fn matrix_side(self, ne: usize) -> usize {
        match self {
            SeriesKind::Unitary => 2 * ne * ne,
            _ => ne * ne,
        }
    }

    /// Extra per-record scalar fields ahead of the matrix entries.
    fn scale_fields(self) -> usize {
        match self {
            SeriesKind::Unitary => 1,
            _ => 0,
        }
    }
}

impl std::fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A series file in memory: one matrix per record, plus per-record scale
/// factors for the `unitary` kind.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries<T: RealScalar> {
    pub kind: SeriesKind,
    pub ne: usize,
    pub dt: T,
    pub mats: Vec<CMatrix<T>>,
    /// Normalization factor per record; empty unless `kind == Unitary`.
    pub scales: Vec<T>,
}

impl<T: RealScalar> RawSeries<T> {
    pub fn steps(&self) -> usize {
        self.mats.len()
    }

    /// Write in the series text format.
    pub fn write(&self, path: &Path) -> Result<(), SeriesError> {
        if self.kind.scale_fields() == 1 {
            assert_eq!(
                self.scales.len(),
                self.mats.len(),
                "unitary series needs one scale per record"
            );
        }
        let side = self.kind.matrix_side(self.ne);
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(
            out,
            "GQME-SERIES v1 kind={} ne={} dt={:.16e} steps={}",
            self.kind,
            self.ne,
            self.dt.as_f64(),
            self.mats.len()
        )?;
        let mut line = String::with_capacity(2 * side * side * 24 + 32);
        for (n, mat) in self.mats.iter().enumerate() {
            line.clear();
            if self.kind.scale_fields() == 1 {
                let _ = write!(line, "{:.16e}", self.scales[n].as_f64());
            }
            for i in 0..side {
                for j in 0..side {
                    let v = mat[(i, j)];
                    if !line.is_empty() {
                        line.push(' ');
                    }
                    let _ = write!(line, "{:.16e} {:.16e}", v.re.as_f64(), v.im.as_f64());
                }
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read any series file.
    pub fn read(path: &Path) -> Result<Self, SeriesError> {
        let mut lines = BufReader::new(File::open(path)?).lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        let (kind, ne, dt, steps) = parse_header(&header)?;
        let dt = T::lit(dt);
        let side = kind.matrix_side(ne);
        let expected = kind.scale_fields() + 2 * side * side;
        let mut mats = Vec::with_capacity(steps);
        let mut scales = Vec::new();
        for (record, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if mats.len() == steps {
                return Err(SeriesError::RecordCount {
                    expected: steps,
                    found: steps + 1,
                });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != expected {
                return Err(SeriesError::FieldCount {
                    record,
                    expected,
                    found: fields.len(),
                });
            }
            let parse = |field: usize| -> Result<T, SeriesError> {
                fields[field]
                    .parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| SeriesError::BadNumber {
                        record,
                        field,
                        text: fields[field].into(),
                    })
            };
            let offset = kind.scale_fields();
            if offset == 1 {
                scales.push(parse(0)?);
            }
            let mut mat = CMatrix::zeros(side, side);
            for i in 0..side {
                for j in 0..side {
                    let f = offset + 2 * (i * side + j);
                    mat[(i, j)] = c(parse(f)?, parse(f + 1)?);
                }
            }
            mats.push(mat);
        }
        if mats.len() != steps {
            return Err(SeriesError::RecordCount {
                expected: steps,
                found: mats.len(),
            });
        }
        Ok(Self {
            kind,
            ne,
            dt,
            mats,
            scales,
        })
    }

    /// Read a series file, insisting on its kind.
    pub fn read_expecting(path: &Path, kind: SeriesKind) -> Result<Self, SeriesError> {
        let raw = Self::read(path)?;
        if raw.kind != kind {
            return Err(SeriesError::WrongKind {
                expected: kind,
                found: raw.kind,
            });
        }
        Ok(raw)
    }
}

fn parse_header(line: &str) -> Result<(SeriesKind, usize, f64, usize), SeriesError> {
    let bad = |detail: &str| SeriesError::MalformedHeader {
        detail: detail.into(),
        line: line.into(),
    };
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("GQME-SERIES") {
        return Err(bad("missing GQME-SERIES magic"));
    }
    if tokens.next() != Some("v1") {
        return Err(bad("unsupported version"));
    }
    let (mut kind, mut ne, mut dt, mut steps) = (None, None, None, None);
    for tok in tokens {
        let (key, value) = tok.split_once('=').ok_or_else(|| bad("expected key=value"))?;
        match key {
            "kind" => kind = Some(SeriesKind::parse(value)?),
            "ne" => ne = Some(value.parse::<usize>().map_err(|_| bad("bad ne"))?),
            "dt" => dt = Some(value.parse::<f64>().map_err(|_| bad("bad dt"))?),
            "steps" => steps = Some(value.parse::<usize>().map_err(|_| bad("bad steps"))?),
            _ => return Err(bad("unknown header key")),
        }
    }
    let kind = kind.ok_or_else(|| bad("missing kind"))?;
    let ne = ne.ok_or_else(|| bad("missing ne"))?;
    let dt = dt.ok_or_else(|| bad("missing dt"))?;
    let steps = steps.ok_or_else(|| bad("missing steps"))?;
    if ne == 0 {
        return Err(bad("ne must be positive"));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(bad("dt must be positive"));
    }
    Ok((kind, ne, dt, steps))
}

fn superoperators_from_raw<T: RealScalar>(raw: RawSeries<T>) -> Vec<SuperOperator<T>> {
    raw.mats
        .into_iter()
        .map(|m| SuperOperator::new(m).expect("record side enforced by reader"))
        .collect()
}

/// Reduced propagator sampled as `g[n] ~ G(n * dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorSeries<T: RealScalar> {
    pub dt: T,
    pub g: Vec<SuperOperator<T>>,
}

/// Projection-free inputs `f[n] ~ F(n * dt)` and their analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PfiSeries<T: RealScalar> {
    pub dt: T,
    pub f: Vec<SuperOperator<T>>,
    pub fdot: Vec<SuperOperator<T>>,
}

/// Memory kernel sampled as `k[n] ~ K(n * dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernelSeries<T: RealScalar> {
    pub dt: T,
    pub k: Vec<SuperOperator<T>>,
}

/// Dilated unitaries with their per-step normalization factors.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitarySeries<T: RealScalar> {
    pub dt: T,
    pub ne: usize,
    pub u: Vec<CMatrix<T>>,
    pub n_c: Vec<T>,
}

impl<T: RealScalar> PropagatorSeries<T> {
    pub fn steps(&self) -> usize {
        self.g.len()
    }

    pub fn write(&self, path: &Path) -> Result<(), SeriesError> {
        to_raw(SeriesKind::Propagator, self.dt, &self.g).write(path)
    }

    pub fn read(path: &Path) -> Result<Self, SeriesError> {
        let raw = RawSeries::read_expecting(path, SeriesKind::Propagator)?;
        Ok(Self {
            dt: raw.dt,
            g: superoperators_from_raw(raw),
        })
    }

    /// Check the series invariants: `g[0]` is the identity and every entry
    /// preserves trace and hermiticity.
    pub fn validate(&self, identity_tol: T, preserve_tol: T) -> Result<(), SeriesError> {
        let violated = |what: String| Err(SeriesError::InvariantViolation { what });
        let Some(first) = self.g.first() else {
            return violated("series is empty".into());
        };
        let eye = CMatrix::<T>::identity(first.dim(), first.dim());
        let dev = crate::liouville::max_abs(&(first.matrix() - eye));
        if dev > identity_tol {
            return violated(format!("g[0] deviates from identity by {:.3e}", dev.as_f64()));
        }
        for (n, g) in self.g.iter().enumerate() {
            if !g.is_trace_preserving(preserve_tol) {
                return violated(format!("g[{n}] is not trace-preserving"));
            }
            if !g.is_hermiticity_preserving(preserve_tol) {
                return violated(format!("g[{n}] is not hermiticity-preserving"));
            }
        }
        Ok(())
    }
}

impl<T: RealScalar> PfiSeries<T> {
    pub fn steps(&self) -> usize {
        self.f.len()
    }

    /// Write as two files of kinds `pfi-f` and `pfi-fdot`.
    pub fn write(&self, f_path: &Path, fdot_path: &Path) -> Result<(), SeriesError> {
        to_raw(SeriesKind::PfiF, self.dt, &self.f).write(f_path)?;
        to_raw(SeriesKind::PfiFdot, self.dt, &self.fdot).write(fdot_path)
    }

    pub fn read(f_path: &Path, fdot_path: &Path) -> Result<Self, SeriesError> {
        let f = RawSeries::read_expecting(f_path, SeriesKind::PfiF)?;
        let fdot = RawSeries::read_expecting(fdot_path, SeriesKind::PfiFdot)?;
        if f.steps() != fdot.steps() || f.ne != fdot.ne || f.dt != fdot.dt {
            return Err(SeriesError::InvariantViolation {
                what: format!(
                    "pfi-f ({} steps, ne={}) and pfi-fdot ({} steps, ne={}) disagree",
                    f.steps(),
                    f.ne,
                    fdot.steps(),
                    fdot.ne
                ),
            });
        }
        Ok(Self {
            dt: f.dt,
            f: superoperators_from_raw(f),
            fdot: superoperators_from_raw(fdot),
        })
    }
}

impl<T: RealScalar> MemoryKernelSeries<T> {
    pub fn steps(&self) -> usize {
        self.k.len()
    }

    pub fn write(&self, path: &Path) -> Result<(), SeriesError> {
        to_raw(SeriesKind::Kernel, self.dt, &self.k).write(path)
    }

    pub fn read(path: &Path) -> Result<Self, SeriesError> {
        let raw = RawSeries::read_expecting(path, SeriesKind::Kernel)?;
        Ok(Self {
            dt: raw.dt,
            k: superoperators_from_raw(raw),
        })
    }
}

impl<T: RealScalar> UnitarySeries<T> {
    pub fn steps(&self) -> usize {
        self.u.len()
    }

    pub fn write(&self, path: &Path) -> Result<(), SeriesError> {
        RawSeries {
            kind: SeriesKind::Unitary,
            ne: self.ne,
            dt: self.dt,
            mats: self.u.clone(),
            scales: self.n_c.clone(),
        }
        .write(path)
    }

    pub fn read(path: &Path) -> Result<Self, SeriesError> {
        let raw = RawSeries::read_expecting(path, SeriesKind::Unitary)?;
        Ok(Self {
            dt: raw.dt,
            ne: raw.ne,
            u: raw.mats,
            n_c: raw.scales,
        })
    }
}

fn to_raw<T: RealScalar>(kind: SeriesKind, dt: T, mats: &[SuperOperator<T>]) -> RawSeries<T> {
    let ne = mats.first().map_or(1, |m| m.ne());
    RawSeries {
        kind,
        ne,
        dt,
        mats: mats.iter().map(|m| m.matrix().clone()).collect(),
        scales: Vec::new(),
    }
}

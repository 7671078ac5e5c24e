//! Gate-level layer: circuit IR, transpiler to the {RZ, sqrt(X), CX} basis,
//! statevector emulator, shot sampling, and population retrieval.
//!
//! Qubit 0 is the least-significant bit of every basis-state index, so the
//! Liouville-diagonal entry `sigma_11` of a dilated 3-qubit run sits at basis
//! state 3 (`|011>`).

mod emulator;
mod gates;
mod transpile;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

pub use emulator::{
    exact_populations, retrieve_populations, run_statevector, run_unitary, sample_shots,
    Populations, ShotHistogram,
};
pub use gates::{cx_matrix, lift_cx, lift_one_qubit, rz_block, rz_matrix, sqrt_x_block,
    sqrt_x_matrix, Block};
pub use transpile::{transpile, UNITARY_INPUT_TOL};

use crate::scalar::{c, cr, RealScalar};
use crate::CMatrix;

/// Errors across the transpiler, emulator, and circuit file I/O.
#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("matrix is {rows}x{cols}; circuits need a square power-of-two dimension >= 2")]
    NotPowerOfTwo { rows: usize, cols: usize },
    #[error("input deviates from unitarity by {dev:.3e} (tolerance {tol:.1e})")]
    NotUnitary { dev: f64, tol: f64 },
    #[error("state has {found} amplitudes, but the circuit acts on {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input state norm deviates from 1 by {dev:.3e}")]
    NotNormalized { dev: f64 },
    #[error("qubit {q} out of range for {n_qubits} qubits")]
    QubitOutOfRange { q: usize, n_qubits: usize },
    #[error("shot count must be positive")]
    ZeroShots,
    #[error("{kind} gates have no text form")]
    UnsupportedGate { kind: String },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed circuit file at line {line}: {what}")]
    Malformed { line: usize, what: String },
}

/// One gate in the hardware basis, plus a dense escape hatch.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate<T: RealScalar> {
    /// `RZ(lambda)` on one qubit.
    Rz { q: usize, lambda: T },
    /// `sqrt(X)` on one qubit.
    SqrtX { q: usize },
    /// Controlled-X; the target bit flips where the control bit is set.
    Cx { c: usize, t: usize },
    /// A dense unitary on an ordered qubit subset (not part of the
    /// transpiled basis; accepted by the emulator and `reconstruct`).
    Unitary { qubits: Vec<usize>, m: CMatrix<T> },
}

/// Tallies per gate kind, for budget checks and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GateCounts {
    pub rz: usize,
    pub sqrt_x: usize,
    pub cx: usize,
    pub dense: usize,
}

/// An ordered gate list with an explicit global phase.
///
/// The phase is part of the sequence's value: `reconstruct` multiplies it in,
/// so transpiled circuits reproduce their source matrix exactly, not merely
/// up to phase.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSequence<T: RealScalar> {
    pub n_qubits: usize,
    pub gates: Vec<Gate<T>>,
    /// Global phase angle in radians; the sequence represents
    /// `e^{i phase} * (product of gates)`.
    pub phase: T,
}

impl<T: RealScalar> GateSequence<T> {
    /// Dimension of the state the sequence acts on.
    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Count gates by kind.
    pub fn counts(&self) -> GateCounts {
        let mut out = GateCounts::default();
        for g in &self.gates {
            match g {
                Gate::Rz { .. } => out.rz += 1,
                Gate::SqrtX { .. } => out.sqrt_x += 1,
                Gate::Cx { .. } => out.cx += 1,
                Gate::Unitary { .. } => out.dense += 1,
            }
        }
        out
    }

    /// Verify every qubit index is in range.
    pub fn check_indices(&self) -> Result<(), CircuitError> {
        let bad = |q: usize| CircuitError::QubitOutOfRange {
            q,
            n_qubits: self.n_qubits,
        };
        for g in &self.gates {
            match g {
                Gate::Rz { q, .. } | Gate::SqrtX { q } => {
                    if *q >= self.n_qubits {
                        return Err(bad(*q));
                    }
                }
                Gate::Cx { c, t } => {
                    for &q in &[*c, *t] {
                        if q >= self.n_qubits {
                            return Err(bad(q));
                        }
                    }
                }
                Gate::Unitary { qubits, .. } => {
                    for &q in qubits {
                        if q >= self.n_qubits {
                            return Err(bad(q));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Serialize to the circuit text format:
    /// header `QCIRC v1 nq=<q> phase=<re> <im>`, then one gate per line.
    /// Dense `Unitary` gates have no text form and are rejected.
    pub fn write(&self, path: &Path) -> Result<(), CircuitError> {
        let mut out = String::new();
        let ph = c(self.phase.cos(), self.phase.sin());
        writeln!(
            out,
            "QCIRC v1 nq={} phase={:.16e} {:.16e}",
            self.n_qubits,
            ph.re.as_f64(),
            ph.im.as_f64()
        )
        .expect("string writes cannot fail");
        for g in &self.gates {
            match g {
                Gate::Rz { q, lambda } => {
                    writeln!(out, "RZ q{q} {:.16e}", lambda.as_f64()).expect("string write")
                }
                Gate::SqrtX { q } => writeln!(out, "SX q{q}").expect("string write"),
                Gate::Cx { c, t } => writeln!(out, "CX q{c} q{t}").expect("string write"),
                Gate::Unitary { .. } => {
                    return Err(CircuitError::UnsupportedGate {
                        kind: "dense".into(),
                    })
                }
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Parse the circuit text format written by [`GateSequence::write`].
    pub fn read(path: &Path) -> Result<Self, CircuitError> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines().enumerate();
        let malformed = |line: usize, what: &str| CircuitError::Malformed {
            line: line + 1,
            what: what.into(),
        };

        let (hline, header) = lines
            .next()
            .ok_or_else(|| malformed(0, "empty file"))?;
        let mut n_qubits = None;
        let mut phase_parts = None;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "QCIRC" || fields[1] != "v1" {
            return Err(malformed(hline, "expected `QCIRC v1 nq=<q> phase=<re> <im>`"));
        }
        if let Some(v) = fields[2].strip_prefix("nq=") {
            n_qubits = v.parse::<usize>().ok();
        }
        if let Some(re) = fields[3].strip_prefix("phase=") {
            if let (Ok(re), Ok(im)) = (re.parse::<f64>(), fields[4].parse::<f64>()) {
                phase_parts = Some((re, im));
            }
        }
        let (Some(n_qubits), Some((re, im))) = (n_qubits, phase_parts) else {
            return Err(malformed(hline, "bad header fields"));
        };
        if n_qubits == 0 {
            return Err(malformed(hline, "nq must be positive"));
        }

        let parse_qubit = |line: usize, tok: &str| -> Result<usize, CircuitError> {
            tok.strip_prefix('q')
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| malformed(line, "expected `q<index>`"))
        };
        let mut gates = Vec::new();
        for (ln, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                [] => continue,
                ["RZ", q, lambda] => {
                    let lambda = lambda
                        .parse::<f64>()
                        .map_err(|_| malformed(ln, "bad RZ angle"))?;
                    gates.push(Gate::Rz {
                        q: parse_qubit(ln, q)?,
                        lambda: T::lit(lambda),
                    });
                }
                ["SX", q] => gates.push(Gate::SqrtX {
                    q: parse_qubit(ln, q)?,
                }),
                ["CX", c, t] => gates.push(Gate::Cx {
                    c: parse_qubit(ln, c)?,
                    t: parse_qubit(ln, t)?,
                }),
                _ => return Err(malformed(ln, "unrecognized gate line")),
            }
        }
        let seq = GateSequence {
            n_qubits,
            gates,
            phase: T::lit(im.atan2(re)),
        };
        seq.check_indices()?;
        Ok(seq)
    }
}

/// Dense matrix realized by a gate sequence: the ordered product of lifted
/// gate matrices times the global phase. The verification inverse of
/// [`transpile`].
pub fn reconstruct<T: RealScalar>(seq: &GateSequence<T>) -> Result<CMatrix<T>, CircuitError> {
    seq.check_indices()?;
    let dim = seq.dim();
    // Columns are the images of basis vectors under the same application
    // routine the emulator uses, so both paths agree by construction.
    let mut out = CMatrix::<T>::zeros(dim, dim);
    for j in 0..dim {
        let mut col = crate::CVector::<T>::zeros(dim);
        col[j] = cr(T::one());
        emulator::apply_gates(seq, &mut col)?;
        out.set_column(j, &col);
    }
    Ok(out * c(seq.phase.cos(), seq.phase.sin()))
}

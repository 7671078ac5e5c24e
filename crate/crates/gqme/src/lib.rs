//! Memory-kernel reduced dynamics for small open quantum systems, plus the
//! machinery to run the resulting propagators on a gate-based emulator.
//!
//! The pipeline this crate implements:
//!
//! 1. [`spinboson`] builds a two-level system coupled to a discretized
//!    harmonic bath, and [`oracle`] computes exact reference dynamics and the
//!    projection-free inputs of the memory-kernel equation from the full
//!    Hamiltonian's spectrum.
//! 2. [`solver`] extracts the memory kernel from those inputs (a Volterra
//!    integral equation) and integrates the resulting integro-differential
//!    equation for the reduced propagator.
//! 3. [`dilation`] rescales each propagator snapshot to a contraction and
//!    embeds it in a larger unitary; [`circuit`] compiles that unitary to the
//!    {RZ, sqrt(X), CX} gate set and runs it on a statevector emulator with
//!    shot sampling.
//! 4. [`kraus`] runs the same dilate-and-emulate workflow for an amplitude
//!    damping channel given in Kraus form.
//!
//! The numeric core is generic over the real scalar (`f32`/`f64`) via
//! [`scalar::RealScalar`]; the crate-root aliases fix `f64` for ordinary use.

pub mod circuit;
pub mod dilation;
pub mod kraus;
pub mod liouville;
pub mod oracle;
pub mod pipeline;
pub mod scalar;
pub mod series;
pub mod solver;
pub mod spinboson;

use num_complex::Complex;

/// Complex dynamic matrix over a chosen real scalar.
pub type CMatrix<T> = nalgebra::DMatrix<Complex<T>>;
/// Complex dynamic column vector over a chosen real scalar.
pub type CVector<T> = nalgebra::DVector<Complex<T>>;

/// Default real scalar for end-user code.
pub type Real = f64;
/// Default complex scalar.
pub type C64 = Complex<f64>;
/// Default complex matrix.
pub type Mat64 = CMatrix<f64>;
/// Default complex vector.
pub type Vec64 = CVector<f64>;

pub use liouville::{
    devectorize, frobenius_norm, liouvillian_of, operator_norm, vectorize, DensityMatrix,
    LiouvilleVector, SuperOperator,
};

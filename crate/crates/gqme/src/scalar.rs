//! Scalar abstraction for the numeric core.
//!
//! Every numeric routine in this crate is generic over a real scalar type so
//! the same code runs at `f32` or `f64` precision. Concrete aliases for the
//! default `f64` instantiation live at the crate root.

use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar usable as the base field of the numeric core.
///
/// Implemented by `f32` and `f64` through the blanket impl below.
pub trait RealScalar: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync {
    /// Convert an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal not representable in scalar type")
    }

    /// Lossy view of this scalar as `f64`, for diagnostics and error messages.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy + Send + Sync> RealScalar for T {}

/// Complex number with both parts given as scalars.
pub fn c<T: RealScalar>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Purely real complex number.
pub fn cr<T: RealScalar>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Purely imaginary complex number.
pub fn ci<T: RealScalar>(im: T) -> Complex<T> {
    Complex::new(T::zero(), im)
}

/// The imaginary unit.
pub fn im<T: RealScalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

//! Scalar abstraction for the numeric core.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use rand::distr::uniform::SampleUniform;

/// Real scalar type the model and optimizer math is generic over.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + SampleUniform + Copy {
    fn is_finite_val(self) -> bool;
    /// Sentinel used for diverged simulations so a damping loop can reject
    /// the step without special-casing.
    fn infinite() -> Self;
}

impl Scalar for f32 {
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
    fn infinite() -> Self {
        f32::INFINITY
    }
}

impl Scalar for f64 {
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
    fn infinite() -> Self {
        f64::INFINITY
    }
}

/// Shorthand for converting literal constants into the working scalar.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

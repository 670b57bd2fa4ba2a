//! Scalar abstraction for the numeric kernels.
//!
//! All core math is generic over the floating-point type; `f32` and `f64`
//! both satisfy the bounds. Concrete aliases live at the crate root.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Bundle of trait bounds required by the numeric routines.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + std::iter::Sum {}

impl<T> Scalar for T where T: RealField + Copy + FromPrimitive + ToPrimitive + std::iter::Sum {}

/// Shorthand for pulling an `f64` constant into the scalar type.
#[inline]
pub fn cast<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}

/// Natural log of the gamma function, evaluated through `f64`.
///
/// Used for the `log(x!)` term of the Poisson density; `f64` precision is a
/// strict upper bound on what any supported scalar type can represent.
#[inline]
pub fn ln_gamma<T: Scalar>(x: T) -> T {
    let v = x.to_f64().unwrap_or(f64::NAN);
    cast(statrs::function::gamma::ln_gamma(v))
}

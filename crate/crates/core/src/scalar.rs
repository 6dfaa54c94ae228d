//! Scalar abstraction for the floating-point numerics.
//!
//! Everything in [`crate::zeta`] and [`crate::certified`] is written against
//! [`Real`], so the same code runs in `f32` and `f64`. Error bounds are scaled
//! by `T::epsilon()`, which makes single-precision budgets honest rather than
//! merely looser.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`. Panics only for values that no `Real`
/// can represent, which would be a programming error.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

#[inline]
pub fn from_u64<T: Real>(x: u64) -> T {
    T::from_u64(x).expect("integer representable in scalar type")
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

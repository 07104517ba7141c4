//! Scalar traits shared by the exact and floating layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Signed, ToPrimitive};

/// Integer type usable for exact arithmetic: machine integers or `BigInt`.
pub trait Int:
    num_integer::Integer + Signed + Clone + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync
{
}

impl<T> Int for T where
    T: num_integer::Integer
        + Signed
        + Clone
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Send
        + Sync
{
}

/// Floating point type for the numerical layer (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an integer to the floating type.
#[inline]
pub fn int_to_real<I: Int, T: Real>(n: &I) -> T {
    T::from(n.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(T::nan)
}

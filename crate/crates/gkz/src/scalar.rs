//! Scalar trait bounds for the exact and floating point lanes.

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Signed, ToPrimitive};

/// Exact integer scalar: everything the exact lane needs from `i64` or `BigInt`.
pub trait ExactScalar:
    Integer
    + Signed
    + Clone
    + Hash
    + Debug
    + Display
    + FromStr
    + From<i64>
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
}

impl<T> ExactScalar for T where
    T: Integer
        + Signed
        + Clone
        + Hash
        + Debug
        + Display
        + FromStr
        + From<i64>
        + ToPrimitive
        + Send
        + Sync
        + 'static
{
}

/// Floating point scalar for the quadrature lane (`f32` or `f64`).
pub trait FloatScalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> FloatScalar for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Lossy conversion from an exact rational to a float scalar.
pub fn ratio_to_float<E: ExactScalar, F: FloatScalar>(q: &Ratio<E>) -> F {
    let n = q.numer().to_f64().expect("numerator out of f64 range");
    let d = q.denom().to_f64().expect("denominator out of f64 range");
    F::from_f64(n / d).expect("float conversion")
}

/// Exact integer from a small constant.
pub fn int<E: ExactScalar>(v: i64) -> E {
    E::from(v)
}

/// Exact rational from a small integer constant.
pub fn rat<E: ExactScalar>(v: i64) -> Ratio<E> {
    Ratio::from_integer(E::from(v))
}

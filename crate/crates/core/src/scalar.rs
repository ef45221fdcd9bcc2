//! Numeric traits the library is generic over.
//!
//! [`Scalar`] only asks for ring arithmetic and ordering, so the Bernoulli-sum
//! kernels and the Jaccard distance also run on exact rationals. [`Real`] adds
//! what geometry and the normal approximation need (square roots, finiteness).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered ring element: `f32`, `f64`, or an exact rational such as
/// `num_rational::Ratio<i64>`.
pub trait Scalar: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {}

impl<T> Scalar for T where T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive {}

/// Floating point scalar used for coordinates and probabilities.
pub trait Real: Scalar + Float + Sum + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Scalar + Float + Sum + Display + Send + Sync + 'static {}

/// Converts an `f64` literal into the scalar type.
///
/// Panics only for scalar types that cannot represent ordinary finite
/// decimals, which none of the supported types do.
#[inline]
pub fn lit<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("scalar type cannot represent literal")
}

/// Converts a count into the scalar type.
#[inline]
pub fn count<S: Scalar>(n: usize) -> S {
    S::from_usize(n).expect("scalar type cannot represent count")
}

/// Rounds to 12 decimal places. Probabilities are compared against
/// thresholds after rounding, so different summation orders agree at the
/// boundary.
pub fn round12<F: Real>(p: F) -> F {
    let scale = lit::<F>(1e12);
    (p * scale).round() / scale
}

/// Tolerance for every probability-sum check.
pub const PROB_TOLERANCE: f64 = 1e-9;

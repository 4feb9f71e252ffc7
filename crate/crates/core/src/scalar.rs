//! Scalar traits shared by the numerical modules.
//!
//! [`Real`] covers the floating-point routines (eigen-solver, PCA, hydrodynamic
//! predictors). [`Weight`] is the looser bound used by the Markov-chain code,
//! which also runs over exact rationals.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Conversion from a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// A probability weight. Implemented for floats and exact rationals.
pub trait Weight: Clone + Num + Signed + PartialOrd + Debug {
    /// Whether `self` equals one up to the representation's tolerance
    /// (1e-12 for `f64`, 1e-6 for `f32`, exact for rationals).
    fn is_one_within_tolerance(&self) -> bool;

    fn to_f64(&self) -> f64;

    fn from_usize(n: usize) -> Self;
}

impl Weight for f64 {
    fn is_one_within_tolerance(&self) -> bool {
        (self - 1.0).abs() <= 1e-12
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_usize(n: usize) -> Self {
        n as f64
    }
}

impl Weight for f32 {
    fn is_one_within_tolerance(&self) -> bool {
        (self - 1.0).abs() <= 1e-6
    }
    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
    fn from_usize(n: usize) -> Self {
        n as f32
    }
}

impl Weight for Ratio<i64> {
    fn is_one_within_tolerance(&self) -> bool {
        *self == Ratio::from_integer(1)
    }
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
    fn from_usize(n: usize) -> Self {
        Ratio::from_integer(n as i64)
    }
}

impl Weight for BigRational {
    fn is_one_within_tolerance(&self) -> bool {
        *self == BigRational::from_integer(BigInt::from(1))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

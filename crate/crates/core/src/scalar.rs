//! Scalar abstractions.
//!
//! Interference weights only need ring arithmetic and an order, so the matrix
//! and the measure work over exact rationals as well as `f32`/`f64`. Anything
//! that raises distances to a path-loss exponent needs [`Real`].

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num};

/// A matrix weight / load value.
pub trait Weight:
    Num + Copy + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
    /// Absolute tolerance for bound comparisons.
    fn tolerance() -> Self;

    /// Lossy conversion used for reporting.
    fn to_f64(self) -> f64;

    fn from_count(count: u64) -> Self {
        Self::from_u64(count).expect("count representable in weight type")
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Weight for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Weight for f32 {
    // 1e-9 is below f32 resolution near 1.0.
    fn tolerance() -> Self {
        1e-6
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Weight for Ratio<i64> {
    fn tolerance() -> Self {
        Ratio::from_integer(0)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

/// Floating point weights, needed by the geometric (SINR) constructions.
pub trait Real: Weight + Float {}

impl<T: Weight + Float> Real for T {}

/// Converts an `f64` literal into `S`.
pub fn lit<S: Weight>(x: f64) -> S {
    S::from_f64(x).expect("literal representable in scalar type")
}

//! Numeric abstractions shared by the allocation code.
//!
//! Everything that only needs field arithmetic (instance validation, weight
//! policies, feasibility, progressive filling) is written against [`Scalar`],
//! so it runs on `f32`, `f64` and exact rationals alike. The convex solvers and
//! fairness measures need `powf`/`ln`, so they ask for [`Real`] instead.

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, NumAssign};
use std::fmt::Debug;
use std::ops::Neg;

/// Ordered field element usable by the exact parts of the crate.
pub trait Scalar:
    Copy
    + PartialOrd
    + Debug
    + Num
    + NumAssign
    + Neg<Output = Self>
    + FromPrimitive
    + Send
    + Sync
    + 'static
{
    /// Relative tolerance used when merging near-simultaneous saturation
    /// levels. Exact types return zero.
    fn tie_tolerance() -> Self;

    /// Lossy conversion used for reporting and tolerance checks.
    fn as_f64(self) -> f64;

    fn magnitude(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar type")
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

/// Floating-point scalar for the convex solvers and fairness measures.
pub trait Real: Scalar + Float {}

impl Scalar for f64 {
    fn tie_tolerance() -> Self {
        1e-12
    }
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    fn tie_tolerance() -> Self {
        1e-6
    }
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Real for f64 {}
impl Real for f32 {}

macro_rules! exact_ratio {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            fn tie_tolerance() -> Self {
                Ratio::from_integer(0)
            }
            fn as_f64(self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    };
}

exact_ratio!(i64);
exact_ratio!(i128);

/// Lift an `f64` literal into any scalar type.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64_lossy(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_ratio_round_trips_simple_fractions() {
        let third: Ratio<i128> = Ratio::new(1, 3);
        assert!((third.as_f64() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            <Ratio<i128> as Scalar>::tie_tolerance(),
            Ratio::from_integer(0)
        );
        let half: Ratio<i64> = lit(0.5);
        assert_eq!(half, Ratio::new(1, 2));
    }

    #[test]
    fn min_max_helpers() {
        assert_eq!(2.0f64.max_of(3.0), 3.0);
        assert_eq!(2.0f32.min_of(-1.0), -1.0);
    }
}

//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real floating-point type the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. Tolerances that depend on precision are
/// derived from [`Float::epsilon`] so that the same algorithms run in either width.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts a literal; panics only if the literal is not representable at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Default convergence tolerance for the Jacobi eigensolver, relative to `‖A‖_F`.
    fn eigen_tolerance() -> Self {
        Self::epsilon() * Self::lit(64.0)
    }

    /// Ratio of the smallest to largest pivot below which a factorization is
    /// treated as rank-deficient. `1e-12` in double precision.
    fn rank_tolerance() -> Self {
        Self::lit(1e-12).max(Self::epsilon() * Self::lit(32.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_tolerance_is_1e12_in_double() {
        assert_eq!(f64::rank_tolerance(), 1e-12);
        assert!(f32::rank_tolerance() > 1e-7);
    }
}

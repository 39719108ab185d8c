//! The numeric bound shared by every solver routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Real scalar type the game model and solvers are generic over.
///
/// Implemented for `f32` and `f64`. All tolerances are expressed through
/// [`Scalar::tolerance`] so that single precision stays usable.
pub trait Scalar:
    Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold at all.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    /// `base` widened to a few ulps of the type when `base` is below its resolution.
    fn tolerance(base: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(64.0);
        Self::lit(base).max(floor)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

//! Scalar abstraction for probabilities, weights and divergences.
//!
//! Every numeric routine in the crate is written against [`Scalar`] so the
//! same table model and probe code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable as a probability / weight.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a normalized distribution's total mass from 1.
    fn mass_tolerance() -> Self;

    /// Lossy conversion from `f64`; every literal in the crate fits in `f32`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    #[inline]
    fn mass_tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    #[inline]
    fn mass_tolerance() -> Self {
        1e-5
    }
}

/// Smallest probability any candidate may carry after smoothing.
pub const MASS_FLOOR: f64 = 1e-12;

//! Scalar abstraction shared by the automaton, the CDF and the curve code.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar used for log-likelihoods, rates and fractions.
///
/// Implemented for `f32` and `f64`. Counts are converted through
/// [`Real::from_count`], which is exact for counts below 2^24 (`f32`) or
/// 2^53 (`f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable as float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable as float")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Total order for non-NaN values; NaN compares equal to everything.
    fn cmp_total(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

impl Real for f32 {}
impl Real for f64 {}

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type the graph and modularity code is written against.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literal constants and tolerances.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Total order on scalars; NaN compares equal to everything, which never
/// happens for weights that passed validation.
pub(crate) fn cmp<T: Scalar>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}

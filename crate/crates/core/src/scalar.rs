//! Scalar abstraction for the numeric kernels.
//!
//! The logistic fits, BIC scores and precedence ratios are written against
//! [`Scalar`] so they run at `f32` or `f64`; everything shipped (CLI, file
//! formats, acceptance thresholds) instantiates `f64` via [`crate::Real`].

use num_traits::{Float, FromPrimitive};

pub trait Scalar:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + std::iter::Sum + Send + Sync + 'static
{
    /// Lossless embedding of a count into the scalar domain.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + std::fmt::Debug
        + std::fmt::Display
        + std::iter::Sum
        + Send
        + Sync
        + 'static
{
}

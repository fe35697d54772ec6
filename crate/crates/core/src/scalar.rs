//! Floating-point scalar abstraction shared by the checkerboard, rearrangement
//! and measure code.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// A real scalar the copula machinery can be instantiated with.
///
/// Implemented for `f32` and `f64`. The associated tolerances scale with the
/// precision of the type.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Relative tolerance accepted for row/column sums of a checkerboard matrix.
    const MARGIN_TOL: f64;
    /// Relative tolerance under which two cumulative row sums count as ordered.
    const ORDER_TOL: f64;
    /// Breakpoints closer than this are merged.
    const BREAK_TOL: f64;

    /// Converts an `f64` literal. Never fails for finite input.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f64 {
    const MARGIN_TOL: f64 = 1e-10;
    const ORDER_TOL: f64 = 1e-12;
    const BREAK_TOL: f64 = 1e-12;
}

impl Scalar for f32 {
    const MARGIN_TOL: f64 = 1e-4;
    const ORDER_TOL: f64 = 1e-5;
    const BREAK_TOL: f64 = 1e-6;
}

/// Pairwise summation; the result does not depend on how the caller chunked work.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= 16 {
        return xs.iter().copied().fold(T::zero(), |a, b| a + b);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

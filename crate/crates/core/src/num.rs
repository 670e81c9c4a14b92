//! Scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate (geometry, distances, statistics,
//! synthesis) is generic over [`Real`], so the same code runs on `f32`
//! and `f64`. The crate root exports f64-backed aliases, which is what
//! the file formats and the CLI use.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + AddAssign + Sum<Self> + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from `f64` for constants and parsed input.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 constant representable in scalar type")
    }

    /// Conversion from usize counts.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }
}

impl<T> Real for T where
    T: Float
        + FromPrimitive
        + AddAssign
        + Sum<T>
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Median of a slice, NaN-free input assumed; even lengths average the two
/// central values. Returns `None` on empty input.
pub fn median<S: Real>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-NaN values"));
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / S::of(2.0)
    })
}

/// Arithmetic mean; `None` on empty input.
pub fn mean<S: Real>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    Some(values.iter().copied().sum::<S>() / S::of_usize(values.len()))
}

/// Population standard deviation (1/n); `None` on empty input.
pub fn population_sd<S: Real>(values: &[S]) -> Option<S> {
    let m = mean(values)?;
    let ss = values.iter().map(|&v| (v - m) * (v - m)).sum::<S>();
    Some((ss / S::of_usize(values.len())).sqrt())
}

/// Sample standard deviation (1/(n-1)); zero for a single value, `None` on empty.
pub fn sample_sd<S: Real>(values: &[S]) -> Option<S> {
    if values.is_empty() {
        return None;
    }
    if values.len() == 1 {
        return Some(S::zero());
    }
    let m = mean(values)?;
    let ss = values.iter().map(|&v| (v - m) * (v - m)).sum::<S>();
    Some((ss / S::of_usize(values.len() - 1)).sqrt())
}

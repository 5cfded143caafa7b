//! Floating-point scalar abstraction.
//!
//! Every algorithm in this crate is generic over the working precision.
//! `f64` is the default type parameter everywhere; `f32` is mainly useful
//! for memory-bound experiments and loses most of the tight tolerances
//! the double-precision tests pin down.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Display + Default + 'static {
    /// Conversion from an `f64` literal, for constants and tolerances.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Lossy view as `f64`, for diagnostics and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Sum + Debug + Display + Default + 'static {}

/// Compensated (Kahan) accumulator.
///
/// Divergence values near zero drive every convergence check in this
/// crate, so plain left-to-right summation is not good enough.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum<T: Scalar> {
    sum: T,
    carry: T,
}

impl<T: Scalar> KahanSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    pub fn add(&mut self, value: T) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum
    }
}

/// Compensated sum of an iterator.
pub fn kahan_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    let mut acc = KahanSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// log(Σ exp(v_k)) with max-subtraction; -inf entries are skipped.
///
/// Returns -inf for an empty slice or all -inf entries.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> T {
    let max = values
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite() {
        return max;
    }
    let sum = kahan_sum(values.iter().map(|&v| (v - max).exp()));
    max + sum.ln()
}

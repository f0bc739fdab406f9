use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Numeric type the likelihood code is written against.
///
/// Every model and marginalization routine is generic over `Scalar`, so the
/// same code path runs on plain `f64`, on [`Dual`](super::Dual) for first
/// derivatives and on [`Dual2`](super::Dual2) for second derivatives.
///
/// Implementations must compute the value slot with exactly the same `f64`
/// operations as the `f64` implementation, so that lifting an evaluation never
/// perturbs its value.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Lift a constant (all derivative slots zero).
    fn cst(v: f64) -> Self;

    fn value(&self) -> f64;

    fn exp(self) -> Self;

    fn ln(self) -> Self;

    /// `log(sum(exp(xs)))`, stable against overflow.
    fn log_sum_exp(xs: &[Self]) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }

    fn is_finite(&self) -> bool {
        self.value().is_finite()
    }

    /// `log(1 + exp(x))` without overflow.
    fn softplus(self) -> Self {
        if self.value() > 0.0 {
            self + (-self).exp().ln_one_plus()
        } else {
            self.exp().ln_one_plus()
        }
    }

    /// `log(1 + x)` for `x >= 0`.
    fn ln_one_plus(self) -> Self {
        (self + 1.0).ln()
    }

    /// `log(sigmoid(x))`.
    fn log_sigmoid(self) -> Self {
        -(-self).softplus()
    }

    fn square(self) -> Self {
        self * self
    }
}

/// Shared `f64` log-sum-exp used by every implementation for the value slot.
pub(crate) fn lse_f64(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || !m.is_finite() {
        return m;
    }
    let s: f64 = values.map(|v| (v - m).exp()).sum();
    m + s.ln()
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }

    #[inline]
    fn value(&self) -> f64 {
        *self
    }

    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }

    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }

    fn log_sum_exp(xs: &[Self]) -> Self {
        lse_f64(xs.iter().copied())
    }
}

/// Softmax weights of `xs` relative to their log-sum-exp `lse`.
pub(crate) fn softmax_weights(values: &[f64], lse: f64) -> impl Iterator<Item = f64> + '_ {
    values.iter().map(move |v| (v - lse).exp())
}

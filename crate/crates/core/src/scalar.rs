//! Scalar abstraction shared by every model and data routine.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point element type accepted by the models: `f32` or `f64`.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; used for constants and sampled noise.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic function, split by sign so that neither branch overflows.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow for large `|x|`.
pub fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// `ln Σ e^{x_i}`; returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Scalar>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert_abs_diff_eq!(sigmoid(3.0_f64.ln()), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid(-2.5_f64), 1.0 - sigmoid(2.5_f64), epsilon = 1e-15);
        assert_abs_diff_eq!(sigmoid(0.0_f32), 0.5_f32);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        for x in [-700.0_f64, -1e4, 700.0, 1e4] {
            let s = sigmoid(x);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        }
        assert!(sigmoid(-700.0_f64) > 0.0);
        assert!(sigmoid(30.0_f64) < 1.0);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for x in [-20.0_f64, -1.0, 0.0, 0.5, 20.0] {
            assert_abs_diff_eq!(softplus(x), (1.0 + x.exp()).ln(), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(softplus(800.0_f64), 800.0);
    }

    #[test]
    fn log_sum_exp_is_shift_stable() {
        let xs = [1000.0_f64, 1000.0];
        assert_abs_diff_eq!(log_sum_exp(&xs), 1000.0 + 2.0_f64.ln(), epsilon = 1e-12);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }
}

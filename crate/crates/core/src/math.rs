//! Log-domain numeric primitives shared by the oracle and both bound families.
//!
//! Conventions: probabilities of exactly zero are carried as `-inf` log values;
//! `NaN` is never produced from finite inputs in the supported domains.

use crate::scalar::Real;

/// Logistic function `1 / (1 + e^(-x))`, branch-split so the exponential
/// argument is never positive.
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log(sigmoid(x))` = `-softplus(-x)`, accurate for large |x|.
pub fn log_sigmoid<T: Real>(x: T) -> T {
    -softplus(-x)
}

/// `log(1 + e^x)` without overflow: `max(x, 0) + ln(1 + e^(-|x|))`.
pub fn softplus<T: Real>(x: T) -> T {
    if x.is_infinite() {
        return if x > T::zero() { x } else { T::zero() };
    }
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// `log(e^a + e^b)` with the running-max trick; `-inf` inputs drop out.
pub fn log_sum_exp2<T: Real>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Streaming log-sum-exp accumulator: folds terms one log-value at a time
/// while tracking the running maximum, so enumeration loops never materialize
/// the full term list.
#[derive(Debug, Clone)]
pub struct LogSumAcc<T> {
    max: T,
    sum: T,
}

impl<T: Real> Default for LogSumAcc<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSumAcc<T> {
    pub fn new() -> Self {
        Self {
            max: T::neg_infinity(),
            sum: T::zero(),
        }
    }

    /// Add a term given as its logarithm.
    pub fn add_log(&mut self, x: T) {
        if x == T::neg_infinity() {
            return;
        }
        if x > self.max {
            if self.max == T::neg_infinity() {
                self.sum = T::one();
            } else {
                self.sum = self.sum * (self.max - x).exp() + T::one();
            }
            self.max = x;
        } else {
            self.sum = self.sum + (x - self.max).exp();
        }
    }

    /// `log(Σ e^terms)`; `-inf` when no finite term was added.
    pub fn value(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.sum.ln()
        }
    }
}

/// `log(m e^w + (1 - m))` for a mixing weight `m ∈ [0, 1]`: the log of a
/// two-point mixture of `e^w` and 1. Stable for any magnitude of `w` and for
/// the degenerate weights 0 and 1.
pub fn log_mix<T: Real>(m: T, w: T) -> T {
    log_sum_exp2(safe_ln(m) + w, safe_ln(T::one() - m))
}

/// `ln(x)` mapping exactly zero to `-inf` instead of erroring; negative input
/// (possible only through caller bugs) still yields NaN loudly.
pub fn safe_ln<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::neg_infinity()
    } else {
        x.ln()
    }
}

/// `log(1 - e^(-x))` for `x > 0`, via `ln(-expm1(-x))`.
pub fn log1m_exp_neg<T: Real>(x: T) -> T {
    safe_ln(-(-x).exp_m1())
}

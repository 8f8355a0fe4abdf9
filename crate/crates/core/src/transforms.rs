//! Scalar variational transforms.
//!
//! Each transform rewrites an awkward likelihood factor as a family of
//! exponential-of-linear functions indexed by a variational parameter, with
//! the original function recovered as the family's pointwise minimum:
//!
//! * logistic: `g(x) = min over ξ∈[0,1] of exp(ξx − H(ξ))`, optimum `ξ* = g(−x)`;
//! * noisy-OR success: `1 − e^(−x) = min over ξ≥0 of exp(ξx − F(ξ))`,
//!   optimum `ξ* = e^(−x) / (1 − e^(−x))` for `x > 0`;
//! * logarithm: `log x = min over λ>0 of (λx − log λ − 1)`, optimum `λ* = 1/x`.
//!
//! Minimizing over the parameter after exchanging it with a sum recovers the
//! upper bounds in [`crate::upper`]. The product expansion
//! `1 − e^(−x) = Π_k g(2^k x)` and the quadratic minorant of `−log(1+x)`
//! below feed the noisy-OR lower bound in [`crate::lower`].

use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::scalar::Real;

/// Binary entropy `H(ξ) = −ξ log ξ − (1−ξ) log(1−ξ)` in nats, with the
/// endpoint limits `H(0) = H(1) = 0`.
pub fn binary_entropy<T: Real>(xi: T) -> Result<T> {
    check_unit("binary_entropy", xi)?;
    if xi == T::zero() || xi == T::one() {
        return Ok(T::zero());
    }
    Ok(-xi * xi.ln() - (T::one() - xi) * (T::one() - xi).ln())
}

/// Conjugate function `F(ξ) = −ξ log ξ + (ξ+1) log(ξ+1)` of the noisy-OR
/// transform, with `F(0) = 0`. Evaluated as
/// `ξ·log1p(1/ξ) + log1p(ξ)` so large `ξ` stays accurate.
pub fn noisy_or_conjugate<T: Real>(xi: T) -> Result<T> {
    if !(xi >= T::zero()) {
        return Err(domain("noisy_or_conjugate", xi, "[0, inf)"));
    }
    if xi == T::zero() {
        return Ok(T::zero());
    }
    Ok(xi * xi.recip().ln_1p() + xi.ln_1p())
}

/// Variational majorant of the logistic function: `exp(ξx − H(ξ)) ≥ g(x)` for
/// every `ξ ∈ [0, 1]`, with equality at [`sigmoid_opt_xi`].
pub fn sigmoid_bound<T: Real>(x: T, xi: T) -> Result<T> {
    let h = binary_entropy(xi)?;
    Ok((xi * x - h).exp())
}

/// Tightness point of [`sigmoid_bound`]: `ξ* = g(−x)`.
pub fn sigmoid_opt_xi<T: Real>(x: T) -> T {
    sigmoid(-x)
}

/// Variational majorant of the noisy-OR success probability:
/// `exp(ξx − F(ξ)) ≥ 1 − e^(−x)` for every `ξ ≥ 0` and `x > 0`, with
/// equality at [`noisy_or_opt_xi`].
pub fn noisy_or_bound<T: Real>(x: T, xi: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(domain("noisy_or_bound", x, "(0, inf)"));
    }
    let f = noisy_or_conjugate(xi)?;
    Ok((xi * x - f).exp())
}

/// Tightness point of [`noisy_or_bound`]: with `q = e^(−x)`, `ξ* = q/(1−q)`.
pub fn noisy_or_opt_xi<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(domain("noisy_or_opt_xi", x, "(0, inf)"));
    }
    let q = (-x).exp();
    Ok(q / (-(-x).exp_m1()))
}

/// Linear majorant of the logarithm: `λx − log λ − 1 ≥ log x` for every
/// `λ > 0` and `x > 0`, with equality at `λ = 1/x`.
pub fn legendre_log<T: Real>(x: T, lambda: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(domain("legendre_log", x, "(0, inf)"));
    }
    if !(lambda > T::zero()) {
        return Err(domain("legendre_log lambda", lambda, "(0, inf)"));
    }
    Ok(lambda * x - lambda.ln() - T::one())
}

/// Tightness point of [`legendre_log`]: `λ* = 1/x`.
pub fn legendre_opt_lambda<T: Real>(x: T) -> Result<T> {
    if !(x > T::zero()) {
        return Err(domain("legendre_opt_lambda", x, "(0, inf)"));
    }
    Ok(x.recip())
}

/// Truncated product expansion `Π_{k<n} g(2^k x)` of `1 − e^(−x)`, computed
/// as a direct product of logistic factors so that `x = 0` yields exactly
/// `(1/2)^n`. Each dropped factor is ≤ 1, so the truncation can only sit at
/// or above `1 − e^(−x)`; the absolute error is below `(1/2)^n` uniformly in
/// `x ≥ 0` and decays like `e^(−2^n x)` once `2^n x` is large.
pub fn noisy_or_expansion<T: Real>(x: T, n_terms: usize) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(domain("noisy_or_expansion", x, "[0, inf)"));
    }
    if n_terms == 0 {
        return Err(Error::Domain {
            what: "noisy_or_expansion",
            value: 0.0,
            domain: "n_terms >= 1",
        });
    }
    let mut prod = T::one();
    let mut arg = x;
    for _ in 0..n_terms {
        prod = prod * sigmoid(arg);
        arg = arg * T::two();
    }
    Ok(prod)
}

/// Coefficients of the quadratic minorant
/// `a(X − x)² + b(X − x) + c ≤ −log(1 + X)` on `X ∈ [0, 1]`, anchored at the
/// expansion point `x ∈ [0, 1)` where it is tangent. The curvature `a` is the
/// largest value keeping the inequality through `X = 1`, where the quadratic
/// pins to `−log 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> QuadCoeffs<T> {
    /// Value of the quadratic at argument `big_x`, expanded around `x`.
    pub fn eval(&self, x: T, big_x: T) -> T {
        let d = big_x - x;
        self.a * d * d + self.b * d + self.c
    }

    /// Expectation of the quadratic under a distribution of `X` with first
    /// moment `m1` and second moment `m2`.
    pub fn expectation(&self, x: T, m1: T, m2: T) -> T {
        self.a * (m2 - T::two() * x * m1 + x * x) + self.b * (m1 - x) + self.c
    }
}

/// Minorant coefficients at expansion point `x ∈ [0, 1)`:
/// `c = −log(1+x)`, `b = −1/(1+x)`, `a = −[(1−x)b + c + log 2] / (1−x)²`.
/// The pole at `x = 1` is rejected; callers fall back to the tangent-only
/// form there.
pub fn quad_coeffs<T: Real>(x: T) -> Result<QuadCoeffs<T>> {
    if !(x >= T::zero() && x < T::one()) {
        return Err(domain("quad_coeffs", x, "[0, 1)"));
    }
    let one = T::one();
    let c = -x.ln_1p();
    let b = -(one + x).recip();
    let r = one - x;
    let a = -((r * b + c + T::LN_2()) / (r * r));
    Ok(QuadCoeffs { a, b, c })
}

fn check_unit<T: Real>(what: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(domain(what, v, "[0, 1]"))
    }
}

fn domain<T: Real>(what: &'static str, v: T, dom: &'static str) -> Error {
    Error::Domain {
        what,
        value: v.to_f64().unwrap_or(f64::NAN),
        domain: dom,
    }
}

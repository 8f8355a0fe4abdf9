//! One-dimensional solvers used by the coordinate optimizers.

use crate::scalar::Real;

/// Minimize a smooth convex function over `[lo, hi]` given its first and
/// second derivative. Newton steps are taken only when they stay inside
/// the current sign-change bracket and shrink at least as fast as
/// bisection would; otherwise the bracket is bisected. The bracket
/// therefore halves at least every other iteration, so the budget bounds
/// the achievable precision even when the derivative is dominated by an
/// exponential and plain Newton would crawl. Returns the minimizer.
pub(crate) fn newton_bisect<T: Real>(
    lo: T,
    hi: T,
    mut dfs: impl FnMut(T) -> (T, T),
    tol: T,
    max_iter: usize,
) -> T {
    debug_assert!(lo < hi);
    let (d_lo, _) = dfs(lo);
    if d_lo >= T::zero() {
        return lo;
    }
    let (d_hi, _) = dfs(hi);
    if d_hi <= T::zero() {
        return hi;
    }
    let mut xl = lo;
    let mut xh = hi;
    let mut x = (lo + hi) * T::half();
    let mut dx_prev = hi - lo;
    for _ in 0..max_iter {
        let (d, dd) = dfs(x);
        if d == T::zero() {
            return x;
        }
        if d > T::zero() {
            xh = x;
        } else {
            xl = x;
        }
        if xh - xl <= tol * (T::one() + x.abs()) {
            break;
        }
        let mut dx = (xh - xl) * T::half();
        let mut next = xl + dx;
        if d.is_finite() && dd.is_finite() && dd > T::zero() {
            let step = d / dd;
            let target = x - step;
            if target > xl && target < xh && step.abs() + step.abs() <= dx_prev.abs() {
                dx = step;
                next = target;
            }
        }
        dx_prev = dx;
        x = next;
        if dx.abs() <= tol * (T::one() + x.abs()) {
            break;
        }
    }
    x
}

/// Maximize a function over `[lo, hi]` by golden-section search. Exact for
/// unimodal functions; for anything else it still returns the best point it
/// saw, which is all the callers need (they only accept improving moves).
/// Returns `(argmax, max)`.
pub(crate) fn golden_max<T: Real>(
    lo: T,
    hi: T,
    mut f: impl FnMut(T) -> T,
    tol: T,
    max_iter: usize,
) -> (T, T) {
    let inv_phi = (T::of(5.0).sqrt() - T::one()) * T::half();
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for _ in 0..max_iter {
        if b - a <= tol * (T::one() + a.abs().max(b.abs())) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
        if fx > best.1 {
            best = (x, fx);
        }
    }
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

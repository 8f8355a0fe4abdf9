//! Factorized lower bounds on the log marginal likelihood, optimized by
//! coordinate ascent over the factor means.
//!
//! The bound is the classic variational decomposition: for any product
//! distribution Q over the unassigned nodes,
//! `log P(evidence) >= E_Q[log P(S)] + H(Q)`. Each conditional contributes
//! an expected log term; how that expectation is handled depends on the
//! network kind and the chosen mode:
//!
//! * sigmoid, exact mode: enumerate the unassigned members of each node's
//!   family (the node plus its parents), capped by `fan_in_cap`;
//! * sigmoid, auxiliary mode: bound each expected softplus with a scalar
//!   auxiliary parameter per (node, branch), tightened by line search;
//! * noisy-OR: expand each `log(1 - e^-h)` into a finite product of
//!   sigmoids of doubled arguments, then bound every resulting
//!   `E[-log(1 + X)]` either through the convexity of `-log(1 + x)`
//!   (simple) or through a quadratic minorant that also uses the second
//!   moment (quadratic, never worse than simple).
//!
//! The noisy-OR expansion is truncated at `expansion_terms` doublings; the
//! dropped tail is `O(exp(-2^N h))`, negligible for activations that are
//! not vanishingly small but worth raising `expansion_terms` for when
//! near-deterministic evidence must be certified.

use crate::error::{Error, Result};
use crate::math::{log_mix, log_sigmoid, log_sum_exp2, safe_ln, sigmoid};
use crate::network::{Evidence, Network, NetworkKind, NodeId};
use crate::opt1d::golden_max;
use crate::scalar::Real;
use crate::transforms::{quad_coeffs, QuadCoeffs};

/// Interior clamp applied to every optimized mean; keeps entropies and
/// logs finite and is shared with the exact KL computation so that
/// `exact = bound + KL` holds to rounding.
pub const MU_CLAMP: f64 = 1e-12;

/// How expected log-sigmoid terms are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmoidExpectation {
    /// Family-wise enumeration: exact expectations, exponential in the
    /// number of unassigned family members.
    Exact,
    /// Per-branch auxiliary bound: linear in fan-in, slightly looser.
    Auxiliary,
}

/// Knobs for the lower-bound evaluator and optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBoundOpts<T> {
    /// Stop when a sweep improves the bound by less than
    /// `tol * (1 + |bound|)`.
    pub tol: T,
    /// Hard sweep limit.
    pub max_sweeps: usize,
    /// Record the objective after every sweep.
    pub trace: bool,
    /// Sigmoid expectation mode.
    pub sigmoid_expectation: SigmoidExpectation,
    /// Largest family (node plus parents, unassigned members only) the
    /// exact sigmoid mode will enumerate.
    pub fan_in_cap: usize,
    /// Number of doubled-argument factors kept in the noisy-OR expansion.
    pub expansion_terms: usize,
    /// Use the quadratic minorant for noisy-OR terms instead of the plain
    /// convexity bound.
    pub quadratic: bool,
}

impl<T: Real> Default for LowerBoundOpts<T> {
    fn default() -> Self {
        LowerBoundOpts {
            tol: T::of(1e-8),
            max_sweeps: 200,
            trace: false,
            sigmoid_expectation: SigmoidExpectation::Exact,
            fan_in_cap: 20,
            expansion_terms: 16,
            quadratic: false,
        }
    }
}

/// Outcome of a lower-bound optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundResult<T> {
    /// Optimized bound on `log P(evidence)`; valid at every iterate, so
    /// this holds even when `converged` is false.
    pub log_bound: T,
    /// Final means, full length: assigned nodes carry their evidence bit,
    /// unassigned nodes their (clamped) optimized mean.
    pub mu: Vec<T>,
    /// Full sweeps executed.
    pub sweeps: usize,
    /// Whether the sweep-to-sweep improvement dropped below tolerance.
    pub converged: bool,
    /// Bound after sweep 0 (initial point) and after each sweep; empty
    /// unless requested.
    pub trace: Vec<T>,
}

/// Where a family member's bit comes from during enumeration.
#[derive(Debug, Clone, Copy)]
enum Src {
    Fixed(bool),
    Member(usize),
}

impl Src {
    #[inline]
    fn resolve(self, mask: u64) -> bool {
        match self {
            Src::Fixed(b) => b,
            Src::Member(idx) => mask >> idx & 1 == 1,
        }
    }
}

/// Enumeration plan for one node's family (exact sigmoid mode).
struct EnumPlan {
    /// Unassigned family members, self first when unassigned.
    members: Vec<usize>,
    /// Bit source per parent, aligned with the parent list.
    parent_src: Vec<Src>,
    self_src: Src,
}

/// Per-factor anchor for the quadratic noisy-OR minorant.
#[derive(Debug, Clone, Copy)]
enum Anchor<T> {
    /// Fall back to the convexity bound (anchor at or beyond the pole).
    Simple,
    At(T, QuadCoeffs<T>),
}

#[inline]
fn gv<T: Real>(mub: &[T], over: Option<(usize, T)>, k: usize) -> T {
    match over {
        Some((j, v)) if j == k => v,
        _ => mub[k],
    }
}

#[inline]
fn wlog<T: Real>(w: T, log_val: T) -> T {
    if w == T::zero() {
        T::zero()
    } else {
        w * log_val
    }
}

#[inline]
fn entropy_interior<T: Real>(m: T) -> T {
    -(m * m.ln() + (T::one() - m) * (T::one() - m).ln())
}

struct Ctx<'a, T> {
    net: &'a Network<T>,
    opts: LowerBoundOpts<T>,
    assigned: Vec<Option<bool>>,
    /// Unassigned node ids, ascending.
    hidden: Vec<usize>,
    /// Exact-mode enumeration plans, indexed by node.
    plans: Vec<Option<EnumPlan>>,
    /// Noisy-OR: `exp(-2^k θ)` per node, `[k][parent position]`,
    /// `k = 0 ..= expansion_terms`.
    exp_pows: Vec<Vec<Vec<T>>>,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn build(net: &'a Network<T>, ev: &Evidence, opts: &LowerBoundOpts<T>) -> Result<Self> {
        ev.check_in_range(net.len())?;
        if opts.expansion_terms == 0 {
            return Err(Error::Domain {
                what: "expansion_terms",
                value: 0.0,
                domain: "at least 1",
            });
        }
        let mut assigned = vec![None; net.len()];
        for (node, bit) in ev.iter() {
            assigned[node.0] = Some(bit);
        }
        let hidden: Vec<usize> = (0..net.len()).filter(|&i| assigned[i].is_none()).collect();

        let mut plans = Vec::with_capacity(net.len());
        let mut exp_pows = Vec::with_capacity(net.len());
        for i in 0..net.len() {
            let id = NodeId(i);
            let non_root = !net.is_root(id);
            if non_root
                && net.kind() == NetworkKind::Sigmoid
                && opts.sigmoid_expectation == SigmoidExpectation::Exact
            {
                let mut members = Vec::new();
                let self_src = if assigned[i].is_none() {
                    members.push(i);
                    Src::Member(0)
                } else {
                    Src::Fixed(assigned[i].unwrap())
                };
                let mut parent_src = Vec::with_capacity(net.parents(id).len());
                for &p in net.parents(id) {
                    parent_src.push(match assigned[p.0] {
                        Some(b) => Src::Fixed(b),
                        None => {
                            members.push(p.0);
                            Src::Member(members.len() - 1)
                        }
                    });
                }
                if members.len() > opts.fan_in_cap {
                    return Err(Error::FanInExceeded {
                        node: id,
                        fan_in: members.len(),
                        cap: opts.fan_in_cap,
                    });
                }
                plans.push(Some(EnumPlan {
                    members,
                    parent_src,
                    self_src,
                }));
            } else {
                plans.push(None);
            }
            if non_root && net.kind() == NetworkKind::NoisyOr {
                let row = net.weight_row(id);
                let mut levels = Vec::with_capacity(opts.expansion_terms + 1);
                let mut cur: Vec<T> = row.iter().map(|&th| (-th).exp()).collect();
                for _ in 0..=opts.expansion_terms {
                    levels.push(cur.clone());
                    for v in cur.iter_mut() {
                        *v = *v * *v;
                    }
                }
                exp_pows.push(levels);
            } else {
                exp_pows.push(Vec::new());
            }
        }
        Ok(Ctx {
            net,
            opts: *opts,
            assigned,
            hidden,
            plans,
            exp_pows,
        })
    }

    /// Expected log-conditional of node `i` under the current means, with
    /// an optional single-mean override.
    fn term_with(
        &self,
        i: usize,
        mub: &[T],
        over: Option<(usize, T)>,
        eta: &[[T; 2]],
        anchors: &[Vec<Anchor<T>>],
    ) -> T {
        let id = NodeId(i);
        if self.net.is_root(id) {
            let p = self.net.prior(id).expect("roots carry priors");
            let w = gv(mub, over, i);
            return wlog(w, safe_ln(p)) + wlog(T::one() - w, safe_ln(T::one() - p));
        }
        match self.net.kind() {
            NetworkKind::Sigmoid => match self.opts.sigmoid_expectation {
                SigmoidExpectation::Exact => self.sigmoid_exact_term(i, mub, over),
                SigmoidExpectation::Auxiliary => {
                    let w1 = gv(mub, over, i);
                    let mut t = T::zero();
                    if w1 < T::one() {
                        t = t - (T::one() - w1) * self.branch_beta(i, false, eta[i][0], mub, over);
                    }
                    if w1 > T::zero() {
                        t = t - w1 * self.branch_beta(i, true, eta[i][1], mub, over);
                    }
                    t
                }
            },
            NetworkKind::NoisyOr => {
                let w1 = gv(mub, over, i);
                let mut off = T::zero();
                for (&p, &th) in self.net.parents(id).iter().zip(self.net.weight_row(id)) {
                    off = off - th * gv(mub, over, p.0);
                }
                let mut t = (T::one() - w1) * off;
                if w1 > T::zero() {
                    let mut on = T::zero();
                    for k in 0..self.opts.expansion_terms {
                        let m1 = self.x_bar(i, k, mub, over);
                        on = on
                            + match self.anchor_of(anchors, i, k) {
                                Anchor::Simple => -m1.ln_1p(),
                                Anchor::At(x, co) => {
                                    let m2 = self.x_bar(i, k + 1, mub, over);
                                    co.expectation(x, m1, m2)
                                }
                            };
                    }
                    t = t + w1 * on;
                }
                t
            }
        }
    }

    fn anchor_of(&self, anchors: &[Vec<Anchor<T>>], i: usize, k: usize) -> Anchor<T> {
        if self.opts.quadratic && !anchors[i].is_empty() {
            anchors[i][k]
        } else {
            Anchor::Simple
        }
    }

    fn sigmoid_exact_term(&self, i: usize, mub: &[T], over: Option<(usize, T)>) -> T {
        let plan = self.plans[i].as_ref().expect("plan built for exact mode");
        let weights = self.net.weight_row(NodeId(i));
        let m = plan.members.len();
        let mut acc = T::zero();
        for mask in 0..1u64 << m {
            let mut w = T::one();
            for (idx, &mem) in plan.members.iter().enumerate() {
                let mv = gv(mub, over, mem);
                w = w * if mask >> idx & 1 == 1 { mv } else { T::one() - mv };
                if w == T::zero() {
                    break;
                }
            }
            if w == T::zero() {
                continue;
            }
            let mut h = T::zero();
            for (src, &th) in plan.parent_src.iter().zip(weights) {
                if src.resolve(mask) {
                    h = h + th;
                }
            }
            let arg = if plan.self_src.resolve(mask) { h } else { -h };
            acc = acc + w * log_sigmoid(arg);
        }
        acc
    }

    /// Auxiliary bound on `E[ln(1 + e^u)]` for node `i`'s branch `s`, where
    /// `u = -(2s-1) Σ θ_j S_j`: for any `eta` in `[0, 1]`,
    /// `E[ln(1 + e^u)] <= eta E[u] + ln(E[e^(-eta u)] + E[e^((1-eta) u)])`,
    /// and the expectations factorize over the parents.
    fn branch_beta(
        &self,
        i: usize,
        s: bool,
        eta: T,
        mub: &[T],
        over: Option<(usize, T)>,
    ) -> T {
        let id = NodeId(i);
        let sign = if s { T::one() } else { -T::one() };
        let mut e_u = T::zero();
        let mut l_a = T::zero();
        let mut l_b = T::zero();
        for (&p, &th) in self.net.parents(id).iter().zip(self.net.weight_row(id)) {
            let m = gv(mub, over, p.0);
            e_u = e_u - sign * th * m;
            l_a = l_a + log_mix(m, eta * sign * th);
            l_b = l_b + log_mix(m, -(T::one() - eta) * sign * th);
        }
        eta * e_u + log_sum_exp2(l_a, l_b)
    }

    /// `E[X^(k)]` for node `i`: the product of per-parent mixtures at
    /// doubling level `k`.
    fn x_bar(&self, i: usize, k: usize, mub: &[T], over: Option<(usize, T)>) -> T {
        let pows = &self.exp_pows[i][k];
        let mut prod = T::one();
        for (pos, &p) in self.net.parents(NodeId(i)).iter().enumerate() {
            let m = gv(mub, over, p.0);
            prod = prod * (m * pows[pos] + T::one() - m);
        }
        prod
    }

    /// `E[X^(k)]` with parent at `skip` left out.
    fn x_bar_excl(&self, i: usize, k: usize, mub: &[T], skip: usize) -> T {
        let pows = &self.exp_pows[i][k];
        let mut prod = T::one();
        for (pos, &p) in self.net.parents(NodeId(i)).iter().enumerate() {
            if pos == skip {
                continue;
            }
            let m = mub[p.0];
            prod = prod * (m * pows[pos] + T::one() - m);
        }
        prod
    }

    /// Partial derivative of child `c`'s term with respect to the mean of
    /// parent `j` (auxiliary sigmoid mode, auxiliaries held fixed).
    fn aux_child_partial(&self, c: usize, j: usize, mub: &[T], eta: &[[T; 2]]) -> T {
        let id = NodeId(c);
        let parents = self.net.parents(id);
        let weights = self.net.weight_row(id);
        let pos = parents.iter().position(|&p| p.0 == j).expect("j is a parent");
        let th = weights[pos];
        let w1 = mub[c];
        let mut out = T::zero();
        for s in [false, true] {
            let w = if s { w1 } else { T::one() - w1 };
            if w == T::zero() {
                continue;
            }
            let e = eta[c][s as usize];
            let sign = if s { T::one() } else { -T::one() };
            let mut l_a = T::zero();
            let mut l_b = T::zero();
            for (&p, &t) in parents.iter().zip(weights) {
                let m = mub[p.0];
                l_a = l_a + log_mix(m, e * sign * t);
                l_b = l_b + log_mix(m, -(T::one() - e) * sign * t);
            }
            let a_exp = (e * sign * th).exp();
            let b_exp = (-(T::one() - e) * sign * th).exp();
            let mj = mub[j];
            let d_la = (a_exp - T::one()) / (mj * a_exp + T::one() - mj);
            let d_lb = (b_exp - T::one()) / (mj * b_exp + T::one() - mj);
            let lse = log_sum_exp2(l_a, l_b);
            let w_a = (l_a - lse).exp();
            let w_b = (l_b - lse).exp();
            let d_beta = e * (-sign * th) + w_a * d_la + w_b * d_lb;
            out = out - w * d_beta;
        }
        out
    }

    /// Partial derivative of child `c`'s term with respect to the mean of
    /// parent `j` (noisy-OR, anchors held fixed).
    fn nor_child_partial(&self, c: usize, j: usize, mub: &[T], anchors: &[Vec<Anchor<T>>]) -> T {
        let id = NodeId(c);
        let parents = self.net.parents(id);
        let weights = self.net.weight_row(id);
        let pos = parents.iter().position(|&p| p.0 == j).expect("j is a parent");
        let th = weights[pos];
        let w1 = mub[c];
        let mut out = -(T::one() - w1) * th;
        if w1 > T::zero() {
            let mj = mub[j];
            for k in 0..self.opts.expansion_terms {
                let e_k = self.exp_pows[c][k][pos];
                let loo = self.x_bar_excl(c, k, mub, pos);
                let d1 = (e_k - T::one()) * loo;
                let d = match self.anchor_of(anchors, c, k) {
                    Anchor::Simple => {
                        let m1 = (mj * e_k + T::one() - mj) * loo;
                        -d1 / (T::one() + m1)
                    }
                    Anchor::At(x, co) => {
                        let e_k1 = self.exp_pows[c][k + 1][pos];
                        let d2 = (e_k1 - T::one()) * self.x_bar_excl(c, k + 1, mub, pos);
                        co.a * (d2 - (x + x) * d1) + co.b * d1
                    }
                };
                out = out + w1 * d;
            }
        }
        out
    }

    /// Derivative of the expectation part of the bound with respect to the
    /// mean of unassigned node `j`, auxiliaries and anchors held fixed.
    fn grad_ne(&self, j: usize, mub: &[T], eta: &[[T; 2]], anchors: &[Vec<Anchor<T>>]) -> T {
        // The node's own term is always linear in its own mean.
        let mut g = self.term_with(j, mub, Some((j, T::one())), eta, anchors)
            - self.term_with(j, mub, Some((j, T::zero())), eta, anchors);
        for &c in self.net.children(NodeId(j)) {
            g = g + match self.net.kind() {
                NetworkKind::Sigmoid => match self.opts.sigmoid_expectation {
                    // Multilinear in each mean, so the secant through the
                    // endpoints is the derivative.
                    SigmoidExpectation::Exact => {
                        self.term_with(c.0, mub, Some((j, T::one())), eta, anchors)
                            - self.term_with(c.0, mub, Some((j, T::zero())), eta, anchors)
                    }
                    SigmoidExpectation::Auxiliary => self.aux_child_partial(c.0, j, mub, eta),
                },
                NetworkKind::NoisyOr => self.nor_child_partial(c.0, j, mub, anchors),
            };
        }
        g
    }

    /// Every part of the bound that depends on node `j`'s mean, evaluated
    /// with that mean overridden to `v`.
    fn affected(
        &self,
        j: usize,
        v: T,
        mub: &[T],
        eta: &[[T; 2]],
        anchors: &[Vec<Anchor<T>>],
    ) -> T {
        let mut t = self.term_with(j, mub, Some((j, v)), eta, anchors) + entropy_interior(v);
        for &c in self.net.children(NodeId(j)) {
            t = t + self.term_with(c.0, mub, Some((j, v)), eta, anchors);
        }
        t
    }

    fn full_eval(&self, mub: &[T], eta: &[[T; 2]], anchors: &[Vec<Anchor<T>>]) -> T {
        let mut b = T::zero();
        for i in 0..self.net.len() {
            b = b + self.term_with(i, mub, None, eta, anchors);
        }
        for &j in &self.hidden {
            b = b + entropy_interior(mub[j]);
        }
        b
    }

    /// Re-tighten every auxiliary parameter; each line search can only
    /// increase the bound.
    fn refresh_eta(&self, mub: &[T], eta: &mut [[T; 2]]) {
        if self.net.kind() != NetworkKind::Sigmoid
            || self.opts.sigmoid_expectation != SigmoidExpectation::Auxiliary
        {
            return;
        }
        for i in 0..self.net.len() {
            if self.net.is_root(NodeId(i)) {
                continue;
            }
            let w1 = mub[i];
            for (br, s) in [(0usize, false), (1usize, true)] {
                let w = if s { w1 } else { T::one() - w1 };
                if w == T::zero() {
                    continue;
                }
                let (best, _) = golden_max(
                    T::zero(),
                    T::one(),
                    |e| -self.branch_beta(i, s, e, mub, None),
                    T::of(1e-10),
                    100,
                );
                eta[i][br] = best;
            }
        }
    }

    fn anchor_slots(&self) -> Vec<Vec<Anchor<T>>> {
        (0..self.net.len())
            .map(|i| {
                if self.opts.quadratic
                    && self.net.kind() == NetworkKind::NoisyOr
                    && !self.net.is_root(NodeId(i))
                {
                    vec![Anchor::Simple; self.opts.expansion_terms]
                } else {
                    Vec::new()
                }
            })
            .collect()
    }

    fn piece_value(&self, anchor: Anchor<T>, m1: T, m2: T) -> T {
        match anchor {
            Anchor::Simple => -m1.ln_1p(),
            Anchor::At(x, co) => co.expectation(x, m1, m2),
        }
    }

    /// Move each anchor toward the current first moment. Anchoring at the
    /// mean is near- but not exactly optimal, so when `guard` is set the
    /// move is kept only if it does not lower that factor's contribution.
    fn refresh_anchors(&self, mub: &[T], anchors: &mut [Vec<Anchor<T>>], guard: bool) {
        if !self.opts.quadratic || self.net.kind() != NetworkKind::NoisyOr {
            return;
        }
        let pole_edge = T::one() - T::of(1e-9);
        for i in 0..self.net.len() {
            if anchors[i].is_empty() {
                continue;
            }
            for k in 0..self.opts.expansion_terms {
                let m1 = self.x_bar(i, k, mub, None);
                let m2 = self.x_bar(i, k + 1, mub, None);
                let proposed = if m1 >= pole_edge {
                    Anchor::Simple
                } else {
                    Anchor::At(m1, quad_coeffs(m1).expect("anchor below the pole"))
                };
                if !guard
                    || self.piece_value(proposed, m1, m2) >= self.piece_value(anchors[i][k], m1, m2)
                {
                    anchors[i][k] = proposed;
                }
            }
        }
    }

    fn init_means(&self, init: Option<&[T]>) -> Result<Vec<T>> {
        if let Some(init) = init {
            if init.len() != self.net.len() {
                return Err(Error::MeanLength {
                    expected: self.net.len(),
                    found: init.len(),
                });
            }
        }
        let lo = T::of(MU_CLAMP);
        let hi = T::one() - lo;
        Ok((0..self.net.len())
            .map(|i| match self.assigned[i] {
                Some(true) => T::one(),
                Some(false) => T::zero(),
                None => init.map_or(T::half(), |m| m[i]).max(lo).min(hi),
            })
            .collect())
    }
}

/// Evaluate the lower bound at caller-supplied means (full-length vector;
/// entries at assigned nodes are ignored). Auxiliary parameters are
/// tightened and quadratic anchors placed at the current first moments, so
/// the value is what one coordinate pass of the optimizer would see.
pub fn lower_bound_eval<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    mu: &[T],
    opts: &LowerBoundOpts<T>,
) -> Result<T> {
    let ctx = Ctx::build(net, ev, opts)?;
    let mub = ctx.init_means(Some(mu))?;
    let mut eta = vec![[T::half(); 2]; net.len()];
    ctx.refresh_eta(&mub, &mut eta);
    let mut anchors = ctx.anchor_slots();
    ctx.refresh_anchors(&mub, &mut anchors, false);
    Ok(ctx.full_eval(&mub, &eta, &anchors))
}

/// Optimize the lower bound by coordinate ascent from `init` (defaults to
/// all means at 1/2). Every accepted move is verified to not decrease the
/// bound, so the trace is monotone up to roundoff.
pub fn lower_bound<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    init: Option<&[T]>,
    opts: &LowerBoundOpts<T>,
) -> Result<LowerBoundResult<T>> {
    let ctx = Ctx::build(net, ev, opts)?;
    let lo = T::of(MU_CLAMP);
    let hi = T::one() - lo;
    let mut mub = ctx.init_means(init)?;
    let mut eta = vec![[T::half(); 2]; net.len()];
    let mut anchors = ctx.anchor_slots();
    ctx.refresh_eta(&mub, &mut eta);
    ctx.refresh_anchors(&mub, &mut anchors, false);

    let mut value = ctx.full_eval(&mub, &eta, &anchors);
    let mut trace = if opts.trace { vec![value] } else { Vec::new() };
    let mut sweeps = 0;
    let mut converged = false;

    while sweeps < opts.max_sweeps {
        sweeps += 1;
        for &j in &ctx.hidden {
            let g_val = ctx.grad_ne(j, &mub, &eta, &anchors);
            let cur = mub[j];
            let mut accepted = false;
            if !g_val.is_nan() {
                // Entropy-aware fixed point: the coordinate optimum solves
                // mean = sigmoid(d NE / d mean).
                let target = sigmoid(g_val).max(lo).min(hi);
                if (target - cur).abs() <= T::of(1e-14) * (T::one() + cur.abs()) {
                    continue;
                }
                let base = ctx.affected(j, cur, &mub, &eta, &anchors);
                let mut prop = target;
                for _ in 0..5 {
                    if ctx.affected(j, prop, &mub, &eta, &anchors) >= base {
                        mub[j] = prop;
                        accepted = true;
                        break;
                    }
                    prop = (prop + cur) * T::half();
                }
                if !accepted {
                    let (x, val) =
                        golden_max(lo, hi, |v| ctx.affected(j, v, &mub, &eta, &anchors), T::of(1e-10), 120);
                    if val > base {
                        mub[j] = x;
                        accepted = true;
                    }
                }
            } else {
                let base = ctx.affected(j, cur, &mub, &eta, &anchors);
                let (x, val) =
                    golden_max(lo, hi, |v| ctx.affected(j, v, &mub, &eta, &anchors), T::of(1e-10), 120);
                if val > base {
                    mub[j] = x;
                    accepted = true;
                }
            }
            let _ = accepted;
        }
        ctx.refresh_eta(&mub, &mut eta);
        ctx.refresh_anchors(&mub, &mut anchors, true);
        let new_value = ctx.full_eval(&mub, &eta, &anchors);
        if opts.trace {
            trace.push(new_value);
        }
        let done = (new_value - value).abs() <= opts.tol * (T::one() + new_value.abs());
        value = new_value;
        if done {
            converged = true;
            break;
        }
    }

    Ok(LowerBoundResult {
        log_bound: value,
        mu: mub,
        sweeps,
        converged,
        trace,
    })
}

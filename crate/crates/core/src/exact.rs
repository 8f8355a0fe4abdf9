//! Exact reference quantities by explicit enumeration of unassigned nodes.
//!
//! Everything here is exponential in the number of hidden nodes and exists to
//! calibrate and test the bound machinery, so enumeration refuses to run above
//! a hard state cap instead of silently taking hours.

use rand::Rng;

use crate::error::{Error, Result};
use crate::lower::MU_CLAMP;
use crate::math::LogSumAcc;
use crate::network::{Evidence, Network, NodeId};
use crate::scalar::Real;

/// Default ceiling on the number of unassigned nodes enumeration accepts.
pub const DEFAULT_ENUM_CAP: usize = 25;

/// Result of an exact marginal computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalResult<T> {
    /// `log P(evidence)`; `-inf` when the evidence has probability zero.
    pub log_marginal: T,
    /// Number of completions enumerated (`2^hidden`).
    pub enumerated_states: u64,
}

fn hidden_nodes<T: Real>(net: &Network<T>, ev: &Evidence) -> Result<Vec<NodeId>> {
    ev.check_in_range(net.len())?;
    Ok((0..net.len())
        .map(NodeId)
        .filter(|&i| !ev.contains(i))
        .collect())
}

fn check_cap(hidden: usize, cap: usize) -> Result<()> {
    if hidden > cap || hidden >= 64 {
        return Err(Error::EnumerationCapExceeded {
            count: hidden,
            cap: cap.min(63),
        });
    }
    Ok(())
}

/// Visit every completion of the evidence, passing the full state and its
/// joint log-probability.
fn for_each_completion<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    hidden: &[NodeId],
    mut visit: impl FnMut(&[bool], T),
) -> Result<()> {
    let mut state = vec![false; net.len()];
    for (node, bit) in ev.iter() {
        state[node.0] = bit;
    }
    let combos: u64 = 1 << hidden.len();
    for mask in 0..combos {
        for (k, &h) in hidden.iter().enumerate() {
            state[h.0] = mask >> k & 1 == 1;
        }
        let lp = net.joint_log_prob(&state)?;
        visit(&state, lp);
    }
    Ok(())
}

/// `log P(evidence)` by summing the joint over all completions.
pub fn log_marginal<T: Real>(net: &Network<T>, ev: &Evidence) -> Result<MarginalResult<T>> {
    log_marginal_with_cap(net, ev, DEFAULT_ENUM_CAP)
}

pub fn log_marginal_with_cap<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    cap: usize,
) -> Result<MarginalResult<T>> {
    let hidden = hidden_nodes(net, ev)?;
    check_cap(hidden.len(), cap)?;
    let mut acc = LogSumAcc::new();
    for_each_completion(net, ev, &hidden, |_, lp| acc.add_log(lp))?;
    Ok(MarginalResult {
        log_marginal: acc.value(),
        enumerated_states: 1 << hidden.len(),
    })
}

/// Posterior marginals `P(S_j = 1 | evidence)` for every unassigned node,
/// ascending by node id. Errors on zero-probability evidence.
pub fn posterior_marginals<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
) -> Result<Vec<(NodeId, T)>> {
    posterior_marginals_with_cap(net, ev, DEFAULT_ENUM_CAP)
}

pub fn posterior_marginals_with_cap<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    cap: usize,
) -> Result<Vec<(NodeId, T)>> {
    let hidden = hidden_nodes(net, ev)?;
    check_cap(hidden.len(), cap)?;
    let mut total = LogSumAcc::new();
    let mut on: Vec<LogSumAcc<T>> = vec![LogSumAcc::new(); hidden.len()];
    for_each_completion(net, ev, &hidden, |state, lp| {
        total.add_log(lp);
        for (k, &h) in hidden.iter().enumerate() {
            if state[h.0] {
                on[k].add_log(lp);
            }
        }
    })?;
    let log_total = total.value();
    if log_total == T::neg_infinity() {
        return Err(Error::ZeroProbabilityEvidence);
    }
    Ok(hidden
        .iter()
        .zip(on)
        .map(|(&h, acc)| (h, (acc.value() - log_total).exp()))
        .collect())
}

/// KL divergence `KL(Q || P(· | evidence))` from the factorized distribution
/// with means `mu` (full-length vector; entries at assigned nodes are
/// ignored) to the true posterior. Means are clamped to
/// `[MU_CLAMP, 1 - MU_CLAMP]` exactly as the bound optimizer does, so the
/// identity `exact = lower bound + KL` holds to rounding.
pub fn kl_to_posterior<T: Real>(net: &Network<T>, ev: &Evidence, mu: &[T]) -> Result<T> {
    kl_to_posterior_with_cap(net, ev, mu, DEFAULT_ENUM_CAP)
}

pub fn kl_to_posterior_with_cap<T: Real>(
    net: &Network<T>,
    ev: &Evidence,
    mu: &[T],
    cap: usize,
) -> Result<T> {
    if mu.len() != net.len() {
        return Err(Error::MeanLength {
            expected: net.len(),
            found: mu.len(),
        });
    }
    let hidden = hidden_nodes(net, ev)?;
    check_cap(hidden.len(), cap)?;
    let log_p = log_marginal_with_cap(net, ev, cap)?.log_marginal;
    if log_p == T::neg_infinity() {
        return Err(Error::ZeroProbabilityEvidence);
    }
    let lo = T::of(MU_CLAMP);
    let hi = T::one() - lo;
    let clamped: Vec<(T, T)> = hidden
        .iter()
        .map(|&h| {
            let m = mu[h.0].max(lo).min(hi);
            (m.ln(), (T::one() - m).ln())
        })
        .collect();
    let mut kl = T::zero();
    for_each_completion(net, ev, &hidden, |state, lp| {
        let mut log_q = T::zero();
        for (k, &h) in hidden.iter().enumerate() {
            log_q = log_q + if state[h.0] { clamped[k].0 } else { clamped[k].1 };
        }
        let log_post = lp - log_p;
        kl = kl + log_q.exp() * (log_q - log_post);
    })?;
    Ok(kl)
}

/// How to take the expectation in [`sigma_std`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaStdMode {
    /// Enumerate each bottom-layer node's parent configurations under the
    /// product prior of the top layer (fan-in capped).
    Exact,
    /// Average over full joint samples.
    MonteCarlo { samples: usize },
}

/// Coupling-strength summary of a two-layer network with evidence on the
/// bottom layer: the largest standard deviation, over bottom nodes `i`, of
/// the conditional `P(S_i = s_i | parents)` as the parents vary over their
/// prior. Always in `[0, 1/2]`; `0` for decoupled networks.
pub fn sigma_std<T: Real, R: Rng + ?Sized>(
    net: &Network<T>,
    ev: &Evidence,
    mode: SigmaStdMode,
    rng: &mut R,
) -> Result<T> {
    net.check_evidence_covers_l1(ev)?;
    let layers = net.require_layers()?;
    match mode {
        SigmaStdMode::Exact => {
            let mut worst = T::zero();
            for &i in &layers.l1 {
                let s_i = ev.get(i).expect("coverage checked");
                let parents = net.parents(i);
                let m = parents.len();
                if m > DEFAULT_ENUM_CAP {
                    return Err(Error::FanInExceeded {
                        node: i,
                        fan_in: m,
                        cap: DEFAULT_ENUM_CAP,
                    });
                }
                let pr: Vec<T> = parents
                    .iter()
                    .map(|&j| net.prior(j).expect("l2 nodes are roots"))
                    .collect();
                let mut mean = T::zero();
                let mut mean_sq = T::zero();
                let mut bits = vec![false; m];
                for mask in 0u64..1 << m {
                    let mut w = T::one();
                    for k in 0..m {
                        bits[k] = mask >> k & 1 == 1;
                        w = w * if bits[k] { pr[k] } else { T::one() - pr[k] };
                    }
                    if w == T::zero() {
                        continue;
                    }
                    let f = net.cond_log_prob(i, s_i, &bits)?.exp();
                    mean = mean + w * f;
                    mean_sq = mean_sq + w * f * f;
                }
                let var = (mean_sq - mean * mean).max(T::zero());
                worst = worst.max(var.sqrt());
            }
            Ok(worst)
        }
        SigmaStdMode::MonteCarlo { samples } => {
            let m1 = vec![T::zero(); layers.l1.len()];
            let m2 = vec![T::zero(); layers.l1.len()];
            let mut acc = (m1, m2);
            for _ in 0..samples {
                let state = net.ancestral_sample(rng);
                for (k, &i) in layers.l1.iter().enumerate() {
                    let s_i = ev.get(i).expect("coverage checked");
                    let bits: Vec<bool> =
                        net.parents(i).iter().map(|p| state[p.0]).collect();
                    let f = net.cond_log_prob(i, s_i, &bits)?.exp();
                    acc.0[k] = acc.0[k] + f;
                    acc.1[k] = acc.1[k] + f * f;
                }
            }
            let count = T::of(samples as f64);
            let mut worst = T::zero();
            for k in 0..layers.l1.len() {
                let mean = acc.0[k] / count;
                let var = (acc.1[k] / count - mean * mean).max(T::zero());
                worst = worst.max(var.sqrt());
            }
            Ok(worst)
        }
    }
}

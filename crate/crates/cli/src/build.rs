//! Construction of the benchmark networks: complete bipartite two-layer
//! graphs with maximally variable roots, plus the evidence policies that
//! fix the bottom layer.

use belief_bounds::{Edge, Evidence, Layers, Network, Network64, NodeId};
use rand::Rng;

use crate::prior::WeightPrior;

/// Optional always-on dummy parent wired to every bottom-layer node,
/// giving each a baseline activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leak {
    pub theta: f64,
}

/// Complete bipartite `n`-by-`n` network: roots `0..n` with prior 1/2 feed
/// every child in `n..2n`; weights are drawn independently from `prior`.
/// A leak adds node `2n` with prior 1 and a fixed-weight edge to each
/// child.
pub fn bipartite<R: Rng + ?Sized>(
    prior: WeightPrior,
    n: usize,
    leak: Option<Leak>,
    rng: &mut R,
) -> Network64 {
    let mut edges = Vec::with_capacity(n * n + if leak.is_some() { n } else { 0 });
    for c in 0..n {
        for p in 0..n {
            edges.push(Edge {
                child: NodeId(n + c),
                parent: NodeId(p),
                theta: prior.sample_theta(rng),
            });
        }
    }
    let mut l2: Vec<NodeId> = (0..n).map(NodeId).collect();
    let mut priors: Vec<(NodeId, f64)> = (0..n).map(|j| (NodeId(j), 0.5)).collect();
    if let Some(leak) = leak {
        let dummy = NodeId(2 * n);
        for c in 0..n {
            edges.push(Edge {
                child: NodeId(n + c),
                parent: dummy,
                theta: leak.theta,
            });
        }
        l2.push(dummy);
        priors.push((dummy, 1.0));
    }
    let total = 2 * n + usize::from(leak.is_some());
    Network::new(
        prior.kind(),
        total,
        edges,
        priors,
        Some(Layers {
            l1: (n..2 * n).map(NodeId).collect(),
            l2,
        }),
    )
    .expect("generated bipartite networks are always well formed")
}

/// How the bottom layer gets pinned for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EvidencePolicy {
    /// Ancestral-sample a full state from the network and keep its bottom
    /// layer, so the evidence is always achievable.
    Sampled,
    /// Every bottom-layer node observed off.
    Zeros,
    /// Every bottom-layer node observed on (the worst-case marginal).
    Ones,
}

impl EvidencePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidencePolicy::Sampled => "sampled",
            EvidencePolicy::Zeros => "zeros",
            EvidencePolicy::Ones => "ones",
        }
    }
}

/// Produce evidence over the network's bottom layer. Draws from `rng`
/// only under the sampled policy.
pub fn evidence_for<R: Rng + ?Sized>(
    net: &Network64,
    policy: EvidencePolicy,
    rng: &mut R,
) -> belief_bounds::Result<Evidence> {
    let layers = net.require_layers()?;
    let ev = match policy {
        EvidencePolicy::Sampled => {
            let state = net.ancestral_sample(rng);
            Evidence::from_pairs(layers.l1.iter().map(|&i| (i, state[i.0])))
        }
        EvidencePolicy::Zeros => {
            Evidence::from_pairs(layers.l1.iter().map(|&i| (i, false)))
        }
        EvidencePolicy::Ones => {
            Evidence::from_pairs(layers.l1.iter().map(|&i| (i, true)))
        }
    };
    Ok(ev)
}

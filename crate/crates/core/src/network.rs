//! Binary belief networks with logistic or noisy-OR conditionals.
//!
//! A network is a DAG over `n` binary nodes. Nodes without parents are roots
//! and carry an explicit Bernoulli prior; nodes with parents use the
//! kind-specific conditional on the weighted sum of active parents
//! `h_i = Σ_j θ_ij S_j`:
//!
//! * logistic: `P(S_i = 1 | pa) = g(h_i)`, weights of either sign;
//! * noisy-OR: `P(S_i = 0 | pa) = e^(−h_i)`, weights `θ_ij = −log(1 − q_ij) ≥ 0`.
//!
//! A network may declare a two-layer split (`l2` roots above, `l1` children
//! below); the upper-bound routines require it. An always-on leak cause is
//! modeled as an ordinary `l2` node with prior 1.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::math::{log1m_exp_neg, log_sigmoid, safe_ln, sigmoid};
use crate::scalar::Real;

/// Index of a node, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Conditional family used by non-root nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Sigmoid,
    NoisyOr,
}

impl NetworkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkKind::Sigmoid => "sigmoid",
            NetworkKind::NoisyOr => "noisy_or",
        }
    }
}

/// Declared bipartite split: `l2` holds the top-layer roots, `l1` the bottom
/// layer that evidence is attached to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layers {
    pub l1: Vec<NodeId>,
    pub l2: Vec<NodeId>,
}

/// A weighted edge `child <- parent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub child: NodeId,
    pub parent: NodeId,
    pub theta: T,
}

/// Full assignment of all `n` nodes; index `k` is the bit of node `k`.
pub type State = Vec<bool>;

/// Partial assignment used as observed evidence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<NodeId, bool>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (NodeId, bool)>>(pairs: I) -> Self {
        Self {
            assignments: pairs.into_iter().collect(),
        }
    }

    pub fn assign(&mut self, node: NodeId, bit: bool) {
        self.assignments.insert(node, bit);
    }

    pub fn get(&self, node: NodeId) -> Option<bool> {
        self.assignments.get(&node).copied()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.assignments.contains_key(&node)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    /// Deterministic (ascending node id) iteration.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, bool)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }

    pub fn check_in_range(&self, n: usize) -> Result<()> {
        for (node, _) in self.iter() {
            if node.0 >= n {
                return Err(Error::NodeOutOfRange(node, n));
            }
        }
        Ok(())
    }
}

/// Validated belief network. Construction computes and caches the topological
/// order and the child adjacency, so evaluation never re-sorts.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    kind: NetworkKind,
    n: usize,
    parents: Vec<Vec<NodeId>>,
    weights: Vec<Vec<T>>,
    priors: Vec<Option<T>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    layers: Option<Layers>,
    l1_mask: Vec<bool>,
    l2_mask: Vec<bool>,
}

impl<T: Real> Network<T> {
    /// Build and validate a network from an edge list and root priors.
    ///
    /// Rejections name the offending node or edge: cycles, out-of-range
    /// indices, duplicate edges, non-finite or (for noisy-OR) negative
    /// weights, priors outside `[0, 1]`, priors on non-roots, roots without
    /// priors, and malformed layer declarations.
    pub fn new(
        kind: NetworkKind,
        n: usize,
        edges: Vec<Edge<T>>,
        priors: Vec<(NodeId, T)>,
        layers: Option<Layers>,
    ) -> Result<Self> {
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut weights: Vec<Vec<T>> = vec![Vec::new(); n];

        let mut sorted_edges = edges;
        sorted_edges.sort_by_key(|e| (e.child, e.parent));
        for pair in sorted_edges.windows(2) {
            if pair[0].child == pair[1].child && pair[0].parent == pair[1].parent {
                return Err(Error::DuplicateEdge {
                    child: pair[0].child,
                    parent: pair[0].parent,
                });
            }
        }
        for e in &sorted_edges {
            if e.child.0 >= n {
                return Err(Error::EdgeOutOfRange {
                    child: e.child,
                    parent: e.parent,
                    side: "child",
                    n,
                });
            }
            if e.parent.0 >= n {
                return Err(Error::EdgeOutOfRange {
                    child: e.child,
                    parent: e.parent,
                    side: "parent",
                    n,
                });
            }
            if e.child == e.parent {
                return Err(Error::Cycle(e.child));
            }
            if !e.theta.is_finite() {
                return Err(Error::Malformed(format!(
                    "edge {} <- {}: weight is not finite",
                    e.child, e.parent
                )));
            }
            if kind == NetworkKind::NoisyOr && e.theta < T::zero() {
                return Err(Error::NegativeNoisyOrWeight {
                    child: e.child,
                    parent: e.parent,
                    theta: e.theta.to_f64().unwrap_or(f64::NAN),
                });
            }
            parents[e.child.0].push(e.parent);
            weights[e.child.0].push(e.theta);
        }

        let mut prior_vec: Vec<Option<T>> = vec![None; n];
        for (node, p) in priors {
            if node.0 >= n {
                return Err(Error::NodeOutOfRange(node, n));
            }
            if prior_vec[node.0].is_some() {
                return Err(Error::Malformed(format!("node {node}: duplicate prior")));
            }
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::PriorOutOfRange {
                    node,
                    p: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            prior_vec[node.0] = Some(p);
        }
        for i in 0..n {
            let id = NodeId(i);
            if parents[i].is_empty() && prior_vec[i].is_none() {
                return Err(Error::MissingRootPrior(id));
            }
            if !parents[i].is_empty() && prior_vec[i].is_some() {
                return Err(Error::PriorOnNonRoot(id));
            }
        }

        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (i, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p.0].push(NodeId(i));
            }
        }

        let topo = topological_order(n, &parents)?;

        let (l1_mask, l2_mask) = match &layers {
            None => (vec![false; n], vec![false; n]),
            Some(ls) => {
                let mut m1 = vec![false; n];
                let mut m2 = vec![false; n];
                for &v in &ls.l1 {
                    if v.0 >= n {
                        return Err(Error::NodeOutOfRange(v, n));
                    }
                    if m1[v.0] {
                        return Err(Error::BadLayers(format!("node {v} listed twice in l1")));
                    }
                    m1[v.0] = true;
                }
                for &v in &ls.l2 {
                    if v.0 >= n {
                        return Err(Error::NodeOutOfRange(v, n));
                    }
                    if m1[v.0] || m2[v.0] {
                        return Err(Error::BadLayers(format!(
                            "node {v} appears in both layers or twice in l2"
                        )));
                    }
                    m2[v.0] = true;
                }
                if ls.l1.len() + ls.l2.len() != n {
                    return Err(Error::BadLayers(format!(
                        "layers cover {} of {} nodes",
                        ls.l1.len() + ls.l2.len(),
                        n
                    )));
                }
                for (i, ps) in parents.iter().enumerate() {
                    for &p in ps {
                        if !m1[i] || !m2[p.0] {
                            return Err(Error::BadLayers(format!(
                                "edge {} <- {} does not go from l2 to l1",
                                NodeId(i),
                                p
                            )));
                        }
                    }
                }
                // l2 nodes are parent-free by the edge rule above, hence roots.
                (m1, m2)
            }
        };

        Ok(Self {
            kind,
            n,
            parents,
            weights,
            priors: prior_vec,
            children,
            topo,
            layers,
            l1_mask,
            l2_mask,
        })
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn parents(&self, i: NodeId) -> &[NodeId] {
        &self.parents[i.0]
    }

    /// Weights aligned with `parents(i)`.
    pub fn weight_row(&self, i: NodeId) -> &[T] {
        &self.weights[i.0]
    }

    pub fn children(&self, j: NodeId) -> &[NodeId] {
        &self.children[j.0]
    }

    pub fn is_root(&self, i: NodeId) -> bool {
        self.parents[i.0].is_empty()
    }

    pub fn prior(&self, i: NodeId) -> Option<T> {
        self.priors[i.0]
    }

    /// Cached topological order (parents before children).
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    pub fn layers(&self) -> Option<&Layers> {
        self.layers.as_ref()
    }

    pub fn in_l1(&self, i: NodeId) -> bool {
        self.l1_mask[i.0]
    }

    pub fn in_l2(&self, i: NodeId) -> bool {
        self.l2_mask[i.0]
    }

    /// Layers, or the error the bound routines report on non-bipartite input.
    pub fn require_layers(&self) -> Result<&Layers> {
        self.layers.as_ref().ok_or(Error::NotBipartite)
    }

    /// Check that evidence assigns exactly the declared bottom layer.
    pub fn check_evidence_covers_l1(&self, ev: &Evidence) -> Result<()> {
        let layers = self.require_layers()?;
        for &i in &layers.l1 {
            if !ev.contains(i) {
                return Err(Error::EvidenceMismatch {
                    node: i,
                    problem: "in the bottom layer but unassigned",
                });
            }
        }
        for (node, _) in ev.iter() {
            if node.0 >= self.n {
                return Err(Error::NodeOutOfRange(node, self.n));
            }
            if !self.in_l1(node) {
                return Err(Error::EvidenceMismatch {
                    node,
                    problem: "assigned but not in the bottom layer",
                });
            }
        }
        Ok(())
    }

    /// Weighted sum of active parents `h_i = Σ_j θ_ij S_j`, with `pa_bits`
    /// aligned to `parents(i)`.
    fn activation(&self, i: NodeId, pa_bits: &[bool]) -> T {
        let mut h = T::zero();
        for (k, &on) in pa_bits.iter().enumerate() {
            if on {
                h = h + self.weights[i.0][k];
            }
        }
        h
    }

    /// `log P(S_i = s_i | parents)`. Roots use their Bernoulli prior; zero
    /// probability comes back as `-inf`.
    pub fn cond_log_prob(&self, i: NodeId, s_i: bool, pa_bits: &[bool]) -> Result<T> {
        if i.0 >= self.n {
            return Err(Error::NodeOutOfRange(i, self.n));
        }
        if pa_bits.len() != self.parents[i.0].len() {
            return Err(Error::StateLength {
                expected: self.parents[i.0].len(),
                found: pa_bits.len(),
            });
        }
        if let Some(p) = self.priors[i.0] {
            return Ok(if s_i { safe_ln(p) } else { safe_ln(T::one() - p) });
        }
        let h = self.activation(i, pa_bits);
        Ok(match self.kind {
            NetworkKind::Sigmoid => {
                let sign = if s_i { T::one() } else { -T::one() };
                log_sigmoid(sign * h)
            }
            NetworkKind::NoisyOr => {
                if s_i {
                    if h == T::zero() {
                        T::neg_infinity()
                    } else {
                        log1m_exp_neg(h)
                    }
                } else {
                    -h
                }
            }
        })
    }

    /// `log P(state)` summed over every node's conditional; `-inf` for states
    /// the network cannot produce.
    pub fn joint_log_prob(&self, state: &[bool]) -> Result<T> {
        if state.len() != self.n {
            return Err(Error::StateLength {
                expected: self.n,
                found: state.len(),
            });
        }
        let mut total = T::zero();
        let mut pa_bits: Vec<bool> = Vec::new();
        for i in 0..self.n {
            let id = NodeId(i);
            pa_bits.clear();
            pa_bits.extend(self.parents[i].iter().map(|p| state[p.0]));
            let lp = self.cond_log_prob(id, state[i], &pa_bits)?;
            if lp == T::neg_infinity() {
                return Ok(T::neg_infinity());
            }
            total = total + lp;
        }
        Ok(total)
    }

    /// Draw a full state by walking the topological order, sampling each node
    /// from its conditional given the already-sampled parents.
    pub fn ancestral_sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> State {
        let mut state = vec![false; self.n];
        for &id in &self.topo {
            let p_on: f64 = match self.priors[id.0] {
                Some(p) => p.to_f64().unwrap_or(0.0),
                None => {
                    let mut h = T::zero();
                    for (k, &pj) in self.parents[id.0].iter().enumerate() {
                        if state[pj.0] {
                            h = h + self.weights[id.0][k];
                        }
                    }
                    match self.kind {
                        NetworkKind::Sigmoid => sigmoid(h).to_f64().unwrap_or(0.5),
                        NetworkKind::NoisyOr => (-(-h).exp_m1()).to_f64().unwrap_or(0.0),
                    }
                }
            };
            state[id.0] = rng.gen::<f64>() < p_on;
        }
        state
    }
}

fn topological_order(n: usize, parents: &[Vec<NodeId>]) -> Result<Vec<NodeId>> {
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    // Stack keyed by descending id so the order is deterministic.
    ready.sort_unstable_by(|a, b| b.cmp(a));
    let mut order = Vec::with_capacity(n);
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ps) in parents.iter().enumerate() {
        for p in ps {
            children[p.0].push(i);
        }
    }
    while let Some(i) = ready.pop() {
        order.push(NodeId(i));
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                // Insert keeping descending sort; fan-outs are small.
                let pos = ready.partition_point(|&x| x > c);
                ready.insert(pos, c);
            }
        }
    }
    if order.len() != n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(Error::Cycle(NodeId(stuck)));
    }
    Ok(order)
}

//! Network file format: a small JSON schema with explicit node indices.
//!
//! ```json
//! {
//!   "kind": "sigmoid",
//!   "n": 3,
//!   "layers": {"l1": [2], "l2": [0, 1]},
//!   "priors": [{"node": 0, "p": 5.0e-1}, {"node": 1, "p": 5.0e-1}],
//!   "edges": [{"child": 2, "parent": 0, "theta": 1.5}]
//! }
//! ```
//!
//! Every edge carries exactly one of `theta` (log-domain weight, either kind)
//! or `q` (noisy-OR failure probability, converted via `theta = -log(1-q)`).
//! `layers` is optional. On save, reals are written in scientific notation
//! with 17 significant digits, so save → load reproduces weights bit-exactly.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Edge, Evidence, Layers, Network, NetworkKind, NodeId};
use crate::scalar::Real;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    kind: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layers: Option<LayersFile>,
    priors: Vec<PriorFile>,
    edges: Vec<EdgeFile>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayersFile {
    l1: Vec<usize>,
    l2: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorFile {
    node: usize,
    p: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeFile {
    child: usize,
    parent: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

/// JSON formatter that writes floats with 17 significant digits
/// (`d.dddddddddddddddde±x`), enough for exact f64 round trips.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f64,
    ) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + std::io::Write>(
        &mut self,
        writer: &mut W,
        value: f32,
    ) -> std::io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

impl<T: Real> Network<T> {
    /// Parse a network from JSON text, running full structural validation.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: NetworkFile =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let kind = match file.kind.as_str() {
            "sigmoid" => NetworkKind::Sigmoid,
            "noisy_or" => NetworkKind::NoisyOr,
            other => {
                return Err(Error::Malformed(format!(
                    "unknown kind {other:?} (expected \"sigmoid\" or \"noisy_or\")"
                )))
            }
        };

        let mut edges = Vec::with_capacity(file.edges.len());
        for e in &file.edges {
            let child = NodeId(e.child);
            let parent = NodeId(e.parent);
            let theta = match (e.theta, e.q) {
                (Some(t), None) => t,
                (None, Some(q)) => {
                    if kind == NetworkKind::Sigmoid {
                        return Err(Error::Malformed(format!(
                            "edge {child} <- {parent}: q weights are only valid for noisy_or"
                        )));
                    }
                    if !(0.0..1.0).contains(&q) {
                        return Err(Error::FailureProbOutOfRange { child, parent, q });
                    }
                    // -log(1-q), evaluated as -log1p(-q) for accuracy near 0.
                    -(-q).ln_1p()
                }
                (Some(_), Some(_)) => {
                    return Err(Error::Malformed(format!(
                        "edge {child} <- {parent}: both theta and q given"
                    )))
                }
                (None, None) => {
                    return Err(Error::Malformed(format!(
                        "edge {child} <- {parent}: neither theta nor q given"
                    )))
                }
            };
            edges.push(Edge {
                child,
                parent,
                theta: T::of(theta),
            });
        }

        let priors = file
            .priors
            .iter()
            .map(|p| (NodeId(p.node), T::of(p.p)))
            .collect();

        let layers = file.layers.map(|l| Layers {
            l1: l.l1.into_iter().map(NodeId).collect(),
            l2: l.l2.into_iter().map(NodeId).collect(),
        });

        Network::new(kind, file.n, edges, priors, layers)
    }

    /// Serialize to JSON with full-precision reals. Weights are always
    /// emitted as `theta`, also for networks loaded from `q` form.
    pub fn to_json_string(&self) -> Result<String> {
        let file = NetworkFile {
            kind: self.kind().as_str().to_owned(),
            n: self.len(),
            layers: self.layers().map(|l| LayersFile {
                l1: l.l1.iter().map(|v| v.0).collect(),
                l2: l.l2.iter().map(|v| v.0).collect(),
            }),
            priors: (0..self.len())
                .filter_map(|i| {
                    self.prior(NodeId(i)).map(|p| PriorFile {
                        node: i,
                        p: p.to_f64().unwrap_or(f64::NAN),
                    })
                })
                .collect(),
            edges: (0..self.len())
                .flat_map(|c| {
                    let child = NodeId(c);
                    self.parents(child)
                        .iter()
                        .zip(self.weight_row(child))
                        .map(move |(p, &t)| EdgeFile {
                            child: c,
                            parent: p.0,
                            theta: Some(t.to_f64().unwrap_or(f64::NAN)),
                            q: None,
                        })
                })
                .collect(),
        };
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
        file.serialize(&mut ser)
            .map_err(|e| Error::Malformed(e.to_string()))?;
        String::from_utf8(buf).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = self.to_json_string()?;
        let mut f = fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Parse an evidence assignment from JSON of the form `{"node": bit, ...}`
/// with node indices as keys and bits 0/1 or booleans as values.
pub fn evidence_from_json_str(text: &str) -> Result<Evidence> {
    let raw: std::collections::BTreeMap<String, serde_json::Value> =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let mut ev = Evidence::new();
    for (key, val) in raw {
        let node: usize = key
            .parse()
            .map_err(|_| Error::Malformed(format!("evidence key {key:?} is not a node index")))?;
        let bit = match val {
            serde_json::Value::Bool(b) => b,
            serde_json::Value::Number(v) if v.as_u64() == Some(0) => false,
            serde_json::Value::Number(v) if v.as_u64() == Some(1) => true,
            other => {
                return Err(Error::Malformed(format!(
                    "evidence value {other} for node {key} is not a bit"
                )))
            }
        };
        ev.assign(NodeId(node), bit);
    }
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample_sigmoid() -> Network<f64> {
        Network::new(
            NetworkKind::Sigmoid,
            3,
            vec![
                Edge {
                    child: NodeId(2),
                    parent: NodeId(0),
                    theta: 0.1,
                },
                Edge {
                    child: NodeId(2),
                    parent: NodeId(1),
                    theta: -1.0 / 3.0,
                },
            ],
            vec![(NodeId(0), 0.5), (NodeId(1), 0.25)],
            Some(Layers {
                l1: vec![NodeId(2)],
                l2: vec![NodeId(0), NodeId(1)],
            }),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_everything() {
        let net = sample_sigmoid();
        let text = net.to_json_string().unwrap();
        let back: Network<f64> = Network::from_json_str(&text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn full_precision_digits_in_output() {
        let net = sample_sigmoid();
        let text = net.to_json_string().unwrap();
        // 0.1 at 17 significant digits.
        assert!(
            text.contains("1.0000000000000001e-1"),
            "precision lost: {text}"
        );
    }

    #[test]
    fn q_weights_convert_to_theta() {
        let text = r#"{
            "kind": "noisy_or", "n": 2,
            "priors": [{"node": 0, "p": 0.5}],
            "edges": [{"child": 1, "parent": 0, "q": 0.3}]
        }"#;
        let net: Network<f64> = Network::from_json_str(text).unwrap();
        let theta = net.weight_row(NodeId(1))[0];
        assert!((theta - -(0.7_f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn rejects_deterministic_q() {
        let text = r#"{
            "kind": "noisy_or", "n": 2,
            "priors": [{"node": 0, "p": 0.5}],
            "edges": [{"child": 1, "parent": 0, "q": 1.0}]
        }"#;
        let err = Network::<f64>::from_json_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("deterministic"), "unhelpful message: {msg}");
        assert!(msg.contains("1 <- 0"), "edge not named: {msg}");
    }

    #[test]
    fn rejects_both_and_neither_weight_forms() {
        let both = r#"{
            "kind": "noisy_or", "n": 2,
            "priors": [{"node": 0, "p": 0.5}],
            "edges": [{"child": 1, "parent": 0, "q": 0.5, "theta": 0.5}]
        }"#;
        assert!(Network::<f64>::from_json_str(both).is_err());
        let neither = r#"{
            "kind": "noisy_or", "n": 2,
            "priors": [{"node": 0, "p": 0.5}],
            "edges": [{"child": 1, "parent": 0}]
        }"#;
        assert!(Network::<f64>::from_json_str(neither).is_err());
    }

    #[test]
    fn rejects_unknown_kind_and_fields() {
        assert!(Network::<f64>::from_json_str(
            r#"{"kind": "tanh", "n": 1, "priors": [{"node": 0, "p": 0.5}], "edges": []}"#
        )
        .is_err());
        assert!(Network::<f64>::from_json_str(
            r#"{"kind": "sigmoid", "n": 1, "priors": [{"node": 0, "p": 0.5}], "edges": [], "extra": 1}"#
        )
        .is_err());
    }

    #[test]
    fn diagnostics_name_the_node() {
        let text = r#"{
            "kind": "sigmoid", "n": 2,
            "priors": [{"node": 0, "p": 1.5}],
            "edges": [{"child": 1, "parent": 0, "theta": 1.0}]
        }"#;
        let msg = Network::<f64>::from_json_str(text).unwrap_err().to_string();
        assert!(msg.contains("node 0"), "node not named: {msg}");
    }

    #[test]
    fn evidence_json_parses_bits_and_bools() {
        let ev = evidence_from_json_str(r#"{"0": 1, "3": false}"#).unwrap();
        assert_eq!(ev.get(NodeId(0)), Some(true));
        assert_eq!(ev.get(NodeId(3)), Some(false));
        assert!(evidence_from_json_str(r#"{"x": 1}"#).is_err());
        assert!(evidence_from_json_str(r#"{"0": 2}"#).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_arbitrary_weights(
            thetas in proptest::collection::vec(-50.0f64..50.0, 1..6),
            p in 0.0f64..=1.0,
        ) {
            let nn = thetas.len() + 1;
            let edges = thetas
                .iter()
                .enumerate()
                .map(|(k, &t)| Edge { child: NodeId(nn - 1), parent: NodeId(k), theta: t })
                .collect();
            let mut priors: Vec<(NodeId, f64)> =
                (0..nn - 1).map(|k| (NodeId(k), p)).collect();
            priors[0].1 = p;
            let net = Network::new(NetworkKind::Sigmoid, nn, edges, priors, None).unwrap();
            let back: Network<f64> =
                Network::from_json_str(&net.to_json_string().unwrap()).unwrap();
            prop_assert_eq!(net, back);
        }
    }
}

//! Directed weighted spiking-network graphs and their structural metrics.

use num::rational::BigRational;
use num::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational;

/// Dense 0-based neuron index, contiguous in `[0, node_count)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct NeuronId(pub usize);

impl std::fmt::Display for NeuronId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// One synapse. `pre` fires into `post`; `delay` is in whole timesteps.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: BigRational,
    pub delay: u64,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network document: {0}")]
    Parse(String),
    #[error("invalid network: {0}")]
    Validation(String),
    #[error("edge density undefined for {0} node(s); need at least 2")]
    DegenerateGraph(usize),
}

/// Degree direction for sparsity metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Incoming,
    Outgoing,
}

/// A validated, immutable spiking network.
///
/// Self-loops are permitted (recurrent networks); a self-loop counts toward
/// fan-in and density, and is always a local route wherever its neuron is
/// placed. At most one edge may exist per `(pre, post)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    edges: Vec<Edge>,
    thresholds: Vec<BigRational>,
    inputs: Vec<NeuronId>,
    outputs: Vec<NeuronId>,
    // Edge indices grouped by endpoint, for O(1) neighborhood walks.
    in_edges: Vec<Vec<usize>>,
    out_edges: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(
        node_count: usize,
        edges: Vec<Edge>,
        thresholds: Vec<BigRational>,
        inputs: Vec<NeuronId>,
        outputs: Vec<NeuronId>,
    ) -> Result<Self, NetworkError> {
        let fail = |msg: String| Err(NetworkError::Validation(msg));
        if thresholds.len() != node_count {
            return fail(format!(
                "{} thresholds for {} neurons",
                thresholds.len(),
                node_count
            ));
        }
        for (i, t) in thresholds.iter().enumerate() {
            if !t.is_positive() {
                return fail(format!("threshold of neuron {i} must be positive"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.pre.0 >= node_count || e.post.0 >= node_count {
                return fail(format!(
                    "edge {} -> {} references a neuron outside [0, {node_count})",
                    e.pre.0, e.post.0
                ));
            }
            if !seen.insert((e.pre.0, e.post.0)) {
                return fail(format!("duplicate edge {} -> {}", e.pre.0, e.post.0));
            }
        }
        for (label, markers) in [("input", &inputs), ("output", &outputs)] {
            let mut seen = std::collections::HashSet::new();
            for m in markers.iter() {
                if m.0 >= node_count {
                    return fail(format!("{label} marker {} out of range", m.0));
                }
                if !seen.insert(m.0) {
                    return fail(format!("duplicate {label} marker {}", m.0));
                }
            }
        }
        let mut in_edges = vec![Vec::new(); node_count];
        let mut out_edges = vec![Vec::new(); node_count];
        for (idx, e) in edges.iter().enumerate() {
            in_edges[e.post.0].push(idx);
            out_edges[e.pre.0].push(idx);
        }
        Ok(Network {
            node_count,
            edges,
            thresholds,
            inputs,
            outputs,
            in_edges,
            out_edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn threshold(&self, n: NeuronId) -> &BigRational {
        &self.thresholds[n.0]
    }

    pub fn inputs(&self) -> &[NeuronId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NeuronId] {
        &self.outputs
    }

    pub fn fan_in(&self, n: NeuronId) -> usize {
        self.in_edges[n.0].len()
    }

    pub fn fan_out(&self, n: NeuronId) -> usize {
        self.out_edges[n.0].len()
    }

    /// Sources feeding `n`, in edge-definition order.
    pub fn predecessors(&self, n: NeuronId) -> impl Iterator<Item = NeuronId> + '_ {
        self.in_edges[n.0].iter().map(|&e| self.edges[e].pre)
    }

    /// Receivers of `n`, in edge-definition order.
    pub fn successors(&self, n: NeuronId) -> impl Iterator<Item = NeuronId> + '_ {
        self.out_edges[n.0].iter().map(|&e| self.edges[e].post)
    }

    pub fn incoming_edges(&self, n: NeuronId) -> impl Iterator<Item = &Edge> + '_ {
        self.in_edges[n.0].iter().map(|&e| &self.edges[e])
    }

    pub fn outgoing_edges(&self, n: NeuronId) -> impl Iterator<Item = &Edge> + '_ {
        self.out_edges[n.0].iter().map(|&e| &self.edges[e])
    }

    /// Neurons with at least one outgoing edge; only these can occupy an
    /// input word-line somewhere.
    pub fn sources(&self) -> Vec<NeuronId> {
        (0..self.node_count)
            .filter(|&k| !self.out_edges[k].is_empty())
            .map(NeuronId)
            .collect()
    }

    pub fn max_fan_in(&self) -> usize {
        self.in_edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn degrees(&self, dir: Direction) -> Vec<u64> {
        let per = match dir {
            Direction::Incoming => &self.in_edges,
            Direction::Outgoing => &self.out_edges,
        };
        per.iter().map(|v| v.len() as u64).collect()
    }

    /// Edge density `E / N^2`, the convention that reproduces published
    /// connectivity tables for this class of networks. Self-loops count.
    pub fn edge_density(&self) -> Result<f64, NetworkError> {
        if self.node_count < 2 {
            return Err(NetworkError::DegenerateGraph(self.node_count));
        }
        let n = self.node_count as f64;
        Ok(self.edges.len() as f64 / (n * n))
    }

    /// Edge density rounded half-up to four decimals, computed in exact
    /// integer arithmetic so table comparisons carry no float error.
    pub fn edge_density_4dp(&self) -> Result<f64, NetworkError> {
        if self.node_count < 2 {
            return Err(NetworkError::DegenerateGraph(self.node_count));
        }
        Ok(density_4dp(self.node_count as u64, self.edges.len() as u64))
    }

    /// Gini coefficient of the degree distribution in the chosen direction.
    pub fn gini_sparsity(&self, dir: Direction) -> f64 {
        gini(&self.degrees(dir))
    }
}

/// `round(10^4 * E / N^2) / 10^4` with half-up rounding, done exactly.
pub fn density_4dp(nodes: u64, edges: u64) -> f64 {
    let den = (nodes as u128) * (nodes as u128);
    let num = 10_000u128 * edges as u128;
    let scaled = (2 * num + den) / (2 * den);
    scaled as f64 / 10_000.0
}

/// Gini coefficient of a degree vector via the sorted-sum formula
/// `G = sum_i (2i - n - 1) d_i / (n sum d)` with 1-based `i` over ascending
/// `d`. Returns 0 for an empty or all-zero vector. Result lies in `[0, 1)`.
pub fn gini(degrees: &[u64]) -> f64 {
    let n = degrees.len() as i128;
    if n == 0 {
        return 0.0;
    }
    let total: i128 = degrees.iter().map(|&d| d as i128).sum();
    if total == 0 {
        return 0.0;
    }
    let mut sorted = degrees.to_vec();
    sorted.sort_unstable();
    let mut acc: i128 = 0;
    for (idx, &d) in sorted.iter().enumerate() {
        let i = idx as i128 + 1;
        acc += (2 * i - n - 1) * d as i128;
    }
    acc as f64 / (n * total) as f64
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    pre: usize,
    post: usize,
    #[serde(default = "rational::one", with = "rational::serde_one")]
    weight: BigRational,
    #[serde(default)]
    delay: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    nodes: usize,
    edges: Vec<EdgeDoc>,
    #[serde(default, with = "rational::serde_vec")]
    thresholds: Vec<BigRational>,
    #[serde(default)]
    inputs: Vec<usize>,
    #[serde(default)]
    outputs: Vec<usize>,
}

/// Parse and validate a network document.
///
/// Document shape: `{ "nodes": N, "edges": [{"pre", "post", "weight",
/// "delay"}...], "thresholds": [...], "inputs": [...], "outputs": [...] }`.
/// `weight` defaults to 1, `delay` to 0, `thresholds` to all-ones; unknown
/// fields are rejected.
pub fn load_network(bytes: &[u8]) -> Result<Network, NetworkError> {
    let doc: NetworkDoc =
        serde_json::from_slice(bytes).map_err(|e| NetworkError::Parse(e.to_string()))?;
    let thresholds = if doc.thresholds.is_empty() {
        vec![rational::one(); doc.nodes]
    } else {
        doc.thresholds
    };
    Network::new(
        doc.nodes,
        doc.edges
            .into_iter()
            .map(|e| Edge {
                pre: NeuronId(e.pre),
                post: NeuronId(e.post),
                weight: e.weight,
                delay: e.delay,
            })
            .collect(),
        thresholds,
        doc.inputs.into_iter().map(NeuronId).collect(),
        doc.outputs.into_iter().map(NeuronId).collect(),
    )
}

/// Serialize a network to its canonical JSON document.
pub fn save_network(net: &Network) -> String {
    let doc = NetworkDoc {
        nodes: net.node_count,
        edges: net
            .edges
            .iter()
            .map(|e| EdgeDoc {
                pre: e.pre.0,
                post: e.post.0,
                weight: e.weight.clone(),
                delay: e.delay,
            })
            .collect(),
        thresholds: net.thresholds.clone(),
        inputs: net.inputs.iter().map(|n| n.0).collect(),
        outputs: net.outputs.iter().map(|n| n.0).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("network serialization cannot fail")
}

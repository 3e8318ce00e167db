//! Decoded placement solutions, their validation, and metric evaluation.
//!
//! Everything reported about a solution is recomputed from the neuron
//! assignment alone: axon sets are the closure "a word-line for source `k`
//! exists on `j` iff some receiver of `k` resides on `j`", and locality is
//! "the source also resides there". The validator re-derives both and is
//! the single arbiter used by tests and decode guards.

use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Network, NeuronId};
use crate::ilp::MappingVars;
use crate::inventory::{CrossbarId, Inventory};
use crate::rational;
use crate::sim::SpikeProfile;
use crate::solver::{SolveResult, SolveStatus};

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error("neuron {0} is not mapped to any crossbar")]
    UnmappedNeuron(usize),
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("invalid solution: {0}")]
    InvalidSolution(String),
    #[error("solver returned no assignment (status {0:?})")]
    NotFeasible(SolveStatus),
}

/// Aggregate metrics of a placement, all recomputable from the assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionMetrics {
    pub area: BigRational,
    pub enabled_count: usize,
    pub total_routes: u64,
    pub local_routes: u64,
    pub global_routes: u64,
}

/// A full neuron-to-crossbar placement with its derived structure.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingSolution {
    /// Crossbar per neuron.
    pub assignment: Vec<CrossbarId>,
    /// Resident neurons per crossbar, ascending.
    pub residents: Vec<Vec<NeuronId>>,
    /// Axonal input sources per crossbar, ascending: the sharing closure of
    /// the assignment.
    pub axon_sets: Vec<Vec<NeuronId>>,
    /// Non-empty crossbars, ascending.
    pub enabled: Vec<CrossbarId>,
    pub metrics: SolutionMetrics,
}

impl MappingSolution {
    /// Build a solution (residents, axon closure, metrics) from a bare
    /// assignment. Capacity feasibility is not checked here; see
    /// [`validate_solution`].
    pub fn from_assignment(
        net: &Network,
        inv: &Inventory,
        assignment: Vec<CrossbarId>,
    ) -> Result<Self, SolutionError> {
        if assignment.len() != net.node_count() {
            return Err(SolutionError::UnmappedNeuron(assignment.len()));
        }
        let places = inv.len();
        for (i, c) in assignment.iter().enumerate() {
            if c.0 >= places {
                return Err(SolutionError::InvalidAssignment(format!(
                    "neuron {i} mapped to crossbar {} of {places}",
                    c.0
                )));
            }
        }
        let mut residents: Vec<Vec<NeuronId>> = vec![Vec::new(); places];
        for (i, c) in assignment.iter().enumerate() {
            residents[c.0].push(NeuronId(i));
        }
        let mut axon_sets: Vec<Vec<NeuronId>> = vec![Vec::new(); places];
        for (j, rs) in residents.iter().enumerate() {
            let mut axons: Vec<usize> = rs
                .iter()
                .flat_map(|&r| net.predecessors(r).map(|p| p.0))
                .collect();
            axons.sort_unstable();
            axons.dedup();
            axon_sets[j] = axons.into_iter().map(NeuronId).collect();
        }
        let enabled: Vec<CrossbarId> = residents
            .iter()
            .enumerate()
            .filter(|(_, rs)| !rs.is_empty())
            .map(|(j, _)| CrossbarId(j))
            .collect();

        let mut area = BigRational::zero();
        for c in &enabled {
            area += &inv.get(*c).cost;
        }
        let mut total_routes = 0u64;
        let mut local_routes = 0u64;
        for (j, axons) in axon_sets.iter().enumerate() {
            total_routes += axons.len() as u64;
            local_routes += axons
                .iter()
                .filter(|k| assignment[k.0] == CrossbarId(j))
                .count() as u64;
        }
        let metrics = SolutionMetrics {
            area,
            enabled_count: enabled.len(),
            total_routes,
            local_routes,
            global_routes: total_routes - local_routes,
        };
        Ok(MappingSolution {
            assignment,
            residents,
            axon_sets,
            enabled,
            metrics,
        })
    }

    /// True when source `k` is consumed as an input on crossbar `j`.
    pub fn is_axon(&self, k: NeuronId, j: CrossbarId) -> bool {
        self.axon_sets[j.0].binary_search(&k).is_ok()
    }

    pub fn enabled_mask(&self, places: usize) -> Vec<bool> {
        let mut mask = vec![false; places];
        for c in &self.enabled {
            mask[c.0] = true;
        }
        mask
    }
}

/// Re-derive the axon closure and locality from the assignment alone and
/// check every structural and capacity requirement: each neuron on exactly
/// one crossbar, residents within the bit-lines, distinct sources within the
/// word-lines, stored axon sets equal to the closure.
pub fn validate_solution(
    net: &Network,
    inv: &Inventory,
    sol: &MappingSolution,
) -> Result<(), SolutionError> {
    let fresh = MappingSolution::from_assignment(net, inv, sol.assignment.clone())?;
    if fresh.axon_sets != sol.axon_sets {
        return Err(SolutionError::InvalidSolution(
            "stored axon sets differ from the sharing closure of the assignment".into(),
        ));
    }
    if fresh.residents != sol.residents
        || fresh.enabled != sol.enabled
        || fresh.metrics != sol.metrics
    {
        return Err(SolutionError::InvalidSolution(
            "stored structure differs from recomputation".into(),
        ));
    }
    for &j in &fresh.enabled {
        let crossbar = inv.get(j);
        let residents = fresh.residents[j.0].len();
        if residents > crossbar.outputs as usize {
            return Err(SolutionError::InvalidSolution(format!(
                "crossbar {} hosts {residents} neurons with {} outputs",
                j.0, crossbar.outputs
            )));
        }
        let axons = fresh.axon_sets[j.0].len();
        if axons > crossbar.inputs as usize {
            return Err(SolutionError::InvalidSolution(format!(
                "crossbar {} consumes {axons} word-lines with {} inputs",
                j.0, crossbar.inputs
            )));
        }
    }
    Ok(())
}

/// Decode a solver assignment into a [`MappingSolution`].
///
/// The raw placement bits are checked against uniqueness and both capacity
/// families before decoding (a solver-bug guard), then source and locality
/// indicators are normalized to the closure derived from the placement.
pub fn decode_solution(
    result: &SolveResult,
    vars: &MappingVars,
    net: &Network,
    inv: &Inventory,
) -> Result<MappingSolution, SolutionError> {
    let assignment_bits = result
        .assignment
        .as_ref()
        .ok_or(SolutionError::NotFeasible(result.status))?;
    decode_assignment(assignment_bits, vars, net, inv)
}

pub fn decode_assignment(
    bits: &[bool],
    vars: &MappingVars,
    net: &Network,
    inv: &Inventory,
) -> Result<MappingSolution, SolutionError> {
    let places = vars.place_count();
    let mut assignment = Vec::with_capacity(net.node_count());
    for i in 0..net.node_count() {
        let mut chosen = None;
        for j in 0..places {
            if bits[vars.x(i, j).index()] {
                if chosen.is_some() {
                    return Err(SolutionError::InvalidAssignment(format!(
                        "neuron {i} placed on more than one crossbar"
                    )));
                }
                chosen = Some(j);
            }
        }
        match chosen {
            Some(j) => assignment.push(CrossbarId(j)),
            None => return Err(SolutionError::UnmappedNeuron(i)),
        }
    }
    let sol = MappingSolution::from_assignment(net, inv, assignment)?;
    validate_solution(net, inv, &sol)?;
    Ok(sol)
}

/// Rewrite a solution so that within every run of identical crossbar
/// instances the used instances occupy the run prefix, preserving their
/// relative order. Metrics are unaffected (identical kinds share cost) and
/// the result satisfies the lexicographic enable ordering the model builder
/// emits.
pub fn canonicalize_solution(
    net: &Network,
    inv: &Inventory,
    sol: &MappingSolution,
) -> Result<MappingSolution, SolutionError> {
    let mut remap: Vec<usize> = (0..inv.len()).collect();
    for run in inv.identical_runs() {
        let used: Vec<usize> = run
            .clone()
            .filter(|&j| !sol.residents[j].is_empty())
            .collect();
        let mut slots = run.clone();
        for &j in &used {
            remap[j] = slots.next().expect("run cannot overflow");
        }
        for j in run {
            if sol.residents[j].is_empty() {
                remap[j] = slots.next().expect("run cannot overflow");
            }
        }
    }
    let assignment = sol
        .assignment
        .iter()
        .map(|c| CrossbarId(remap[c.0]))
        .collect();
    MappingSolution::from_assignment(net, inv, assignment)
}

/// Produce the full variable assignment a solution corresponds to, for warm
/// starts: placements from the assignment, word-lines from the closure,
/// locality from residence, enables from non-emptiness.
pub fn encode_solution(sol: &MappingSolution, vars: &MappingVars, total_vars: usize) -> Vec<bool> {
    let mut bits = vec![false; total_vars];
    for (i, c) in sol.assignment.iter().enumerate() {
        bits[vars.x(i, c.0).index()] = true;
    }
    for &j in &sol.enabled {
        bits[vars.y(j.0).index()] = true;
    }
    for (j, axons) in sol.axon_sets.iter().enumerate() {
        for k in axons {
            if let Some(s) = vars.s(k.0, j) {
                bits[s.index()] = true;
            }
            if sol.assignment[k.0].0 == j {
                if let Some(b) = vars.b(k.0, j) {
                    bits[b.index()] = true;
                }
            }
        }
    }
    bits
}

/// One row of reported numbers; the single source of truth behind summary
/// tables, comparison reports, and trace rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub stage: String,
    pub nodes: usize,
    #[serde(with = "rational::serde_one")]
    pub area: BigRational,
    pub enabled_crossbars: usize,
    pub total_routes: u64,
    pub local_routes: u64,
    pub global_routes: u64,
    /// Expected inter-crossbar packets under the given spike profile.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weighted_global_packets: Option<u64>,
    /// Area of the hypothetical one-neuron-per-cheapest-crossbar solution,
    /// a solution-space bound marker for evolution plots.
    #[serde(with = "rational::serde_one")]
    pub min_area_marker: BigRational,
}

/// Validate, then recompute every reported metric from the assignment alone.
/// With a profile, expected packets are the spike-count-weighted sum over
/// crossing (source, crossbar) pairs.
pub fn evaluate(
    net: &Network,
    inv: &Inventory,
    sol: &MappingSolution,
    profile: Option<&SpikeProfile>,
    stage: &str,
) -> Result<MetricsReport, SolutionError> {
    validate_solution(net, inv, sol)
        .map_err(|e| SolutionError::InvalidSolution(format!("evaluate: {e}")))?;
    let fresh = MappingSolution::from_assignment(net, inv, sol.assignment.clone())?;
    let weighted_global_packets = match profile {
        None => None,
        Some(p) => {
            if p.counts.len() != net.node_count() {
                return Err(SolutionError::InvalidSolution(format!(
                    "profile covers {} neurons, network has {}",
                    p.counts.len(),
                    net.node_count()
                )));
            }
            let mut packets = 0u64;
            for (j, axons) in fresh.axon_sets.iter().enumerate() {
                for k in axons {
                    if fresh.assignment[k.0].0 != j {
                        packets += p.counts[k.0];
                    }
                }
            }
            Some(packets)
        }
    };
    let min_area_marker = match inv.min_cost() {
        Some(c) => c * BigRational::from_integer(net.node_count().into()),
        None => BigRational::zero(),
    };
    Ok(MetricsReport {
        stage: stage.to_string(),
        nodes: net.node_count(),
        area: fresh.metrics.area.clone(),
        enabled_crossbars: fresh.metrics.enabled_count,
        total_routes: fresh.metrics.total_routes,
        local_routes: fresh.metrics.local_routes,
        global_routes: fresh.metrics.global_routes,
        weighted_global_packets,
        min_area_marker,
    })
}

//! 0/1 linear models for neuron placement with axon sharing.
//!
//! Variables:
//! - `x[i][j]` — neuron `i` occupies an output column of crossbar `j`;
//! - `s[k][j]` — crossbar `j` consumes an input word-line for source `k`;
//! - `y[j]`    — crossbar `j` is enabled at all;
//! - `b[k][j]` — source `k` is both resident and input on `j` (local route).
//!
//! Axon sharing is the point: `s[k][j]` is the OR over receivers of `k`
//! placed on `j`, so a word-line is paid for once no matter how many
//! resident receivers share it. The constraint families are:
//! placement uniqueness (each neuron on exactly one crossbar), output
//! capacity (`sum_i x <= N_j y_j`), the two axon-demand sides that pin `s`
//! to the OR of its receivers, input capacity (`sum_k s <= A_j y_j`), and
//! an optional lexicographic enable order within runs of identical
//! instances.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, ToPrimitive};
use thiserror::Error;

use crate::graph::{Network, NeuronId};
use crate::inventory::Inventory;

/// Handle into a model's variable table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Role metadata attached to each binary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarTag {
    /// Placement of `unit` (a neuron, or a packed group in bin-packing
    /// models) onto crossbar `place`, consuming `demand` output columns.
    X { unit: u32, place: u32, demand: u32 },
    /// Source `source` occupies an input word-line of crossbar `place`.
    S { source: u32, place: u32 },
    /// Crossbar `place` is enabled.
    Y { place: u32 },
    /// Source `source` is local on crossbar `place` (resident and input).
    B { source: u32, place: u32 },
    Free,
}

/// `lower <= sum(coef * var) <= upper`, with `None` meaning unbounded.
/// No variable may appear twice.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(i64, VarId)>,
    pub lower: Option<i64>,
    pub upper: Option<i64>,
}

impl LinearConstraint {
    pub fn upper_bound(terms: Vec<(i64, VarId)>, upper: i64) -> Self {
        LinearConstraint { terms, lower: None, upper: Some(upper) }
    }

    pub fn lower_bound(terms: Vec<(i64, VarId)>, lower: i64) -> Self {
        LinearConstraint { terms, lower: Some(lower), upper: None }
    }

    pub fn equality(terms: Vec<(i64, VarId)>, value: i64) -> Self {
        LinearConstraint { terms, lower: Some(value), upper: Some(value) }
    }
}

/// A pure 0/1 linear model: binary variables, range constraints, and a
/// linear minimization objective.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IlpModel {
    tags: Vec<VarTag>,
    constraints: Vec<LinearConstraint>,
    /// Sparse minimization objective, kept sorted by variable.
    objective: Vec<(i64, VarId)>,
    /// Output capacity per place, used by the solver's area lower bound.
    place_out_caps: Vec<i64>,
    /// Adjacent units per unit (either edge direction, deduplicated), used
    /// by the solver's placement heuristic to prefer co-location.
    unit_neighbors: Vec<Vec<u32>>,
}

impl IlpModel {
    pub fn new() -> Self {
        IlpModel::default()
    }

    pub fn new_var(&mut self, tag: VarTag) -> VarId {
        let id = VarId(self.tags.len() as u32);
        self.tags.push(tag);
        id
    }

    pub fn num_vars(&self) -> usize {
        self.tags.len()
    }

    pub fn tag(&self, v: VarId) -> VarTag {
        self.tags[v.index()]
    }

    pub fn tags(&self) -> &[VarTag] {
        &self.tags
    }

    pub fn add_constraint(&mut self, c: LinearConstraint) {
        debug_assert!(
            {
                let mut vars: Vec<u32> = c.terms.iter().map(|t| t.1 .0).collect();
                vars.sort_unstable();
                vars.windows(2).all(|w| w[0] != w[1])
            },
            "duplicate variable within constraint terms"
        );
        debug_assert!(c.terms.iter().all(|t| t.1.index() < self.tags.len()));
        self.constraints.push(c);
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, mut terms: Vec<(i64, VarId)>) {
        terms.sort_by_key(|t| t.1);
        self.objective = terms;
    }

    pub fn objective(&self) -> &[(i64, VarId)] {
        &self.objective
    }

    pub fn objective_coef(&self, v: VarId) -> i64 {
        match self.objective.binary_search_by_key(&v, |t| t.1) {
            Ok(idx) => self.objective[idx].0,
            Err(_) => 0,
        }
    }

    pub fn place_out_caps(&self) -> &[i64] {
        &self.place_out_caps
    }

    pub fn set_place_out_caps(&mut self, caps: Vec<i64>) {
        self.place_out_caps = caps;
    }

    pub fn unit_neighbors(&self) -> &[Vec<u32>] {
        &self.unit_neighbors
    }

    pub fn set_unit_neighbors(&mut self, neighbors: Vec<Vec<u32>>) {
        self.unit_neighbors = neighbors;
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, assignment: &[bool]) -> i64 {
        self.objective
            .iter()
            .filter(|(_, v)| assignment[v.index()])
            .map(|(c, _)| c)
            .sum()
    }

    /// True when `assignment` satisfies every constraint.
    pub fn check_assignment(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.num_vars()
            && self.constraints.iter().all(|c| {
                let sum: i64 = c
                    .terms
                    .iter()
                    .filter(|(_, v)| assignment[v.index()])
                    .map(|(coef, _)| coef)
                    .sum();
                c.lower.map_or(true, |l| sum >= l) && c.upper.map_or(true, |u| sum <= u)
            })
    }

    pub fn var_name(&self, v: VarId) -> String {
        match self.tags[v.index()] {
            VarTag::X { unit, place, .. } => format!("x_{unit}_{place}"),
            VarTag::S { source, place } => format!("s_{source}_{place}"),
            VarTag::Y { place } => format!("y_{place}"),
            VarTag::B { source, place } => format!("b_{source}_{place}"),
            VarTag::Free => format!("v_{}", v.0),
        }
    }

    /// LP-style text dump (minimize / subject-to / binaries sections),
    /// byte-stable across runs for identical models.
    pub fn to_lp_string(&self) -> String {
        use std::fmt::Write;

        fn push_terms(out: &mut String, terms: &[(i64, VarId)], model: &IlpModel) {
            for &(coef, var) in terms {
                let sign = if coef < 0 { '-' } else { '+' };
                let mag = coef.unsigned_abs();
                if mag == 1 {
                    let _ = write!(out, " {sign} {}", model.var_name(var));
                } else {
                    let _ = write!(out, " {sign} {mag} {}", model.var_name(var));
                }
            }
        }

        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        if self.objective.is_empty() {
            out.push_str(" 0");
        } else {
            push_terms(&mut out, &self.objective, self);
        }
        out.push_str("\nSubject To\n");
        for (idx, c) in self.constraints.iter().enumerate() {
            match (c.lower, c.upper) {
                (Some(l), Some(u)) if l == u => {
                    let _ = write!(out, " c{idx}:");
                    push_terms(&mut out, &c.terms, self);
                    let _ = writeln!(out, " = {l}");
                }
                (lower, upper) => {
                    if let Some(u) = upper {
                        let _ = write!(out, " c{idx}_u:");
                        push_terms(&mut out, &c.terms, self);
                        let _ = writeln!(out, " <= {u}");
                    }
                    if let Some(l) = lower {
                        let _ = write!(out, " c{idx}_l:");
                        push_terms(&mut out, &c.terms, self);
                        let _ = writeln!(out, " >= {l}");
                    }
                }
            }
        }
        out.push_str("Binaries\n");
        for v in 0..self.num_vars() {
            out.push(' ');
            out.push_str(&self.var_name(VarId(v as u32)));
        }
        out.push_str("\nEnd\n");
        out
    }
}

/// Variable handles for one placement model.
#[derive(Debug, Clone)]
pub struct MappingVars {
    neurons: usize,
    places: usize,
    x: Vec<VarId>,
    y: Vec<VarId>,
    /// Source slot per neuron; `None` for neurons with no outgoing edges.
    source_slot: Vec<Option<usize>>,
    /// Neuron per source slot.
    slot_neuron: Vec<usize>,
    s: Vec<VarId>,
    /// Locality variables, filled per-slot by the global-route objective;
    /// slots without an objective term stay `None`.
    b: Vec<Option<VarId>>,
}

impl MappingVars {
    pub fn neuron_count(&self) -> usize {
        self.neurons
    }

    pub fn place_count(&self) -> usize {
        self.places
    }

    pub fn x(&self, neuron: usize, place: usize) -> VarId {
        self.x[neuron * self.places + place]
    }

    pub fn y(&self, place: usize) -> VarId {
        self.y[place]
    }

    pub fn s(&self, source: usize, place: usize) -> Option<VarId> {
        self.source_slot[source].map(|slot| self.s[slot * self.places + place])
    }

    pub fn b(&self, source: usize, place: usize) -> Option<VarId> {
        self.source_slot[source].and_then(|slot| self.b[slot * self.places + place])
    }

    pub fn sources(&self) -> &[usize] {
        &self.slot_neuron
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("inventory has no crossbar instances")]
    EmptyInventory,
    #[error(
        "neuron {neuron} has fan-in {fan_in}, above the largest input capacity {max_inputs}; \
         no placement can exist"
    )]
    InfeasibleByFanIn {
        neuron: usize,
        fan_in: usize,
        max_inputs: u32,
    },
    #[error("model would need {got} variables, above the limit of {limit}")]
    ModelTooLarge { got: usize, limit: usize },
    #[error("cost {cost} cannot be scaled to an integer within {limit} (scale {scale})")]
    NonIntegerizableCost {
        cost: String,
        scale: String,
        limit: i64,
    },
    #[error("negative weight {weight} for neuron {neuron}")]
    NegativeWeight { neuron: usize, weight: i64 },
    #[error("weight list has {got} entries for {expected} neurons")]
    WeightLengthMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone)]
pub struct ModelOptions {
    /// Order enables lexicographically within runs of identical instances.
    /// Cuts factorial symmetry; disable for a formulation-faithful model.
    pub symmetry_break: bool,
    pub max_variables: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            symmetry_break: true,
            max_variables: 2_000_000,
        }
    }
}

/// Build the placement feasibility model for `net` over `inv`.
///
/// Input word-line variables exist only for neurons with at least one
/// outgoing edge; the axon-demand upper side already forces every other
/// source indicator to zero, so they are elided. Edge products with the
/// connectivity matrix are folded at build time, keeping every constraint
/// linear.
pub fn build_mapping_model(
    net: &Network,
    inv: &Inventory,
    opts: &ModelOptions,
) -> Result<(IlpModel, MappingVars), ModelError> {
    if inv.is_empty() && net.node_count() > 0 {
        return Err(ModelError::EmptyInventory);
    }
    let max_inputs = inv.max_inputs();
    for i in 0..net.node_count() {
        let fan_in = net.fan_in(NeuronId(i));
        if fan_in > max_inputs as usize {
            return Err(ModelError::InfeasibleByFanIn {
                neuron: i,
                fan_in,
                max_inputs,
            });
        }
    }

    let n = net.node_count();
    let places = inv.len();
    let slot_neuron: Vec<usize> = net.sources().iter().map(|s| s.0).collect();
    let mut source_slot = vec![None; n];
    for (slot, &k) in slot_neuron.iter().enumerate() {
        source_slot[k] = Some(slot);
    }
    let var_estimate = places + n * places + slot_neuron.len() * places;
    if var_estimate > opts.max_variables {
        return Err(ModelError::ModelTooLarge {
            got: var_estimate,
            limit: opts.max_variables,
        });
    }

    let mut model = IlpModel::new();
    let y: Vec<VarId> = (0..places)
        .map(|j| model.new_var(VarTag::Y { place: j as u32 }))
        .collect();
    let mut x = Vec::with_capacity(n * places);
    for i in 0..n {
        for j in 0..places {
            x.push(model.new_var(VarTag::X {
                unit: i as u32,
                place: j as u32,
                demand: 1,
            }));
        }
    }
    let mut s = Vec::with_capacity(slot_neuron.len() * places);
    for &k in &slot_neuron {
        for j in 0..places {
            s.push(model.new_var(VarTag::S {
                source: k as u32,
                place: j as u32,
            }));
        }
    }
    let vars = MappingVars {
        neurons: n,
        places,
        x,
        y,
        source_slot,
        slot_neuron,
        s,
        b: vec![None; net.sources().len() * places],
    };

    // Placement uniqueness: each neuron occupies exactly one crossbar.
    for i in 0..n {
        let terms = (0..places).map(|j| (1, vars.x(i, j))).collect();
        model.add_constraint(LinearConstraint::equality(terms, 1));
    }
    // Output capacity: residents fit the bit-lines of an enabled crossbar.
    for (j, crossbar) in inv.iter().enumerate() {
        let mut terms: Vec<(i64, VarId)> = (0..n).map(|i| (1, vars.x(i, j))).collect();
        terms.push((-(crossbar.outputs as i64), vars.y(j)));
        model.add_constraint(LinearConstraint::upper_bound(terms, 0));
    }
    // Axon demand, upper side: a word-line for source k exists on j only if
    // some receiver of k resides on j.
    for &k in vars.sources() {
        for j in 0..places {
            let mut terms = vec![(1, vars.s(k, j).unwrap())];
            for i in net.successors(NeuronId(k)) {
                terms.push((-1, vars.x(i.0, j)));
            }
            model.add_constraint(LinearConstraint::upper_bound(terms, 0));
        }
    }
    // Axon demand, lower side: placing any receiver of k on j forces the
    // word-line. One constraint per edge per crossbar.
    for edge in net.edges() {
        let (k, i) = (edge.pre.0, edge.post.0);
        for j in 0..places {
            let terms = vec![(1, vars.s(k, j).unwrap()), (-1, vars.x(i, j))];
            model.add_constraint(LinearConstraint::lower_bound(terms, 0));
        }
    }
    // Input capacity: distinct word-lines fit an enabled crossbar.
    for (j, crossbar) in inv.iter().enumerate() {
        let mut terms: Vec<(i64, VarId)> = vars
            .sources()
            .iter()
            .map(|&k| (1, vars.s(k, j).unwrap()))
            .collect();
        terms.push((-(crossbar.inputs as i64), vars.y(j)));
        model.add_constraint(LinearConstraint::upper_bound(terms, 0));
    }
    if opts.symmetry_break {
        for run in inv.identical_runs() {
            for j in run.start..run.end.saturating_sub(1) {
                let terms = vec![(1, vars.y(j)), (-1, vars.y(j + 1))];
                model.add_constraint(LinearConstraint::lower_bound(terms, 0));
            }
        }
    }

    model.set_place_out_caps(inv.iter().map(|c| c.outputs as i64).collect());
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for edge in net.edges() {
        if edge.pre != edge.post {
            neighbors[edge.pre.0].push(edge.post.0 as u32);
            neighbors[edge.post.0].push(edge.pre.0 as u32);
        }
    }
    for list in neighbors.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    model.set_unit_neighbors(neighbors);
    Ok((model, vars))
}

/// Scale a list of positive rational costs to integers by their least
/// common denominator.
pub fn integerize_costs(
    costs: &[BigRational],
    limit: i64,
) -> Result<Vec<i64>, ModelError> {
    let mut scale = BigInt::one();
    for c in costs {
        scale = scale.lcm(c.denom());
    }
    let fail = |cost: &BigRational| ModelError::NonIntegerizableCost {
        cost: crate::rational::display(cost),
        scale: scale.to_string(),
        limit,
    };
    costs
        .iter()
        .map(|c| {
            let scaled = c * BigRational::from_integer(scale.clone());
            debug_assert!(scaled.is_integer());
            let v = scaled.numer().to_i64().ok_or_else(|| fail(c))?;
            if v <= 0 || v > limit {
                return Err(fail(c));
            }
            Ok(v)
        })
        .collect()
}

pub const COST_SCALE_LIMIT: i64 = 1 << 40;

/// Minimize the cost-weighted count of enabled crossbars.
pub fn add_area_objective(
    model: &mut IlpModel,
    vars: &MappingVars,
    inv: &Inventory,
) -> Result<(), ModelError> {
    let costs: Vec<BigRational> = inv.iter().map(|c| c.cost.clone()).collect();
    let scaled = integerize_costs(&costs, COST_SCALE_LIMIT)?;
    let terms = scaled
        .into_iter()
        .enumerate()
        .map(|(j, c)| (c, vars.y(j)))
        .collect();
    model.set_objective(terms);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteMode {
    /// Count every consumed word-line (local and global).
    TotalRoutes,
    /// Count only word-lines whose source lives on another crossbar.
    GlobalRoutes,
}

/// Minimize route counts, optionally weighted by per-source spike counts.
///
/// `GlobalRoutes` introduces the locality variables with their three
/// linearization constraints (`b >= s + x - 1`, `b <= s`, `b <= x`) and
/// minimizes `sum (s - b)`. With weights, terms whose source weight is zero
/// are omitted entirely, locality variables included; silent sources cannot
/// influence the objective, and dropping them shrinks the search.
pub fn add_route_objective(
    model: &mut IlpModel,
    vars: &mut MappingVars,
    mode: RouteMode,
    weights: Option<&[i64]>,
) -> Result<(), ModelError> {
    if let Some(w) = weights {
        if w.len() != vars.neuron_count() {
            return Err(ModelError::WeightLengthMismatch {
                got: w.len(),
                expected: vars.neuron_count(),
            });
        }
        if let Some((neuron, &weight)) = w.iter().enumerate().find(|(_, &w)| w < 0) {
            return Err(ModelError::NegativeWeight { neuron, weight });
        }
    }

    let places = vars.place_count();
    let slots: Vec<usize> = vars.slot_neuron.clone();
    let mut terms = Vec::new();
    for (slot, &k) in slots.iter().enumerate() {
        let w = weights.map_or(1, |w| w[k]);
        if w == 0 {
            continue;
        }
        for j in 0..places {
            let s_var = vars.s[slot * places + j];
            terms.push((w, s_var));
            if mode == RouteMode::GlobalRoutes {
                let b_var = match vars.b[slot * places + j] {
                    Some(b) => b,
                    None => {
                        let b = model.new_var(VarTag::B {
                            source: k as u32,
                            place: j as u32,
                        });
                        let x_var = vars.x(k, j);
                        model.add_constraint(LinearConstraint::lower_bound(
                            vec![(1, b), (-1, s_var), (-1, x_var)],
                            -1,
                        ));
                        model.add_constraint(LinearConstraint::upper_bound(
                            vec![(1, b), (-1, s_var)],
                            0,
                        ));
                        model.add_constraint(LinearConstraint::upper_bound(
                            vec![(1, b), (-1, x_var)],
                            0,
                        ));
                        vars.b[slot * places + j] = Some(b);
                        b
                    }
                };
                terms.push((-w, b_var));
            }
        }
    }
    model.set_objective(terms);
    Ok(())
}

/// Pin every crossbar outside `enabled` to disabled. Crossbars inside the
/// set stay free, so a later stage may still empty them.
pub fn freeze_enabled(model: &mut IlpModel, vars: &MappingVars, enabled: &[bool]) {
    assert_eq!(enabled.len(), vars.place_count());
    for (j, &keep) in enabled.iter().enumerate() {
        if !keep {
            model.add_constraint(LinearConstraint::equality(vec![(1, vars.y(j))], 0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{load_network, Edge, Network};
    use crate::inventory::{expand_inventory, CrossbarKind};
    use crate::rational::from_i64;

    fn chain(n: usize) -> Network {
        let edges = (0..n - 1)
            .map(|i| Edge {
                pre: NeuronId(i),
                post: NeuronId(i + 1),
                weight: from_i64(1),
                delay: 0,
            })
            .collect();
        Network::new(n, edges, vec![from_i64(1); n], vec![], vec![]).unwrap()
    }

    fn shared_source_net() -> Network {
        load_network(
            br#"{"nodes": 5, "edges": [
                {"pre": 0, "post": 2}, {"pre": 1, "post": 3}, {"pre": 1, "post": 4}
            ]}"#,
        )
        .unwrap()
    }

    fn inv(kinds: &[(u32, u32)], caps: &[u32]) -> Inventory {
        let kinds: Vec<CrossbarKind> =
            kinds.iter().map(|&(a, n)| CrossbarKind::new(a, n)).collect();
        expand_inventory(&kinds, caps).unwrap()
    }

    #[test]
    fn single_neuron_no_edges() {
        let net = load_network(br#"{"nodes": 1, "edges": []}"#).unwrap();
        let inventory = inv(&[(1, 1)], &[1]);
        let (model, vars) = build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        // One y, one x, no s variables.
        assert_eq!(model.num_vars(), 2);
        assert!(vars.s(0, 0).is_none());
        // Placement forces the crossbar on through the capacity row.
        assert!(model.check_assignment(&[true, true]));
        assert!(!model.check_assignment(&[false, true]));
    }

    #[test]
    fn fan_in_precheck_names_neuron() {
        let star: Vec<Edge> = (0..5)
            .map(|i| Edge {
                pre: NeuronId(i),
                post: NeuronId(5),
                weight: from_i64(1),
                delay: 0,
            })
            .collect();
        let net = Network::new(6, star, vec![from_i64(1); 6], vec![], vec![]).unwrap();
        let inventory = inv(&[(4, 8)], &[2]);
        let err = build_mapping_model(&net, &inventory, &Default::default()).unwrap_err();
        match err {
            ModelError::InfeasibleByFanIn { neuron, fan_in, max_inputs } => {
                assert_eq!((neuron, fan_in, max_inputs), (5, 5, 4));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn shared_axon_is_counted_once() {
        // Residents {2,3,4} on a 2-input 3-output crossbar share source 1;
        // the axon set is {0, 1} and fits the two word-lines.
        let net = shared_source_net();
        let inventory = inv(&[(2, 3), (1, 2)], &[1, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        for i in [2, 3, 4] {
            model.add_constraint(LinearConstraint::equality(vec![(1, vars.x(i, 0))], 1));
        }
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Optimal);
        let assignment = result.assignment.unwrap();
        assert!(assignment[vars.s(0, 0).unwrap().index()]);
        assert!(assignment[vars.s(1, 0).unwrap().index()]);
        let axons: usize = (0..5)
            .filter_map(|k| vars.s(k, 0))
            .filter(|v| assignment[v.index()])
            .count();
        assert_eq!(axons, 2);
    }

    #[test]
    fn chain_on_single_two_output_crossbar_is_infeasible() {
        let net = chain(3);
        let inventory = inv(&[(4, 2)], &[1]);
        let (model, _) = build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        let oracle = crate::solver::brute_force(&model).unwrap();
        assert_eq!(oracle.status, crate::solver::SolveStatus::Infeasible);
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Infeasible);
    }

    #[test]
    fn area_objective_prefers_cheap_crossbar() {
        let net = load_network(br#"{"nodes": 2, "edges": [{"pre": 0, "post": 1}]}"#).unwrap();
        let kinds = vec![
            CrossbarKind::new(16, 16),
            CrossbarKind::new(4, 4).with_cost(from_i64(16)),
        ];
        let inventory = expand_inventory(&kinds, &[1, 1]).unwrap();
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Optimal);
        assert_eq!(result.objective, Some(16));
    }

    #[test]
    fn area_objective_on_shared_source_net() {
        // Five neurons over {4x4 x2, 8x4 x1}: the 8x4 offers only 4 outputs,
        // so two 4x4s at cost 16 each win.
        let net = shared_source_net();
        let inventory = inv(&[(4, 4), (8, 4)], &[2, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let oracle = crate::solver::brute_force(&model).unwrap();
        assert_eq!(oracle.status, crate::solver::SolveStatus::Optimal);
        assert_eq!(oracle.objective, Some(32));
    }

    #[test]
    fn empty_network_has_zero_objective() {
        let net = load_network(br#"{"nodes": 0, "edges": []}"#).unwrap();
        let inventory = inv(&[(4, 4)], &[2]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Optimal);
        assert_eq!(result.objective, Some(0));
    }

    #[test]
    fn fractional_costs_are_scaled() {
        let scaled = integerize_costs(
            &[
                crate::rational::parse("3/2").unwrap(),
                crate::rational::parse("5/6").unwrap(),
            ],
            COST_SCALE_LIMIT,
        )
        .unwrap();
        assert_eq!(scaled, vec![9, 5]);
    }

    #[test]
    fn unscalable_costs_are_rejected() {
        // 1/3 and 1/7 share the denominator 21; 1/3 scales to 7 > 5.
        let err = integerize_costs(
            &[
                crate::rational::parse("1/3").unwrap(),
                crate::rational::parse("1/7").unwrap(),
            ],
            5,
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NonIntegerizableCost { .. }));
        let err = integerize_costs(&[from_i64(9)], 8).unwrap_err();
        assert!(matches!(err, ModelError::NonIntegerizableCost { .. }));
    }

    fn forced_split_routes(mode: RouteMode, weights: Option<&[i64]>) -> i64 {
        // Chain 0 -> 1 -> 2 forced into {0,1} | {2}.
        let net = chain(3);
        let inventory = inv(&[(4, 2)], &[2]);
        let (mut model, mut vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        add_route_objective(&mut model, &mut vars, mode, weights).unwrap();
        for (i, j) in [(0, 0), (1, 0), (2, 1)] {
            model.add_constraint(LinearConstraint::equality(vec![(1, vars.x(i, j))], 1));
        }
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Optimal);
        result.objective.unwrap()
    }

    #[test]
    fn route_objectives_on_forced_split() {
        assert_eq!(forced_split_routes(RouteMode::TotalRoutes, None), 2);
        assert_eq!(forced_split_routes(RouteMode::GlobalRoutes, None), 1);
        assert_eq!(
            forced_split_routes(RouteMode::GlobalRoutes, Some(&[5, 3, 0])),
            3
        );
    }

    #[test]
    fn colocated_placement_has_zero_global_routes() {
        let net = chain(3);
        let inventory = inv(&[(4, 4)], &[2]);
        let (mut model, mut vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        add_route_objective(&mut model, &mut vars, RouteMode::GlobalRoutes, None).unwrap();
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Optimal);
        assert_eq!(result.objective, Some(0));
    }

    #[test]
    fn zero_weight_terms_are_elided() {
        let net = chain(3);
        let inventory = inv(&[(4, 2)], &[2]);
        let (mut model, mut vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        let before = model.num_vars();
        add_route_objective(
            &mut model,
            &mut vars,
            RouteMode::GlobalRoutes,
            Some(&[0, 3, 0]),
        )
        .unwrap();
        // Only source 1 gets locality variables (source 0 has weight 0,
        // neuron 2 is not a source).
        assert_eq!(model.num_vars(), before + inventory.len());
        assert!(model
            .objective()
            .iter()
            .all(|(_, v)| matches!(model.tag(*v), VarTag::S { source: 1, .. } | VarTag::B { source: 1, .. })));
    }

    #[test]
    fn negative_weight_rejected() {
        let net = chain(2);
        let inventory = inv(&[(2, 2)], &[1]);
        let (mut model, mut vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        let err = add_route_objective(
            &mut model,
            &mut vars,
            RouteMode::GlobalRoutes,
            Some(&[1, -2]),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::NegativeWeight { neuron: 1, weight: -2 }));
    }

    #[test]
    fn freeze_to_empty_set_is_infeasible() {
        let net = chain(2);
        let inventory = inv(&[(2, 2)], &[1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &Default::default()).unwrap();
        freeze_enabled(&mut model, &vars, &[false]);
        let result = crate::solver::solve(&model, &Default::default(), None);
        assert_eq!(result.status, crate::solver::SolveStatus::Infeasible);
        assert!(result.work_units >= 1);
    }

    #[test]
    fn freeze_to_all_is_a_no_op() {
        let net = shared_source_net();
        let inventory = inv(&[(4, 4)], &[2]);
        let build = |frozen: bool| {
            let (mut model, vars) =
                build_mapping_model(&net, &inventory, &Default::default()).unwrap();
            add_area_objective(&mut model, &vars, &inventory).unwrap();
            if frozen {
                freeze_enabled(&mut model, &vars, &[true, true]);
            }
            crate::solver::solve(&model, &Default::default(), None).objective
        };
        assert_eq!(build(false), build(true));
    }

    #[test]
    fn model_construction_is_deterministic() {
        let net = shared_source_net();
        let inventory = inv(&[(4, 4), (8, 4)], &[2, 1]);
        let build = || {
            let (mut model, mut vars) =
                build_mapping_model(&net, &inventory, &Default::default()).unwrap();
            add_route_objective(&mut model, &mut vars, RouteMode::GlobalRoutes, None).unwrap();
            model
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn lp_dump_is_byte_stable() {
        let net = chain(3);
        let inventory = inv(&[(4, 2)], &[2]);
        let dump = || {
            let (mut model, vars) =
                build_mapping_model(&net, &inventory, &Default::default()).unwrap();
            add_area_objective(&mut model, &vars, &inventory).unwrap();
            model.to_lp_string()
        };
        let text = dump();
        assert_eq!(text, dump());
        assert!(text.starts_with("Minimize\n obj: + 8 y_0 + 8 y_1\n"));
        assert!(text.contains("Subject To\n c0: + x_0_0 + x_0_1 = 1\n"));
        assert!(text.contains("Binaries\n y_0 y_1 x_0_0"));
        assert!(text.ends_with("End\n"));
    }
}

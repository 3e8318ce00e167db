//! Packing baseline that groups neurons into minimally connected components
//! and bin-packs the groups by their summed dimension demands.
//!
//! The flaw is deliberate and is the point of the comparison: when two
//! groups land on the same crossbar, their input demands are added, so a
//! source shared across groups is paid for once per group instead of once
//! per crossbar. Honest metrics are always recomputed afterwards with
//! proper per-crossbar deduplication.

use thiserror::Error;

use crate::graph::{Network, NeuronId};
use crate::ilp::{IlpModel, LinearConstraint, ModelError, VarTag};
use crate::inventory::{CrossbarId, Inventory};
use crate::mapping::{MappingSolution, SolutionError};
use crate::solver::{solve, SolveLimits, SolveStatus};

/// One packed unit: a connected group of co-located neurons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mcc {
    /// Ascending member neurons; non-empty, disjoint across groups.
    pub members: Vec<NeuronId>,
    /// Output columns the group needs: one per member.
    pub output_demand: u32,
    /// Input word-lines the group claims: distinct sources feeding any
    /// member, deduplicated within this group only.
    pub input_demand: u32,
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(
        "group of {members} neurons (starting at {first}) needs {outputs} outputs and \
         {inputs} inputs; no crossbar kind fits it"
    )]
    InfeasibleMcc {
        first: usize,
        members: usize,
        outputs: u32,
        inputs: u32,
    },
    #[error("packing is infeasible: {0}")]
    PackInfeasible(String),
    #[error("no crossbar can host neuron {0} in first-fit construction")]
    NoFit(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

fn demands(net: &Network, members: &[NeuronId]) -> (u32, u32) {
    let mut sources: Vec<usize> = members
        .iter()
        .flat_map(|&m| net.predecessors(m).map(|p| p.0))
        .collect();
    sources.sort_unstable();
    sources.dedup();
    (members.len() as u32, sources.len() as u32)
}

/// Groups are the connected components (in the undirected sense) of the
/// network restricted to neurons sharing a crossbar in `initial`. Ordered
/// by smallest member.
pub fn form_mccs(net: &Network, initial: &MappingSolution) -> Vec<Mcc> {
    let n = net.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for e in net.edges() {
        if initial.assignment[e.pre.0] == initial.assignment[e.post.0] {
            let (a, b) = (find(&mut parent, e.pre.0), find(&mut parent, e.post.0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<NeuronId>> = Default::default();
    for v in 0..n {
        let root = find(&mut parent, v);
        groups.entry(root).or_default().push(NeuronId(v));
    }
    groups
        .into_values()
        .map(|members| {
            let (output_demand, input_demand) = demands(net, &members);
            Mcc {
                members,
                output_demand,
                input_demand,
            }
        })
        .collect()
}

/// One group per neuron; the degenerate seeding kept for demonstrations.
pub fn singleton_mccs(net: &Network) -> Vec<Mcc> {
    (0..net.node_count())
        .map(|v| {
            let members = vec![NeuronId(v)];
            let (output_demand, input_demand) = demands(net, &members);
            Mcc {
                members,
                output_demand,
                input_demand,
            }
        })
        .collect()
}

/// Build the group-level packing model: every group on exactly one
/// crossbar, summed output demands within bit-lines, summed input demands
/// within word-lines (the deliberate no-dedup flaw), area objective.
pub fn build_pack_model(
    mccs: &[Mcc],
    inv: &Inventory,
) -> Result<(IlpModel, Vec<Vec<crate::ilp::VarId>>), BaselineError> {
    for m in mccs {
        let fits = inv
            .iter()
            .any(|c| m.output_demand <= c.outputs && m.input_demand <= c.inputs);
        if !fits {
            return Err(BaselineError::InfeasibleMcc {
                first: m.members[0].0,
                members: m.members.len(),
                outputs: m.output_demand,
                inputs: m.input_demand,
            });
        }
    }
    let places = inv.len();
    let mut model = IlpModel::new();
    let y: Vec<_> = (0..places)
        .map(|j| model.new_var(VarTag::Y { place: j as u32 }))
        .collect();
    let mut u = Vec::with_capacity(mccs.len());
    for (m, mcc) in mccs.iter().enumerate() {
        let row: Vec<_> = (0..places)
            .map(|j| {
                model.new_var(VarTag::X {
                    unit: m as u32,
                    place: j as u32,
                    demand: mcc.output_demand,
                })
            })
            .collect();
        u.push(row);
    }
    for row in &u {
        let terms = row.iter().map(|&v| (1, v)).collect();
        model.add_constraint(LinearConstraint::equality(terms, 1));
    }
    for (j, crossbar) in inv.iter().enumerate() {
        let mut out_terms: Vec<(i64, crate::ilp::VarId)> = mccs
            .iter()
            .enumerate()
            .map(|(m, mcc)| (mcc.output_demand as i64, u[m][j]))
            .collect();
        out_terms.push((-(crossbar.outputs as i64), y[j]));
        model.add_constraint(LinearConstraint::upper_bound(out_terms, 0));

        let mut in_terms: Vec<(i64, crate::ilp::VarId)> = mccs
            .iter()
            .enumerate()
            .filter(|(_, mcc)| mcc.input_demand > 0)
            .map(|(m, mcc)| (mcc.input_demand as i64, u[m][j]))
            .collect();
        in_terms.push((-(crossbar.inputs as i64), y[j]));
        model.add_constraint(LinearConstraint::upper_bound(in_terms, 0));
    }
    for run in inv.identical_runs() {
        for j in run.start..run.end.saturating_sub(1) {
            model.add_constraint(LinearConstraint::lower_bound(
                vec![(1, y[j]), (-1, y[j + 1])],
                0,
            ));
        }
    }
    model.set_place_out_caps(inv.iter().map(|c| c.outputs as i64).collect());
    Ok((model, u))
}

/// Result of one packing round.
pub struct PackOutcome {
    pub solution: MappingSolution,
    pub status: SolveStatus,
    pub work_units: u64,
}

/// Pack groups into crossbars minimizing area under the flawed summed
/// demands, then decode to a neuron-level solution whose metrics are
/// recomputed with proper deduplication.
pub fn pack_mccs(
    net: &Network,
    mccs: &[Mcc],
    inv: &Inventory,
    limits: &SolveLimits,
) -> Result<PackOutcome, BaselineError> {
    let (mut model, u) = build_pack_model(mccs, inv)?;
    let dummy_vars_inv = inv;
    add_area_objective_for_pack(&mut model, dummy_vars_inv)?;
    let result = solve(&model, limits, None);
    match result.status {
        SolveStatus::Optimal | SolveStatus::Feasible => {
            let bits = result.assignment.as_ref().expect("feasible has assignment");
            let mut assignment = vec![CrossbarId(0); net.node_count()];
            for (m, mcc) in mccs.iter().enumerate() {
                let mut chosen = None;
                for (j, &var) in u[m].iter().enumerate() {
                    if bits[var.index()] {
                        chosen = Some(j);
                        break;
                    }
                }
                let j = chosen.expect("placement uniqueness guarantees a crossbar");
                for member in &mcc.members {
                    assignment[member.0] = CrossbarId(j);
                }
            }
            let solution = MappingSolution::from_assignment(net, inv, assignment)?;
            Ok(PackOutcome {
                solution,
                status: result.status,
                work_units: result.work_units,
            })
        }
        SolveStatus::Infeasible => Err(BaselineError::PackInfeasible(
            "no arrangement of the groups fits the inventory".into(),
        )),
        SolveStatus::Unknown => Err(BaselineError::PackInfeasible(format!(
            "no packing found within {} work units",
            result.work_units
        ))),
    }
}

fn add_area_objective_for_pack(
    model: &mut IlpModel,
    inv: &Inventory,
) -> Result<(), ModelError> {
    let costs: Vec<_> = inv.iter().map(|c| c.cost.clone()).collect();
    let scaled = crate::ilp::integerize_costs(&costs, crate::ilp::COST_SCALE_LIMIT)?;
    let terms = model
        .tags()
        .iter()
        .enumerate()
        .filter_map(|(v, tag)| match tag {
            VarTag::Y { place } => Some((scaled[*place as usize], crate::ilp::VarId(v as u32))),
            _ => None,
        })
        .collect();
    model.set_objective(terms);
    Ok(())
}

/// First-fit-decreasing by fan-in into the largest-output kinds first; the
/// baseline's initial co-location. Uses true (deduplicated) axon demands so
/// the seed is always a valid placement.
pub fn first_fit_decreasing(net: &Network, inv: &Inventory) -> Result<MappingSolution, BaselineError> {
    let mut order: Vec<usize> = (0..net.node_count()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(net.fan_in(NeuronId(i))), i));
    let mut place_order: Vec<usize> = (0..inv.len()).collect();
    place_order.sort_by_key(|&j| {
        let c = inv.get(CrossbarId(j));
        (std::cmp::Reverse(c.outputs), std::cmp::Reverse(c.inputs), j)
    });

    let mut residents: Vec<Vec<usize>> = vec![Vec::new(); inv.len()];
    let mut axons: Vec<std::collections::BTreeSet<usize>> =
        vec![Default::default(); inv.len()];
    let mut assignment = vec![None; net.node_count()];
    for &i in &order {
        let preds: Vec<usize> = net.predecessors(NeuronId(i)).map(|p| p.0).collect();
        let mut placed = false;
        for &j in &place_order {
            let c = inv.get(CrossbarId(j));
            if residents[j].len() + 1 > c.outputs as usize {
                continue;
            }
            let new_axons = preds.iter().filter(|p| !axons[j].contains(p)).count();
            if axons[j].len() + new_axons > c.inputs as usize {
                continue;
            }
            residents[j].push(i);
            axons[j].extend(preds.iter().copied());
            assignment[i] = Some(CrossbarId(j));
            placed = true;
            break;
        }
        if !placed {
            return Err(BaselineError::NoFit(i));
        }
    }
    let assignment = assignment.into_iter().map(Option::unwrap).collect();
    Ok(MappingSolution::from_assignment(net, inv, assignment)?)
}

/// Outcome of the iterated baseline.
pub struct SpikehardOutcome {
    pub solution: MappingSolution,
    pub rounds: usize,
    pub work_units: u64,
    /// Solution after each packing round, with cumulative work.
    pub history: Vec<(u64, MappingSolution)>,
}

/// Apply group formation and packing repeatedly until the area stops
/// improving or the grouping reaches a fixed point. The work budget is
/// shared across rounds.
pub fn iterate_spikehard(
    net: &Network,
    inv: &Inventory,
    limits: &SolveLimits,
) -> Result<SpikehardOutcome, BaselineError> {
    let mut current = first_fit_decreasing(net, inv)?;
    let mut rounds = 0usize;
    let mut work_used = 0u64;
    let mut history = Vec::new();
    let mut previous_groups: Option<Vec<Mcc>> = None;

    while rounds < net.node_count().max(1) {
        let groups = form_mccs(net, &current);
        if previous_groups.as_ref() == Some(&groups) {
            break; // same grouping packs to the same result
        }
        let round_limits = SolveLimits {
            max_work_units: limits
                .max_work_units
                .map(|cap| cap.saturating_sub(work_used)),
            max_wall_seconds: limits.max_wall_seconds,
            target_objective: None,
        };
        if round_limits.max_work_units == Some(0) {
            break;
        }
        let packed = match pack_mccs(net, &groups, inv, &round_limits) {
            Ok(outcome) => outcome,
            Err(BaselineError::PackInfeasible(_)) if rounds > 0 => break,
            Err(e) => return Err(e),
        };
        rounds += 1;
        work_used += packed.work_units;
        previous_groups = Some(groups);
        let improved = packed.solution.metrics.area < current.metrics.area;
        if improved {
            current = packed.solution;
            history.push((work_used, current.clone()));
        } else {
            history.push((work_used, packed.solution));
            break;
        }
    }
    if history.is_empty() {
        history.push((work_used, current.clone()));
    }
    Ok(SpikehardOutcome {
        solution: current,
        rounds: rounds.max(1),
        work_units: work_used,
        history,
    })
}

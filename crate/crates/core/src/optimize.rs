//! Stage pipelines: area, then route count over the frozen area, then
//! profile-weighted packets over a frozen base.
//!
//! Each stage records every improving solution the solver reports as a
//! trace row, so area/route evolution can be plotted downstream. Later
//! stages freeze the enabled-crossbar set of their base solution (area can
//! only shrink) and warm-start from it (the objective can only improve).

use serde::Serialize;
use thiserror::Error;

use crate::graph::Network;
use crate::ilp::{
    add_area_objective, add_route_objective, build_mapping_model, freeze_enabled, ModelError,
    ModelOptions, RouteMode,
};
use crate::inventory::Inventory;
use crate::mapping::{
    canonicalize_solution, decode_assignment, encode_solution, evaluate, MappingSolution,
    MetricsReport, SolutionError,
};
use crate::sim::SpikeProfile;
use crate::solver::{solve_with_start, SolveLimits, SolveStatus};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} stage is infeasible: {detail}")]
    Infeasible { stage: String, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solution(#[from] SolutionError),
}

/// One incumbent of one stage.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub work_units: u64,
    pub objective: i64,
    pub metrics: MetricsReport,
    /// Snapshot of the neuron-to-crossbar assignment.
    pub assignment: Vec<usize>,
}

/// Chronological incumbents of a stage; objectives never increase.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineTrace {
    pub stage: String,
    pub rows: Vec<TraceRow>,
}

impl PipelineTrace {
    /// CSV with one incumbent per row:
    /// `stage,work_units,area,total_routes,global_routes,weighted_packets`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("stage,work_units,area,total_routes,global_routes,weighted_packets\n");
        for row in &self.rows {
            let weighted = row
                .metrics
                .weighted_global_packets
                .map(|w| w.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.stage,
                row.work_units,
                crate::rational::display(&row.metrics.area),
                row.metrics.total_routes,
                row.metrics.global_routes,
                weighted,
            ));
        }
        out
    }
}

/// Outcome of one optimization stage.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub solution: MappingSolution,
    pub trace: PipelineTrace,
    pub status: SolveStatus,
    pub work_units: u64,
}

fn run_stage(
    stage: &str,
    net: &Network,
    inv: &Inventory,
    model: crate::ilp::IlpModel,
    vars: crate::ilp::MappingVars,
    warm: Option<&MappingSolution>,
    profile: Option<&SpikeProfile>,
    limits: &SolveLimits,
) -> Result<StageOutcome, PipelineError> {
    let warm_bits = warm.map(|sol| encode_solution(sol, &vars, model.num_vars()));
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut decode_failure = None;
    {
        let mut on_incumbent = |inc: &crate::solver::Incumbent| {
            match decode_assignment(&inc.assignment, &vars, net, inv) {
                Ok(sol) => match evaluate(net, inv, &sol, profile, stage) {
                    Ok(metrics) => rows.push(TraceRow {
                        work_units: inc.work_units,
                        objective: inc.objective,
                        metrics,
                        assignment: sol.assignment.iter().map(|c| c.0).collect(),
                    }),
                    Err(e) => decode_failure = Some(e),
                },
                Err(e) => decode_failure = Some(e),
            }
        };
        let result = solve_with_start(&model, limits, warm_bits.as_deref(), Some(&mut on_incumbent));
        if let Some(e) = decode_failure {
            return Err(PipelineError::Solution(e));
        }
        match result.status {
            SolveStatus::Optimal | SolveStatus::Feasible => {
                let solution = crate::mapping::decode_solution(&result, &vars, net, inv)?;
                Ok(StageOutcome {
                    solution,
                    trace: PipelineTrace {
                        stage: stage.to_string(),
                        rows,
                    },
                    status: result.status,
                    work_units: result.work_units,
                })
            }
            SolveStatus::Infeasible => Err(PipelineError::Infeasible {
                stage: stage.to_string(),
                detail: "the placement constraints admit no solution".into(),
            }),
            SolveStatus::Unknown => Err(PipelineError::Infeasible {
                stage: stage.to_string(),
                detail: format!(
                    "no feasible solution found within {} work units",
                    result.work_units
                ),
            }),
        }
    }
}

/// Minimize cost-weighted enabled-crossbar area.
pub fn optimize_area(
    net: &Network,
    inv: &Inventory,
    limits: &SolveLimits,
) -> Result<StageOutcome, PipelineError> {
    optimize_area_seeded(net, inv, None, limits)
}

/// Area stage with an optional warm-start solution (any feasible placement,
/// for example a baseline result to improve upon).
pub fn optimize_area_seeded(
    net: &Network,
    inv: &Inventory,
    warm: Option<&MappingSolution>,
    limits: &SolveLimits,
) -> Result<StageOutcome, PipelineError> {
    let (mut model, vars) = build_mapping_model(net, inv, &ModelOptions::default())?;
    add_area_objective(&mut model, &vars, inv)?;
    let canonical = match warm {
        Some(sol) => Some(canonicalize_solution(net, inv, sol)?),
        None => None,
    };
    run_stage(
        "area",
        net,
        inv,
        model,
        vars,
        canonical.as_ref(),
        None,
        limits,
    )
}

/// Minimize global route count without increasing area: the enabled set is
/// frozen to the area solution's and the search starts from it.
pub fn optimize_snu(
    net: &Network,
    inv: &Inventory,
    area_solution: &MappingSolution,
    limits: &SolveLimits,
) -> Result<StageOutcome, PipelineError> {
    let (mut model, mut vars) = build_mapping_model(net, inv, &ModelOptions::default())?;
    let base = canonicalize_solution(net, inv, area_solution)?;
    freeze_enabled(&mut model, &vars, &base.enabled_mask(inv.len()));
    add_route_objective(&mut model, &mut vars, RouteMode::GlobalRoutes, None)?;
    run_stage("snu", net, inv, model, vars, Some(&base), None, limits)
}

/// Minimize profile-weighted global packets over the frozen enabled set of
/// `base`, warm-started from `base`. Zero-weight sources contribute no
/// objective terms at all.
pub fn optimize_pgo(
    net: &Network,
    inv: &Inventory,
    profile: &SpikeProfile,
    base: &MappingSolution,
    limits: &SolveLimits,
) -> Result<StageOutcome, PipelineError> {
    let (mut model, mut vars) = build_mapping_model(net, inv, &ModelOptions::default())?;
    let base = canonicalize_solution(net, inv, base)?;
    freeze_enabled(&mut model, &vars, &base.enabled_mask(inv.len()));
    let weights = profile.weights();
    add_route_objective(
        &mut model,
        &mut vars,
        RouteMode::GlobalRoutes,
        Some(&weights),
    )?;
    run_stage(
        "pgo",
        net,
        inv,
        model,
        vars,
        Some(&base),
        Some(profile),
        limits,
    )
}

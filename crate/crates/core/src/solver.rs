//! Exact 0/1 branch-and-bound with constraint propagation and deterministic
//! work accounting.
//!
//! The search is depth-first. Every decision tries the placement-friendly
//! value first (1 for placement variables, 0 for enables), propagates linear
//! activity bounds to a fixpoint, and prunes on an admissible lower bound.
//! Work units — one per decision, one per constraint propagation pass — are
//! the machine-independent effort measure; identical model and limits give a
//! bit-identical result, incumbent trace included.

use std::collections::VecDeque;

use thiserror::Error;

use crate::ilp::{IlpModel, VarId, VarTag};

/// Budget knobs. Work units are deterministic; the wall-clock limit is a
/// safety valve and inherently machine-dependent.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveLimits {
    pub max_work_units: Option<u64>,
    pub max_wall_seconds: Option<f64>,
    /// Stop as soon as an incumbent reaches this objective or better.
    pub target_objective: Option<i64>,
}

impl SolveLimits {
    pub fn work(units: u64) -> Self {
        SolveLimits {
            max_work_units: Some(units),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Search exhausted; the reported objective is the global minimum.
    Optimal,
    /// A limit stopped the search with an incumbent in hand.
    Feasible,
    /// Search exhausted without any feasible assignment.
    Infeasible,
    /// A limit stopped the search before any feasible assignment.
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub work_units: u64,
    pub objective: i64,
    pub assignment: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub assignment: Option<Vec<bool>>,
    pub objective: Option<i64>,
    pub work_units: u64,
    /// Strictly improving solutions in discovery order; the last one equals
    /// the final assignment.
    pub incumbents: Vec<Incumbent>,
}

/// Seam for delegating models to other solving engines. Any backend must
/// reproduce the built-in status semantics; text-level backends can consume
/// [`IlpModel::to_lp_string`].
pub trait SolverBackend {
    fn name(&self) -> &str;
    fn solve(
        &self,
        model: &IlpModel,
        limits: &SolveLimits,
        on_incumbent: Option<&mut dyn FnMut(&Incumbent)>,
    ) -> SolveResult;
}

/// The built-in branch-and-bound engine.
pub struct BranchBound;

impl SolverBackend for BranchBound {
    fn name(&self) -> &str {
        "branch-bound"
    }

    fn solve(
        &self,
        model: &IlpModel,
        limits: &SolveLimits,
        on_incumbent: Option<&mut dyn FnMut(&Incumbent)>,
    ) -> SolveResult {
        solve(model, limits, on_incumbent)
    }
}

pub fn solve(
    model: &IlpModel,
    limits: &SolveLimits,
    on_incumbent: Option<&mut dyn FnMut(&Incumbent)>,
) -> SolveResult {
    solve_with_start(model, limits, None, on_incumbent)
}

/// Solve with an optional warm-start assignment, which must satisfy every
/// constraint of `model`; it becomes the first incumbent and the initial
/// pruning bound.
pub fn solve_with_start(
    model: &IlpModel,
    limits: &SolveLimits,
    warm: Option<&[bool]>,
    on_incumbent: Option<&mut dyn FnMut(&Incumbent)>,
) -> SolveResult {
    Searcher::new(model, limits, warm, on_incumbent).run()
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{vars} variables exceed the exhaustive oracle cap of {cap}")]
    TooLargeForOracle { vars: usize, cap: usize },
}

pub const ORACLE_VAR_CAP: usize = 24;

/// Exhaustive oracle: walks the full assignment tree in lexicographic order
/// (0 before 1), cutting a subtree only when no completion can satisfy some
/// constraint. Independent of the branch-and-bound machinery by design.
pub fn brute_force(model: &IlpModel) -> Result<SolveResult, OracleError> {
    let n = model.num_vars();
    if n > ORACLE_VAR_CAP {
        return Err(OracleError::TooLargeForOracle {
            vars: n,
            cap: ORACLE_VAR_CAP,
        });
    }
    let constraints = model.constraints();
    let m = constraints.len();

    // coef[c][v]: dense coefficient table.
    let mut coef = vec![vec![0i64; n]; m];
    for (ci, c) in constraints.iter().enumerate() {
        for &(a, v) in &c.terms {
            coef[ci][v.index()] += a;
        }
    }
    // Range of the still-unassigned suffix, per constraint and depth.
    let mut suffix_min = vec![vec![0i64; n + 1]; m];
    let mut suffix_max = vec![vec![0i64; n + 1]; m];
    for ci in 0..m {
        for v in (0..n).rev() {
            suffix_min[ci][v] = suffix_min[ci][v + 1] + coef[ci][v].min(0);
            suffix_max[ci][v] = suffix_max[ci][v + 1] + coef[ci][v].max(0);
        }
    }
    let obj: Vec<i64> = (0..n)
        .map(|v| model.objective_coef(VarId(v as u32)))
        .collect();

    struct Walk<'a> {
        coef: &'a [Vec<i64>],
        suffix_min: &'a [Vec<i64>],
        suffix_max: &'a [Vec<i64>],
        lowers: Vec<Option<i64>>,
        uppers: Vec<Option<i64>>,
        obj: &'a [i64],
        n: usize,
        sums: Vec<i64>,
        values: Vec<bool>,
        obj_sum: i64,
        nodes: u64,
        best: Option<(i64, Vec<bool>)>,
        incumbents: Vec<Incumbent>,
    }

    impl Walk<'_> {
        fn descend(&mut self, depth: usize) {
            self.nodes += 1;
            for ci in 0..self.sums.len() {
                let lo = self.sums[ci] + self.suffix_min[ci][depth];
                let hi = self.sums[ci] + self.suffix_max[ci][depth];
                if self.uppers[ci].is_some_and(|u| lo > u)
                    || self.lowers[ci].is_some_and(|l| hi < l)
                {
                    return;
                }
            }
            if depth == self.n {
                let better = self.best.as_ref().is_none_or(|(b, _)| self.obj_sum < *b);
                if better {
                    self.best = Some((self.obj_sum, self.values.clone()));
                    self.incumbents.push(Incumbent {
                        work_units: self.nodes,
                        objective: self.obj_sum,
                        assignment: self.values.clone(),
                    });
                }
                return;
            }
            for value in [false, true] {
                self.values[depth] = value;
                if value {
                    for ci in 0..self.sums.len() {
                        self.sums[ci] += self.coef[ci][depth];
                    }
                    self.obj_sum += self.obj[depth];
                }
                self.descend(depth + 1);
                if value {
                    for ci in 0..self.sums.len() {
                        self.sums[ci] -= self.coef[ci][depth];
                    }
                    self.obj_sum -= self.obj[depth];
                }
            }
        }
    }

    let mut walk = Walk {
        coef: &coef,
        suffix_min: &suffix_min,
        suffix_max: &suffix_max,
        lowers: constraints.iter().map(|c| c.lower).collect(),
        uppers: constraints.iter().map(|c| c.upper).collect(),
        obj: &obj,
        n,
        sums: vec![0; m],
        values: vec![false; n],
        obj_sum: 0,
        nodes: 0,
        best: None,
        incumbents: Vec::new(),
    };
    walk.descend(0);

    Ok(match walk.best {
        Some((objective, assignment)) => SolveResult {
            status: SolveStatus::Optimal,
            assignment: Some(assignment),
            objective: Some(objective),
            work_units: walk.nodes,
            incumbents: walk.incumbents,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            work_units: walk.nodes,
            incumbents: Vec::new(),
        },
    })
}

const UNASSIGNED: i8 = -1;

#[derive(Clone, Copy)]
enum ObjectiveKind {
    /// Objective touches only enable variables: the area shape. An
    /// output-slack relaxation strengthens the bound.
    EnableOnly,
    /// Every objective term is an (s, b) pair with opposite coefficients:
    /// the route shapes. Pair accounting replaces the naive bound.
    RoutePairs,
    Generic,
}

struct PairInfo {
    /// For an s variable: its b partner and weight. For a b variable: its
    /// s partner and weight.
    partner: Vec<u32>,
    weight: Vec<i64>,
    is_s: Vec<bool>,
    in_pair: Vec<bool>,
}

struct PlacementInfo {
    /// Per x variable: (unit, place, demand); parallel arrays over var ids.
    x_unit: Vec<u32>,
    x_place: Vec<u32>,
    x_demand: Vec<i64>,
    is_x: Vec<bool>,
    y_place: Vec<i32>,
    /// Dense `unit * place_count + place -> x var` lookup.
    x_grid: Vec<u32>,
    /// Adjacent units per unit, for co-location preference.
    neighbors: Vec<Vec<u32>>,
    unit_count: usize,
    place_count: usize,
    out_cap: Vec<i64>,
    /// Cheapest enable cost per output column over all places, floored.
    min_amortized: i64,
}

/// A decision point. Placement models branch per unit over its candidate
/// crossbars in preference order; everything else branches on one binary
/// variable.
enum Frame {
    Unit {
        candidates: Vec<u32>,
        next: usize,
        trail_mark: usize,
        unit_cursor: usize,
        all_cursor: usize,
    },
    Binary {
        var: u32,
        values: [bool; 2],
        next: u8,
        trail_mark: usize,
        unit_cursor: usize,
        all_cursor: usize,
    },
}

struct Searcher<'m, 'l, 'c> {
    model: &'m IlpModel,
    limits: &'l SolveLimits,
    on_incumbent: Option<&'c mut dyn FnMut(&Incumbent)>,

    values: Vec<i8>,
    trail: Vec<u32>,
    act_min: Vec<i64>,
    act_max: Vec<i64>,
    watches: Vec<Vec<(u32, i64)>>,
    dirty: VecDeque<u32>,
    in_queue: Vec<bool>,

    obj_coef: Vec<i64>,
    fixed_obj: i64,
    neg_unassigned: i64,

    kind: ObjectiveKind,
    pairs: Option<PairInfo>,
    /// Sum of weights of pairs whose s is 1 while b is still open.
    open_pair_penalty: i64,

    placement: Option<PlacementInfo>,
    unplaced_demand: i64,
    enabled_slack: i64,
    placed_count: Vec<u32>,
    unit_place: Vec<i32>,
    residents_out: Vec<i64>,
    enabled_state: Vec<i8>,

    work: u64,
    budget_hit: bool,
    stopped_on_target: bool,
    started: std::time::Instant,
    best: Option<(i64, Vec<bool>)>,
    incumbents: Vec<Incumbent>,
    frames: Vec<Frame>,
    unit_cursor: usize,
    all_cursor: usize,
}

impl<'m, 'l, 'c> Searcher<'m, 'l, 'c> {
    fn new(
        model: &'m IlpModel,
        limits: &'l SolveLimits,
        warm: Option<&[bool]>,
        on_incumbent: Option<&'c mut dyn FnMut(&Incumbent)>,
    ) -> Self {
        let n = model.num_vars();
        let constraints = model.constraints();

        let mut watches: Vec<Vec<(u32, i64)>> = vec![Vec::new(); n];
        let mut act_min = vec![0i64; constraints.len()];
        let mut act_max = vec![0i64; constraints.len()];
        for (ci, c) in constraints.iter().enumerate() {
            for &(coef, v) in &c.terms {
                watches[v.index()].push((ci as u32, coef));
                act_min[ci] += coef.min(0);
                act_max[ci] += coef.max(0);
            }
        }

        let mut obj_coef = vec![0i64; n];
        for &(c, v) in model.objective() {
            obj_coef[v.index()] += c;
        }
        let neg_unassigned = obj_coef.iter().filter(|&&c| c < 0).sum();

        let tags = model.tags();
        let mut x_unit = vec![0u32; n];
        let mut x_place = vec![0u32; n];
        let mut x_demand = vec![0i64; n];
        let mut is_x = vec![false; n];
        let mut y_place = vec![-1i32; n];
        let mut x_order = Vec::new();
        let mut unit_count = 0usize;
        let mut place_count = 0usize;
        for (v, tag) in tags.iter().enumerate() {
            match *tag {
                VarTag::X { unit, place, demand } => {
                    x_unit[v] = unit;
                    x_place[v] = place;
                    x_demand[v] = demand as i64;
                    is_x[v] = true;
                    x_order.push(v as u32);
                    unit_count = unit_count.max(unit as usize + 1);
                    place_count = place_count.max(place as usize + 1);
                }
                VarTag::Y { place } => {
                    y_place[v] = place as i32;
                    place_count = place_count.max(place as usize + 1);
                }
                _ => {}
            }
        }
        x_order.sort_by_key(|&v| (x_unit[v as usize], x_place[v as usize]));

        let placement = if x_order.is_empty() {
            None
        } else {
            let out_cap = if model.place_out_caps().len() == place_count {
                model.place_out_caps().to_vec()
            } else {
                vec![i64::MAX / 4; place_count]
            };
            // Cheapest cost-per-output over all places; 0 when any place is
            // free to enable, which degrades the bound to fixed costs only.
            let mut min_amortized = i64::MAX;
            for (v, tag) in tags.iter().enumerate() {
                if let VarTag::Y { place } = *tag {
                    let cap = out_cap[place as usize].max(1);
                    min_amortized = min_amortized.min(obj_coef[v].max(0) / cap);
                }
            }
            if min_amortized == i64::MAX {
                min_amortized = 0;
            }
            Some(PlacementInfo {
                x_unit,
                x_place,
                x_demand,
                is_x,
                y_place,
                x_order,
                unit_count,
                place_count,
                out_cap,
                min_amortized,
            })
        };

        let kind = classify_objective(model, placement.as_ref());
        let pairs = match kind {
            ObjectiveKind::RoutePairs => Some(build_pairs(model)),
            _ => None,
        };

        let (unplaced_demand, placed_count, residents_out, enabled_state) = match &placement {
            Some(p) => {
                let mut demand = 0i64;
                let mut per_unit = vec![0i64; p.unit_count];
                for &v in &p.x_order {
                    per_unit[p.x_unit[v as usize] as usize] = p.x_demand[v as usize];
                }
                for d in &per_unit {
                    demand += d;
                }
                (
                    demand,
                    vec![0u32; p.unit_count],
                    vec![0i64; p.place_count],
                    vec![UNASSIGNED; p.place_count],
                )
            }
            None => (0, Vec::new(), Vec::new(), Vec::new()),
        };

        let mut searcher = Searcher {
            model,
            limits,
            on_incumbent,
            values: vec![UNASSIGNED; n],
            trail: Vec::with_capacity(n),
            act_min,
            act_max,
            watches,
            dirty: VecDeque::new(),
            in_queue: vec![false; constraints.len()],
            obj_coef,
            fixed_obj: 0,
            neg_unassigned,
            kind,
            pairs,
            open_pair_penalty: 0,
            placement,
            unplaced_demand,
            enabled_slack: 0,
            placed_count,
            residents_out,
            enabled_state,
            work: 0,
            budget_hit: false,
            stopped_on_target: false,
            started: std::time::Instant::now(),
            best: None,
            incumbents: Vec::new(),
            frames: Vec::new(),
            x_cursor: 0,
            all_cursor: 0,
        };

        if let Some(assignment) = warm {
            assert!(
                model.check_assignment(assignment),
                "warm-start assignment violates the model"
            );
            let objective = model.objective_value(assignment);
            searcher.record_incumbent(objective, assignment.to_vec());
        }
        searcher
    }

    fn record_incumbent(&mut self, objective: i64, assignment: Vec<bool>) {
        let incumbent = Incumbent {
            work_units: self.work,
            objective,
            assignment,
        };
        if let Some(cb) = self.on_incumbent.as_deref_mut() {
            cb(&incumbent);
        }
        self.best = Some((objective, incumbent.assignment.clone()));
        self.incumbents.push(incumbent);
    }

    fn budget_exceeded(&mut self) -> bool {
        if self.budget_hit {
            return true;
        }
        if self.limits.max_work_units.is_some_and(|cap| self.work >= cap) {
            self.budget_hit = true;
            return true;
        }
        // The wall clock is only consulted every 4096 work units.
        if self.work % 4096 == 0 {
            if let Some(cap) = self.limits.max_wall_seconds {
                if self.started.elapsed().as_secs_f64() > cap {
                    self.budget_hit = true;
                    return true;
                }
            }
        }
        false
    }

    fn target_reached(&self) -> bool {
        match (self.limits.target_objective, &self.best) {
            (Some(target), Some((obj, _))) => *obj <= target,
            _ => false,
        }
    }

    /// Set a variable, updating constraint activities and bound state.
    /// Returns false on an immediately violated constraint.
    fn assign(&mut self, var: u32, value: bool) -> bool {
        debug_assert_eq!(self.values[var as usize], UNASSIGNED);
        self.values[var as usize] = value as i8;
        self.trail.push(var);

        let coef_obj = self.obj_coef[var as usize];
        if value {
            self.fixed_obj += coef_obj;
        }
        if coef_obj < 0 {
            self.neg_unassigned -= coef_obj;
        }
        if let Some(pairs) = &self.pairs {
            if pairs.in_pair[var as usize] {
                let partner = pairs.partner[var as usize] as usize;
                let w = pairs.weight[var as usize];
                if pairs.is_s[var as usize] {
                    if value && self.values[partner] == UNASSIGNED {
                        self.open_pair_penalty += w;
                    }
                } else if self.values[partner] == 1 {
                    self.open_pair_penalty -= w;
                }
            }
        }
        if let Some(p) = &self.placement {
            if p.is_x[var as usize] && value {
                let unit = p.x_unit[var as usize] as usize;
                let place = p.x_place[var as usize] as usize;
                let demand = p.x_demand[var as usize];
                self.placed_count[unit] += 1;
                if self.placed_count[unit] == 1 {
                    self.unplaced_demand -= demand;
                }
                self.residents_out[place] += demand;
                if self.enabled_state[place] == 1 {
                    self.enabled_slack -= demand;
                }
            } else if p.y_place[var as usize] >= 0 {
                let place = p.y_place[var as usize] as usize;
                self.enabled_state[place] = value as i8;
                if value {
                    self.enabled_slack += p.out_cap[place] - self.residents_out[place];
                }
            }
        }

        let mut ok = true;
        for wi in 0..self.watches[var as usize].len() {
            let (ci, coef) = self.watches[var as usize][wi];
            let ci_us = ci as usize;
            let assigned = if value { coef } else { 0 };
            self.act_min[ci_us] += assigned - coef.min(0);
            self.act_max[ci_us] += assigned - coef.max(0);
            let c = &self.model.constraints()[ci_us];
            if c.upper.is_some_and(|u| self.act_min[ci_us] > u)
                || c.lower.is_some_and(|l| self.act_max[ci_us] < l)
            {
                ok = false;
            }
            if !self.in_queue[ci_us] {
                self.in_queue[ci_us] = true;
                self.dirty.push_back(ci);
            }
        }
        ok
    }

    fn unassign(&mut self, var: u32) {
        let value = self.values[var as usize] == 1;
        self.values[var as usize] = UNASSIGNED;

        let coef_obj = self.obj_coef[var as usize];
        if value {
            self.fixed_obj -= coef_obj;
        }
        if coef_obj < 0 {
            self.neg_unassigned += coef_obj;
        }
        if let Some(pairs) = &self.pairs {
            if pairs.in_pair[var as usize] {
                let partner = pairs.partner[var as usize] as usize;
                let w = pairs.weight[var as usize];
                if pairs.is_s[var as usize] {
                    if value && self.values[partner] == UNASSIGNED {
                        self.open_pair_penalty -= w;
                    }
                } else if self.values[partner] == 1 {
                    self.open_pair_penalty += w;
                }
            }
        }
        if let Some(p) = &self.placement {
            if p.is_x[var as usize] && value {
                let unit = p.x_unit[var as usize] as usize;
                let place = p.x_place[var as usize] as usize;
                let demand = p.x_demand[var as usize];
                self.placed_count[unit] -= 1;
                if self.placed_count[unit] == 0 {
                    self.unplaced_demand += demand;
                }
                self.residents_out[place] -= demand;
                if self.enabled_state[place] == 1 {
                    self.enabled_slack += demand;
                }
            } else if p.y_place[var as usize] >= 0 {
                let place = p.y_place[var as usize] as usize;
                if value {
                    self.enabled_slack -= p.out_cap[place] - self.residents_out[place];
                }
                self.enabled_state[place] = UNASSIGNED;
            }
        }

        for wi in 0..self.watches[var as usize].len() {
            let (ci, coef) = self.watches[var as usize][wi];
            let ci_us = ci as usize;
            let assigned = if value { coef } else { 0 };
            self.act_min[ci_us] -= assigned - coef.min(0);
            self.act_max[ci_us] -= assigned - coef.max(0);
        }
    }

    fn clear_queue(&mut self) {
        while let Some(ci) = self.dirty.pop_front() {
            self.in_queue[ci as usize] = false;
        }
    }

    /// Drain dirty constraints to a fixpoint, forcing variables whose other
    /// value can no longer satisfy some constraint. One work unit per pass.
    fn propagate(&mut self) -> bool {
        while let Some(ci) = self.dirty.pop_front() {
            self.in_queue[ci as usize] = false;
            self.work += 1;
            if self.budget_exceeded() {
                return true; // handled by the caller before using results
            }
            let c = &self.model.constraints()[ci as usize];
            if c.upper.is_some_and(|u| self.act_min[ci as usize] > u)
                || c.lower.is_some_and(|l| self.act_max[ci as usize] < l)
            {
                self.clear_queue();
                return false;
            }
            for ti in 0..c.terms.len() {
                let (coef, v) = self.model.constraints()[ci as usize].terms[ti];
                if self.values[v.index()] != UNASSIGNED {
                    continue;
                }
                let min_without = self.act_min[ci as usize] - coef.min(0);
                let max_without = self.act_max[ci as usize] - coef.max(0);
                let c = &self.model.constraints()[ci as usize];
                let one_ok = c.upper.is_none_or(|u| min_without + coef <= u)
                    && c.lower.is_none_or(|l| max_without + coef >= l);
                let zero_ok = c.upper.is_none_or(|u| min_without <= u)
                    && c.lower.is_none_or(|l| max_without >= l);
                match (zero_ok, one_ok) {
                    (true, true) => {}
                    (false, false) => {
                        self.clear_queue();
                        return false;
                    }
                    (zero, _) => {
                        if !self.assign(v.0, !zero) {
                            self.clear_queue();
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Admissible lower bound on any completion of the current node.
    fn lower_bound(&self) -> i64 {
        match self.kind {
            ObjectiveKind::EnableOnly => {
                let p = self.placement.as_ref().expect("enable-only implies placement");
                let spill = (self.unplaced_demand - self.enabled_slack.max(0)).max(0);
                self.fixed_obj + spill * p.min_amortized
            }
            ObjectiveKind::RoutePairs => self.fixed_obj - self.open_pair_penalty,
            ObjectiveKind::Generic => self.fixed_obj + self.neg_unassigned,
        }
    }

    fn pick_var(&mut self) -> Option<u32> {
        if let Some(p) = &self.placement {
            while self.x_cursor < p.x_order.len() {
                let v = p.x_order[self.x_cursor];
                if self.values[v as usize] == UNASSIGNED {
                    return Some(v);
                }
                self.x_cursor += 1;
            }
        }
        while self.all_cursor < self.values.len() {
            if self.values[self.all_cursor] == UNASSIGNED {
                return Some(self.all_cursor as u32);
            }
            self.all_cursor += 1;
        }
        None
    }

    fn value_order(&self, var: u32) -> [bool; 2] {
        match self.model.tag(VarId(var)) {
            VarTag::X { .. } => [true, false],
            VarTag::Y { .. } | VarTag::S { .. } => [false, true],
            VarTag::B { .. } => [true, false],
            VarTag::Free => {
                if self.obj_coef[var as usize] < 0 {
                    [true, false]
                } else {
                    [false, true]
                }
            }
        }
    }

    fn undo_to(&mut self, mark: usize) {
        self.clear_queue();
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            self.unassign(var);
        }
    }

    fn finish(mut self) -> SolveResult {
        let stopped_early = self.budget_hit || self.stopped_on_target;
        let status = match (&self.best, stopped_early) {
            (Some(_), false) => SolveStatus::Optimal,
            (Some(_), true) => SolveStatus::Feasible,
            (None, false) => SolveStatus::Infeasible,
            (None, true) => SolveStatus::Unknown,
        };
        let (objective, assignment) = match self.best.take() {
            Some((obj, assignment)) => (Some(obj), Some(assignment)),
            None => (None, None),
        };
        SolveResult {
            status,
            assignment,
            objective,
            work_units: self.work,
            incumbents: self.incumbents,
        }
    }

    fn run(mut self) -> SolveResult {
        if self.target_reached() {
            self.stopped_on_target = true;
            return self.finish();
        }
        // Root propagation: seed every constraint once.
        for ci in 0..self.model.constraints().len() {
            self.in_queue[ci] = true;
            self.dirty.push_back(ci as u32);
        }
        if !self.propagate() {
            self.work = self.work.max(1);
            return self.finish();
        }
        if self.budget_hit {
            return self.finish();
        }

        // Depth-first search. Each pass of the outer loop stands at a
        // propagated, conflict-free node: prune it, close it as a leaf, or
        // open a decision frame. The inner loop then advances the topmost
        // open frame to its next untried value (backtracking through
        // exhausted frames), and descends once a value survives
        // propagation.
        'search: loop {
            let prune = self
                .best
                .as_ref()
                .is_some_and(|(best, _)| self.lower_bound() >= *best);
            if !prune {
                match self.pick_var() {
                    Some(var) => {
                        self.frames.push(Frame {
                            var,
                            values: self.value_order(var),
                            next: 0,
                            trail_mark: self.trail.len(),
                            x_cursor: self.x_cursor,
                            all_cursor: self.all_cursor,
                        });
                    }
                    None => {
                        // Every variable assigned, nothing violated, and not
                        // pruned: an improving leaf.
                        let objective = self.fixed_obj;
                        let assignment: Vec<bool> =
                            self.values.iter().map(|&v| v == 1).collect();
                        self.record_incumbent(objective, assignment);
                        if self.target_reached() {
                            self.stopped_on_target = true;
                            return self.finish();
                        }
                    }
                }
            }
            loop {
                let Some(frame) = self.frames.last_mut() else {
                    return self.finish(); // tree exhausted
                };
                if frame.next == 2 {
                    let done = self.frames.pop().unwrap();
                    self.undo_to(done.trail_mark);
                    self.x_cursor = done.x_cursor;
                    self.all_cursor = done.all_cursor;
                    continue;
                }
                let var = frame.var;
                let value = frame.values[frame.next as usize];
                frame.next += 1;
                let mark = frame.trail_mark;
                let (fx, fa) = (frame.x_cursor, frame.all_cursor);
                self.undo_to(mark); // clear any previous attempt of this frame
                self.x_cursor = fx;
                self.all_cursor = fa;

                self.work += 1;
                if self.budget_exceeded() {
                    return self.finish();
                }
                let ok = self.assign(var, value) && self.propagate();
                if self.budget_hit {
                    return self.finish();
                }
                if ok {
                    continue 'search;
                }
                self.undo_to(mark);
            }
        }
    }
}

fn classify_objective(model: &IlpModel, placement: Option<&PlacementInfo>) -> ObjectiveKind {
    let objective = model.objective();
    if objective.is_empty() {
        return ObjectiveKind::Generic;
    }
    let mut all_y = true;
    let mut pairable = true;
    let mut s_terms: std::collections::BTreeMap<(u32, u32), i64> = Default::default();
    let mut b_terms: std::collections::BTreeMap<(u32, u32), i64> = Default::default();
    for &(coef, v) in objective {
        match model.tag(v) {
            VarTag::Y { .. } => {
                pairable = false;
                if coef < 0 {
                    // A negative enable cost breaks both refined bounds.
                    all_y = false;
                }
            }
            VarTag::S { source, place } => {
                all_y = false;
                s_terms.insert((source, place), coef);
            }
            VarTag::B { source, place } => {
                all_y = false;
                b_terms.insert((source, place), coef);
            }
            _ => {
                all_y = false;
                pairable = false;
            }
        }
    }
    if all_y && placement.is_some() {
        return ObjectiveKind::EnableOnly;
    }
    if pairable
        && !b_terms.is_empty()
        && s_terms.len() == b_terms.len()
        && b_terms.iter().all(|(key, &bc)| {
            s_terms.get(key).is_some_and(|&sc| sc > 0 && bc == -sc)
        })
    {
        return ObjectiveKind::RoutePairs;
    }
    if b_terms.is_empty() && !s_terms.is_empty() && s_terms.values().all(|&c| c > 0) {
        // Pure total-route objective: generic bound is already exact-ish
        // (all coefficients positive).
        return ObjectiveKind::Generic;
    }
    ObjectiveKind::Generic
}

fn build_pairs(model: &IlpModel) -> PairInfo {
    let n = model.num_vars();
    let mut pair = PairInfo {
        partner: vec![0; n],
        weight: vec![0; n],
        is_s: vec![false; n],
        in_pair: vec![false; n],
    };
    let mut s_by_key: std::collections::BTreeMap<(u32, u32), (u32, i64)> = Default::default();
    for &(coef, v) in model.objective() {
        if let VarTag::S { source, place } = model.tag(v) {
            s_by_key.insert((source, place), (v.0, coef));
        }
    }
    for &(_, v) in model.objective() {
        if let VarTag::B { source, place } = model.tag(v) {
            let (s_var, w) = s_by_key[&(source, place)];
            pair.partner[v.index()] = s_var;
            pair.weight[v.index()] = w;
            pair.is_s[v.index()] = false;
            pair.in_pair[v.index()] = true;
            pair.partner[s_var as usize] = v.0;
            pair.weight[s_var as usize] = w;
            pair.is_s[s_var as usize] = true;
            pair.in_pair[s_var as usize] = true;
        }
    }
    pair
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Network, NeuronId};
    use crate::ilp::{
        add_area_objective, build_mapping_model, LinearConstraint, ModelOptions,
    };
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

    fn inv(kinds: &[(u32, u32)], caps: &[u32]) -> crate::inventory::Inventory {
        let kinds: Vec<CrossbarKind> =
            kinds.iter().map(|&(a, n)| CrossbarKind::new(a, n)).collect();
        expand_inventory(&kinds, caps).unwrap()
    }

    #[test]
    fn single_variable_minimum_is_zero() {
        let mut model = IlpModel::new();
        let v = model.new_var(VarTag::Free);
        model.set_objective(vec![(1, v)]);
        let oracle = brute_force(&model).unwrap();
        assert_eq!(oracle.status, SolveStatus::Optimal);
        assert_eq!(oracle.objective, Some(0));
        let result = solve(&model, &Default::default(), None);
        assert_eq!(result.objective, Some(0));
    }

    #[test]
    fn oracle_rejects_large_models() {
        let mut model = IlpModel::new();
        for _ in 0..25 {
            model.new_var(VarTag::Free);
        }
        assert!(matches!(
            brute_force(&model),
            Err(OracleError::TooLargeForOracle { vars: 25, cap: 24 })
        ));
    }

    #[test]
    fn chain_needs_both_small_crossbars() {
        let net = chain(3);
        let inventory = inv(&[(2, 2)], &[2]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let oracle = brute_force(&model).unwrap();
        assert_eq!(oracle.status, SolveStatus::Optimal);
        assert_eq!(oracle.objective, Some(8));
        let result = solve(&model, &Default::default(), None);
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.objective, Some(8));
        let assignment = result.assignment.unwrap();
        assert!(assignment[vars.y(0).index()] && assignment[vars.y(1).index()]);
    }

    #[test]
    fn shared_source_split_is_optimal_at_32() {
        let net = crate::graph::load_network(
            br#"{"nodes": 5, "edges": [
                {"pre": 0, "post": 2}, {"pre": 1, "post": 3}, {"pre": 1, "post": 4}
            ]}"#,
        )
        .unwrap();
        let inventory = inv(&[(4, 4)], &[2]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let result = solve(&model, &Default::default(), None);
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.objective, Some(32));
        let oracle = brute_force(&model).unwrap();
        assert_eq!(oracle.objective, Some(32));
    }

    #[test]
    fn identical_solves_are_bit_identical() {
        let net = chain(4);
        let inventory = inv(&[(3, 2), (4, 4)], &[2, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let limits = SolveLimits::work(10_000);
        let a = solve(&model, &limits, None);
        let b = solve(&model, &limits, None);
        assert_eq!(a, b);
    }

    #[test]
    fn budget_exhaustion_reports_unknown_or_feasible() {
        let net = chain(6);
        let inventory = inv(&[(4, 2)], &[3]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let starved = solve(&model, &SolveLimits::work(3), None);
        assert!(matches!(
            starved.status,
            SolveStatus::Unknown | SolveStatus::Feasible
        ));
        assert!(starved.work_units <= 4);
    }

    #[test]
    fn incumbents_strictly_decrease() {
        let net = chain(4);
        let inventory = inv(&[(4, 2), (8, 4)], &[2, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let result = solve(&model, &Default::default(), None);
        let objectives: Vec<i64> = result.incumbents.iter().map(|i| i.objective).collect();
        assert!(objectives.windows(2).all(|w| w[1] < w[0]), "{objectives:?}");
        assert_eq!(objectives.last().copied(), result.objective);
    }

    #[test]
    fn warm_start_is_first_incumbent_and_never_worsened() {
        let net = chain(3);
        let inventory = inv(&[(2, 2)], &[2]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        // Hand-build a feasible assignment: 0,1 on c0; 2 on c1.
        let mut warm = vec![false; model.num_vars()];
        warm[vars.y(0).index()] = true;
        warm[vars.y(1).index()] = true;
        warm[vars.x(0, 0).index()] = true;
        warm[vars.x(1, 0).index()] = true;
        warm[vars.x(2, 1).index()] = true;
        warm[vars.s(0, 0).unwrap().index()] = true;
        warm[vars.s(1, 1).unwrap().index()] = true;
        assert!(model.check_assignment(&warm));
        let result = solve_with_start(&model, &Default::default(), Some(&warm), None);
        assert_eq!(result.incumbents[0].work_units, 0);
        assert_eq!(result.incumbents[0].objective, 8);
        assert_eq!(result.status, SolveStatus::Optimal);
        assert_eq!(result.objective, Some(8));
    }

    #[test]
    fn target_objective_stops_early() {
        let net = chain(4);
        let inventory = inv(&[(4, 2), (8, 4)], &[2, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let full = solve(&model, &Default::default(), None);
        let first = full.incumbents[0].objective;
        let limits = SolveLimits {
            target_objective: Some(first),
            ..Default::default()
        };
        let early = solve(&model, &limits, None);
        assert!(early.objective.unwrap() <= first);
        assert!(early.work_units <= full.work_units);
    }

    #[test]
    fn callback_sees_every_incumbent() {
        let net = chain(4);
        let inventory = inv(&[(4, 2), (8, 4)], &[2, 1]);
        let (mut model, vars) =
            build_mapping_model(&net, &inventory, &ModelOptions::default()).unwrap();
        add_area_objective(&mut model, &vars, &inventory).unwrap();
        let mut seen = Vec::new();
        let mut cb = |inc: &Incumbent| seen.push(inc.objective);
        let result = solve(&model, &Default::default(), Some(&mut cb));
        let from_result: Vec<i64> = result.incumbents.iter().map(|i| i.objective).collect();
        assert_eq!(seen, from_result);
    }

    #[test]
    fn backend_trait_object_solves() {
        let mut model = IlpModel::new();
        let v = model.new_var(VarTag::Free);
        model.add_constraint(LinearConstraint::lower_bound(vec![(1, v)], 1));
        model.set_objective(vec![(5, v)]);
        let backend: &dyn SolverBackend = &BranchBound;
        let result = backend.solve(&model, &Default::default(), None);
        assert_eq!(backend.name(), "branch-bound");
        assert_eq!(result.objective, Some(5));
    }

    #[test]
    fn agrees_with_oracle_on_random_tiny_models() {
        // A compact version of the acceptance sweep, for fast failure here.
        let mut mismatches = Vec::new();
        for seed in 0..40u64 {
            let (model, _) = crate::gen::random_tiny_model(seed);
            let oracle = brute_force(&model).unwrap();
            let result = solve(&model, &Default::default(), None);
            if oracle.status != result.status || oracle.objective != result.objective {
                mismatches.push(seed);
            }
        }
        assert!(mismatches.is_empty(), "mismatched seeds: {mismatches:?}");
    }
}

use std::time::Instant;

use super::{solver_gap, Incumbent, SolveLimits, SolveResult, SolveStatus, OBJ_TOL};
use crate::model::{MipModel, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vehicle {
    Empty(usize),
    Shared(usize),
}

/// One column seen from the point of view of one of the users it covers.
#[derive(Debug, Clone, Copy)]
struct ServiceOption {
    col: usize,
    cost: f64,
    /// Portion of `cost` charged to this user in the lower bound: the full
    /// cost for x and z, half for a pooled y pickup.
    share: f64,
    vehicle: Vehicle,
    partner: Option<usize>,
}

struct Tables {
    /// Per user: every option, cheapest cost first (ties by column).
    by_cost: Vec<Vec<ServiceOption>>,
    /// Per user: every option, smallest share first (ties by column).
    by_share: Vec<Vec<ServiceOption>>,
}

impl Tables {
    fn new(model: &MipModel) -> Self {
        let mut by_cost: Vec<Vec<ServiceOption>> = vec![Vec::new(); model.p];
        for (col, (var, &cost)) in model.variables.iter().zip(&model.objective).enumerate() {
            let vehicle = match var.kind {
                VarKind::X | VarKind::Y => Vehicle::Empty(var.i),
                VarKind::Z => Vehicle::Shared(var.i),
            };
            match var.k {
                Some(k) => {
                    let half = cost / 2.0;
                    by_cost[var.j].push(ServiceOption { col, cost, share: half, vehicle, partner: Some(k) });
                    by_cost[k].push(ServiceOption { col, cost, share: half, vehicle, partner: Some(var.j) });
                }
                None => by_cost[var.j].push(ServiceOption { col, cost, share: cost, vehicle, partner: None }),
            }
        }
        let mut by_share = by_cost.clone();
        for opts in &mut by_cost {
            opts.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.col.cmp(&b.col)));
        }
        for opts in &mut by_share {
            opts.sort_by(|a, b| a.share.total_cmp(&b.share).then(a.col.cmp(&b.col)));
        }
        Self { by_cost, by_share }
    }
}

struct State {
    covered: Vec<bool>,
    empty_used: Vec<bool>,
    shared_used: Vec<bool>,
    uncovered: usize,
    free_capacity: usize,
}

impl State {
    fn new(model: &MipModel) -> Self {
        Self {
            covered: vec![false; model.p],
            empty_used: vec![false; model.m],
            shared_used: vec![false; model.n],
            uncovered: model.p,
            free_capacity: 2 * model.m + model.n,
        }
    }

    fn vehicle_free(&self, v: Vehicle) -> bool {
        match v {
            Vehicle::Empty(i) => !self.empty_used[i],
            Vehicle::Shared(i) => !self.shared_used[i],
        }
    }

    fn usable(&self, o: &ServiceOption) -> bool {
        self.vehicle_free(o.vehicle) && o.partner.is_none_or(|k| !self.covered[k])
    }

    fn set(&mut self, user: usize, o: &ServiceOption, on: bool) {
        let users = 1 + usize::from(o.partner.is_some());
        self.covered[user] = on;
        if let Some(k) = o.partner {
            self.covered[k] = on;
        }
        let freed = match o.vehicle {
            Vehicle::Empty(i) => {
                self.empty_used[i] = on;
                2
            }
            Vehicle::Shared(i) => {
                self.shared_used[i] = on;
                1
            }
        };
        if on {
            self.uncovered -= users;
            self.free_capacity -= freed;
        } else {
            self.uncovered += users;
            self.free_capacity += freed;
        }
    }

    /// Admissible completion bound, or `None` if some user has no usable option.
    fn completion_bound(&self, tables: &Tables) -> Option<f64> {
        if self.uncovered > self.free_capacity {
            return None;
        }
        let mut total = 0.0;
        for (u, opts) in tables.by_share.iter().enumerate() {
            if self.covered[u] {
                continue;
            }
            total += opts.iter().find(|o| self.usable(o))?.share;
        }
        Some(total)
    }
}

struct Search<'a> {
    model: &'a MipModel,
    tables: Tables,
    limits: SolveLimits,
    start: Instant,
    state: State,
    chosen: Vec<usize>,
    best: f64,
    root_bound: f64,
    incumbents: Vec<Incumbent>,
    nodes: u64,
    aborted: bool,
}

impl Search<'_> {
    fn out_of_budget(&mut self) -> bool {
        if self.aborted {
            return true;
        }
        if self.nodes >= self.limits.max_nodes
            || (self.nodes % 1024 == 0 && self.start.elapsed() >= self.limits.max_time)
        {
            self.aborted = true;
        }
        self.aborted
    }

    fn dfs(&mut self, cost: f64) {
        if self.out_of_budget() {
            return;
        }
        self.nodes += 1;

        let Some(user) = self.state.covered.iter().position(|c| !c) else {
            if cost < self.best - OBJ_TOL {
                self.best = cost;
                let mut cols = self.chosen.clone();
                cols.sort_unstable();
                self.incumbents.push(Incumbent {
                    solution: self.model.assignment_from_columns(cols),
                    objective: cost,
                    found_order: self.incumbents.len() + 1,
                    solver_gap: solver_gap(cost, self.root_bound),
                    node: self.nodes,
                    wall_time: self.start.elapsed(),
                });
            }
            return;
        };

        match self.state.completion_bound(&self.tables) {
            Some(rest) if cost + rest < self.best - OBJ_TOL => {}
            _ => return,
        }

        for idx in 0..self.tables.by_cost[user].len() {
            let opt = self.tables.by_cost[user][idx];
            if !self.state.usable(&opt) {
                continue;
            }
            self.state.set(user, &opt, true);
            self.chosen.push(opt.col);
            self.dfs(cost + opt.cost);
            self.chosen.pop();
            self.state.set(user, &opt, false);
            if self.aborted {
                return;
            }
        }
    }
}

/// Lower bound on the optimal objective before any branching.
///
/// Each uncovered user is charged its cheapest option share (full cost for a
/// solo or add-on ride, half the cost of a pooled pickup), ignoring capacity
/// interactions. Returns 0 for an instance without users.
pub fn root_lower_bound(model: &MipModel) -> f64 {
    let tables = Tables::new(model);
    tables
        .by_share
        .iter()
        .map(|opts| opts.first().map_or(0.0, |o| o.share))
        .sum()
}

/// Depth-first branch-and-bound.
///
/// Branches on the lowest-index uncovered user, trying its usable columns
/// cheapest first, and logs every strictly improving incumbent.
pub fn solve_exact(model: &MipModel, limits: &SolveLimits) -> SolveResult {
    let start = Instant::now();
    let root_bound = root_lower_bound(model);
    if model.p > 2 * model.m + model.n {
        return SolveResult {
            instance_id: model.instance_id.clone(),
            status: SolveStatus::Infeasible,
            incumbents: Vec::new(),
            optimal: None,
            objective: None,
            nodes_explored: 0,
            root_bound,
            proof_gap: 1.0,
        };
    }

    let mut search = Search {
        model,
        tables: Tables::new(model),
        limits: *limits,
        start,
        state: State::new(model),
        chosen: Vec::with_capacity(model.p),
        best: f64::INFINITY,
        root_bound,
        incumbents: Vec::new(),
        nodes: 0,
        aborted: false,
    };
    search.dfs(0.0);

    let best = search.incumbents.last().cloned();
    let status = if search.aborted {
        SolveStatus::Aborted
    } else if best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    let proof_gap = match (&best, status) {
        (_, SolveStatus::Optimal) => 0.0,
        (Some(b), _) => solver_gap(b.objective, root_bound),
        (None, _) => 1.0,
    };
    SolveResult {
        instance_id: model.instance_id.clone(),
        status,
        optimal: (status == SolveStatus::Optimal).then(|| best.as_ref().unwrap().solution.clone()),
        objective: best.as_ref().map(|b| b.objective),
        incumbents: search.incumbents,
        nodes_explored: search.nodes,
        root_bound,
        proof_gap,
    }
}

#[cfg(test)]
pub(crate) fn node_bound(model: &MipModel, fixed: &crate::assignment::Assignment) -> Option<f64> {
    let tables = Tables::new(model);
    let mut state = State::new(model);
    let mut cost = 0.0;
    for col in model.support(fixed)? {
        let var = model.variables[col];
        let opt = tables.by_cost[var.j].iter().find(|o| o.col == col)?;
        if !state.usable(opt) || state.covered[var.j] {
            return None;
        }
        state.set(var.j, opt, true);
        cost += opt.cost;
    }
    Some(cost + state.completion_bound(&tables)?)
}

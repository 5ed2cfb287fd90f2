use std::time::Instant;

use super::{solver_gap, Incumbent, SolveResult, SolveStatus, SolverError, OBJ_TOL};
use crate::assignment::{evaluate_objective, Assignment};
use crate::instance::DispatchInstance;

pub const MAX_BRUTE_VEHICLES: usize = 6;
pub const MAX_BRUTE_USERS: usize = 6;

struct Enumerator<'a, F> {
    m: usize,
    n: usize,
    covered: Vec<bool>,
    empty_used: Vec<bool>,
    shared_used: Vec<bool>,
    current: Assignment,
    visit: &'a mut F,
}

impl<F: FnMut(&Assignment)> Enumerator<'_, F> {
    fn run(&mut self) {
        let Some(j) = self.covered.iter().position(|c| !c) else {
            (self.visit)(&self.current);
            return;
        };
        self.covered[j] = true;
        for i in 0..self.m {
            if self.empty_used[i] {
                continue;
            }
            self.empty_used[i] = true;

            self.current.x.insert((i, j));
            self.run();
            self.current.x.remove(&(i, j));

            for k in 0..self.covered.len() {
                if self.covered[k] {
                    continue;
                }
                self.covered[k] = true;
                for triple in [(i, j, k), (i, k, j)] {
                    self.current.y.insert(triple);
                    self.run();
                    self.current.y.remove(&triple);
                }
                self.covered[k] = false;
            }

            self.empty_used[i] = false;
        }
        for i in 0..self.n {
            if self.shared_used[i] {
                continue;
            }
            self.shared_used[i] = true;
            self.current.z.insert((i, j));
            self.run();
            self.current.z.remove(&(i, j));
            self.shared_used[i] = false;
        }
        self.covered[j] = false;
    }
}

/// Calls `visit` once for every assignment that serves each user exactly once
/// within vehicle capacities. No size limit is enforced.
pub fn enumerate_feasible(inst: &DispatchInstance, mut visit: impl FnMut(&Assignment)) {
    let mut e = Enumerator {
        m: inst.m(),
        n: inst.n(),
        covered: vec![false; inst.p()],
        empty_used: vec![false; inst.m()],
        shared_used: vec![false; inst.n()],
        current: Assignment::new(),
        visit: &mut visit,
    };
    e.run();
}

/// Exhaustive optimum by user-by-user enumeration.
///
/// Incumbents are the strictly improving solutions in enumeration order; their
/// gaps are measured against a zero lower bound.
pub fn brute_force(inst: &DispatchInstance) -> Result<SolveResult, SolverError> {
    let vehicles = inst.m() + inst.n();
    if vehicles > MAX_BRUTE_VEHICLES || inst.p() > MAX_BRUTE_USERS {
        return Err(SolverError::CapacityExceeded {
            vehicles,
            users: inst.p(),
        });
    }
    let start = Instant::now();
    let mut incumbents: Vec<Incumbent> = Vec::new();
    let mut visited = 0u64;
    enumerate_feasible(inst, |sol| {
        visited += 1;
        let cost = evaluate_objective(inst, sol).expect("enumerated indices are in range");
        if incumbents.last().is_none_or(|b| cost < b.objective - OBJ_TOL) {
            incumbents.push(Incumbent {
                solution: sol.clone(),
                objective: cost,
                found_order: incumbents.len() + 1,
                solver_gap: solver_gap(cost, 0.0),
                node: visited,
                wall_time: start.elapsed(),
            });
        }
    });
    let best = incumbents.last();
    let status = if best.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Infeasible
    };
    Ok(SolveResult {
        instance_id: inst.id.clone(),
        status,
        optimal: best.map(|b| b.solution.clone()),
        objective: best.map(|b| b.objective),
        proof_gap: if best.is_some() { 0.0 } else { 1.0 },
        incumbents,
        nodes_explored: visited,
        root_bound: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::validate::validate;

    #[test]
    fn one_vehicle_two_users() {
        let inst = DispatchInstance::new(
            "bf",
            vec![Point::new(0.0, 0.0)],
            vec![],
            vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)],
        );
        let mut seen = Vec::new();
        enumerate_feasible(&inst, |s| seen.push((s.clone(), evaluate_objective(&inst, s).unwrap())));
        assert_eq!(seen.len(), 2);
        assert!(seen.iter().all(|(s, _)| s.x.is_empty()));
        let costs: Vec<f64> = seen.iter().map(|(_, c)| *c).collect();
        assert_eq!(costs, vec![2.0, 3.0]);
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.objective, Some(2.0));
        assert_eq!(r.optimal.unwrap().y.into_iter().collect::<Vec<_>>(), vec![(0, 0, 1)]);
    }

    #[test]
    fn no_users() {
        let inst = DispatchInstance::new("p0", vec![Point::new(0.0, 0.0)], vec![], vec![]);
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(0.0));
        assert!(r.optimal.unwrap().is_empty());
    }

    #[test]
    fn every_enumerated_solution_validates() {
        let pt = |i: usize| Point::new(i as f64, (i * 7 % 5) as f64);
        let inst = DispatchInstance::new("v", vec![pt(0), pt(1)], vec![pt(2)], (3..7).map(pt).collect());
        let mut count = 0;
        enumerate_feasible(&inst, |s| {
            count += 1;
            assert!(validate(&inst, s).feasible, "{s:?}");
        });
        assert!(count > 0);
    }

    #[test]
    fn too_large() {
        let inst = DispatchInstance::new("big", vec![Point::new(0.0, 0.0); 7], vec![], vec![]);
        assert!(matches!(brute_force(&inst), Err(SolverError::CapacityExceeded { vehicles: 7, .. })));
    }

    #[test]
    fn over_capacity_is_infeasible() {
        let inst = DispatchInstance::new("inf", vec![], vec![Point::new(0.0, 0.0)], vec![Point::new(1.0, 0.0); 2]);
        let r = brute_force(&inst).unwrap();
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.incumbents.is_empty());
    }
}

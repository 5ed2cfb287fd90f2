use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{gap_record, score_gaps, EvalError, GapRecord, ScoreReport};
use crate::instance::DispatchInstance;
use crate::proposer::Proposer;
use crate::schedule::{run_schedule, ScheduleConfig, TemperatureSchedule};
use crate::seeds;
use crate::solver::SolveResult;

/// Named in every report so scores are not read as commercial-solver comparisons.
pub const REFERENCE_SOLVER: &str = "in-repo branch-and-bound (best of first 3 incumbents)";

/// Width of the m+n+p buckets in the scale CSV.
pub const SCALE_BUCKET: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub schedules: Vec<TemperatureSchedule>,
    pub seed: u64,
    pub schedule: ScheduleConfig,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self { schedules: TemperatureSchedule::all(), seed: 0, schedule: ScheduleConfig::default(), jobs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub instance_id: String,
    pub scale: usize,
    pub schedule: String,
    pub best_objective: Option<f64>,
    pub optimal: Option<f64>,
    pub gap: Option<f64>,
    pub reference_gap: Option<f64>,
    pub win: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    /// Lower edge of the m+n+p bucket.
    pub scale: usize,
    /// Mean over instances in the bucket with a feasible proposal.
    pub proposer_gap: Option<f64>,
    pub reference_gap: f64,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub reference_solver: String,
    pub seed: u64,
    pub instances: usize,
    pub errors: usize,
    pub rows: Vec<AblationRow>,
    pub scores: Vec<ScoreReport>,
    /// Schedule the scale rows were computed from.
    pub scale_schedule: String,
    pub scale_rows: Vec<ScaleRow>,
}

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

impl AblationReport {
    /// `instance_id,scale,schedule,best_objective,optimal,gap,win,error`
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["instance_id", "scale", "schedule", "best_objective", "optimal", "gap", "win", "error"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.instance_id.clone(),
                r.scale.to_string(),
                r.schedule.clone(),
                opt_num(r.best_objective),
                opt_num(r.optimal),
                opt_num(r.gap),
                r.win.map(|b| u8::from(b).to_string()).unwrap_or_default(),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// `scale,proposer_gap,reference_gap`
    pub fn scale_csv(&self) -> String {
        let mut out = String::from("scale,proposer_gap,reference_gap\n");
        for r in &self.scale_rows {
            out.push_str(&format!("{},{},{:?}\n", r.scale, opt_num(r.proposer_gap), r.reference_gap));
        }
        out
    }

    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            schedule: &'a str,
            average_score: f64,
            wins: usize,
            count: usize,
        }
        #[derive(Serialize)]
        struct Summary<'a> {
            reference_solver: &'a str,
            seed: u64,
            instances: usize,
            errors: usize,
            schedules: Vec<Entry<'a>>,
        }
        let schedules = self
            .scores
            .iter()
            .map(|s| Entry {
                schedule: &s.schedule,
                average_score: s.average_score,
                wins: s.wins.iter().filter(|w| **w).count(),
                count: s.count,
            })
            .collect();
        let summary = Summary {
            reference_solver: &self.reference_solver,
            seed: self.seed,
            instances: self.instances,
            errors: self.errors,
            schedules,
        };
        serde_json::to_string_pretty(&summary).expect("summary serialization") + "\n"
    }

    /// Strategy/score table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("Average scores for different temperature strategies\n");
        out.push_str(&format!("reference: {}\n", self.reference_solver));
        out.push_str(&format!("instances: {} ({} with errors)\n\n", self.instances, self.errors));
        out.push_str(&format!("{:<16} {:>7} {:>9}\n", "strategy", "score", "wins"));
        for s in &self.scores {
            let wins = s.wins.iter().filter(|w| **w).count();
            out.push_str(&format!("{:<16} {:>7.3} {:>4}/{:<4}\n", s.schedule, s.average_score, wins, s.count));
        }
        out
    }

    pub fn score_of(&self, schedule: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.schedule == schedule).map(|s| s.average_score)
    }
}

fn rows_for(
    inst: &DispatchInstance,
    solve: &SolveResult,
    proposer: &dyn Proposer,
    cfg: &AblationConfig,
) -> Vec<(AblationRow, Option<GapRecord>)> {
    let scale = inst.scale();
    let seed = seeds::derive(cfg.seed, &format!("{}/{}", seeds::PROPOSER, inst.id));
    cfg.schedules
        .iter()
        .map(|sched| {
            let mut row = AblationRow {
                instance_id: inst.id.clone(),
                scale,
                schedule: sched.name.clone(),
                best_objective: None,
                optimal: solve.objective.filter(|_| solve.is_optimal()),
                gap: None,
                reference_gap: None,
                win: None,
                error: None,
            };
            if row.optimal.is_none() {
                row.error = Some(EvalError::NotOptimal(inst.id.clone()).to_string());
                return (row, None);
            }
            let run = run_schedule(inst, sched, proposer, row.optimal, seed, &cfg.schedule);
            row.best_objective = run.best.as_ref().map(|b| b.objective);
            if let Some(msg) = &run.aborted {
                row.error = Some(msg.clone());
                return (row, None);
            }
            match gap_record(&run, solve, scale) {
                Ok(rec) => {
                    row.gap = rec.proposer_best_gap;
                    row.reference_gap = Some(rec.reference_gap);
                    row.win = Some(rec.win());
                    (row, Some(rec))
                }
                Err(e) => {
                    row.error = Some(e.to_string());
                    (row, None)
                }
            }
        })
        .collect()
}

/// Runs every schedule on every solved instance and aggregates scores.
///
/// Instances whose reference solve is not optimal, or whose run fails, get an
/// `error` entry and are left out of the averages.
pub fn ablation_report(
    solved: &[(DispatchInstance, SolveResult)],
    proposer: &dyn Proposer,
    cfg: &AblationConfig,
) -> Result<AblationReport, EvalError> {
    if solved.is_empty() || cfg.schedules.is_empty() {
        return Err(EvalError::Empty);
    }
    let results: Vec<Mutex<Vec<(AblationRow, Option<GapRecord>)>>> =
        solved.iter().map(|_| Mutex::new(Vec::new())).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..cfg.jobs.clamp(1, solved.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((inst, solve)) = solved.get(i) else { break };
                *results[i].lock().expect("result slot") = rows_for(inst, solve, proposer, cfg);
            });
        }
    });
    let results: Vec<Vec<(AblationRow, Option<GapRecord>)>> =
        results.into_iter().map(|m| m.into_inner().expect("result slot")).collect();

    let errored = results.iter().filter(|r| r.iter().any(|(row, _)| row.error.is_some())).count();
    let clean: Vec<&Vec<(AblationRow, Option<GapRecord>)>> =
        results.iter().filter(|r| r.iter().all(|(row, _)| row.error.is_none())).collect();

    let mut scores = Vec::new();
    for (k, sched) in cfg.schedules.iter().enumerate() {
        let records: Vec<GapRecord> = clean.iter().filter_map(|r| r[k].1.clone()).collect();
        scores.push(match score_gaps(&sched.name, &records) {
            Ok(s) => s,
            Err(_) => ScoreReport {
                schedule: sched.name.clone(),
                instance_refs: vec![],
                wins: vec![],
                average_score: 0.0,
                count: 0,
            },
        });
    }

    let scale_k = cfg.schedules.iter().position(|s| s.name == "fall").unwrap_or(0);
    let mut buckets: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &clean {
        if let Some(rec) = &r[scale_k].1 {
            let entry = buckets.entry(rec.scale / SCALE_BUCKET * SCALE_BUCKET).or_default();
            entry.0.extend(rec.proposer_best_gap);
            entry.1.push(rec.reference_gap);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let scale_rows = buckets
        .into_iter()
        .map(|(scale, (p, r))| ScaleRow {
            scale,
            proposer_gap: (!p.is_empty()).then(|| mean(&p)),
            reference_gap: mean(&r),
            instances: r.len(),
        })
        .collect();

    Ok(AblationReport {
        reference_solver: REFERENCE_SOLVER.to_string(),
        seed: cfg.seed,
        instances: solved.len(),
        errors: errored,
        rows: results.into_iter().flatten().map(|(row, _)| row).collect(),
        scores,
        scale_schedule: cfg.schedules[scale_k].name.clone(),
        scale_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::model::{build_model, random_instance};
    use crate::proposer::{MockProposer, StochasticProposer};
    use crate::solver::{solve_exact, SolveLimits};
    use rand::SeedableRng;

    fn battery(count: usize, size: usize, seed: u64) -> Vec<(DispatchInstance, SolveResult)> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                let inst = random_instance(format!("inst-{i:04}"), size, size, size, Point::new(0.0, 0.0), Point::new(100.0, 100.0), &mut rng);
                let solve = solve_exact(&build_model(&inst).0, &SolveLimits::default());
                (inst, solve)
            })
            .collect()
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(ablation_report(&[], &StochasticProposer, &AblationConfig::default()), Err(EvalError::Empty));
    }

    #[test]
    fn jobs_do_not_change_the_report() {
        let solved = battery(12, 4, 1);
        let one = ablation_report(&solved, &StochasticProposer, &AblationConfig { seed: 3, ..Default::default() }).unwrap();
        let four = ablation_report(&solved, &StochasticProposer, &AblationConfig { seed: 3, jobs: 4, ..Default::default() }).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.rows.len(), 12 * 5);
        assert_eq!(one.errors, 0);
        assert!(one.rows_csv().starts_with("instance_id,scale,schedule,best_objective,optimal,gap,win,error\n"));
        assert_eq!(one.rows_csv().lines().count(), 61);
        assert!(one.scale_csv().starts_with("scale,proposer_gap,reference_gap\n"));
        assert!(one.table().contains(REFERENCE_SOLVER));
        for s in &one.scores {
            let recomputed = s.wins.iter().filter(|w| **w).count() as f64 / s.count as f64;
            assert_eq!(s.average_score, recomputed);
        }
    }

    #[test]
    fn both_gaps_use_the_same_optimum() {
        let solved = battery(8, 3, 2);
        let report = ablation_report(&solved, &StochasticProposer, &AblationConfig::default()).unwrap();
        for row in &report.rows {
            let (inst, solve) = solved.iter().find(|(i, _)| i.id == row.instance_id).unwrap();
            assert_eq!(row.optimal, solve.objective);
            if let (Some(b), Some(g)) = (row.best_objective, row.gap) {
                assert!((g - super::super::eval_gap(b, solve.objective.unwrap()).unwrap()).abs() < 1e-15);
            }
            assert_eq!(row.scale, inst.scale());
        }
    }

    #[test]
    fn mock_proposer_errors_are_reported_per_row() {
        // One fixture: every three-round schedule runs out after round 0.
        let solved = battery(2, 2, 4);
        let mock = MockProposer::new(vec!["x: (0, 0) (1, 1)\n".into()]);
        let report = ablation_report(&solved, &mock, &AblationConfig::default()).unwrap();
        assert_eq!(report.errors, 2);
        let errs = report.rows.iter().filter(|r| r.error.is_some()).count();
        assert_eq!(errs, 2 * 4);
        assert!(report.rows_csv().contains("no fixture for round 1"));
    }
}

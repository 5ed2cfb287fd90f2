//! Optimality gaps, the solution quality score and the ablation harness.

mod ablation;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schedule::ScheduleRun;
use crate::solver::{first_k_incumbents, SolveResult, OBJ_TOL};

pub use ablation::{ablation_report, AblationConfig, AblationReport, AblationRow, ScaleRow, REFERENCE_SOLVER};

/// Number of early incumbents the proposer is compared against.
pub const REFERENCE_INCUMBENTS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("objective {objective} is below the optimum {optimal}")]
    BelowOptimum { objective: f64, optimal: f64 },
    #[error("objective {0} is negative or not finite")]
    BadObjective(f64),
    #[error("instance {0} has no proven optimum")]
    NotOptimal(String),
    #[error("nothing to score")]
    Empty,
    #[error("test fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
}

/// `(objective - optimal) / objective`, or 0 for a zero objective.
pub fn eval_gap(objective: f64, optimal: f64) -> Result<f64, EvalError> {
    if !(objective.is_finite() && objective >= 0.0) {
        return Err(EvalError::BadObjective(objective));
    }
    if objective < optimal - OBJ_TOL {
        return Err(EvalError::BelowOptimum { objective, optimal });
    }
    if objective == 0.0 {
        return Ok(0.0);
    }
    Ok(((objective - optimal) / objective).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub instance_ref: String,
    /// Absent when no round produced a feasible solution.
    pub proposer_best_gap: Option<f64>,
    pub reference_gap: f64,
    pub scale: usize,
    /// The optimum both gaps were measured against.
    pub optimal: f64,
}

impl GapRecord {
    /// Strictly smaller gap; gaps within the objective tolerance tie, and ties lose.
    pub fn win(&self) -> bool {
        self.proposer_best_gap.is_some_and(|g| g < self.reference_gap - OBJ_TOL)
    }
}

/// Gaps of a schedule run and of the solver's early incumbents against the
/// solver's proven optimum.
pub fn gap_record(run: &ScheduleRun, solve: &SolveResult, scale: usize) -> Result<GapRecord, EvalError> {
    let optimal = match (solve.is_optimal(), solve.objective) {
        (true, Some(o)) => o,
        _ => return Err(EvalError::NotOptimal(solve.instance_id.clone())),
    };
    let proposer_best_gap = run.best.as_ref().map(|b| eval_gap(b.objective, optimal)).transpose()?;
    let mut reference_gap = f64::INFINITY;
    for inc in first_k_incumbents(solve, REFERENCE_INCUMBENTS) {
        reference_gap = reference_gap.min(eval_gap(inc.objective, optimal)?);
    }
    if !reference_gap.is_finite() {
        // Only an empty instance has no incumbent, and its optimum is trivially found.
        reference_gap = 0.0;
    }
    Ok(GapRecord { instance_ref: run.instance_ref.clone(), proposer_best_gap, reference_gap, scale, optimal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub schedule: String,
    pub instance_refs: Vec<String>,
    pub wins: Vec<bool>,
    pub average_score: f64,
    pub count: usize,
}

pub fn score_gaps(schedule: &str, records: &[GapRecord]) -> Result<ScoreReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let wins: Vec<bool> = records.iter().map(GapRecord::win).collect();
    let won = wins.iter().filter(|w| **w).count();
    Ok(ScoreReport {
        schedule: schedule.to_string(),
        instance_refs: records.iter().map(|r| r.instance_ref.clone()).collect(),
        average_score: won as f64 / records.len() as f64,
        count: records.len(),
        wins,
    })
}

/// Fraction of instances where the run's best gap beats the best of the
/// solver's first three incumbents. Runs without a feasible solution lose.
pub fn quality_score(schedule: &str, runs: &[(ScheduleRun, SolveResult)]) -> Result<ScoreReport, EvalError> {
    let records = runs
        .iter()
        .map(|(run, solve)| gap_record(run, solve, 0))
        .collect::<Result<Vec<_>, _>>()?;
    score_gaps(schedule, &records)
}

/// Seeded shuffle, then the first `round(fraction * N)` items become the test set.
/// Returns `(train, test)`.
pub fn split_dataset<T: Clone>(items: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), EvalError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(EvalError::BadFraction(test_fraction));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_fraction * items.len() as f64).round() as usize;
    let test = order[..n_test].iter().map(|&i| items[i].clone()).collect();
    let train = order[n_test..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_gaps() {
        // (objective, optimal, expected gap)
        let table: [(f64, f64, f64); 20] = [
            (17.5, 17.5, 0.0),
            (24.36, 0.0, 1.0),
            (20.0, 15.0, 0.25),
            (0.0, 0.0, 0.0),
            (10.0, 5.0, 0.5),
            (100.0, 99.0, 0.01),
            (8.0, 6.0, 0.25),
            (4.0, 1.0, 0.75),
            (50.0, 40.0, 0.2),
            (12.5, 10.0, 0.2),
            (3.0, 2.0, 1.0 / 3.0),
            (9.0, 3.0, 2.0 / 3.0),
            (1.0, 0.0, 1.0),
            (16.0, 12.0, 0.25),
            (7.0, 7.0, 0.0),
            (40.0, 30.0, 0.25),
            (5.0, 4.5, 0.1),
            (2.5, 2.0, 0.2),
            (1000.0, 1.0, 0.999),
            (6.4, 4.8, 0.25),
        ];
        for (obj, opt, want) in table {
            let got = eval_gap(obj, opt).unwrap();
            assert!((got - want).abs() < 1e-12, "gap({obj}, {opt}) = {got}, want {want}");
        }
    }

    #[test]
    fn gap_errors() {
        assert!(matches!(eval_gap(10.0, 12.0), Err(EvalError::BelowOptimum { .. })));
        assert!(matches!(eval_gap(-1.0, -2.0), Err(EvalError::BadObjective(_))));
        assert!(matches!(eval_gap(f64::NAN, 0.0), Err(EvalError::BadObjective(_))));
        // Within tolerance of the optimum counts as optimal.
        assert_eq!(eval_gap(5.0 - 1e-12, 5.0).unwrap(), 0.0);
    }

    fn rec(id: &str, proposer: Option<f64>, reference: f64) -> GapRecord {
        GapRecord { instance_ref: id.into(), proposer_best_gap: proposer, reference_gap: reference, scale: 9, optimal: 1.0 }
    }

    #[test]
    fn hand_scored_fixture() {
        let records = [rec("a", Some(0.0), 0.2), rec("b", Some(0.1), 0.1), rec("c", Some(0.3), 0.2), rec("d", None, 0.0)];
        let report = score_gaps("fall", &records).unwrap();
        assert_eq!(report.wins, [true, false, false, false]);
        assert_eq!(report.average_score, 0.25);
        assert_eq!(report.count, 4);

        let perfect = [rec("a", Some(0.0), 0.1), rec("b", Some(0.0), 0.3)];
        assert_eq!(score_gaps("fall", &perfect).unwrap().average_score, 1.0);
        assert_eq!(score_gaps("fall", &[]), Err(EvalError::Empty));
    }

    #[test]
    fn dataset_split() {
        let items: Vec<u32> = (0..12_500).collect();
        let (train, test) = split_dataset(&items, 0.1, 3).unwrap();
        assert_eq!(test.len(), 1250);
        assert_eq!(train.len(), 11_250);
        let mut all: Vec<u32> = train.iter().chain(&test).copied().collect();
        all.sort();
        assert_eq!(all, items);
        assert_eq!(split_dataset(&items, 0.1, 3).unwrap(), (train, test));

        let (_, small) = split_dataset(&items[..10], 0.1, 0).unwrap();
        assert_eq!(small.len(), 1);
        assert!(split_dataset(&items, 1.0, 0).is_err());
        assert!(split_dataset(&items, 0.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn gap_properties(x in 0.0..1e6f64, opt in 1e-3..1e3f64, d in 1e-3..1e3f64) {
            prop_assert_eq!(eval_gap(x, x).unwrap(), 0.0);
            let a = eval_gap(opt + d, opt).unwrap();
            let b = eval_gap(opt + 2.0 * d, opt).unwrap();
            prop_assert!(b > a);
            prop_assert!((0.0..1.0).contains(&a));
        }

        #[test]
        fn score_ignores_order(gaps in prop::collection::vec((prop::option::of(0.0..1.0f64), 0.0..1.0f64), 1..30), rot in 0usize..30) {
            let records: Vec<GapRecord> = gaps.iter().enumerate().map(|(i, (p, r))| rec(&i.to_string(), *p, *r)).collect();
            let mut shuffled = records.clone();
            let len = shuffled.len();
            shuffled.rotate_left(rot % len);
            shuffled.reverse();
            prop_assert_eq!(
                score_gaps("s", &records).unwrap().average_score,
                score_gaps("s", &shuffled).unwrap().average_score
            );
        }
    }
}

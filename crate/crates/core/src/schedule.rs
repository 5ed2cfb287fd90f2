//! Multi-round refinement: each round prompts with the best solutions found so
//! far and samples at the round's temperature.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{evaluate_objective, Assignment};
use crate::eval::eval_gap;
use crate::instance::DispatchInstance;
use crate::model::build_model;
use crate::prompt::syntax::as_lines;
use crate::prompt::{parse_solution, render_prompt, Exemplar, PromptBundle};
use crate::proposer::{Proposer, ProposerRequest};
use crate::seeds;
use crate::solver::{root_lower_bound, solver_gap, OBJ_TOL};
use crate::validate::validate;

pub const SCHEDULE_NAMES: [&str; 5] = ["fall", "rise", "rise_then_fall", "constant", "single"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSchedule {
    pub name: String,
    pub temperatures: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("unknown schedule {0:?}; expected one of fall, rise, rise_then_fall, constant, single")]
    Unknown(String),
    #[error("schedule {name:?} has no rounds")]
    Empty { name: String },
    #[error("schedule {name:?} has invalid temperature {value}")]
    BadTemperature { name: String, value: f64 },
}

pub fn make_schedule(name: &str) -> Result<TemperatureSchedule, ScheduleError> {
    let temperatures = match name {
        "fall" => vec![1.0, 0.1, 0.01],
        "rise" => vec![0.01, 0.1, 1.0],
        "rise_then_fall" => vec![0.01, 1.0, 0.01],
        "constant" => vec![0.01, 0.01, 0.01],
        "single" => vec![0.01],
        other => return Err(ScheduleError::Unknown(other.to_string())),
    };
    Ok(TemperatureSchedule { name: name.to_string(), temperatures })
}

impl TemperatureSchedule {
    /// An explicit temperature list under a caller-chosen name.
    pub fn custom(name: impl Into<String>, temperatures: Vec<f64>) -> Result<Self, ScheduleError> {
        let name = name.into();
        if temperatures.is_empty() {
            return Err(ScheduleError::Empty { name });
        }
        if let Some(&value) = temperatures.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(ScheduleError::BadTemperature { name, value });
        }
        Ok(Self { name, temperatures })
    }

    pub fn all() -> Vec<Self> {
        SCHEDULE_NAMES.iter().map(|n| make_schedule(n).expect("built-in name")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleConfig {
    pub max_exemplars: usize,
    /// Stop once a round reaches the known optimum.
    pub early_stop: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { max_exemplars: 3, early_stop: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseOutcome {
    Parsed { lines: Vec<String> },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub temperature: f64,
    pub prompt_sha256: String,
    /// Objectives of the exemplars shown in this round's prompt, best first.
    pub exemplar_objectives: Vec<f64>,
    pub raw_text: String,
    pub parse: ParseOutcome,
    pub feasible: bool,
    /// Constraint violations when the parsed solution is infeasible.
    pub violations: Vec<String>,
    pub objective: Option<f64>,
    pub eval_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSolution {
    #[serde(with = "as_lines")]
    pub assignment: Assignment,
    pub objective: f64,
    pub eval_gap: Option<f64>,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRun {
    pub instance_ref: String,
    pub schedule: TemperatureSchedule,
    pub rounds: Vec<RoundRecord>,
    pub best: Option<BestSolution>,
    /// Set when a proposer or consistency error ended the run early.
    pub aborted: Option<String>,
}

impl ScheduleRun {
    pub fn failures(&self) -> usize {
        self.rounds.iter().filter(|r| !r.feasible).count()
    }
}

/// Runs `sched` on `inst`, calling `on_prompt` with every rendered prompt.
///
/// Round `t` shows up to `cfg.max_exemplars` distinct feasible solutions from
/// earlier rounds, lowest objective first, each with its gap to the model's
/// root lower bound. Unparsable and infeasible rounds are recorded and use up
/// their round.
pub fn run_schedule_with(
    inst: &DispatchInstance,
    sched: &TemperatureSchedule,
    proposer: &dyn Proposer,
    optimal_ref: Option<f64>,
    seed: u64,
    cfg: &ScheduleConfig,
    mut on_prompt: impl FnMut(usize, &PromptBundle),
) -> ScheduleRun {
    let (model, _) = build_model(inst);
    let bound = root_lower_bound(&model);
    let mut run = ScheduleRun {
        instance_ref: inst.id.clone(),
        schedule: sched.clone(),
        rounds: Vec::new(),
        best: None,
        aborted: None,
    };
    // Distinct feasible solutions so far, kept sorted by objective.
    let mut pool: Vec<(f64, Assignment)> = Vec::new();

    for (round, &temperature) in sched.temperatures.iter().enumerate() {
        let exemplars: Vec<Exemplar> = pool
            .iter()
            .take(cfg.max_exemplars)
            .map(|(objective, a)| Exemplar {
                assignment: a.clone(),
                gap: solver_gap(*objective, bound),
                objective: *objective,
            })
            .collect();
        let prompt = render_prompt(inst, &exemplars).expect("pooled exemplars are feasible");
        on_prompt(round, &prompt);

        let request = ProposerRequest {
            prompt: &prompt,
            instance: inst,
            temperature,
            seed: Some(seeds::derive_indexed(seed, seeds::PROPOSER, round as u64)),
            round_index: round,
        };
        let response = match proposer.propose(&request) {
            Ok(r) => r,
            Err(e) => {
                run.aborted = Some(format!("round {round}: {e}"));
                break;
            }
        };

        let mut record = RoundRecord {
            round,
            temperature,
            prompt_sha256: prompt.sha256(),
            exemplar_objectives: exemplars.iter().map(|e| e.objective).collect(),
            raw_text: response.text,
            parse: ParseOutcome::Failed { error: String::new() },
            feasible: false,
            violations: Vec::new(),
            objective: None,
            eval_gap: None,
        };
        let parsed = match parse_solution(&record.raw_text, inst) {
            Ok(p) => p,
            Err(e) => {
                record.parse = ParseOutcome::Failed { error: e.to_string() };
                run.rounds.push(record);
                continue;
            }
        };
        record.parse = ParseOutcome::Parsed { lines: parsed.raw_lines };
        let report = validate(inst, &parsed.assignment);
        if !report.feasible {
            record.violations = report.violations.into_iter().map(|v| v.detail).collect();
            run.rounds.push(record);
            continue;
        }
        let objective = evaluate_objective(inst, &parsed.assignment).expect("validated indices");
        record.feasible = true;
        record.objective = Some(objective);
        if let Some(opt) = optimal_ref {
            match eval_gap(objective, opt) {
                Ok(g) => record.eval_gap = Some(g),
                Err(e) => {
                    run.rounds.push(record);
                    run.aborted = Some(format!("round {round}: {e}"));
                    break;
                }
            }
        }
        let gap = record.eval_gap;
        run.rounds.push(record);

        if run.best.as_ref().is_none_or(|b| objective < b.objective - OBJ_TOL) {
            run.best = Some(BestSolution { assignment: parsed.assignment.clone(), objective, eval_gap: gap, round });
        }
        if !pool.iter().any(|(_, a)| *a == parsed.assignment) {
            let at = pool.partition_point(|(o, _)| *o <= objective);
            pool.insert(at, (objective, parsed.assignment));
        }
        if cfg.early_stop && gap.is_some_and(|g| g <= OBJ_TOL) {
            break;
        }
    }
    run
}

pub fn run_schedule(
    inst: &DispatchInstance,
    sched: &TemperatureSchedule,
    proposer: &dyn Proposer,
    optimal_ref: Option<f64>,
    seed: u64,
    cfg: &ScheduleConfig,
) -> ScheduleRun {
    run_schedule_with(inst, sched, proposer, optimal_ref, seed, cfg, |_, _| {})
}

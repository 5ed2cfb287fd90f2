//! Prompt rendering and proposer-output parsing.
//!
//! The template text lives in `assets/prompt_template.txt` and the embedded
//! model formulation in `assets/carpool_model.tex`; rendering only fills the
//! `{{MODEL_LATEX}}`, `{{COORDINATES}}` and `{{EXEMPLARS}}` slots.

mod parse;
pub mod syntax;

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assignment::Assignment;
use crate::geometry::Point;
use crate::instance::DispatchInstance;
use crate::validate::{validate, Violation};

pub use parse::{parse_solution, ParseError, ParsedSolution};

pub const TEMPLATE: &str = include_str!("../../assets/prompt_template.txt");
pub const MODEL_LATEX: &str = include_str!("../../assets/carpool_model.tex");

pub const EXEMPLAR_START: &str = "one of solutions starts:";
pub const EXEMPLAR_END: &str = "one of solutions ends";

/// A previous solution shown to the proposer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    #[serde(with = "syntax::as_lines")]
    pub assignment: Assignment,
    pub gap: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub full_text: String,
    pub instance_ref: String,
    pub exemplars: Vec<Exemplar>,
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("exemplar {index} is not a feasible solution of instance {instance}: {}", summarize(.violations))]
    InvalidExemplar {
        index: usize,
        instance: String,
        violations: Vec<Violation>,
    },
    #[error("writing prompt to {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.detail.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Two decimals, ties to even on the exact binary value, no negative zero.
pub fn fmt2(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Gap rounded to 4 decimals in shortest round-trip form (`1.0`, `0.25`).
pub fn fmt_gap(g: f64) -> String {
    let r = (g * 1e4).round() / 1e4;
    format!("{:?}", if r == 0.0 { 0.0 } else { r })
}

fn coordinate_line(label: &str, points: &[Point]) -> String {
    let mut line = format!("{label}:");
    for (i, p) in points.iter().enumerate() {
        let _ = write!(line, " ({i}) ({}, {}),", fmt2(p.x), fmt2(p.y));
    }
    line
}

/// The three coordinate listings, one per line.
pub fn coordinate_section(inst: &DispatchInstance) -> String {
    format!(
        "{}\n{}\n{}\n",
        coordinate_line("EMPTY VEHICLES", &inst.empty_vehicles),
        coordinate_line("ONE ORDER VEHICLES", &inst.one_order_vehicles),
        coordinate_line("USERS", &inst.users),
    )
}

/// One `one of solutions starts:` ... `one of solutions ends` block.
pub fn exemplar_block(ex: &Exemplar) -> String {
    let [x, y, z] = syntax::solution_lines(&ex.assignment);
    format!(
        "{EXEMPLAR_START}\n{x}\n{y}\n{z}\ngap: {}, objective value: {}\n{EXEMPLAR_END}\n",
        fmt_gap(ex.gap),
        fmt2(ex.objective)
    )
}

pub fn render_prompt(
    inst: &DispatchInstance,
    exemplars: &[Exemplar],
) -> Result<PromptBundle, PromptError> {
    for (index, ex) in exemplars.iter().enumerate() {
        let report = validate(inst, &ex.assignment);
        if !report.feasible {
            return Err(PromptError::InvalidExemplar {
                index,
                instance: inst.id.clone(),
                violations: report.violations,
            });
        }
    }
    let blocks: String = exemplars
        .iter()
        .map(|ex| format!("\n{}", exemplar_block(ex)))
        .collect();
    let full_text = TEMPLATE
        .replace("{{MODEL_LATEX}}", MODEL_LATEX.trim_end())
        .replace("{{COORDINATES}}\n", &coordinate_section(inst))
        .replace("{{EXEMPLARS}}\n", &blocks);
    Ok(PromptBundle {
        full_text,
        instance_ref: inst.id.clone(),
        exemplars: exemplars.to_vec(),
    })
}

#[derive(Serialize)]
struct Sidecar<'a> {
    instance_ref: &'a str,
    sha256: String,
    exemplars: &'a [Exemplar],
}

impl PromptBundle {
    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.full_text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar {
            instance_ref: &self.instance_ref,
            sha256: self.sha256(),
            exemplars: &self.exemplars,
        })
        .expect("sidecar serialization is infallible")
    }

    /// Writes `<stem>.txt` and `<stem>.json` into `dir`; returns both paths.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf), PromptError> {
        let txt = dir.join(format!("{stem}.txt"));
        let json = dir.join(format!("{stem}.json"));
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PromptError::Io { path, source }
        };
        std::fs::write(&txt, &self.full_text).map_err(io_err(&txt))?;
        std::fs::write(&json, self.sidecar_json() + "\n").map_err(io_err(&json))?;
        Ok((txt, json))
    }
}

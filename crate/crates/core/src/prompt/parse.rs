use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::syntax::{parse_tuples, SyntaxError};
use crate::assignment::Assignment;
use crate::instance::DispatchInstance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedSolution {
    pub assignment: Assignment,
    /// The x/y/z lines the assignment was read from.
    pub raw_lines: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("no x:/y:/z: solution lines found")]
    NoSolution,
    #[error("in {tag} line: {source}")]
    Syntax {
        tag: char,
        #[source]
        source: SyntaxError,
    },
    #[error("{what} index {index} out of bounds (len {len}) in {tag} line")]
    OutOfBounds {
        tag: char,
        what: &'static str,
        index: usize,
        len: usize,
    },
}

static SOLUTION_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([xyz])\s*:(.*)$").unwrap());

struct Line<'a> {
    tag: char,
    body: &'a str,
    raw: &'a str,
}

/// Splits the text into runs of x/y/z lines. Blank lines do not end a run;
/// any other line, or a repeated tag, does.
fn solution_groups(text: &str) -> Vec<Vec<Line<'_>>> {
    let mut groups = Vec::new();
    let mut current: Vec<Line<'_>> = Vec::new();
    for raw in text.lines() {
        let trimmed = raw.trim();
        if let Some(cap) = SOLUTION_LINE.captures(trimmed) {
            let tag = cap[1].chars().next().expect("one-char tag");
            if current.iter().any(|l| l.tag == tag) {
                groups.push(std::mem::take(&mut current));
            }
            current.push(Line {
                tag,
                body: cap.get(2).map_or("", |m| m.as_str()),
                raw: trimmed,
            });
        } else if !trimmed.is_empty() && !current.is_empty() {
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    groups
}

/// Reads the last group of x/y/z lines in `text` into an assignment.
///
/// Earlier groups (intermediate candidates in a chain of thought) are ignored.
/// Missing lines mean empty sets. Index prefixes `EMPTY_`, `USER_` and
/// `ONE_REQUEST_` are accepted. The result is not checked for feasibility.
pub fn parse_solution(text: &str, inst: &DispatchInstance) -> Result<ParsedSolution, ParseError> {
    let group = solution_groups(text).pop().ok_or(ParseError::NoSolution)?;
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let mut assignment = Assignment::new();

    for line in &group {
        let tag = line.tag;
        let bound = |what: &'static str, index: usize, len: usize| {
            if index < len {
                Ok(index)
            } else {
                Err(ParseError::OutOfBounds { tag, what, index, len })
            }
        };
        let arity = if tag == 'y' { 3 } else { 2 };
        let tuples =
            parse_tuples(line.body, arity).map_err(|source| ParseError::Syntax { tag, source })?;
        for t in tuples {
            match tag {
                'x' => {
                    assignment
                        .x
                        .insert((bound("empty vehicle", t[0], m)?, bound("user", t[1], p)?));
                }
                'y' => {
                    assignment.y.insert((
                        bound("empty vehicle", t[0], m)?,
                        bound("user", t[1], p)?,
                        bound("user", t[2], p)?,
                    ));
                }
                _ => {
                    assignment
                        .z
                        .insert((bound("one-order vehicle", t[0], n)?, bound("user", t[1], p)?));
                }
            }
        }
    }

    Ok(ParsedSolution {
        assignment,
        raw_lines: group.iter().map(|l| l.raw.to_string()).collect(),
    })
}

//! The `x: (i, j) ...` / `y: (i, j, k) ...` / `z: (i, j) ...` solution syntax.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::assignment::Assignment;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("non-integer index {token:?}")]
    BadIndex { token: String },
    #[error("expected {expected} indices in {tuple:?}, found {found}")]
    Arity {
        tuple: String,
        expected: usize,
        found: usize,
    },
}

static TUPLE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(([^()]*)\)").unwrap());

const PREFIXES: [&str; 3] = ["ONE_REQUEST_", "EMPTY_", "USER_"];

fn parse_index(token: &str) -> Result<usize, SyntaxError> {
    let t = token.trim();
    let bare = PREFIXES
        .iter()
        .find_map(|p| t.strip_prefix(p))
        .unwrap_or(t);
    bare.parse().map_err(|_| SyntaxError::BadIndex {
        token: t.to_string(),
    })
}

/// Extracts every parenthesized tuple in `body`. Text between tuples is ignored.
pub fn parse_tuples(body: &str, arity: usize) -> Result<Vec<Vec<usize>>, SyntaxError> {
    TUPLE
        .captures_iter(body)
        .map(|cap| {
            let inner = &cap[1];
            let parts: Vec<&str> = inner.split(',').collect();
            if parts.len() != arity {
                return Err(SyntaxError::Arity {
                    tuple: cap[0].to_string(),
                    expected: arity,
                    found: parts.len(),
                });
            }
            parts.into_iter().map(parse_index).collect()
        })
        .collect()
}

pub fn format_pairs<'a>(pairs: impl IntoIterator<Item = &'a (usize, usize)>) -> String {
    pairs
        .into_iter()
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn format_triples<'a>(triples: impl IntoIterator<Item = &'a (usize, usize, usize)>) -> String {
    triples
        .into_iter()
        .map(|(a, b, c)| format!("({a}, {b}, {c})"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The three solution lines; an empty set renders as an empty line.
pub fn solution_lines(sol: &Assignment) -> [String; 3] {
    let line = |tag: &str, body: String| {
        if body.is_empty() {
            String::new()
        } else {
            format!("{tag}: {body}")
        }
    };
    [
        line("x", format_pairs(&sol.x)),
        line("y", format_triples(&sol.y)),
        line("z", format_pairs(&sol.z)),
    ]
}

/// Serde adapter storing an [`Assignment`] as `{"x": "(0, 1) ...", "y": "...", "z": "..."}`.
pub mod as_lines {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Lines {
        x: String,
        y: String,
        z: String,
    }

    pub fn serialize<S: Serializer>(sol: &Assignment, s: S) -> Result<S::Ok, S::Error> {
        Lines {
            x: format_pairs(&sol.x),
            y: format_triples(&sol.y),
            z: format_pairs(&sol.z),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Assignment, D::Error> {
        use serde::de::Error;
        let lines = Lines::deserialize(d)?;
        let pairs = |body: &str| -> Result<_, D::Error> {
            Ok(parse_tuples(body, 2)
                .map_err(D::Error::custom)?
                .into_iter()
                .map(|t| (t[0], t[1]))
                .collect())
        };
        let y = parse_tuples(&lines.y, 3)
            .map_err(D::Error::custom)?
            .into_iter()
            .map(|t| (t[0], t[1], t[2]))
            .collect();
        Ok(Assignment {
            x: pairs(&lines.x)?,
            y,
            z: pairs(&lines.z)?,
        })
    }
}

/// [`as_lines`] for optional assignments.
pub mod as_lines_opt {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "as_lines")] Assignment);

    pub fn serialize<S: Serializer>(sol: &Option<Assignment>, s: S) -> Result<S::Ok, S::Error> {
        sol.clone().map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Assignment>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

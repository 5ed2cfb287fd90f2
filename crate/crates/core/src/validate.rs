//! Feasibility checks for an [`Assignment`] against the carpool constraints.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::instance::DispatchInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// Each user is served exactly once.
    Coverage,
    /// Each empty vehicle takes at most one x pair or one y triple.
    EmptyCapacity,
    /// Each one-order vehicle takes at most one z pair.
    SharedCapacity,
    IndexBounds,
    /// A y triple names the same user twice.
    DistinctUsers,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Coverage => "coverage",
            Self::EmptyCapacity => "empty-vehicle capacity",
            Self::SharedCapacity => "one-order capacity",
            Self::IndexBounds => "index bounds",
            Self::DistinctUsers => "distinct users",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub index: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, kind: ConstraintKind, index: usize) -> bool {
        self.violations
            .iter()
            .any(|v| v.kind == kind && v.index == index)
    }
}

/// Reports every violated constraint; never fails.
///
/// Entries with out-of-range indices are reported under [`ConstraintKind::IndexBounds`]
/// and excluded from the coverage and capacity counts.
pub fn validate(inst: &DispatchInstance, sol: &Assignment) -> ValidationReport {
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let mut violations = Vec::new();
    let mut cover = vec![0usize; p];
    let mut empty_load = vec![0usize; m];
    let mut shared_load = vec![0usize; n];

    let mut bound = |what: &str, index: usize, len: usize, entry: String| {
        if index >= len {
            violations.push(Violation {
                kind: ConstraintKind::IndexBounds,
                index,
                detail: format!("{what} index {index} out of range (len {len}) in {entry}"),
            });
            false
        } else {
            true
        }
    };

    for &(i, j) in &sol.x {
        let entry = format!("x ({i}, {j})");
        let ok = bound("empty vehicle", i, m, entry.clone()) & bound("user", j, p, entry);
        if ok {
            empty_load[i] += 1;
            cover[j] += 1;
        }
    }
    let mut same_user = Vec::new();
    for &(i, j, k) in &sol.y {
        let entry = format!("y ({i}, {j}, {k})");
        let ok = bound("empty vehicle", i, m, entry.clone())
            & bound("user", j, p, entry.clone())
            & bound("user", k, p, entry.clone());
        if j == k {
            same_user.push((j, entry));
            if ok {
                empty_load[i] += 1;
                cover[j] += 1;
            }
        } else if ok {
            empty_load[i] += 1;
            cover[j] += 1;
            cover[k] += 1;
        }
    }
    for &(i, j) in &sol.z {
        let entry = format!("z ({i}, {j})");
        let ok = bound("one-order vehicle", i, n, entry.clone()) & bound("user", j, p, entry);
        if ok {
            shared_load[i] += 1;
            cover[j] += 1;
        }
    }

    for (j, entry) in same_user {
        violations.push(Violation {
            kind: ConstraintKind::DistinctUsers,
            index: j,
            detail: format!("{entry} picks up user {j} twice"),
        });
    }
    for (j, &c) in cover.iter().enumerate() {
        if c != 1 {
            violations.push(Violation {
                kind: ConstraintKind::Coverage,
                index: j,
                detail: format!("user {j} covered {c} times"),
            });
        }
    }
    for (i, &load) in empty_load.iter().enumerate() {
        if load > 1 {
            violations.push(Violation {
                kind: ConstraintKind::EmptyCapacity,
                index: i,
                detail: format!("empty vehicle {i} has {load} services"),
            });
        }
    }
    for (i, &load) in shared_load.iter().enumerate() {
        if load > 1 {
            violations.push(Violation {
                kind: ConstraintKind::SharedCapacity,
                index: i,
                detail: format!("one-order vehicle {i} has {load} services"),
            });
        }
    }

    ValidationReport {
        feasible: violations.is_empty(),
        violations,
    }
}

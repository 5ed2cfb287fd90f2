use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::DispatchInstance;

/// A (possibly partial, possibly infeasible) vehicle-user matching.
///
/// * `x`: empty vehicle `i` serves user `j` alone.
/// * `y`: empty vehicle `i` picks up user `j`, then user `k`.
/// * `z`: one-order vehicle `i` adds user `j`.
///
/// The objective is never stored here; use [`evaluate_objective`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub x: BTreeSet<(usize, usize)>,
    pub y: BTreeSet<(usize, usize, usize)>,
    pub z: BTreeSet<(usize, usize)>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty() && self.y.is_empty() && self.z.is_empty()
    }

    /// User indices in the order they appear in x, then y (j, k), then z.
    pub fn covered_users(&self) -> impl Iterator<Item = usize> + '_ {
        self.x
            .iter()
            .map(|&(_, j)| j)
            .chain(self.y.iter().flat_map(|&(_, j, k)| [j, k]))
            .chain(self.z.iter().map(|&(_, j)| j))
    }

    /// Union of two assignments. Entries present in both are kept once.
    pub fn union(&self, other: &Assignment) -> Assignment {
        Assignment {
            x: self.x.union(&other.x).copied().collect(),
            y: self.y.union(&other.y).copied().collect(),
            z: self.z.union(&other.z).copied().collect(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("{what} index {index} out of bounds (len {len})")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },
}

fn check(what: &'static str, index: usize, len: usize) -> Result<(), AssignmentError> {
    if index < len {
        Ok(())
    } else {
        Err(AssignmentError::IndexOutOfBounds { what, index, len })
    }
}

/// Total pickup distance of `sol` on `inst`.
///
/// x contributes `d(i, j)`, y contributes `d(i, j) + d'(j, k)`, z contributes `d''(i, j)`.
pub fn evaluate_objective(
    inst: &DispatchInstance,
    sol: &Assignment,
) -> Result<f64, AssignmentError> {
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let mut total = 0.0;
    for &(i, j) in &sol.x {
        check("empty vehicle", i, m)?;
        check("user", j, p)?;
        total += inst.empty_to_user(i, j);
    }
    for &(i, j, k) in &sol.y {
        check("empty vehicle", i, m)?;
        check("user", j, p)?;
        check("user", k, p)?;
        total += inst.empty_to_user(i, j) + inst.user_to_user(j, k);
    }
    for &(i, j) in &sol.z {
        check("one-order vehicle", i, n)?;
        check("user", j, p)?;
        total += inst.one_order_to_user(i, j);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::instance::worked_example;
    use proptest::prelude::*;

    pub(crate) fn worked_solution() -> Assignment {
        Assignment {
            x: [(0, 1), (1, 0)].into_iter().collect(),
            y: BTreeSet::new(),
            z: [(1, 2)].into_iter().collect(),
        }
    }

    #[test]
    fn worked_objective() {
        let v = evaluate_objective(&worked_example(), &worked_solution()).unwrap();
        assert!((v - 24.36).abs() < 1e-9, "{v}");
    }

    #[test]
    fn empty_assignment_costs_nothing() {
        let inst = DispatchInstance::new("e", vec![], vec![], vec![]);
        assert_eq!(evaluate_objective(&inst, &Assignment::new()).unwrap(), 0.0);
    }

    #[test]
    fn pooled_pickup_adds_both_legs() {
        let inst = DispatchInstance::new(
            "y",
            vec![Point::new(0.0, 0.0)],
            vec![],
            vec![Point::new(1.0, 0.0), Point::new(2.0, 0.0)],
        );
        let sol = Assignment {
            y: [(0, 0, 1)].into_iter().collect(),
            ..Default::default()
        };
        assert_eq!(evaluate_objective(&inst, &sol).unwrap(), 2.0);
    }

    #[test]
    fn out_of_bounds_is_an_error() {
        let sol = Assignment {
            z: [(3, 0)].into_iter().collect(),
            ..Default::default()
        };
        assert_eq!(
            evaluate_objective(&worked_example(), &sol),
            Err(AssignmentError::IndexOutOfBounds {
                what: "one-order vehicle",
                index: 3,
                len: 3
            })
        );
    }

    proptest! {
        #[test]
        fn objective_is_additive_over_disjoint_parts(
            coords in prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64), 12),
            split in 0usize..4,
        ) {
            let pts: Vec<Point> = coords.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let inst = DispatchInstance::new("a", pts[0..3].to_vec(), pts[3..6].to_vec(), pts[6..12].to_vec());
            let full = Assignment {
                x: [(0, 0), (1, 1)].into_iter().collect(),
                y: [(2, 2, 3)].into_iter().collect(),
                z: [(0, 4), (2, 5)].into_iter().collect(),
            };
            let mut left = Assignment::new();
            let mut right = Assignment::new();
            match split {
                0 => { left.x = full.x.clone(); right.y = full.y.clone(); right.z = full.z.clone(); }
                1 => { left.y = full.y.clone(); right.x = full.x.clone(); right.z = full.z.clone(); }
                2 => { left.z = full.z.clone(); right.x = full.x.clone(); right.y = full.y.clone(); }
                _ => { right = full.clone(); }
            }
            let whole = evaluate_objective(&inst, &full).unwrap();
            let parts = evaluate_objective(&inst, &left).unwrap() + evaluate_objective(&inst, &right).unwrap();
            prop_assert!((whole - parts).abs() < 1e-9);
            prop_assert_eq!(left.union(&right), full);
        }
    }
}

//! Construction of the carpool MIP from a [`DispatchInstance`].
//!
//! Columns are ordered X(i, j) lexicographically, then Y(i, j, k) with `k != j`
//! lexicographically, then Z(i, j). Rows are one coverage equality per user,
//! then one capacity row per empty vehicle, then one per one-order vehicle.
//! Every constraint coefficient and right-hand side is 1.

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::Assignment;
use crate::geometry::Point;
use crate::instance::DispatchInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarIndex {
    pub kind: VarKind,
    pub i: usize,
    pub j: usize,
    pub k: Option<usize>,
}

impl VarIndex {
    pub fn x(i: usize, j: usize) -> Self {
        Self { kind: VarKind::X, i, j, k: None }
    }

    pub fn y(i: usize, j: usize, k: usize) -> Self {
        debug_assert_ne!(j, k);
        Self { kind: VarKind::Y, i, j, k: Some(k) }
    }

    pub fn z(i: usize, j: usize) -> Self {
        Self { kind: VarKind::Z, i, j, k: None }
    }

    /// Users covered by this variable.
    pub fn users(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.j).chain(self.k)
    }
}

impl fmt::Display for VarIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.k) {
            (VarKind::X, _) => write!(f, "x_{}_{}", self.i, self.j),
            (VarKind::Y, Some(k)) => write!(f, "y_{}_{}_{}", self.i, self.j, k),
            (VarKind::Y, None) => write!(f, "y_{}_{}_?", self.i, self.j),
            (VarKind::Z, _) => write!(f, "z_{}_{}", self.i, self.j),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// `sum = 1` for one user.
    Coverage,
    /// `sum <= 1` for one empty vehicle.
    EmptyCapacity,
    /// `sum <= 1` for one one-order vehicle.
    SharedCapacity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub kind: RowKind,
    /// Entity index (user or vehicle) the row belongs to.
    pub owner: usize,
    /// Column indices with implicit coefficient 1, ascending.
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipModel {
    pub instance_id: String,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub variables: Vec<VarIndex>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    pub build_time: Duration,
}

/// Constraint-matrix dimensions for given entity counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixShape {
    pub rows: usize,
    /// `m*p + m*p*(p-1) + n*p`: pooled pickups never repeat a user.
    pub cols: usize,
    /// `m*p + m*p^2 + n*p`: the full j-by-k grid of pooled pickups.
    pub nominal_cols: usize,
}

pub fn matrix_shape(m: usize, n: usize, p: usize) -> MatrixShape {
    MatrixShape {
        rows: m + n + p,
        cols: m * p + m * p * p.saturating_sub(1) + n * p,
        nominal_cols: m * p + m * p * p + n * p,
    }
}

impl MipModel {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.variables.len())
    }

    pub fn nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.cols.len()).sum()
    }

    /// Column index of `var`, computed from the fixed ordering.
    pub fn column_of(&self, var: VarIndex) -> Option<usize> {
        let (m, n, p) = (self.m, self.n, self.p);
        let col = match var.kind {
            VarKind::X => {
                if var.i >= m || var.j >= p {
                    return None;
                }
                var.i * p + var.j
            }
            VarKind::Y => {
                let k = var.k?;
                if var.i >= m || var.j >= p || k >= p || k == var.j {
                    return None;
                }
                let per_vehicle = p * (p - 1);
                let k_slot = if k > var.j { k - 1 } else { k };
                m * p + var.i * per_vehicle + var.j * (p - 1) + k_slot
            }
            VarKind::Z => {
                if var.i >= n || var.j >= p {
                    return None;
                }
                m * p + m * p * p.saturating_sub(1) + var.i * p + var.j
            }
        };
        debug_assert_eq!(self.variables[col], var);
        Some(col)
    }

    /// Columns set to 1 by `sol`, or `None` if `sol` references a missing variable.
    pub fn support(&self, sol: &Assignment) -> Option<Vec<usize>> {
        let mut cols = Vec::new();
        for &(i, j) in &sol.x {
            cols.push(self.column_of(VarIndex::x(i, j))?);
        }
        for &(i, j, k) in &sol.y {
            if j == k {
                return None;
            }
            cols.push(self.column_of(VarIndex::y(i, j, k))?);
        }
        for &(i, j) in &sol.z {
            cols.push(self.column_of(VarIndex::z(i, j))?);
        }
        Some(cols)
    }

    /// Assignment with exactly the given columns set.
    pub fn assignment_from_columns(&self, cols: impl IntoIterator<Item = usize>) -> Assignment {
        let mut sol = Assignment::new();
        for c in cols {
            let v = self.variables[c];
            match v.kind {
                VarKind::X => {
                    sol.x.insert((v.i, v.j));
                }
                VarKind::Y => {
                    sol.y.insert((v.i, v.j, v.k.expect("Y variable has k")));
                }
                VarKind::Z => {
                    sol.z.insert((v.i, v.j));
                }
            }
        }
        sol
    }

    /// Sum of objective coefficients over the columns of `sol`.
    pub fn objective_of(&self, sol: &Assignment) -> Option<f64> {
        Some(self.support(sol)?.into_iter().map(|c| self.objective[c]).sum())
    }

    /// Writes the model in CPLEX-LP-style text. The grammar is described in the README.
    pub fn to_lp(&self) -> String {
        const PER_LINE: usize = 8;
        let mut out = String::new();
        let _ = writeln!(out, "\\ carpool dispatch model {}", self.instance_id);
        let _ = writeln!(out, "\\ m={} n={} p={}", self.m, self.n, self.p);
        out.push_str("Minimize\n obj:");
        if self.variables.is_empty() {
            out.push_str(" 0");
        }
        for (idx, (v, c)) in self.variables.iter().zip(&self.objective).enumerate() {
            if idx > 0 && idx % PER_LINE == 0 {
                out.push_str("\n     ");
            }
            let sign = if idx == 0 { "" } else { "+ " };
            let _ = write!(out, " {sign}{c:?} {v}");
        }
        out.push_str("\nSubject To\n");
        for (row, rhs) in self.rows.iter().zip(&self.rhs) {
            let (name, op) = match row.kind {
                RowKind::Coverage => ("cover", "="),
                RowKind::EmptyCapacity => ("empty", "<="),
                RowKind::SharedCapacity => ("shared", "<="),
            };
            let _ = write!(out, " {name}_{}:", row.owner);
            if row.cols.is_empty() {
                out.push_str(" 0");
            }
            for (idx, &c) in row.cols.iter().enumerate() {
                if idx > 0 && idx % PER_LINE == 0 {
                    out.push_str("\n     ");
                }
                let sign = if idx == 0 { "" } else { "+ " };
                let _ = write!(out, " {sign}{}", self.variables[c]);
            }
            let _ = writeln!(out, " {op} {rhs}");
        }
        out.push_str("Binary\n");
        for chunk in self.variables.chunks(PER_LINE) {
            let names: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, " {}", names.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

/// Builds the MIP for `inst` and reports its size and build time.
pub fn build_model(inst: &DispatchInstance) -> (MipModel, BuildReport) {
    let start = Instant::now();
    let (m, n, p) = (inst.m(), inst.n(), inst.p());
    let shape = matrix_shape(m, n, p);

    let mut variables = Vec::with_capacity(shape.cols);
    let mut objective = Vec::with_capacity(shape.cols);
    let mut coverage: Vec<Vec<usize>> = vec![Vec::new(); p];
    let mut empty_cap: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut shared_cap: Vec<Vec<usize>> = vec![Vec::new(); n];

    for i in 0..m {
        for j in 0..p {
            let col = variables.len();
            variables.push(VarIndex::x(i, j));
            objective.push(inst.empty_to_user(i, j));
            coverage[j].push(col);
            empty_cap[i].push(col);
        }
    }
    for i in 0..m {
        for j in 0..p {
            for k in (0..p).filter(|&k| k != j) {
                let col = variables.len();
                variables.push(VarIndex::y(i, j, k));
                objective.push(inst.empty_to_user(i, j) + inst.user_to_user(j, k));
                coverage[j].push(col);
                coverage[k].push(col);
                empty_cap[i].push(col);
            }
        }
    }
    for i in 0..n {
        for j in 0..p {
            let col = variables.len();
            variables.push(VarIndex::z(i, j));
            objective.push(inst.one_order_to_user(i, j));
            coverage[j].push(col);
            shared_cap[i].push(col);
        }
    }

    let rows: Vec<Row> = coverage
        .into_iter()
        .enumerate()
        .map(|(owner, mut cols)| {
            cols.sort_unstable();
            Row { kind: RowKind::Coverage, owner, cols }
        })
        .chain(
            empty_cap
                .into_iter()
                .enumerate()
                .map(|(owner, cols)| Row { kind: RowKind::EmptyCapacity, owner, cols }),
        )
        .chain(
            shared_cap
                .into_iter()
                .enumerate()
                .map(|(owner, cols)| Row { kind: RowKind::SharedCapacity, owner, cols }),
        )
        .collect();
    let rhs = vec![1.0; rows.len()];

    let model = MipModel {
        instance_id: inst.id.clone(),
        m,
        n,
        p,
        variables,
        objective,
        rows,
        rhs,
    };
    let build_time = start.elapsed();
    let report = BuildReport {
        m,
        n,
        p,
        rows: model.rows.len(),
        cols: model.variables.len(),
        nonzeros: model.nonzeros(),
        build_time,
    };
    (model, report)
}

/// Uniformly random instance with `m` empty, `n` one-order vehicles and `p` users
/// inside the axis-aligned box `[lo, hi]`.
pub fn random_instance(
    id: impl Into<String>,
    m: usize,
    n: usize,
    p: usize,
    lo: Point,
    hi: Point,
    rng: &mut impl Rng,
) -> DispatchInstance {
    let mut pt = || Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
    let empty = (0..m).map(|_| pt()).collect();
    let one = (0..n).map(|_| pt()).collect();
    let users = (0..p).map(|_| pt()).collect();
    DispatchInstance::new(id, empty, one, users)
}

/// For each set size `s` builds models with `m = n = p = s` and keeps the
/// median build time over `trials` builds.
pub fn measure_build_growth(set_sizes: &[usize], trials: usize, seed: u64) -> Vec<BuildReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trials = trials.max(1);
    set_sizes
        .iter()
        .map(|&s| {
            let inst = random_instance(
                format!("growth-{s}"),
                s,
                s,
                s,
                Point::new(0.0, 0.0),
                Point::new(100.0, 100.0),
                &mut rng,
            );
            let mut times = Vec::with_capacity(trials);
            let mut last = None;
            for _ in 0..trials {
                let (_, report) = build_model(&inst);
                times.push(report.build_time);
                last = Some(report);
            }
            times.sort_unstable();
            let mut report = last.expect("at least one trial");
            report.build_time = times[times.len() / 2];
            report
        })
        .collect()
}

pub const GROWTH_CSV_HEADER: &str = "s,rows,cols,nonzeros,build_ns";

/// Renders growth reports as CSV; `s` is taken from `m`.
pub fn growth_csv(reports: &[BuildReport]) -> String {
    let mut out = String::from(GROWTH_CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.m,
            r.rows,
            r.cols,
            r.nonzeros,
            r.build_time.as_nanos()
        );
    }
    out
}

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

/// Grid cell addressed as (col, row). The derived ordering is lexicographic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("network must have at least one open cell")]
    NoOpenCell,
    #[error("cell ({}, {}) is outside the {width}x{height} grid", .cell.col, .cell.row)]
    OutOfBounds { cell: Cell, width: usize, height: usize },
    #[error("cell ({}, {}) is blocked", .0.col, .0.row)]
    Blocked(Cell),
    #[error("no path from ({}, {}) to ({}, {})", .from.col, .from.row, .to.col, .to.row)]
    NoPath { from: Cell, to: Cell },
}

/// 4-connected grid with unit edge weights. Cell `(c, r)` sits at
/// `origin + (c, r) * cell_size` in the projected plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub width: usize,
    pub height: usize,
    pub blocked: BTreeSet<Cell>,
    pub origin: Point,
    pub cell_size: f64,
}

impl RoadNetwork {
    pub fn grid(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            blocked: BTreeSet::new(),
            origin: Point::new(0.0, 0.0),
            cell_size: 1.0,
        }
    }

    pub fn with_blocked(mut self, cells: impl IntoIterator<Item = Cell>) -> Result<Self, NetworkError> {
        for c in cells {
            self.check_bounds(c)?;
            self.blocked.insert(c);
        }
        if self.open_cells().next().is_none() {
            return Err(NetworkError::NoOpenCell);
        }
        Ok(self)
    }

    pub fn with_frame(mut self, origin: Point, cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size {cell_size}");
        self.origin = origin;
        self.cell_size = cell_size;
        self
    }

    /// Blocks each cell independently with probability `density`.
    pub fn random_maze(width: usize, height: usize, density: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Self::grid(width, height);
        for row in 0..height {
            for col in 0..width {
                if rng.random_bool(density) {
                    net.blocked.insert(Cell::new(col, row));
                }
            }
        }
        net
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_open(&self, c: Cell) -> bool {
        self.contains(c) && !self.blocked.contains(&c)
    }

    fn check_bounds(&self, c: Cell) -> Result<(), NetworkError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(NetworkError::OutOfBounds { cell: c, width: self.width, height: self.height })
        }
    }

    fn check_open(&self, c: Cell) -> Result<(), NetworkError> {
        self.check_bounds(c)?;
        if self.blocked.contains(&c) {
            Err(NetworkError::Blocked(c))
        } else {
            Ok(())
        }
    }

    pub fn open_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.width)
            .flat_map(move |col| (0..self.height).map(move |row| Cell::new(col, row)))
            .filter(|c| !self.blocked.contains(c))
    }

    /// Open neighbours in lexicographic order.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let mut out = Vec::with_capacity(4);
        if c.col > 0 {
            out.push(Cell::new(c.col - 1, c.row));
        }
        if c.row > 0 {
            out.push(Cell::new(c.col, c.row - 1));
        }
        out.push(Cell::new(c.col, c.row + 1));
        out.push(Cell::new(c.col + 1, c.row));
        out.into_iter().filter(|n| self.is_open(*n))
    }

    pub fn point_of(&self, c: Cell) -> Point {
        Point::new(
            self.origin.x + c.col as f64 * self.cell_size,
            self.origin.y + c.row as f64 * self.cell_size,
        )
    }

    /// The cell whose point is nearest to `p`, or `None` outside the grid.
    pub fn cell_at(&self, p: Point) -> Option<Cell> {
        let col = ((p.x - self.origin.x) / self.cell_size).round();
        let row = ((p.y - self.origin.y) / self.cell_size).round();
        if !(col >= 0.0 && row >= 0.0) {
            return None;
        }
        let c = Cell::new(col as usize, row as usize);
        self.contains(c).then_some(c)
    }

    /// Nearest open cell to `c` by Manhattan distance, lexicographic on ties.
    pub fn nearest_open(&self, c: Cell) -> Option<Cell> {
        if self.is_open(c) {
            return Some(c);
        }
        self.open_cells().min_by_key(|o| (o.manhattan(c), *o))
    }

    /// Maps a projected point to its open cell; `None` if outside the grid.
    pub fn snap(&self, p: Point) -> Option<Cell> {
        self.cell_at(p).and_then(|c| self.nearest_open(c))
    }

    fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    fn distances_to(&self, to: Cell) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.width * self.height];
        let mut heap = BinaryHeap::new();
        dist[self.index(to)] = 0;
        heap.push(Reverse((0usize, to)));
        while let Some(Reverse((d, c))) = heap.pop() {
            if d > dist[self.index(c)] {
                continue;
            }
            for n in self.neighbors(c) {
                let nd = d + 1;
                let slot = &mut dist[self.index(n)];
                if nd < *slot {
                    *slot = nd;
                    heap.push(Reverse((nd, n)));
                }
            }
        }
        dist
    }

    /// True when every open cell can reach every other.
    pub fn is_connected(&self) -> bool {
        let Some(first) = self.open_cells().next() else {
            return false;
        };
        let dist = self.distances_to(first);
        self.open_cells().all(|c| dist[self.index(c)] != usize::MAX)
    }
}

/// Shortest 4-connected path, `from` and `to` inclusive, and its edge count.
///
/// Among equally short paths the lexicographically smallest cell sequence is
/// returned.
pub fn dijkstra_path(net: &RoadNetwork, from: Cell, to: Cell) -> Result<(Vec<Cell>, usize), NetworkError> {
    net.check_open(from)?;
    net.check_open(to)?;
    let dist = net.distances_to(to);
    let length = dist[net.index(from)];
    if length == usize::MAX {
        return Err(NetworkError::NoPath { from, to });
    }
    let mut path = Vec::with_capacity(length + 1);
    let mut cur = from;
    path.push(cur);
    while cur != to {
        let here = dist[net.index(cur)];
        cur = net
            .neighbors(cur)
            .find(|n| dist[net.index(*n)] + 1 == here)
            .expect("a neighbour one step closer exists");
        path.push(cur);
    }
    Ok((path, length))
}

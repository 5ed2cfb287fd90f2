use std::collections::{BTreeMap, VecDeque};
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::{debug, warn};

use super::network::{dijkstra_path, Cell, NetworkError, RoadNetwork};
use super::orders::OrderEvent;
use crate::assignment::Assignment;
use crate::instance::DispatchInstance;
use crate::model::build_model;
use crate::solver::{solve_exact, SolveLimits, SolveResult, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Occupancy {
    Empty,
    OnePassenger,
    TwoPassengers,
}

impl Occupancy {
    fn of(count: usize) -> Option<Self> {
        match count {
            0 => Some(Self::Empty),
            1 => Some(Self::OnePassenger),
            2 => Some(Self::TwoPassengers),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action", content = "order")]
pub enum Action {
    Pickup(usize),
    Dropoff(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Waypoint {
    pub cell: Cell,
    pub action: Action,
}

/// Order indices in waypoints and `onboard` refer to the simulation's order list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: usize,
    pub cell: Cell,
    pub onboard: Vec<usize>,
    pub route: VecDeque<Waypoint>,
    /// Remaining cells to the next waypoint, excluding the current one.
    #[serde(skip)]
    path: VecDeque<Cell>,
    /// Accumulated fractional movement, in cells.
    #[serde(skip)]
    credit: f64,
}

impl VehicleState {
    pub fn new(id: usize, cell: Cell) -> Self {
        Self {
            id,
            cell,
            onboard: Vec::new(),
            route: VecDeque::new(),
            path: VecDeque::new(),
            credit: 0.0,
        }
    }

    pub fn occupancy(&self) -> Option<Occupancy> {
        Occupancy::of(self.onboard.len())
    }

    pub fn is_idle(&self) -> bool {
        self.onboard.is_empty() && self.route.is_empty()
    }

    /// Carrying one passenger with nothing left to pick up.
    pub fn can_take_one_more(&self) -> bool {
        self.onboard.len() == 1 && self.route.iter().all(|w| matches!(w.action, Action::Dropoff(_)))
    }
}

/// Places `count` vehicles on uniformly drawn open cells.
pub fn initial_fleet(net: &RoadNetwork, count: usize, seed: u64) -> Vec<VehicleState> {
    let open: Vec<Cell> = net.open_cells().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|id| VehicleState::new(id, open[rng.random_range(0..open.len())]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Seconds between matching rounds.
    pub batch_window: f64,
    /// Grid cells per second.
    pub vehicle_speed: f64,
    /// Simulation step in seconds.
    pub tick: f64,
    /// Stop this many seconds after the last request even if work remains.
    pub drain_time: f64,
    pub max_nodes: u64,
    pub max_solve_secs: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            batch_window: 30.0,
            vehicle_speed: 0.1,
            tick: 1.0,
            drain_time: 6.0 * 3600.0,
            max_nodes: SolveLimits::default().max_nodes,
            max_solve_secs: SolveLimits::default().max_time.as_secs_f64(),
        }
    }
}

impl SimConfig {
    fn limits(&self) -> SolveLimits {
        SolveLimits {
            max_nodes: self.max_nodes,
            max_time: std::time::Duration::from_secs_f64(self.max_solve_secs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Pickup,
    Dropoff,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time: f64,
    pub vehicle: usize,
    pub order_id: String,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub round: usize,
    pub round_time: f64,
    pub instance: DispatchInstance,
    /// Order id per user index.
    pub user_orders: Vec<String>,
    /// Vehicle id per empty-vehicle index.
    pub empty_vehicle_ids: Vec<usize>,
    /// Vehicle id per one-order-vehicle index.
    pub one_order_vehicle_ids: Vec<usize>,
    pub solve: SolveResult,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub orders: usize,
    pub rejected: usize,
    pub matched: usize,
    pub completed: usize,
    pub unmatched: usize,
    pub rounds: usize,
    pub snapshots: usize,
    /// Users left out of a round because pending demand exceeded fleet capacity.
    pub deferred: usize,
    pub aborted_rounds: usize,
    pub max_onboard: usize,
    pub end_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub snapshots: Vec<SnapshotRecord>,
    pub events: Vec<SimEvent>,
    pub summary: SimSummary,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("batch window and vehicle speed must be positive, got {batch_window} and {vehicle_speed}")]
    BadConfig { batch_window: f64, vehicle_speed: f64 },
    #[error("road network is not connected")]
    Disconnected,
    #[error("vehicle {vehicle} starts on a blocked or out-of-grid cell")]
    VehicleOffNetwork { vehicle: usize },
    #[error("vehicle {vehicle} is carrying {onboard} passengers at t={time}")]
    OverCapacity { vehicle: usize, onboard: usize, time: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OrderState {
    Rejected,
    Waiting,
    Assigned,
    Riding,
    Done,
}

struct Order<'a> {
    event: &'a OrderEvent,
    pickup: Cell,
    dropoff: Cell,
    state: OrderState,
}

struct Sim<'a> {
    net: &'a RoadNetwork,
    cfg: SimConfig,
    orders: Vec<Order<'a>>,
    fleet: Vec<VehicleState>,
    events: Vec<SimEvent>,
    snapshots: Vec<SnapshotRecord>,
    summary: SimSummary,
}

impl<'a> Sim<'a> {
    fn set_path(&mut self, v: usize) -> Result<(), SimError> {
        let veh = &mut self.fleet[v];
        veh.path.clear();
        if let Some(next) = veh.route.front() {
            let (path, _) = dijkstra_path(self.net, veh.cell, next.cell)?;
            veh.path.extend(path.into_iter().skip(1));
        }
        Ok(())
    }

    /// Performs every waypoint action due at the vehicle's current cell.
    fn arrive(&mut self, v: usize, time: f64) -> Result<(), SimError> {
        let mut acted = false;
        while let Some(wp) = self.fleet[v].route.front().copied() {
            if wp.cell != self.fleet[v].cell {
                break;
            }
            self.fleet[v].route.pop_front();
            acted = true;
            let (order, kind) = match wp.action {
                Action::Pickup(o) => {
                    self.fleet[v].onboard.push(o);
                    self.orders[o].state = OrderState::Riding;
                    (o, EventKind::Pickup)
                }
                Action::Dropoff(o) => {
                    self.fleet[v].onboard.retain(|&x| x != o);
                    self.orders[o].state = OrderState::Done;
                    self.summary.completed += 1;
                    (o, EventKind::Dropoff)
                }
            };
            self.events.push(SimEvent {
                time,
                vehicle: self.fleet[v].id,
                order_id: self.orders[order].event.order_id.clone(),
                kind,
            });
        }
        if acted {
            self.set_path(v)?;
        }
        Ok(())
    }

    fn advance(&mut self, time: f64) -> Result<(), SimError> {
        let step = self.cfg.vehicle_speed * self.cfg.tick;
        for v in 0..self.fleet.len() {
            if self.fleet[v].route.is_empty() {
                self.fleet[v].credit = 0.0;
                continue;
            }
            self.fleet[v].credit += step;
            while self.fleet[v].credit >= 1.0 - 1e-12 {
                let Some(next) = self.fleet[v].path.pop_front() else {
                    break;
                };
                self.fleet[v].cell = next;
                self.fleet[v].credit -= 1.0;
                if self.fleet[v].path.is_empty() {
                    self.arrive(v, time)?;
                }
                if self.fleet[v].route.is_empty() {
                    self.fleet[v].credit = 0.0;
                }
            }
            let onboard = self.fleet[v].onboard.len();
            self.summary.max_onboard = self.summary.max_onboard.max(onboard);
            if onboard > 2 {
                return Err(SimError::OverCapacity { vehicle: self.fleet[v].id, onboard, time });
            }
        }
        Ok(())
    }

    fn round(&mut self, round: usize, time: f64) -> Result<(), SimError> {
        self.summary.rounds += 1;
        let empty: Vec<usize> = (0..self.fleet.len()).filter(|&v| self.fleet[v].is_idle()).collect();
        let one: Vec<usize> = (0..self.fleet.len()).filter(|&v| self.fleet[v].can_take_one_more()).collect();
        let mut waiting: Vec<usize> = (0..self.orders.len())
            .filter(|&o| self.orders[o].state == OrderState::Waiting && self.orders[o].event.request_time <= time)
            .collect();
        if waiting.is_empty() {
            return Ok(());
        }
        // Orders are sorted by request time, so truncation keeps the oldest.
        let capacity = 2 * empty.len() + one.len();
        if waiting.len() > capacity {
            self.summary.deferred += waiting.len() - capacity;
            waiting.truncate(capacity);
        }
        if waiting.is_empty() {
            return Ok(());
        }

        let pt = |c: Cell| self.net.point_of(c);
        let inst = DispatchInstance::new(
            format!("sim-r{round:05}"),
            empty.iter().map(|&v| pt(self.fleet[v].cell)).collect(),
            one.iter().map(|&v| pt(self.fleet[v].cell)).collect(),
            waiting.iter().map(|&o| pt(self.orders[o].pickup)).collect(),
        );
        let (model, _) = build_model(&inst);
        let solve = solve_exact(&model, &self.cfg.limits());
        debug!(round, m = inst.m(), n = inst.n(), p = inst.p(), status = ?solve.status, "matching round");

        let chosen = match solve.status {
            SolveStatus::Optimal => solve.optimal.clone(),
            SolveStatus::Aborted => {
                self.summary.aborted_rounds += 1;
                solve.best().map(|b| b.solution.clone())
            }
            SolveStatus::Infeasible => None,
        };
        self.snapshots.push(SnapshotRecord {
            round,
            round_time: time,
            user_orders: waiting.iter().map(|&o| self.orders[o].event.order_id.clone()).collect(),
            empty_vehicle_ids: empty.iter().map(|&v| self.fleet[v].id).collect(),
            one_order_vehicle_ids: one.iter().map(|&v| self.fleet[v].id).collect(),
            instance: inst,
            solve,
        });
        match chosen {
            Some(sol) => self.commit(&sol, &empty, &one, &waiting, time),
            None => {
                warn!(round, "no assignment this round; orders deferred");
                Ok(())
            }
        }
    }

    fn commit(&mut self, sol: &Assignment, empty: &[usize], one: &[usize], users: &[usize], time: f64) -> Result<(), SimError> {
        let pick = |o: usize, orders: &[Order<'_>]| Waypoint { cell: orders[o].pickup, action: Action::Pickup(o) };
        let drop = |o: usize, orders: &[Order<'_>]| Waypoint { cell: orders[o].dropoff, action: Action::Dropoff(o) };
        let mut touched = Vec::new();
        for &(i, j) in &sol.x {
            let (v, a) = (empty[i], users[j]);
            self.fleet[v].route = VecDeque::from([pick(a, &self.orders), drop(a, &self.orders)]);
            self.orders[a].state = OrderState::Assigned;
            touched.push(v);
        }
        for &(i, j, k) in &sol.y {
            let (v, a, b) = (empty[i], users[j], users[k]);
            self.fleet[v].route = VecDeque::from([
                pick(a, &self.orders),
                pick(b, &self.orders),
                drop(a, &self.orders),
                drop(b, &self.orders),
            ]);
            self.orders[a].state = OrderState::Assigned;
            self.orders[b].state = OrderState::Assigned;
            touched.push(v);
        }
        for &(i, j) in &sol.z {
            let (v, b) = (one[i], users[j]);
            let rider = self.fleet[v].onboard[0];
            self.fleet[v].route = VecDeque::from([pick(b, &self.orders), drop(rider, &self.orders), drop(b, &self.orders)]);
            self.orders[b].state = OrderState::Assigned;
            touched.push(v);
        }
        self.summary.matched += sol.covered_users().count();
        for v in touched {
            self.fleet[v].credit = 0.0;
            // A pickup at the vehicle's own cell happens immediately.
            self.arrive(v, time)?;
            self.set_path(v)?;
        }
        Ok(())
    }

    fn busy(&self) -> bool {
        self.orders.iter().any(|o| matches!(o.state, OrderState::Waiting | OrderState::Assigned | OrderState::Riding))
    }
}

/// Runs the batch-matching simulation to completion.
///
/// Every `batch_window` seconds idle vehicles become empty vehicles and
/// vehicles carrying one passenger with no pickup pending become one-order
/// vehicles of a round instance. Waiting orders beyond the round's service
/// capacity stay queued, oldest first served. Orders whose pickup or dropoff
/// lies outside the grid are rejected.
pub fn run_simulation(
    net: &RoadNetwork,
    orders: &[OrderEvent],
    fleet: Vec<VehicleState>,
    cfg: &SimConfig,
) -> Result<SimOutcome, SimError> {
    if !(cfg.batch_window > 0.0 && cfg.vehicle_speed > 0.0 && cfg.tick > 0.0) {
        return Err(SimError::BadConfig { batch_window: cfg.batch_window, vehicle_speed: cfg.vehicle_speed });
    }
    if !net.is_connected() {
        return Err(SimError::Disconnected);
    }
    if let Some(v) = fleet.iter().find(|v| !net.is_open(v.cell)) {
        return Err(SimError::VehicleOffNetwork { vehicle: v.id });
    }

    let mut sorted: Vec<&OrderEvent> = orders.iter().collect();
    sorted.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then_with(|| a.order_id.cmp(&b.order_id)));
    let mut summary = SimSummary { orders: orders.len(), ..Default::default() };
    let orders: Vec<Order<'_>> = sorted
        .into_iter()
        .map(|event| match (net.snap(event.pickup), net.snap(event.dropoff)) {
            (Some(pickup), Some(dropoff)) => Order { event, pickup, dropoff, state: OrderState::Waiting },
            _ => {
                summary.rejected += 1;
                Order { event, pickup: Cell::new(0, 0), dropoff: Cell::new(0, 0), state: OrderState::Rejected }
            }
        })
        .collect();
    if summary.rejected > 0 {
        warn!(rejected = summary.rejected, "orders outside the road network");
    }

    let last_request = orders.iter().map(|o| o.event.request_time).fold(0.0, f64::max);
    let horizon = last_request + cfg.drain_time;
    let ticks_per_round = ((cfg.batch_window / cfg.tick).round() as u64).max(1);

    let mut sim = Sim { net, cfg: *cfg, orders, fleet, events: Vec::new(), snapshots: Vec::new(), summary };
    let mut tick = 0u64;
    let mut time = 0.0;
    while sim.busy() && time <= horizon {
        tick += 1;
        time = tick as f64 * cfg.tick;
        sim.advance(time)?;
        if tick % ticks_per_round == 0 {
            sim.round((tick / ticks_per_round) as usize, time)?;
        }
    }

    let mut summary = sim.summary;
    summary.snapshots = sim.snapshots.len();
    summary.unmatched = sim.orders.iter().filter(|o| o.state == OrderState::Waiting).count();
    summary.end_time = time;
    Ok(SimOutcome { snapshots: sim.snapshots, events: sim.events, summary })
}

/// One JSON object per line.
pub fn write_snapshots_jsonl(records: &[SnapshotRecord], mut out: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_snapshots_jsonl(text: &str) -> serde_json::Result<Vec<SnapshotRecord>> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

/// Pickup and dropoff counts per order id, for conservation checks.
pub fn event_counts(events: &[SimEvent]) -> BTreeMap<&str, (usize, usize)> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for e in events {
        let entry = counts.entry(e.order_id.as_str()).or_default();
        match e.kind {
            EventKind::Pickup => entry.0 += 1,
            EventKind::Dropoff => entry.1 += 1,
        }
    }
    counts
}

//! Grid road-network simulator that turns order streams into matching rounds.

mod engine;
mod network;
mod orders;

pub use engine::{
    event_counts, initial_fleet, read_snapshots_jsonl, run_simulation, write_snapshots_jsonl, Action, EventKind,
    Occupancy, SimConfig, SimError, SimEvent, SimOutcome, SimSummary, SnapshotRecord, VehicleState, Waypoint,
};
pub use network::{dijkstra_path, Cell, NetworkError, RoadNetwork};
pub use orders::{
    generate_synthetic_orders, ingest_orders, sort_orders, write_orders_csv, BadRowPolicy, IngestError, Ingested,
    OrderEvent, Region, RowError, ORDER_CSV_HEADER,
};

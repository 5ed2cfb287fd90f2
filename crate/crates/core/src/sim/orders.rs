use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::RoadNetwork;
use crate::geometry::{mercator_project, Point, ProjectionConfig, ProjectionError};

pub const ORDER_CSV_HEADER: [&str; 6] =
    ["order_id", "request_time", "pickup_lat", "pickup_lon", "dropoff_lat", "dropoff_lon"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEvent {
    pub order_id: String,
    /// Seconds since the start of the stream.
    pub request_time: f64,
    pub pickup: Point,
    pub dropoff: Point,
}

#[derive(Debug, Error)]
pub enum RowError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {source}")]
    Projection {
        line: u64,
        #[source]
        source: ProjectionError,
    },
    #[error("line {line}: request_time {value} is negative or not finite")]
    BadTime { line: u64, value: f64 },
}

impl RowError {
    pub fn line(&self) -> u64 {
        match self {
            RowError::Malformed { line, .. } | RowError::Projection { line, .. } | RowError::BadTime { line, .. } => {
                *line
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("opening {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("header must be {expected}, found {found}")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Row(#[from] RowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BadRowPolicy {
    #[default]
    FailFast,
    Skip,
}

#[derive(Debug, Default)]
pub struct Ingested {
    /// Sorted by request time, then order id.
    pub events: Vec<OrderEvent>,
    pub skipped: Vec<RowError>,
}

#[derive(Debug, Deserialize)]
struct OrderRow {
    order_id: String,
    request_time: f64,
    pickup_lat: f64,
    pickup_lon: f64,
    dropoff_lat: f64,
    dropoff_lon: f64,
}

fn convert(row: OrderRow, line: u64, proj: &ProjectionConfig, net: Option<&RoadNetwork>) -> Result<OrderEvent, RowError> {
    if !(row.request_time.is_finite() && row.request_time >= 0.0) {
        return Err(RowError::BadTime { line, value: row.request_time });
    }
    let project = |lat, lon| {
        let p = mercator_project(lat, lon, proj).map_err(|source| RowError::Projection { line, source })?;
        Ok(net.and_then(|n| n.snap(p)).map_or(p, |c| net.unwrap().point_of(c)))
    };
    Ok(OrderEvent {
        pickup: project(row.pickup_lat, row.pickup_lon)?,
        dropoff: project(row.dropoff_lat, row.dropoff_lon)?,
        order_id: row.order_id,
        request_time: row.request_time,
    })
}

/// Reads an order CSV, projecting coordinates and, when `net` is given,
/// snapping them to the nearest open cell. Points outside the grid are kept
/// as projected so the simulator can reject them.
pub fn ingest_orders(
    path: &Path,
    proj: &ProjectionConfig,
    net: Option<&RoadNetwork>,
    policy: BadRowPolicy,
) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| IngestError::Open { path: path.to_path_buf(), source })?;
    let headers = reader
        .headers()
        .map_err(|source| IngestError::Open { path: path.to_path_buf(), source })?
        .clone();
    if headers.iter().ne(ORDER_CSV_HEADER) {
        return Err(IngestError::Header {
            expected: ORDER_CSV_HEADER.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut out = Ingested::default();
    for record in reader.deserialize::<OrderRow>() {
        let result = match record {
            Ok(row) => {
                // The header is line 1, so a row's line is its record index + 2.
                let line = out.events.len() as u64 + out.skipped.len() as u64 + 2;
                convert(row, line, proj, net)
            }
            Err(e) => Err(RowError::Malformed {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            }),
        };
        match (result, policy) {
            (Ok(ev), _) => out.events.push(ev),
            (Err(e), BadRowPolicy::FailFast) => return Err(e.into()),
            (Err(e), BadRowPolicy::Skip) => out.skipped.push(e),
        }
    }
    sort_orders(&mut out.events);
    Ok(out)
}

pub fn sort_orders(events: &mut [OrderEvent]) {
    events.sort_by(|a, b| a.request_time.total_cmp(&b.request_time).then_with(|| a.order_id.cmp(&b.order_id)));
}

/// Axis-aligned box in the projected plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub min: Point,
    pub max: Point,
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }

    /// The region covered by a network's cell points.
    pub fn of_network(net: &RoadNetwork) -> Self {
        let far = crate::sim::Cell::new(net.width.saturating_sub(1), net.height.saturating_sub(1));
        Self { min: net.origin, max: net.point_of(far) }
    }
}

/// `count` orders with uniform pickup and dropoff points in `region` and
/// exponential inter-arrival times averaging `time_span / count` seconds.
pub fn generate_synthetic_orders(seed: u64, count: usize, region: Region, time_span: f64) -> Vec<OrderEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = if time_span > 0.0 { count as f64 / time_span } else { f64::INFINITY };
    let gaps = Exp::new(rate).ok();
    let mut t = 0.0;
    let point = |rng: &mut ChaCha8Rng| {
        Point::new(
            rng.random_range(region.min.x..=region.max.x),
            rng.random_range(region.min.y..=region.max.y),
        )
    };
    (0..count)
        .map(|i| {
            if let Some(exp) = &gaps {
                t += exp.sample(&mut rng);
            }
            OrderEvent {
                order_id: format!("o{i:06}"),
                request_time: t,
                pickup: point(&mut rng),
                dropoff: point(&mut rng),
            }
        })
        .collect()
}

/// Writes orders as the lat/lon CSV read by [`ingest_orders`], inverting the
/// projection.
pub fn write_orders_csv(path: &Path, events: &[OrderEvent], proj: &ProjectionConfig) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(ORDER_CSV_HEADER)?;
    for e in events {
        let (plat, plon) = proj.unproject(e.pickup);
        let (dlat, dlon) = proj.unproject(e.dropoff);
        w.write_record([
            e.order_id.clone(),
            format!("{:?}", e.request_time),
            format!("{plat:?}"),
            format!("{plon:?}"),
            format!("{dlat:?}"),
            format!("{dlon:?}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "order_id,request_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n{body}").unwrap();
        f
    }

    #[test]
    fn header_only_is_empty() {
        let f = csv_file("");
        let got = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::FailFast).unwrap();
        assert!(got.events.is_empty());
    }

    #[test]
    fn rows_are_sorted_by_time() {
        let f = csv_file(
            "c,30,30.66,104.06,30.67,104.07\n\
             a,5,30.66,104.06,30.67,104.07\n\
             b,12.5,30.66,104.06,30.67,104.07\n",
        );
        let got = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::FailFast).unwrap();
        let ids: Vec<_> = got.events.iter().map(|e| e.order_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert_eq!(got.events[0].request_time, 5.0);
    }

    #[test]
    fn bad_latitude_names_line() {
        let f = csv_file("a,5,30.66,104.06,30.67,104.07\nb,6,91,104.06,30.67,104.07\n");
        let err = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::FailFast).unwrap_err();
        match err {
            IngestError::Row(RowError::Projection { line: 3, source: ProjectionError::Latitude(_) }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn skip_policy_collects_errors() {
        let f = csv_file("a,5,30.66,104.06,30.67,104.07\nb,six,30.66,104.06,30.67,104.07\nc,7,91,0,0,0\nd,8,30.66,104.06,30.67,104.07\n");
        let got = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::Skip).unwrap();
        assert_eq!(got.events.len(), 2);
        let lines: Vec<u64> = got.skipped.iter().map(RowError::line).collect();
        assert_eq!(lines, [3, 4]);
        let err = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::FailFast).unwrap_err();
        assert!(matches!(err, IngestError::Row(RowError::Malformed { line: 3, .. })), "{err:?}");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "id,t,a,b,c,d").unwrap();
        let err = ingest_orders(f.path(), &ProjectionConfig::default(), None, BadRowPolicy::Skip).unwrap_err();
        assert!(matches!(err, IngestError::Header { .. }));
    }

    #[test]
    fn snapping_and_round_trip_through_csv() {
        let proj = ProjectionConfig::default();
        let net = RoadNetwork::grid(20, 20).with_frame(Point::new(0.0, 3080.0), 1.0);
        let region = Region::of_network(&net);
        let orders = generate_synthetic_orders(3, 25, region, 600.0);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_orders_csv(f.path(), &orders, &proj).unwrap();
        let got = ingest_orders(f.path(), &proj, Some(&net), BadRowPolicy::FailFast).unwrap();
        assert_eq!(got.events.len(), 25);
        for (a, b) in orders.iter().zip(&got.events) {
            assert_eq!(a.order_id, b.order_id);
            assert_eq!(net.point_of(net.snap(a.pickup).unwrap()), b.pickup);
            assert_eq!(net.point_of(net.snap(a.dropoff).unwrap()), b.dropoff);
        }
    }

    #[test]
    fn synthetic_orders() {
        let region = Region { min: Point::new(0.0, 0.0), max: Point::new(50.0, 40.0) };
        assert!(generate_synthetic_orders(1, 0, region, 100.0).is_empty());
        let many = generate_synthetic_orders(9, 12_500, region, 86_400.0);
        assert_eq!(many.len(), 12_500);
        assert!(many.iter().all(|o| region.contains(o.pickup) && region.contains(o.dropoff)));
        assert!(many.windows(2).all(|w| w[0].request_time <= w[1].request_time));
        assert_eq!(generate_synthetic_orders(9, 50, region, 100.0), generate_synthetic_orders(9, 50, region, 100.0));
        assert_ne!(generate_synthetic_orders(9, 50, region, 100.0), generate_synthetic_orders(10, 50, region, 100.0));
    }

    #[test]
    fn seed_42_golden() {
        let region = Region { min: Point::new(0.0, 0.0), max: Point::new(20.0, 20.0) };
        let got = generate_synthetic_orders(42, 5, region, 300.0);
        let golden: Vec<OrderEvent> =
            serde_json::from_str(include_str!("../../tests/golden/synthetic_orders_seed42.json")).unwrap();
        assert_eq!(got, golden);
    }
}

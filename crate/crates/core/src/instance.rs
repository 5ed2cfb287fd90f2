use serde::{Deserialize, Serialize};

use crate::geometry::{manhattan, Point};

/// One matching round: positions of idle empty vehicles, vehicles already
/// carrying one passenger who is willing to share, and waiting users.
///
/// Entities are referenced by their position in each list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchInstance {
    pub id: String,
    #[serde(rename = "empty")]
    pub empty_vehicles: Vec<Point>,
    #[serde(rename = "one_order")]
    pub one_order_vehicles: Vec<Point>,
    pub users: Vec<Point>,
}

impl DispatchInstance {
    pub fn new(
        id: impl Into<String>,
        empty_vehicles: Vec<Point>,
        one_order_vehicles: Vec<Point>,
        users: Vec<Point>,
    ) -> Self {
        Self {
            id: id.into(),
            empty_vehicles,
            one_order_vehicles,
            users,
        }
    }

    /// Number of empty vehicles.
    pub fn m(&self) -> usize {
        self.empty_vehicles.len()
    }

    /// Number of one-passenger vehicles.
    pub fn n(&self) -> usize {
        self.one_order_vehicles.len()
    }

    /// Number of users.
    pub fn p(&self) -> usize {
        self.users.len()
    }

    /// Total entity count `m + n + p`.
    pub fn scale(&self) -> usize {
        self.m() + self.n() + self.p()
    }

    /// Users that can be served at once: two per empty vehicle, one per one-order vehicle.
    pub fn service_capacity(&self) -> usize {
        2 * self.m() + self.n()
    }

    /// Empty vehicle `i` to user `j`.
    pub fn empty_to_user(&self, i: usize, j: usize) -> f64 {
        manhattan(self.empty_vehicles[i], self.users[j])
    }

    /// User `j` to user `k`.
    pub fn user_to_user(&self, j: usize, k: usize) -> f64 {
        manhattan(self.users[j], self.users[k])
    }

    /// One-order vehicle `i` to user `j`.
    pub fn one_order_to_user(&self, i: usize, j: usize) -> f64 {
        manhattan(self.one_order_vehicles[i], self.users[j])
    }

    pub fn all_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.empty_vehicles
            .iter()
            .chain(&self.one_order_vehicles)
            .chain(&self.users)
            .copied()
    }

    pub fn is_finite(&self) -> bool {
        self.all_points().all(|p| p.is_finite())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization is infallible")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// The instance shown in the prompt template's worked example.
pub fn worked_example() -> DispatchInstance {
    DispatchInstance::new(
        "worked-example",
        vec![
            Point::new(86.97, 35.86),
            Point::new(85.23, 36.74),
            Point::new(95.62, 28.43),
        ],
        vec![
            Point::new(90.55, 35.17),
            Point::new(101.43, 44.49),
            Point::new(100.56, 44.77),
        ],
        vec![
            Point::new(90.33, 35.82),
            Point::new(97.04, 41.87),
            Point::new(100.91, 42.75),
        ],
    )
}

//! Ride-pooling dispatch as a mixed-integer program.
//!
//! The crate builds the carpool MIP for one matching round, solves it exactly,
//! generates rounds with a grid simulator, renders and parses the text prompt
//! used by solution proposers, and evaluates multi-round temperature
//! schedules against the exact solver's incumbent trail.

pub mod assignment;
pub mod eval;
pub mod geometry;
pub mod instance;
pub mod model;
pub mod prompt;
pub mod proposer;
pub mod schedule;
pub mod seeds;
pub mod sim;
pub mod solver;
pub mod validate;

pub use assignment::{evaluate_objective, Assignment};
pub use geometry::{manhattan, mercator_project, Point, ProjectionConfig};
pub use instance::DispatchInstance;
pub use validate::{validate, ValidationReport};

//! Optional TOML config file. Command-line flags override it, and it
//! overrides built-in defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub solver: SolverSection,
    pub schedule: ScheduleSection,
    pub sim: SimSection,
    pub generate: GenerateSection,
    pub remote: RemoteSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub max_nodes: Option<u64>,
    pub time_limit_secs: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub max_exemplars: Option<usize>,
    pub early_stop: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub batch_window: Option<f64>,
    pub vehicle_speed: Option<f64>,
    pub tick: Option<f64>,
    pub drain_time: Option<f64>,
    pub grid: Option<usize>,
    pub vehicles: Option<usize>,
    pub blocked_density: Option<f64>,
    pub orders: Option<usize>,
    pub time_span: Option<f64>,
    pub cell_size: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub count: Option<usize>,
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteSection {
    pub model: Option<String>,
    pub max_retries: Option<u32>,
    pub timeout_secs: Option<f64>,
    pub max_in_flight: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("parsing config {}: {e}", path.display()))
    }
}

/// Flag, else file value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

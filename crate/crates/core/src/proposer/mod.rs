//! Solution proposers: anything that turns a prompt and a temperature into
//! text containing x/y/z solution lines.

mod mock;
mod remote;
mod stochastic;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::DispatchInstance;
use crate::prompt::PromptBundle;

pub use mock::MockProposer;
pub use remote::{RemoteConfig, RemoteProposer};
pub use stochastic::{distance_scale, stochastic_construct, Construction, StochasticProposer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Mock,
    Stochastic,
    Remote,
}

#[derive(Debug, Clone, Copy)]
pub struct ProposerRequest<'a> {
    pub prompt: &'a PromptBundle,
    /// The instance behind `prompt`. Offline proposers read it directly; the
    /// remote client only sends the prompt text.
    pub instance: &'a DispatchInstance,
    pub temperature: f64,
    pub seed: Option<u64>,
    /// Zero-based round within a schedule run.
    pub round_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposerResponse {
    pub text: String,
    pub latency: Duration,
    pub provider: Provider,
    pub retries: u32,
}

#[derive(Debug, Error)]
pub enum ProposerError {
    #[error("temperature must be finite and non-negative, got {0}")]
    InvalidTemperature(f64),
    #[error("no fixture for round {round} ({available} available)")]
    FixtureExhausted { round: usize, available: usize },
    #[error("reading fixtures from {path}: {source}")]
    Fixture {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("remote proposer misconfigured: {0}")]
    Config(String),
    #[error("endpoint returned status {status} after {retries} retries: {body}")]
    Status { status: u16, body: String, retries: u32 },
    #[error("transport error after {retries} retries: {message}")]
    Transport { message: String, retries: u32 },
    #[error("malformed response: missing {missing}")]
    Decode { missing: String },
    #[error("proposer returned empty text")]
    EmptyText,
}

pub trait Proposer: Send + Sync {
    fn provider(&self) -> Provider;

    fn propose(&self, req: &ProposerRequest<'_>) -> Result<ProposerResponse, ProposerError>;
}

pub(crate) fn check_temperature(t: f64) -> Result<(), ProposerError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(ProposerError::InvalidTemperature(t))
    }
}

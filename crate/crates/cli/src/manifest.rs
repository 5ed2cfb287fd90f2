use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

/// `manifest.json` at the root of an output tree. Written when a command
/// starts and rewritten with the outcome when it ends.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: Option<f64>,
    pub status: String,
    pub exit_code: Option<i32>,
    pub message: Option<String>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(skip)]
    root: PathBuf,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(root: &Path, command: &str, seed: u64, config: serde_json::Value) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        let m = Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            started_unix: now(),
            finished_unix: None,
            status: "running".into(),
            exit_code: None,
            message: None,
            artifacts: Vec::new(),
            root: root.to_path_buf(),
        };
        m.save()?;
        Ok(m)
    }

    pub fn path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    fn save(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialization") + "\n";
        std::fs::write(self.path(), text)
    }

    /// Writes `contents` to `rel` under the output root and records it.
    pub fn write(&mut self, rel: impl AsRef<Path>, contents: impl AsRef<[u8]>) -> std::io::Result<PathBuf> {
        let path = self.root.join(rel.as_ref());
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents)?;
        self.record(rel);
        Ok(path)
    }

    pub fn record(&mut self, rel: impl AsRef<Path>) {
        self.artifacts.push(rel.as_ref().to_string_lossy().replace('\\', "/"));
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn finish(mut self, exit_code: i32, message: Option<String>) {
        self.finished_unix = Some(now());
        self.status = if exit_code == 0 { "ok".into() } else { "failed".into() };
        self.exit_code = Some(exit_code);
        self.message = message;
        if let Err(e) = self.save() {
            eprintln!("warning: could not update {}: {e}", self.path().display());
        }
    }
}

//! Run manifests: every command embeds one in its output artifacts so a run
//! can be reproduced from the artifact alone.

use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// All resolved configuration values of the run.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    /// Unix seconds at launch; absent when timestamps are suppressed for
    /// byte-for-byte reproducibility.
    pub started_at_unix: Option<u64>,
    pub duration_seconds: Option<f64>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: Vec<String>,
        config: serde_json::Value,
        seed: Option<u64>,
        with_timestamp: bool,
    ) -> Self {
        let started_at_unix = if with_timestamp {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs())
        } else {
            None
        };
        RunManifest {
            command: command.to_string(),
            inputs,
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_at_unix,
            duration_seconds: None,
        }
    }

    pub fn set_duration(&mut self, seconds: f64) {
        if self.started_at_unix.is_some() {
            self.duration_seconds = Some(seconds);
        }
    }

    /// The `{"manifest": ..., "payload": ...}` envelope wrapped around every
    /// JSON artifact.
    pub fn envelope(&self, payload: serde_json::Value) -> serde_json::Value {
        serde_json::json!({
            "manifest": self,
            "payload": payload,
        })
    }
}

//! Machine-readable report envelope.

use serde::Serialize;

use super::{ConsistencyFlag, RunConfig};

#[derive(Serialize, Clone)]
pub struct ConsistencySummary {
    pub flags: Vec<ConsistencyFlag>,
    pub all_agree: bool,
}

/// Envelope around a command's output. Identical config and seed reproduce
/// the report byte for byte, except for `timestamp_unix`.
#[derive(Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub timestamp_unix: u64,
    pub config: serde_json::Value,
    pub body: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySummary>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: &RunConfig, body: serde_json::Value) -> Report {
        Report {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            body,
            consistency: None,
        }
    }
}

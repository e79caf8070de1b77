//! Run manifests: a JSON record of everything needed to reproduce a run's
//! output tables bit for bit, plus digests to check that a rerun actually
//! did.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use upin_core::BoundConstants;

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    /// Identifies (version, command, config); wall clock and worker count
    /// deliberately excluded, they never influence outputs.
    pub digest: String,
    pub config: RunConfig,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<BoundConstants>,
    pub wall_clock_seconds: f64,
    pub tables: BTreeMap<String, TableDigest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableDigest {
    pub rows: usize,
    pub row_digests: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of the run identity. serde_json orders map keys, so equal configs
/// digest equally regardless of field declaration order.
pub fn run_digest(command: &str, config: &RunConfig) -> String {
    let payload = serde_json::json!({
        "version": VERSION,
        "command": command,
        "config": config,
    });
    hex(&Sha256::digest(payload.to_string().as_bytes()))
}

/// One digest per data row of a CSV table; comment and header lines are
/// skipped so cosmetic relabels do not mask data changes.
pub fn table_digest(csv: &str) -> TableDigest {
    let row_digests: Vec<String> = csv
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| hex(&Sha256::digest(l.as_bytes())))
        .collect();
    TableDigest { rows: row_digests.len(), row_digests }
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig, constants: Option<BoundConstants>) -> Self {
        RunManifest {
            version: VERSION.to_string(),
            command: command.to_string(),
            digest: run_digest(command, config),
            config: config.clone(),
            seed: config.run.seed,
            constants,
            wall_clock_seconds: 0.0,
            tables: BTreeMap::new(),
        }
    }

    pub fn record_table(&mut self, name: &str, csv: &str) {
        self.tables.insert(name.to_string(), table_digest(csv));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

//! Run configuration embedded verbatim into every output artifact, plus its
//! content hash for cross-referencing result rows.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub graph: String,
    pub coupling: String,
    pub mu: f64,
    pub k: f64,
    pub rtol: f64,
    pub atol: f64,
    pub grad_tol: f64,
    pub t_max: f64,
    pub restarts: usize,
    pub seed: u64,
    pub lines: usize,
    pub binarize_eps: f64,
    pub record_every: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
}

/// SHA-256 of the canonical JSON serialization, as lowercase hex.
pub fn config_hash(config: &RunConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

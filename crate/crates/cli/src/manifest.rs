use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Serialize)]
pub struct Decisions {
    pub rejection_rule: String,
    pub resting_epoch_s: f64,
    pub svm_c: f64,
    pub seed: u64,
}

/// Provenance written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: serde_json::Value,
    pub decisions: Decisions,
    pub subjects: Vec<String>,
    /// Input file (relative to its input directory) to SHA-256.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

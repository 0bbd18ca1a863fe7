//! Line-delimited JSON run records.

use std::io::Write;
use std::path::Path;

use qmip_core::transforms::{ComposedBounds, TransformReport};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Hex SHA-256 of a file's bytes.
pub fn digest(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditRecord {
    pub prover_dims: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub value: f64,
    pub trace: Vec<f64>,
    pub restart_values: Vec<f64>,
    pub best_restart: usize,
    pub converged: bool,
    pub claimed_soundness: Option<f64>,
    pub verdict: String,
    pub grid_value: Option<f64>,
    pub caveat: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub file: String,
    pub report: TransformReport,
}

/// Values of the lifted no-instance chain at each stage.
#[derive(Debug, Clone, Serialize)]
pub struct NoInstanceStage {
    pub stage: String,
    pub total_qubits: usize,
    pub lifted_value: f64,
    /// See-saw value, for stages small enough to search.
    pub seesaw_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoInstanceRecord {
    pub input: String,
    pub digest: String,
    pub stages: Vec<NoInstanceStage>,
    pub audited_value: f64,
    pub limit: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineRecord {
    pub stages: Vec<StageRecord>,
    pub bounds: ComposedBounds,
    pub final_provers: usize,
    pub final_turns: usize,
    pub final_honest_value: f64,
    pub no_instance: Option<NoInstanceRecord>,
}

/// One command invocation; wall time is the only field that varies between
/// identical runs.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunRecord {
    pub command: Vec<String>,
    pub input: Option<String>,
    pub digest: Option<String>,
    pub seed: Option<u64>,
    pub acceptance: Option<f64>,
    pub transform: Option<TransformReport>,
    pub adversary: Option<AuditRecord>,
    pub pipeline: Option<PipelineRecord>,
    pub outputs: Vec<String>,
    pub wall_time_ms: f64,
}

impl RunRecord {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }

    /// Appends the record to `records.jsonl` in `dir`.
    pub fn append_to(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join("records.jsonl");
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| CliError::io(&path, e))?;
        writeln!(f, "{}", self.to_line()).map_err(|e| CliError::io(&path, e))
    }
}

//! Artifact staging and the run manifest.
//!
//! Artifacts are rendered in memory and written only once the command has
//! finished computing. Each file goes to a temporary name and is renamed
//! into place; the manifest is written last.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use dcf_core::diagnostics::SelectionReport;

use crate::error::CliError;
use crate::pipeline::DatasetSizes;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateSummary {
    pub model: String,
    pub parameter_count: usize,
    pub marginal_loglik: Option<f64>,
    pub bic: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionSummary {
    pub best_bic_model: String,
    pub rasch_admissible: bool,
    pub candidates: Vec<CandidateSummary>,
}

impl SelectionSummary {
    pub fn from_report(report: &SelectionReport) -> Self {
        SelectionSummary {
            best_bic_model: report.best_candidate().label.clone(),
            rasch_admissible: report.rasch_admissible,
            candidates: report
                .candidates
                .iter()
                .map(|c| CandidateSummary {
                    model: c.label.clone(),
                    parameter_count: c.parameter_count,
                    marginal_loglik: c.marginal_loglik,
                    bic: c.bic,
                    converged: c.converged,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Every resolved config key; pass this file to `--config` to re-run.
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub lrt_df: usize,
    pub override_rasch_guard: bool,
    pub resolved_ag: Option<String>,
    pub dataset: Option<DatasetSizes>,
    pub model_selection: Option<SelectionSummary>,
    pub guard_refusal: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Rendered files waiting to be written.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every artifact, then the manifest with the artifact list
    /// filled in.
    pub fn commit(self, dir: &Path, mut manifest: Manifest) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        manifest.artifacts = self.files.iter().map(|(n, b)| ArtifactEntry { name: n.clone(), bytes: b.len() }).collect();
        for (name, bytes) in &self.files {
            write_atomic(dir, name, bytes)?;
        }
        manifest.finished_unix = unix_now();
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        write_atomic(dir, MANIFEST, &bytes)
    }
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

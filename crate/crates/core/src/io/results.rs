//! On-disk form of a detection run: `pi_r.csv`, `pi_c.csv` and `result.json`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::analyze::MembershipReport;
use crate::io::membership::{load_membership, save_membership};
use crate::model::Membership;
use crate::pipeline::{DetectionResult, Method};
use crate::spectral::{EigenBasis, SolverChoice};
use crate::vertex_hunting::VertexSet;

pub const ROW_MEMBERSHIP_FILE: &str = "pi_r.csv";
pub const COLUMN_MEMBERSHIP_FILE: &str = "pi_c.csv";
pub const RESULT_FILE: &str = "result.json";
pub const RESULT_FORMAT: &str = "mmscbm-result v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gap_degenerate: bool,
    pub solver: SolverChoice,
}

impl From<&EigenBasis> for SpectrumSummary {
    fn from(b: &EigenBasis) -> Self {
        SpectrumSummary {
            values: b.values.clone(),
            residuals: b.residuals.clone(),
            gap_degenerate: b.gap_degenerate,
            solver: b.solver,
        }
    }
}

/// Everything in a [`DetectionResult`] except the membership matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub format: String,
    pub method: Method,
    pub n: usize,
    pub k: usize,
    /// 0-based node indices.
    pub vertices_r: VertexSet,
    pub vertices_c: VertexSet,
    /// Labels of the vertex nodes, in pick order.
    pub vertex_labels_r: Vec<String>,
    pub vertex_labels_c: Vec<String>,
    pub spectrum_r: SpectrumSummary,
    pub spectrum_c: SpectrumSummary,
    pub diagnostics: BTreeMap<String, f64>,
}

impl ResultSummary {
    pub fn new(result: &DetectionResult, method: Method, labels: &[String]) -> Self {
        let names = |v: &VertexSet| v.indices.iter().map(|&i| labels[i].clone()).collect();
        ResultSummary {
            format: RESULT_FORMAT.to_string(),
            method,
            n: result.n(),
            k: result.k(),
            vertex_labels_r: names(&result.vertices_r),
            vertex_labels_c: names(&result.vertices_c),
            vertices_r: result.vertices_r.clone(),
            vertices_c: result.vertices_c.clone(),
            spectrum_r: (&result.spectrum_r).into(),
            spectrum_c: (&result.spectrum_c).into(),
            diagnostics: result.diagnostics.clone(),
        }
    }
}

/// Writes annotated membership CSVs and the JSON summary into `dir`.
pub fn save_detection(
    dir: &Path,
    result: &DetectionResult,
    method: Method,
    labels: &[String],
    report: &MembershipReport,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_membership(
        &dir.join(ROW_MEMBERSHIP_FILE),
        labels,
        &result.pi_r_hat,
        Some(&report.row_annotations()),
    )?;
    save_membership(
        &dir.join(COLUMN_MEMBERSHIP_FILE),
        labels,
        &result.pi_c_hat,
        Some(&report.column_annotations()),
    )?;
    let path = dir.join(RESULT_FILE);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &ResultSummary::new(result, method, labels))?;
    Ok(())
}

/// Labels plus row and column memberships from a detection or instance directory.
pub fn load_membership_pair(dir: &Path) -> Result<(Vec<String>, Membership, Membership)> {
    let (labels, pi_r) = load_membership(&dir.join(ROW_MEMBERSHIP_FILE))?;
    let (labels_c, pi_c) = load_membership(&dir.join(COLUMN_MEMBERSHIP_FILE))?;
    if labels != labels_c {
        return Err(Error::Validation("row and column membership files list different nodes".into()));
    }
    Ok((labels, pi_r, pi_c))
}

pub fn load_summary(dir: &Path) -> Result<ResultSummary> {
    let path = dir.join(RESULT_FILE);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

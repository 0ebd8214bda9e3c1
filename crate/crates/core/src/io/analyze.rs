//! Home-base communities and highly mixed nodes.
//!
//! A node's home base on a side is the community with the largest estimated
//! weight (smallest index on ties). A node is highly mixed on a side when
//! that largest weight is at most the threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::membership::NodeAnnotation;
use crate::model::{AdjacencyStack, Membership};
use crate::pipeline::DetectionResult;

pub const DEFAULT_MIXED_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReport {
    pub label: String,
    /// 0-based.
    pub home_base_r: usize,
    /// 0-based.
    pub home_base_c: usize,
    pub mixed_export: bool,
    pub mixed_import: bool,
    pub pi_r: Vec<f64>,
    pub pi_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub threshold: f64,
    pub nodes: Vec<NodeReport>,
}

impl MembershipReport {
    pub fn mixed_exporters(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| n.mixed_export)
    }

    pub fn mixed_importers(&self) -> impl Iterator<Item = &NodeReport> {
        self.nodes.iter().filter(|n| n.mixed_import)
    }

    pub fn row_annotations(&self) -> Vec<NodeAnnotation> {
        self.nodes
            .iter()
            .map(|n| NodeAnnotation { home_base: n.home_base_r, mixed: n.mixed_export })
            .collect()
    }

    pub fn column_annotations(&self) -> Vec<NodeAnnotation> {
        self.nodes
            .iter()
            .map(|n| NodeAnnotation { home_base: n.home_base_c, mixed: n.mixed_import })
            .collect()
    }
}

/// Largest weight and its (first) community.
pub fn home_base(row: &[f64]) -> (usize, f64) {
    row.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, w)| if w > best.1 { (k, w) } else { best })
}

pub fn analyze_memberships(
    result: &DetectionResult,
    labels: &[String],
    threshold: f64,
) -> Result<MembershipReport> {
    analyze_membership_pair(&result.pi_r_hat, &result.pi_c_hat, labels, threshold)
}

pub fn analyze_membership_pair(
    pi_r: &Membership,
    pi_c: &Membership,
    labels: &[String],
    threshold: f64,
) -> Result<MembershipReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Validation(format!("threshold {threshold} is outside (0, 1)")));
    }
    if pi_r.n() != labels.len() || pi_c.n() != labels.len() {
        return Err(Error::Dimension("labels do not match membership rows".into()));
    }
    let nodes = labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let (row, col) = (pi_r.row(i), pi_c.row(i));
            let (home_base_r, max_r) = home_base(&row);
            let (home_base_c, max_c) = home_base(&col);
            NodeReport {
                label: label.clone(),
                home_base_r,
                home_base_c,
                mixed_export: max_r <= threshold,
                mixed_import: max_c <= threshold,
                pi_r: row,
                pi_c: col,
            }
        })
        .collect();
    Ok(MembershipReport { threshold, nodes })
}

/// Nodes with no incident edge in any layer.
pub fn zero_degree_nodes(stack: &AdjacencyStack) -> Vec<usize> {
    let mut deg = vec![0u64; stack.n()];
    for d in stack.degrees() {
        for i in 0..stack.n() {
            deg[i] += d.out_deg[i] + d.in_deg[i];
        }
    }
    deg.iter().enumerate().filter(|(_, &d)| d == 0).map(|(i, _)| i).collect()
}

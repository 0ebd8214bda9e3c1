//! Membership CSV files.
//!
//! Header `node_id,w1,...,wK` optionally followed by `home_base,mixed_flag`.
//! `home_base` is a 1-based community index and `mixed_flag` is `0` or `1`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::Membership;

/// Per-node annotations appended to a membership CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeAnnotation {
    /// 0-based; written 1-based.
    pub home_base: usize,
    pub mixed: bool,
}

pub fn write_membership_csv<W: Write>(
    out: W,
    labels: &[String],
    membership: &Membership,
    annotations: Option<&[NodeAnnotation]>,
) -> Result<()> {
    if labels.len() != membership.n() || annotations.is_some_and(|a| a.len() != membership.n()) {
        return Err(Error::Dimension("labels or annotations do not match membership rows".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["node_id".to_string()];
    header.extend((1..=membership.k()).map(|k| format!("w{k}")));
    if annotations.is_some() {
        header.push("home_base".into());
        header.push("mixed_flag".into());
    }
    w.write_record(&header)?;
    for (i, label) in labels.iter().enumerate() {
        let mut record = vec![label.clone()];
        record.extend(membership.row(i).iter().map(|v| v.to_string()));
        if let Some(ann) = annotations {
            record.push((ann[i].home_base + 1).to_string());
            record.push(u8::from(ann[i].mixed).to_string());
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(|e| Error::io("<membership csv>", e))?;
    Ok(())
}

/// Reads labels and weight columns (`w1..wK`); any other columns are ignored.
pub fn read_membership_csv<R: Read>(input: R) -> Result<(Vec<String>, Membership)> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let weight_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.len() > 1 && h.starts_with('w') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(i, _)| i)
        .collect();
    if headers.get(0) != Some("node_id") || weight_cols.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "expected header `node_id,w1,...`".into(),
        });
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (lineno, record) in r.records().enumerate() {
        let record = record?;
        labels.push(record[0].to_string());
        let row = weight_cols
            .iter()
            .map(|&c| {
                record[c].trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: lineno + 2,
                    message: format!("`{}` is not a number", &record[c]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let k = weight_cols.len();
    let m = DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]);
    Ok((labels, Membership::new(m)?))
}

pub fn save_membership(
    path: &Path,
    labels: &[String],
    membership: &Membership,
    annotations: Option<&[NodeAnnotation]>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_membership_csv(file, labels, membership, annotations)
}

pub fn load_membership(path: &Path) -> Result<(Vec<String>, Membership)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_membership_csv(file)
}

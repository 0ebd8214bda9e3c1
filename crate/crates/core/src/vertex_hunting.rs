//! Successive projection: greedy recovery of simplex vertices among the rows
//! of a matrix.
//!
//! If the rows of `V` are convex combinations of `K` affinely independent
//! vertex rows that themselves appear in `V`, the row of maximal norm is a
//! vertex. Projecting every row onto the orthogonal complement of that vertex
//! keeps the simplex structure in one fewer dimension, so repeating the step
//! `K` times returns one vertex per community.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this max residual norm no further vertex can be picked.
pub const RANK_TOL: f64 = 1e-12;

/// Rows whose norm falls under this multiple of the largest initial norm are
/// zeroed after each projection.
pub const ZERO_ROW_TOL: f64 = 1e-14;

/// Selected vertex rows in pick order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub indices: Vec<usize>,
    /// Residual norm of each pick at the moment it was selected.
    pub pick_norms: Vec<f64>,
}

/// Runs `k` rounds of successive projection over the rows of `v`.
///
/// Each round picks the row of largest residual norm (smallest index on
/// ties) and projects all residual rows onto the orthogonal complement of it.
pub fn spa(v: &DMatrix<f64>, k: usize) -> Result<VertexSet> {
    let n = v.nrows();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("cannot pick {k} vertices from {n} rows")));
    }
    let d = v.ncols();
    // residual rows, stored contiguously
    let mut rows: Vec<f64> = (0..n).flat_map(|i| v.row(i).iter().copied().collect::<Vec<_>>()).collect();
    let mut norms: Vec<f64> = rows.chunks_exact(d.max(1)).map(sq_norm).collect();
    if d == 0 {
        norms = vec![0.0; n];
    }
    let floor = ZERO_ROW_TOL * norms.iter().copied().fold(0.0, f64::max).sqrt();

    let mut indices = Vec::with_capacity(k);
    let mut pick_norms = Vec::with_capacity(k);
    for step in 1..=k {
        let (best, best_sq) = norms
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s > acc.1 { (i, s) } else { acc });
        let best_norm = best_sq.max(0.0).sqrt();
        if best_norm < RANK_TOL {
            return Err(Error::RankDeficient {
                step,
                max_norm: best_norm,
            });
        }
        indices.push(best);
        pick_norms.push(best_norm);
        if step == k {
            break;
        }

        let dir: Vec<f64> = rows[best * d..(best + 1) * d].iter().map(|x| x / best_norm).collect();
        for (row, norm) in rows.chunks_exact_mut(d).zip(norms.iter_mut()) {
            let c: f64 = row.iter().zip(&dir).map(|(a, b)| a * b).sum();
            for (r, u) in row.iter_mut().zip(&dir) {
                *r -= c * u;
            }
            let sq = sq_norm(row);
            if sq.sqrt() < floor {
                row.iter_mut().for_each(|r| *r = 0.0);
                *norm = 0.0;
            } else {
                *norm = sq;
            }
        }
    }
    Ok(VertexSet {
        indices,
        pick_norms,
    })
}

fn sq_norm(row: &[f64]) -> f64 {
    row.iter().map(|x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rows_with_padding() {
        let mut v = DMatrix::zeros(6, 3);
        v[(1, 0)] = 1.0;
        v[(3, 1)] = 1.0;
        v[(4, 2)] = 1.0;
        let picks = spa(&v, 3).unwrap();
        assert_eq!(picks.indices, vec![1, 3, 4]);
    }

    #[test]
    fn hand_executed_example() {
        let v = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 2.0, 0.5, 1.0, 0.3, 1.4]);
        let picks = spa(&v, 2).unwrap();
        // 0-based: row 1 (norm 2) then row 0
        assert_eq!(picks.indices, vec![1, 0]);
        assert_eq!(picks.pick_norms, vec![2.0, 1.0]);
    }

    #[test]
    fn rank_deficiency_names_step() {
        let v = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        match spa(&v, 2) {
            Err(Error::RankDeficient { step, .. }) => assert_eq!(step, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
        assert!(matches!(spa(&DMatrix::zeros(3, 2), 1), Err(Error::RankDeficient { step: 1, .. })));
    }

    #[test]
    fn too_many_vertices() {
        assert!(matches!(spa(&DMatrix::zeros(2, 2), 3), Err(Error::Dimension(_))));
    }
}

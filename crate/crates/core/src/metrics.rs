//! Permutation-minimised membership errors.
//!
//! For one side the Hamming error is `min_P ||Pi_hat P - Pi||_1 / n` with
//! `||.||_1` the entrywise absolute sum, and the relative error is
//! `min_P ||Pi_hat P - Pi||_F / n`. Both objectives split into a sum over
//! matched column pairs, so the minimising permutation is a linear
//! assignment problem; it is solved exactly with the Hungarian method rather
//! than by enumerating all `K!` permutations. The reported value is the
//! maximum over the row and column sides, each minimised independently.
//!
//! Row-stochastic inputs keep the Hamming error in `[0, 2]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Membership;

/// Permutation `perm` with `perm[b]` = estimated column matched to true column `b`.
pub type ColumnMatch = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub hamming: f64,
    pub relative: f64,
    pub hamming_perm_r: ColumnMatch,
    pub hamming_perm_c: ColumnMatch,
    pub relative_perm_r: ColumnMatch,
    pub relative_perm_c: ColumnMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distance {
    /// Entrywise absolute sum.
    L1,
    /// Frobenius norm.
    Frobenius,
}

fn check_shapes(estimate: &Membership, truth: &Membership) -> Result<()> {
    if estimate.n() != truth.n() || estimate.k() != truth.k() {
        return Err(Error::Dimension(format!(
            "estimate is {}x{}, truth is {}x{}",
            estimate.n(),
            estimate.k(),
            truth.n(),
            truth.k()
        )));
    }
    Ok(())
}

/// `C(a, b)`: cost of matching estimated column `a` to true column `b`.
fn cost_matrix(estimate: &DMatrix<f64>, truth: &DMatrix<f64>, dist: Distance) -> DMatrix<f64> {
    let k = truth.ncols();
    DMatrix::from_fn(k, k, |a, b| {
        estimate
            .column(a)
            .iter()
            .zip(truth.column(b).iter())
            .map(|(x, y)| match dist {
                Distance::L1 => (x - y).abs(),
                Distance::Frobenius => (x - y) * (x - y),
            })
            .sum()
    })
}

/// Distance between `Pi_hat P` and `Pi` for a given column match, divided by `n`.
///
/// The entrywise terms are summed in ascending order, so matches that pair
/// up the same multiset of entries (interchangeable columns) give
/// bit-identical values regardless of column order.
pub fn matched_distance(
    estimate: &Membership,
    truth: &Membership,
    perm: &[usize],
    dist: Distance,
) -> f64 {
    let (e, t) = (estimate.matrix(), truth.matrix());
    let mut terms: Vec<f64> = perm
        .iter()
        .enumerate()
        .flat_map(|(b, &a)| {
            (0..t.nrows()).map(move |i| {
                let d = e[(i, a)] - t[(i, b)];
                match dist {
                    Distance::L1 => d.abs(),
                    Distance::Frobenius => d * d,
                }
            })
        })
        .collect();
    terms.sort_by(f64::total_cmp);
    let total: f64 = terms.iter().sum();
    let norm = match dist {
        Distance::L1 => total,
        Distance::Frobenius => total.sqrt(),
    };
    norm / t.nrows() as f64
}

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `assign` with `assign[row] = column`. Shortest augmenting path
/// with dual potentials, `O(K^3)`.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let k = cost.nrows();
    // 1-based internals; index 0 is the virtual source
    let mut u = vec![0.0f64; k + 1];
    let mut v = vec![0.0f64; k + 1];
    let mut matched_row = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        matched_row[0] = row;
        let mut col0 = 0usize;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            for col in 1..=k {
                if used[col] {
                    continue;
                }
                let reduced = cost[(r0 - 1, col - 1)] - u[r0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=k {
                if used[col] {
                    u[matched_row[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; k];
    for col in 1..=k {
        assign[matched_row[col] - 1] = col - 1;
    }
    assign
}

/// One-side error and its minimising column match.
pub fn side_error(estimate: &Membership, truth: &Membership, dist: Distance) -> Result<(f64, ColumnMatch)> {
    check_shapes(estimate, truth)?;
    let cost = cost_matrix(estimate.matrix(), truth.matrix(), dist);
    // rows of `cost` are estimated columns; invert to index by true column
    let assign = min_cost_assignment(&cost);
    let mut perm = vec![0usize; assign.len()];
    for (a, &b) in assign.iter().enumerate() {
        perm[b] = a;
    }
    Ok((matched_distance(estimate, truth, &perm, dist), perm))
}

fn two_sided(
    pi_r_hat: &Membership,
    pi_r: &Membership,
    pi_c_hat: &Membership,
    pi_c: &Membership,
    dist: Distance,
) -> Result<(f64, ColumnMatch, ColumnMatch)> {
    let (er, pr) = side_error(pi_r_hat, pi_r, dist)?;
    let (ec, pc) = side_error(pi_c_hat, pi_c, dist)?;
    Ok((er.max(ec), pr, pc))
}

pub fn hamming_error(
    pi_r_hat: &Membership,
    pi_r: &Membership,
    pi_c_hat: &Membership,
    pi_c: &Membership,
) -> Result<f64> {
    two_sided(pi_r_hat, pi_r, pi_c_hat, pi_c, Distance::L1).map(|t| t.0)
}

pub fn relative_error(
    pi_r_hat: &Membership,
    pi_r: &Membership,
    pi_c_hat: &Membership,
    pi_c: &Membership,
) -> Result<f64> {
    two_sided(pi_r_hat, pi_r, pi_c_hat, pi_c, Distance::Frobenius).map(|t| t.0)
}

pub fn error_report(
    pi_r_hat: &Membership,
    pi_r: &Membership,
    pi_c_hat: &Membership,
    pi_c: &Membership,
) -> Result<ErrorReport> {
    let (hamming, hamming_perm_r, hamming_perm_c) =
        two_sided(pi_r_hat, pi_r, pi_c_hat, pi_c, Distance::L1)?;
    let (relative, relative_perm_r, relative_perm_c) =
        two_sided(pi_r_hat, pi_r, pi_c_hat, pi_c, Distance::Frobenius)?;
    Ok(ErrorReport {
        hamming,
        relative,
        hamming_perm_r,
        hamming_perm_c,
        relative_perm_r,
        relative_perm_c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> Membership {
        Membership::from_rows(rows).unwrap()
    }

    #[test]
    fn identical_and_swapped() {
        let pi = m(&[vec![1.0, 0.0], vec![0.2, 0.8], vec![0.0, 1.0]]);
        let swapped = pi.permute_columns(&[1, 0]);
        assert_eq!(hamming_error(&pi, &pi, &pi, &pi).unwrap(), 0.0);
        assert_eq!(hamming_error(&swapped, &pi, &swapped, &pi).unwrap(), 0.0);
        assert_eq!(relative_error(&swapped, &pi, &pi, &pi).unwrap(), 0.0);
    }

    #[test]
    fn two_node_example() {
        let pi = m(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let hat = m(&[vec![0.6, 0.4], vec![0.0, 1.0]]);
        let h = hamming_error(&hat, &pi, &hat, &pi).unwrap();
        assert!((h - 0.4).abs() < 1e-15);
        let r = relative_error(&hat, &pi, &hat, &pi).unwrap();
        assert!((r - 0.32f64.sqrt() / 2.0).abs() < 1e-15);
        let report = error_report(&hat, &pi, &hat, &pi).unwrap();
        assert_eq!(report.hamming_perm_r, vec![0, 1]);
    }

    #[test]
    fn partially_disjoint_supports() {
        let pi = m(&[vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        let hat = m(&[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        // best match pairs (hat 0 -> 1, hat 1 -> 0, hat 2 -> 2) at cost 0 + 1 + 1
        let h = hamming_error(&hat, &pi, &hat, &pi).unwrap();
        assert!((h - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shape_mismatch() {
        let a = m(&[vec![1.0, 0.0]]);
        let b = m(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(hamming_error(&a, &b, &a, &b), Err(Error::Dimension(_))));
    }

    #[test]
    fn assignment_small_cases() {
        let c = DMatrix::from_row_slice(3, 3, &[4., 1., 3., 2., 0., 5., 3., 2., 2.]);
        assert_eq!(min_cost_assignment(&c), vec![1, 0, 2]);
        assert_eq!(min_cost_assignment(&DMatrix::from_element(1, 1, 7.0)), vec![0]);
    }
}

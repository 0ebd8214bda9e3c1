//! End-to-end detectors.
//!
//! All detectors share the same back half: take `K` leading eigenvectors per
//! side, hunt the simplex vertices with [`spa`], then map every row into
//! vertex coordinates with [`reconstruct_membership`]. They differ only in
//! which symmetric matrices feed the eigensolver:
//!
//! | method      | row side                       | column side                    |
//! |-------------|--------------------------------|--------------------------------|
//! | `cspdsos`   | `sum_l (A_l A_l' - D_l^out)`   | `sum_l (A_l' A_l - D_l^in)`    |
//! | `cspsos`    | `sum_l A_l A_l'`               | `sum_l A_l' A_l`               |
//! | `cspsum`    | left singular vectors of `sum_l A_l` | right singular vectors   |
//! | ideal       | `sum_l Omega_l Omega_l'`       | `sum_l Omega_l' Omega_l`       |
//!
//! Estimated memberships come back in whatever column order the vertex
//! hunt produced; alignment with a reference is the job of [`crate::metrics`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::aggregation::{
    baseline_aggregation, debiased_aggregation, layer_sum, population_aggregation,
    AggregationPair, BaselineAggregate, BaselineKind,
};
use crate::error::{Error, Result, Side};
use crate::model::{AdjacencyStack, ExpectationStack, Membership};
use crate::spectral::{leading_eigenvectors, leading_singular_vectors, EigenBasis};
use crate::vertex_hunting::{spa, VertexSet};

/// Vertex submatrices with a larger 2-norm condition number are rejected.
pub const MAX_VERTEX_CONDITION: f64 = 1e12;

/// Clipped rows whose l1 mass falls below this become uniform.
pub const DEGENERATE_ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cspdsos,
    Cspsos,
    Cspsum,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cspdsos, Method::Cspsos, Method::Cspsum];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cspdsos => "cspdsos",
            Method::Cspsos => "cspsos",
            Method::Cspsum => "cspsum",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown method `{s}`")))
    }
}

/// Membership estimate for one side, plus the quantities behind it.
#[derive(Debug, Clone)]
pub struct SideEstimate {
    pub membership: Membership,
    pub vertices: VertexSet,
    /// 2-norm condition number of the vertex submatrix.
    pub condition: f64,
    /// Negative entries set to zero before normalisation.
    pub clipped_entries: usize,
    /// Rows with no mass left after clipping, replaced by `1/K`.
    pub degenerate_rows: usize,
}

#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub pi_r_hat: Membership,
    pub pi_c_hat: Membership,
    pub vertices_r: VertexSet,
    pub vertices_c: VertexSet,
    pub spectrum_r: EigenBasis,
    pub spectrum_c: EigenBasis,
    pub diagnostics: BTreeMap<String, f64>,
}

impl DetectionResult {
    pub fn k(&self) -> usize {
        self.pi_r_hat.k()
    }

    pub fn n(&self) -> usize {
        self.pi_r_hat.n()
    }

    fn assemble(
        row: (EigenBasis, SideEstimate),
        col: (EigenBasis, SideEstimate),
    ) -> DetectionResult {
        let mut diagnostics = BTreeMap::new();
        for (tag, (basis, est)) in [("r", &row), ("c", &col)] {
            diagnostics.insert(format!("condition_{tag}"), est.condition);
            diagnostics.insert(format!("clipped_entries_{tag}"), est.clipped_entries as f64);
            diagnostics.insert(format!("degenerate_rows_{tag}"), est.degenerate_rows as f64);
            diagnostics.insert(format!("gap_degenerate_{tag}"), f64::from(u8::from(basis.gap_degenerate)));
            let worst = basis.residuals.iter().copied().fold(0.0, f64::max);
            diagnostics.insert(format!("max_residual_{tag}"), worst);
        }
        let (spectrum_r, row) = row;
        let (spectrum_c, col) = col;
        DetectionResult {
            pi_r_hat: row.membership,
            pi_c_hat: col.membership,
            vertices_r: row.vertices,
            vertices_c: col.vertices,
            spectrum_r,
            spectrum_c,
            diagnostics,
        }
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Maps eigenvector rows into vertex coordinates and projects them onto the
/// probability simplex: `Y = max(0, U U(vertices, :)^{-1})`, rows divided by
/// their l1 norm.
pub fn reconstruct_membership(u: &DMatrix<f64>, vertices: &VertexSet) -> Result<SideEstimate> {
    let k = vertices.indices.len();
    if u.ncols() != k {
        return Err(Error::Dimension(format!(
            "basis has {} columns but {k} vertices were given",
            u.ncols()
        )));
    }
    if let Some(&bad) = vertices.indices.iter().find(|&&i| i >= u.nrows()) {
        return Err(Error::Dimension(format!("vertex index {bad} out of range")));
    }
    let pivot = DMatrix::from_fn(k, k, |a, b| u[(vertices.indices[a], b)]);
    let condition = condition_number(&pivot);
    if !(condition <= MAX_VERTEX_CONDITION) {
        return Err(Error::SingularVertices { condition });
    }
    // Y U_v = U  <=>  U_v' Y' = U'
    let lu = pivot.transpose().lu();
    let mut y = lu
        .solve(&u.transpose())
        .ok_or(Error::SingularVertices { condition })?
        .transpose();

    let mut clipped_entries = 0;
    let mut degenerate_rows = 0;
    for mut row in y.row_iter_mut() {
        for v in row.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clipped_entries += 1;
            }
        }
        let mass: f64 = row.iter().sum();
        if mass < DEGENERATE_ROW_TOL {
            row.fill(1.0 / k as f64);
            degenerate_rows += 1;
        } else {
            row /= mass;
            // 1 + eps overshoot would fail membership validation
            row.apply(|v| *v = v.min(1.0));
        }
    }
    Ok(SideEstimate {
        membership: Membership::new(y)?,
        vertices: vertices.clone(),
        condition,
        clipped_entries,
        degenerate_rows,
    })
}

/// Vertex hunting plus reconstruction on an arbitrary basis of the leading
/// subspace.
pub fn estimate_from_basis(u: &DMatrix<f64>, k: usize) -> Result<SideEstimate> {
    let vertices = spa(u, k)?;
    reconstruct_membership(u, &vertices)
}

fn side_from_matrix(s: &DMatrix<f64>, k: usize, side: Side) -> Result<(EigenBasis, SideEstimate)> {
    let run = || {
        let basis = leading_eigenvectors(s, k)?;
        let est = estimate_from_basis(&basis.vectors, k)?;
        Ok((basis, est))
    };
    run().map_err(|e: Error| e.on_side(side))
}

fn side_from_basis(basis: EigenBasis, k: usize, side: Side) -> Result<(EigenBasis, SideEstimate)> {
    let est = estimate_from_basis(&basis.vectors, k).map_err(|e| e.on_side(side))?;
    Ok((basis, est))
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        Err(Error::Validation(format!("need 1 <= K <= n, got K = {k}, n = {n}")))
    } else {
        Ok(())
    }
}

/// Runs the shared back half on a pair of symmetric aggregates.
pub fn detect_from_aggregates(pair: &AggregationPair, k: usize) -> Result<DetectionResult> {
    check_k(pair.n(), k)?;
    let (row, col) = rayon::join(
        || side_from_matrix(&pair.row, k, Side::Row),
        || side_from_matrix(&pair.col, k, Side::Column),
    );
    Ok(DetectionResult::assemble(row?, col?))
}

fn check_stack(stack: &AdjacencyStack, k: usize) -> Result<()> {
    if stack.is_empty() {
        return Err(Error::Validation("adjacency stack has no layers".into()));
    }
    check_k(stack.n(), k)
}

/// Debiased sum-of-squares spectral co-clustering.
pub fn cspdsos(stack: &AdjacencyStack, k: usize) -> Result<DetectionResult> {
    check_stack(stack, k)?;
    detect_from_aggregates(&debiased_aggregation(stack), k)
}

/// The same pipeline on population aggregates; recovers the planted
/// memberships exactly (up to column order) when they have pure nodes and
/// `sum_l B_l B_l'`, `sum_l B_l' B_l` have rank `K`.
pub fn ideal_cspdsos(omega: &ExpectationStack, k: usize) -> Result<DetectionResult> {
    check_k(omega.n(), k)?;
    detect_from_aggregates(&population_aggregation(omega), k)
}

pub fn baseline_detect(stack: &AdjacencyStack, k: usize, method: Method) -> Result<DetectionResult> {
    check_stack(stack, k)?;
    match method {
        Method::Cspdsos => cspdsos(stack, k),
        Method::Cspsos => match baseline_aggregation(stack, BaselineKind::SumOfSquares) {
            BaselineAggregate::SumOfSquares(pair) => detect_from_aggregates(&pair, k),
            BaselineAggregate::Sum(_) => unreachable!("asked for sum of squares"),
        },
        Method::Cspsum => {
            let (left, right) = leading_singular_vectors(&layer_sum(stack), k)?;
            let (row, col) = rayon::join(
                || side_from_basis(left, k, Side::Row),
                || side_from_basis(right, k, Side::Column),
            );
            Ok(DetectionResult::assemble(row?, col?))
        }
    }
}

/// Dispatches on `method`.
pub fn detect(stack: &AdjacencyStack, k: usize, method: Method) -> Result<DetectionResult> {
    baseline_detect(stack, k, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(indices: Vec<usize>) -> VertexSet {
        VertexSet {
            pick_norms: vec![1.0; indices.len()],
            indices,
        }
    }

    #[test]
    fn identity_vertex_matrix() {
        let pi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let est = reconstruct_membership(&pi, &vs(vec![0, 1])).unwrap();
        assert_eq!(est.membership.matrix(), &pi);
        assert_eq!(est.clipped_entries, 0);
    }

    #[test]
    fn rotation_cancels() {
        let pi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]);
        let (c, s) = (0.6f64, 0.8f64);
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let est = reconstruct_membership(&(&pi * q), &vs(vec![0, 1])).unwrap();
        assert!((est.membership.matrix() - &pi).amax() < 1e-15);
    }

    #[test]
    fn nonsingular_mixing_cancels() {
        let pi = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.3, 0.7]);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 1.0]);
        let est = reconstruct_membership(&(&pi * m), &vs(vec![0, 1])).unwrap();
        assert!((est.membership.matrix() - &pi).amax() < 1e-12);
    }

    #[test]
    fn clipping_and_degenerate_rows() {
        // row 2 lies outside the simplex on one axis, row 3 on both
        let u = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.5, -0.5, -1.0, -2.0]);
        let est = reconstruct_membership(&u, &vs(vec![0, 1])).unwrap();
        assert_eq!(est.membership.row(2), vec![1.0, 0.0]);
        assert_eq!(est.membership.row(3), vec![0.5, 0.5]);
        assert_eq!(est.clipped_entries, 3);
        assert_eq!(est.degenerate_rows, 1);
    }

    #[test]
    fn singular_vertices_rejected() {
        let u = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            reconstruct_membership(&u, &vs(vec![0, 1])),
            Err(Error::SingularVertices { .. })
        ));
    }

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("spectral".parse::<Method>().is_err());
    }
}

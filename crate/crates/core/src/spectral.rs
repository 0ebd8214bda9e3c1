//! Leading eigenpairs of symmetric matrices, ordered by `|lambda|`.
//!
//! Two solvers sit behind [`leading_eigenvectors`]: a full dense symmetric
//! decomposition for `n <= DENSE_LIMIT`, and a thick-restart Lanczos
//! iteration (full reorthogonalisation, Rayleigh-Ritz on the whole basis)
//! above it. Both return columns normalised so that the largest-magnitude
//! entry of each column is positive, the first such entry winning ties.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension handled by the dense solver under [`SolverChoice::Auto`].
pub const DENSE_LIMIT: usize = 4096;

/// Relative symmetry tolerance on the input.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Iterative convergence target, relative to `||S||_F`.
pub const ITERATIVE_TOL: f64 = 1e-10;

/// `|lambda_K|` and `|lambda_{K+1}|` closer than this (relative to
/// `|lambda_1|`) flag the subspace as ill-defined.
pub const GAP_TOL: f64 = 1e-10;

const MAX_RESTARTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    #[default]
    Auto,
    Dense,
    Iterative,
}

/// `K` orthonormal eigenvectors with eigenvalues sorted by decreasing `|lambda|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    /// `||S u_k - lambda_k u_k||_2` per column.
    pub residuals: Vec<f64>,
    /// Set when the `K`-th and `K+1`-th magnitudes coincide.
    pub gap_degenerate: bool,
    pub solver: SolverChoice,
}

impl EigenBasis {
    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }
}

pub fn leading_eigenvectors(s: &DMatrix<f64>, k: usize) -> Result<EigenBasis> {
    leading_eigenvectors_with(s, k, SolverChoice::Auto)
}

pub fn leading_eigenvectors_with(
    s: &DMatrix<f64>,
    k: usize,
    solver: SolverChoice,
) -> Result<EigenBasis> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", n, s.ncols())));
    }
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("cannot take {k} eigenvectors of a {n}x{n} matrix")));
    }
    check_symmetric(s)?;
    let solver = match solver {
        SolverChoice::Auto if n <= DENSE_LIMIT => SolverChoice::Dense,
        SolverChoice::Auto => SolverChoice::Iterative,
        other => other,
    };
    let (vectors, values, next) = match solver {
        SolverChoice::Iterative if n > k + 1 => lanczos(s, k)?,
        _ => dense(s, k),
    };
    finish(s, vectors, values, next, solver)
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    let n = s.nrows();
    let scale = s.amax().max(1.0);
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j + 1..n {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        Err(Error::NonSymmetric { asymmetry: worst })
    } else {
        Ok(())
    }
}

/// Indices of `values` by decreasing magnitude, larger signed value first on ties.
fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then(values[b].total_cmp(&values[a]))
    });
    order
}

fn dense(s: &DMatrix<f64>, k: usize) -> (DMatrix<f64>, Vec<f64>, Option<f64>) {
    let eig = SymmetricEigen::new(s.clone());
    let order = magnitude_order(eig.eigenvalues.as_slice());
    let vectors = DMatrix::from_fn(s.nrows(), k, |i, c| eig.eigenvectors[(i, order[c])]);
    let values = order[..k].iter().map(|&c| eig.eigenvalues[c]).collect();
    let next = order.get(k).map(|&c| eig.eigenvalues[c]);
    (vectors, values, next)
}

fn finish(
    s: &DMatrix<f64>,
    mut vectors: DMatrix<f64>,
    values: Vec<f64>,
    next: Option<f64>,
    solver: SolverChoice,
) -> Result<EigenBasis> {
    fix_signs(&mut vectors);
    let residuals = (0..vectors.ncols())
        .map(|c| {
            let u = vectors.column(c);
            (s * u - u * values[c]).norm()
        })
        .collect();
    let gap_degenerate = match (next, values.last(), values.first()) {
        (Some(next), Some(last), Some(first)) => {
            (last.abs() - next.abs()).abs() <= GAP_TOL * first.abs()
        }
        _ => false,
    };
    if gap_degenerate {
        log::warn!(
            "eigenvalue magnitudes {} and {} coincide; leading subspace is ill-defined",
            values.last().copied().unwrap_or_default(),
            next.unwrap_or_default()
        );
    }
    Ok(EigenBasis {
        vectors,
        values,
        residuals,
        gap_degenerate,
        solver,
    })
}

/// Flips each column so its largest-magnitude entry is positive.
pub fn fix_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let mut best = 0usize;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Orthogonalises `f` against `basis` (two classical Gram-Schmidt passes)
/// and returns its remaining norm.
fn orthogonalize(f: &mut DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    for _ in 0..2 {
        for v in basis {
            let c = v.dot(f);
            f.axpy(-c, v, 1.0);
        }
    }
    f.norm()
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, basis: &[DVector<f64>]) -> DVector<f64> {
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let norm = orthogonalize(&mut v, basis);
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Thick-restart Lanczos for the `k` largest-magnitude eigenpairs.
fn lanczos(s: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, Vec<f64>, Option<f64>)> {
    let n = s.nrows();
    let scale = s.norm();
    if scale == 0.0 {
        return Ok((DMatrix::identity(n, k), vec![0.0; k], Some(0.0)));
    }
    let target = ITERATIVE_TOL * scale;
    let m = n.min((2 * k + 16).max(32));
    let keep = (k + (m - k) / 2).min(m - 1);

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c_205e_ed01);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut expand_from: Option<usize> = None;
    let mut worst = f64::INFINITY;

    for _ in 0..MAX_RESTARTS {
        while basis.len() < m {
            let mut f = match expand_from {
                Some(j) => images[j].clone(),
                None => random_unit(&mut rng, n, &basis),
            };
            let norm = orthogonalize(&mut f, &basis);
            let v = if norm > 1e-12 * scale {
                f / norm
            } else {
                // invariant subspace reached; continue from a fresh direction
                random_unit(&mut rng, n, &basis)
            };
            images.push(s * &v);
            basis.push(v);
            expand_from = Some(basis.len() - 1);
        }

        let dim = basis.len();
        let mut h = DMatrix::from_fn(dim, dim, |i, j| basis[i].dot(&images[j]));
        h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let order = magnitude_order(eig.eigenvalues.as_slice());

        let combine = |vecs: &[DVector<f64>], c: usize| -> DVector<f64> {
            let mut out = DVector::zeros(n);
            for (v, &y) in vecs.iter().zip(eig.eigenvectors.column(c).iter()) {
                out.axpy(y, v, 1.0);
            }
            out
        };
        let ritz: Vec<(DVector<f64>, DVector<f64>, f64)> = order[..keep]
            .iter()
            .map(|&c| (combine(&basis, c), combine(&images, c), eig.eigenvalues[c]))
            .collect();
        let residual = |(x, ax, theta): &(DVector<f64>, DVector<f64>, f64)| (ax - x * *theta).norm();
        let residuals: Vec<f64> = ritz.iter().map(residual).collect();
        worst = residuals[..k].iter().copied().fold(0.0, f64::max);

        if worst <= target {
            let vectors = DMatrix::from_fn(n, k, |i, c| ritz[c].0[i]);
            let values = ritz[..k].iter().map(|r| r.2).collect();
            return Ok((vectors, values, Some(ritz[k].2)));
        }

        let pivot = residuals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j);
        basis = ritz.iter().map(|r| r.0.clone()).collect();
        images = ritz.into_iter().map(|r| r.1).collect();
        expand_from = pivot;
    }
    Err(Error::NoConvergence {
        residual: worst,
        target,
    })
}

/// Leading `k` left and right singular vectors of `m`, obtained from the
/// Gram matrices `m m'` and `m' m`. Eigenvalues in the returned bases are
/// the squared singular values.
pub fn leading_singular_vectors(m: &DMatrix<f64>, k: usize) -> Result<(EigenBasis, EigenBasis)> {
    let mut left = m * m.transpose();
    let mut right = m.transpose() * m;
    for g in [&mut left, &mut right] {
        let h = (&*g + g.transpose()) * 0.5;
        *g = h;
    }
    Ok((leading_eigenvectors(&left, k)?, leading_eigenvectors(&right, k)?))
}

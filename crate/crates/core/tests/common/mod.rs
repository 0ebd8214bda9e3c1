//! Oracles and generators shared by the integration tests.
//!
//! The oracles here are deliberately naive restatements of the definitions;
//! they share no code with the library paths they check.

#![allow(dead_code)]

use std::path::PathBuf;

use itertools::Itertools;
use mmscbm::metrics::Distance;
use mmscbm::model::Layer;
use mmscbm::{AdjacencyStack, Membership};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fao_trade_mini")
}

/// A random row-stochastic matrix; roughly a third of the rows are one-hot.
pub fn random_membership(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Membership {
    let mut w = DMatrix::zeros(n, k);
    for i in 0..n {
        if rng.random_bool(1.0 / 3.0) {
            w[(i, rng.random_range(0..k))] = 1.0;
        } else {
            let draws: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
            let total: f64 = draws.iter().sum();
            for (c, d) in draws.iter().enumerate() {
                w[(i, c)] = d / total;
            }
        }
    }
    normalise(w)
}

/// Row-normalises in a way that keeps every row sum within rounding of 1.
pub fn normalise(mut w: DMatrix<f64>) -> Membership {
    for mut row in w.row_iter_mut() {
        let s: f64 = row.iter().sum();
        row /= s;
    }
    Membership::new(w).expect("normalised rows are row-stochastic")
}

pub fn random_binary_stack(rng: &mut ChaCha8Rng, n: usize, layers: usize, p: f64) -> AdjacencyStack {
    let layers = (0..layers)
        .map(|_| {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter(|_| rng.random_bool(p))
                .collect();
            Layer::from_edges(n, edges).unwrap()
        })
        .collect();
    AdjacencyStack::new(n, layers).unwrap()
}

/// Dense 0/1 copy of every layer as nested vectors.
pub fn as_bits(stack: &AdjacencyStack) -> Vec<Vec<Vec<i64>>> {
    stack
        .layers()
        .iter()
        .map(|layer| {
            let mut a = vec![vec![0i64; stack.n()]; stack.n()];
            for (i, j) in layer.edges() {
                a[i][j] = 1;
            }
            a
        })
        .collect()
}

/// `sum_l (A_l A_l' - D_l^out)` and `sum_l (A_l' A_l - D_l^in)` by four nested loops.
pub fn naive_debiased(stack: &AdjacencyStack) -> (Vec<Vec<i64>>, Vec<Vec<i64>>) {
    let n = stack.n();
    let mut row = vec![vec![0i64; n]; n];
    let mut col = vec![vec![0i64; n]; n];
    for a in as_bits(stack) {
        for i in 0..n {
            for j in 0..n {
                for m in 0..n {
                    row[i][j] += a[i][m] * a[j][m];
                    col[i][j] += a[m][i] * a[m][j];
                }
            }
        }
        for i in 0..n {
            let out: i64 = (0..n).map(|m| a[i][m]).sum();
            let inn: i64 = (0..n).map(|m| a[m][i]).sum();
            row[i][i] -= out;
            col[i][i] -= inn;
        }
    }
    (row, col)
}

/// `min_P ||Pi_hat P - Pi|| / n` over all `K!` column permutations.
///
/// Each candidate norm adds its entrywise terms in ascending order, so
/// permutations that tie in exact arithmetic also tie in floating point.
pub fn brute_force_side(estimate: &Membership, truth: &Membership, dist: Distance) -> f64 {
    let (e, t) = (estimate.matrix(), truth.matrix());
    let (n, k) = (t.nrows(), t.ncols());
    let mut best = f64::INFINITY;
    for perm in (0..k).permutations(k) {
        let mut terms = Vec::with_capacity(n * k);
        for b in 0..k {
            for i in 0..n {
                let d = (e[(i, perm[b])] - t[(i, b)]).abs();
                terms.push(if dist == Distance::L1 { d } else { d * d });
            }
        }
        terms.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut total = 0.0;
        for x in terms {
            total += x;
        }
        let norm = if dist == Distance::L1 { total } else { total.sqrt() };
        best = best.min(norm);
    }
    best / n as f64
}

/// Largest entrywise gap between `estimate` and `truth` under the best column permutation.
pub fn aligned_max_error(estimate: &Membership, truth: &Membership) -> f64 {
    let (e, t) = (estimate.matrix(), truth.matrix());
    let k = t.ncols();
    (0..k)
        .permutations(k)
        .map(|perm| {
            let mut worst: f64 = 0.0;
            for (b, &a) in perm.iter().enumerate() {
                for i in 0..t.nrows() {
                    worst = worst.max((e[(i, a)] - t[(i, b)]).abs());
                }
            }
            worst
        })
        .fold(f64::INFINITY, f64::min)
}

/// Haar-ish random orthogonal matrix from the QR factor of a Gaussian-like draw.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    g.qr().q()
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

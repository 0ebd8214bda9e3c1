//! Sum-of-squares aggregates of a multi-layer network.
//!
//! The debiased aggregates are
//!
//! ```text
//! S_row = sum_l (A_l A_l' - D_l^out)      S_col = sum_l (A_l' A_l - D_l^in)
//! ```
//!
//! where `D_l^out`/`D_l^in` are the diagonal out/in-degree matrices of layer
//! `l`. Off the diagonal their expectation equals the population aggregate
//! `sum_l Omega_l Omega_l'` (resp. `Omega_l' Omega_l`); on the diagonal the
//! degree term cancels `A_l A_l'` exactly, leaving zero.
//!
//! Sample aggregates are accumulated in `i64` and only then stored as `f64`,
//! which is exact for every count below 2^53. Rows are computed in parallel
//! but each row is a plain integer sum, so the result is bit-identical for any
//! thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AdjacencyStack, ExpectationStack, Layer};

/// Layers denser than this fraction of nonzeros use the bitset kernel.
pub const DENSE_LAYER_THRESHOLD: f64 = 0.05;

/// Version tag written at the top of coordinate-format dumps.
pub const DUMP_FORMAT: &str = "mmscbm-aggregate v1";

/// A pair of symmetric `n x n` aggregates, one per side.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationPair {
    pub row: DMatrix<f64>,
    pub col: DMatrix<f64>,
    /// Every entry is an exactly represented integer.
    pub exact_integer: bool,
}

impl AggregationPair {
    pub fn n(&self) -> usize {
        self.row.nrows()
    }
}

/// Which baseline aggregate to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// `sum_l A_l`.
    Sum,
    /// `(sum_l A_l A_l', sum_l A_l' A_l)` without degree correction.
    SumOfSquares,
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(BaselineKind::Sum),
            "sos" => Ok(BaselineKind::SumOfSquares),
            other => Err(Error::Validation(format!("unknown baseline kind `{other}`"))),
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::Sum => "sum",
            BaselineKind::SumOfSquares => "sos",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineAggregate {
    Sum(DMatrix<f64>),
    SumOfSquares(AggregationPair),
}

/// Per-layer kernel for one row of `A A'`.
enum RowKernel<'a> {
    /// Out-lists plus in-lists: `(A A')(i, j) = sum_{k in out(i)} [j in in(k)]`.
    Sparse { out: &'a Layer, inn: Layer },
    /// Bit-packed rows: `(A A')(i, j) = popcount(row_i & row_j)`.
    Bits { words: usize, bits: Vec<u64> },
}

impl RowKernel<'_> {
    fn new(layer: &Layer) -> RowKernel<'_> {
        if layer.density() > DENSE_LAYER_THRESHOLD {
            let n = layer.n();
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; n * words];
            for (i, j) in layer.edges() {
                bits[i * words + j / 64] |= 1u64 << (j % 64);
            }
            RowKernel::Bits { words, bits }
        } else {
            RowKernel::Sparse {
                out: layer,
                inn: layer.transpose(),
            }
        }
    }

    fn accumulate_row(&self, i: usize, acc: &mut [i64]) {
        match self {
            RowKernel::Sparse { out, inn } => {
                for &k in out.out_neighbors(i) {
                    for &j in inn.out_neighbors(k) {
                        acc[j] += 1;
                    }
                }
            }
            RowKernel::Bits { words, bits } => {
                let ri = &bits[i * words..(i + 1) * words];
                if ri.iter().all(|&w| w == 0) {
                    return;
                }
                for (j, rj) in bits.chunks_exact(*words).enumerate() {
                    let c: u32 = ri.iter().zip(rj).map(|(a, b)| (a & b).count_ones()).sum();
                    acc[j] += i64::from(c);
                }
            }
        }
    }
}

/// `sum_l A_l A_l'`, minus the out-degree diagonal when `debias` is set.
fn gram_of_rows(layers: &[Layer], n: usize, debias: bool) -> DMatrix<f64> {
    let kernels: Vec<RowKernel<'_>> = layers.iter().map(RowKernel::new).collect();
    let degree: Vec<i64> = if debias {
        let mut d = vec![0i64; n];
        for layer in layers {
            for (i, deg) in layer.out_degrees().into_iter().enumerate() {
                d[i] += deg as i64;
            }
        }
        d
    } else {
        Vec::new()
    };
    let mut data = vec![0.0f64; n * n];
    data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, out)| {
        let mut acc = vec![0i64; n];
        for kernel in &kernels {
            kernel.accumulate_row(i, &mut acc);
        }
        if debias {
            acc[i] -= degree[i];
        }
        for (o, a) in out.iter_mut().zip(acc) {
            *o = a as f64;
        }
    });
    // row i of a symmetric matrix is also its column i, so the row-major
    // buffer is a valid column-major one
    DMatrix::from_vec(n, n, data)
}

/// `S_row = sum_l (A_l A_l' - D_l^out)`, `S_col = sum_l (A_l' A_l - D_l^in)`.
///
/// Both diagonals are exactly zero and every entry is an integer.
pub fn debiased_aggregation(stack: &AdjacencyStack) -> AggregationPair {
    let n = stack.n();
    let transposed = stack.transpose();
    let (row, col) = rayon::join(
        || gram_of_rows(stack.layers(), n, true),
        || gram_of_rows(transposed.layers(), n, true),
    );
    AggregationPair {
        row,
        col,
        exact_integer: true,
    }
}

/// Population aggregates `sum_l Omega_l Omega_l'` and `sum_l Omega_l' Omega_l`.
pub fn population_aggregation(omega: &ExpectationStack) -> AggregationPair {
    let n = omega.n();
    let (mut row, mut col) = omega
        .layers()
        .par_iter()
        .map(|o| (o * o.transpose(), o.transpose() * o))
        .reduce(
            || (DMatrix::zeros(n, n), DMatrix::zeros(n, n)),
            |(r1, c1), (r2, c2)| (r1 + r2, c1 + c2),
        );
    symmetrize(&mut row);
    symmetrize(&mut col);
    AggregationPair {
        row,
        col,
        exact_integer: false,
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `sum_l A_l` as an integer-valued matrix.
pub fn layer_sum(stack: &AdjacencyStack) -> DMatrix<f64> {
    let n = stack.n();
    let mut m = DMatrix::zeros(n, n);
    for layer in stack.layers() {
        for (i, j) in layer.edges() {
            m[(i, j)] += 1.0;
        }
    }
    m
}

pub fn baseline_aggregation(stack: &AdjacencyStack, kind: BaselineKind) -> BaselineAggregate {
    match kind {
        BaselineKind::Sum => BaselineAggregate::Sum(layer_sum(stack)),
        BaselineKind::SumOfSquares => {
            let n = stack.n();
            let transposed = stack.transpose();
            let (row, col) = rayon::join(
                || gram_of_rows(stack.layers(), n, false),
                || gram_of_rows(transposed.layers(), n, false),
            );
            BaselineAggregate::SumOfSquares(AggregationPair {
                row,
                col,
                exact_integer: true,
            })
        }
    }
}

/// Writes the nonzero entries of `m` as 1-based `i j value` lines after a
/// version header.
pub fn dump_coordinates<W: Write>(m: &DMatrix<f64>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# {DUMP_FORMAT}")?;
    writeln!(out, "# {} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                writeln!(out, "{} {} {}", i + 1, j + 1, v)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stack(rows: &[&[&[u8]]]) -> AdjacencyStack {
        let mats: Vec<DMatrix<f64>> = rows
            .iter()
            .map(|m| DMatrix::from_fn(m.len(), m.len(), |i, j| f64::from(m[i][j])))
            .collect();
        AdjacencyStack::from_dense(&mats).unwrap()
    }

    #[test]
    fn empty_network_gives_zero() {
        let a = AdjacencyStack::new(4, vec![Layer::from_edges(4, []).unwrap(); 2]).unwrap();
        let s = debiased_aggregation(&a);
        assert!(s.row.iter().all(|&v| v == 0.0) && s.col.iter().all(|&v| v == 0.0));
        match baseline_aggregation(&a, BaselineKind::Sum) {
            BaselineAggregate::Sum(m) => assert!(m.iter().all(|&v| v == 0.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn swap_pair_cancels() {
        let a = stack(&[&[&[0, 1], &[1, 0]]]);
        let s = debiased_aggregation(&a);
        assert_eq!(s.row, DMatrix::zeros(2, 2));
        assert_eq!(s.col, DMatrix::zeros(2, 2));
    }

    #[test]
    fn three_node_hand_example() {
        let a = stack(&[&[&[0, 1, 1], &[0, 1, 0], &[0, 0, 0]]]);
        let s = debiased_aggregation(&a);
        let expected = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 0., 0., 0., 0.]);
        assert_eq!(s.row, expected);
        // A'A = [[0,0,0],[0,2,1],[0,1,1]], in-degrees (0,2,1)
        let expected_col = DMatrix::from_row_slice(3, 3, &[0., 0., 0., 0., 0., 1., 0., 1., 0.]);
        assert_eq!(s.col, expected_col);
    }

    #[test]
    fn dense_and_sparse_kernels_agree() {
        // one layer far above the density threshold, one far below
        let n = 70;
        let dense = Layer::from_edges(n, (0..n).flat_map(|i| (0..n).filter(move |j| (i * 7 + j * 3) % 5 < 2).map(move |j| (i, j)))).unwrap();
        let sparse = Layer::from_edges(n, (0..n).map(|i| (i, (i * 13 + 5) % n))).unwrap();
        assert!(dense.density() > DENSE_LAYER_THRESHOLD);
        assert!(sparse.density() < DENSE_LAYER_THRESHOLD);
        let a = AdjacencyStack::new(n, vec![dense, sparse]).unwrap();
        let s = debiased_aggregation(&a);
        let mut expected = DMatrix::zeros(n, n);
        for layer in a.layers() {
            let d = layer.to_dense();
            expected += &d * d.transpose();
            for (i, deg) in layer.out_degrees().into_iter().enumerate() {
                expected[(i, i)] -= deg as f64;
            }
        }
        assert_eq!(s.row, expected);
    }

    #[test]
    fn replicated_layers_double_baselines() {
        let layer: &[&[u8]] = &[&[0, 1, 0], &[1, 0, 1], &[1, 1, 0]];
        let one = stack(&[layer]);
        let two = stack(&[layer, layer]);
        let (BaselineAggregate::Sum(s1), BaselineAggregate::Sum(s2)) = (
            baseline_aggregation(&one, BaselineKind::Sum),
            baseline_aggregation(&two, BaselineKind::Sum),
        ) else {
            unreachable!()
        };
        assert_eq!(s2, s1 * 2.0);
        let (BaselineAggregate::SumOfSquares(q1), BaselineAggregate::SumOfSquares(q2)) = (
            baseline_aggregation(&one, BaselineKind::SumOfSquares),
            baseline_aggregation(&two, BaselineKind::SumOfSquares),
        ) else {
            unreachable!()
        };
        assert_eq!(q2.row, q1.row * 2.0);
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!("svd".parse::<BaselineKind>().is_err());
        assert_eq!("SOS".parse::<BaselineKind>().unwrap(), BaselineKind::SumOfSquares);
    }

    #[test]
    fn rank_one_population() {
        let n = 5;
        let rho = 0.3;
        let omega = ExpectationStack::new(vec![DMatrix::from_element(n, n, rho)]).unwrap();
        let s = population_aggregation(&omega);
        for v in s.row.iter().chain(s.col.iter()) {
            assert!((v - rho * rho * n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn dump_format() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 3.0, 0.0]);
        let mut buf = Vec::new();
        dump_coordinates(&m, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# mmscbm-aggregate v1\n# 2 2\n1 2 3\n2 1 3\n"
        );
    }
}

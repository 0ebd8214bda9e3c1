//! Multi-layer mixed membership stochastic co-block model.
//!
//! Every layer `l` of an instance has edge probabilities
//! `Omega_l = rho * Pi_r * B_l * Pi_c'`, and each directed entry `A_l(i, j)`
//! is an independent Bernoulli draw from `Omega_l(i, j)`. `Pi_r` carries the
//! sending (row) memberships and `Pi_c` the receiving (column) memberships.
//!
//! # Randomness
//!
//! All generators use ChaCha8 (`rand_chacha::ChaCha8Rng`). A user seed is
//! expanded with [`derive_seed`]; independent pieces of work (one per layer,
//! or one per membership side) are given their own ChaCha stream via
//! `set_stream`, so the output does not depend on how work is scheduled
//! across threads.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Absolute tolerance on membership row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// SplitMix64 finaliser over a base seed and two lane indices.
///
/// Used wherever a single user seed has to fan out into independent,
/// reproducible sub-seeds.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(31);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// An `n x K` row-stochastic membership matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    weights: DMatrix<f64>,
}

impl Membership {
    /// Validates that every entry lies in `[0, 1]` and every row sums to one.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        if weights.ncols() == 0 {
            return Err(Error::Validation("membership needs at least one community".into()));
        }
        for (i, row) in weights.row_iter().enumerate() {
            let mut sum = 0.0;
            for &w in row.iter() {
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::Validation(format!(
                        "membership entry {w} in row {i} is outside [0, 1]"
                    )));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!(
                    "membership row {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Membership { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Dimension("membership rows have unequal lengths".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), k, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn k(&self) -> usize {
        self.weights.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.weights
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.weights.row(i).iter().copied().collect()
    }

    /// Community index of row `i` if it is a standard basis vector.
    pub fn pure_community(&self, i: usize) -> Option<usize> {
        let row = self.weights.row(i);
        let mut hit = None;
        for (k, &w) in row.iter().enumerate() {
            if w == 1.0 {
                if hit.is_some() {
                    return None;
                }
                hit = Some(k);
            } else if w != 0.0 {
                return None;
            }
        }
        hit
    }

    /// One pure row per community (the first found), or `None` if some
    /// community has no pure node.
    pub fn pure_indices(&self) -> Option<Vec<usize>> {
        let mut found = vec![None; self.k()];
        for i in 0..self.n() {
            if let Some(k) = self.pure_community(i) {
                found[k].get_or_insert(i);
            }
        }
        found.into_iter().collect()
    }

    /// Applies a node permutation: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Membership {
        let w = DMatrix::from_fn(self.n(), self.k(), |i, j| self.weights[(perm[i], j)]);
        Membership { weights: w }
    }

    /// Applies a column permutation: column `b` of the result is column `perm[b]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Membership {
        let w = DMatrix::from_fn(self.n(), self.k(), |i, b| self.weights[(i, perm[b])]);
        Membership { weights: w }
    }
}

/// `L` mixing matrices `B_l`, each `K x K` with entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingSequence {
    k: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl MixingSequence {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = blocks
            .first()
            .ok_or_else(|| Error::Validation("mixing sequence needs at least one layer".into()))?
            .nrows();
        for (l, b) in blocks.iter().enumerate() {
            if b.nrows() != k || b.ncols() != k {
                return Err(Error::Dimension(format!(
                    "mixing matrix {l} is {}x{}, expected {k}x{k}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if b.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(format!(
                    "mixing matrix {l} has entries outside [0, 1]"
                )));
            }
        }
        Ok(MixingSequence { k, blocks })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn layers(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }
}

/// Global edge-probability scale `rho` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SparsityParam(f64);

impl SparsityParam {
    pub fn new(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho <= 1.0 {
            Ok(SparsityParam(rho))
        } else {
            Err(Error::Validation(format!("sparsity {rho} is outside (0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Per-layer edge probability matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationStack {
    n: usize,
    layers: Vec<DMatrix<f64>>,
}

impl ExpectationStack {
    /// Wraps raw probability matrices; entries must lie in `[0, 1]`.
    pub fn new(layers: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = layers
            .first()
            .ok_or_else(|| Error::Validation("expectation stack needs at least one layer".into()))?
            .nrows();
        for (l, m) in layers.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!("layer {l} is not {n}x{n}")));
            }
            if m.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Validation(format!(
                    "layer {l} has probabilities outside [0, 1]"
                )));
            }
        }
        Ok(ExpectationStack { n, layers })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }
}

/// One directed binary layer in compressed sparse row form.
///
/// `targets[offsets[i]..offsets[i + 1]]` are the sorted, distinct heads of
/// the edges leaving node `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Layer {
    /// Builds a layer from arbitrary `(source, target)` pairs; duplicates collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            pairs.push((i, j));
        }
        pairs.sort_unstable();
        pairs.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(i, _) in &pairs {
            offsets[i + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, j)| j).collect();
        Ok(Layer { n, offsets, targets })
    }

    /// Builds a layer from a dense matrix; every entry must be exactly 0 or 1.
    pub fn from_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("adjacency matrix must be square".into()));
        }
        let n = a.nrows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v == 1.0 {
                    edges.push((i, j));
                } else if v != 0.0 {
                    return Err(Error::Validation(format!(
                        "adjacency entry ({i}, {j}) = {v} is not binary"
                    )));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out_neighbors(i).binary_search(&j).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i, j)))
    }

    pub fn out_degrees(&self) -> Vec<u64> {
        self.offsets.windows(2).map(|w| (w[1] - w[0]) as u64).collect()
    }

    pub fn in_degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n];
        for &j in &self.targets {
            deg[j] += 1;
        }
        deg
    }

    pub fn transpose(&self) -> Layer {
        let mut offsets = vec![0usize; self.n + 1];
        for &j in &self.targets {
            offsets[j + 1] += 1;
        }
        for j in 0..self.n {
            offsets[j + 1] += offsets[j];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; self.targets.len()];
        // sources are visited in increasing order, so each bucket stays sorted
        for (i, j) in self.edges() {
            targets[fill[j]] = i;
            fill[j] += 1;
        }
        Layer {
            n: self.n,
            offsets,
            targets,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (i, j) in self.edges() {
            a[(i, j)] = 1.0;
        }
        a
    }

    /// Fraction of the `n^2` entries that are edges.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.edge_count() as f64 / (self.n as f64 * self.n as f64)
        }
    }
}

/// Row and column degree vectors of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerDegrees {
    pub out_deg: Vec<u64>,
    pub in_deg: Vec<u64>,
}

/// `L` binary directed layers over one shared node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyStack {
    n: usize,
    layers: Vec<Layer>,
}

impl AdjacencyStack {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self> {
        if let Some(l) = layers.iter().position(|layer| layer.n() != n) {
            return Err(Error::Dimension(format!("layer {l} does not have {n} nodes")));
        }
        Ok(AdjacencyStack { n, layers })
    }

    pub fn from_dense(mats: &[DMatrix<f64>]) -> Result<Self> {
        let n = mats.first().map_or(0, |m| m.nrows());
        let layers = mats.iter().map(Layer::from_dense).collect::<Result<Vec<_>>>()?;
        Self::new(n, layers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn degrees(&self) -> Vec<LayerDegrees> {
        self.layers
            .iter()
            .map(|layer| LayerDegrees {
                out_deg: layer.out_degrees(),
                in_deg: layer.in_degrees(),
            })
            .collect()
    }

    pub fn edge_counts(&self) -> Vec<usize> {
        self.layers.iter().map(Layer::edge_count).collect()
    }

    pub fn transpose(&self) -> AdjacencyStack {
        AdjacencyStack {
            n: self.n,
            layers: self.layers.iter().map(Layer::transpose).collect(),
        }
    }

    /// Relabels nodes: new node `i` is old node `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> AdjacencyStack {
        let mut inverse = vec![0usize; self.n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let layers = self
            .layers
            .iter()
            .map(|layer| {
                Layer::from_edges(self.n, layer.edges().map(|(i, j)| (inverse[i], inverse[j])))
                    .expect("permutation keeps edges in range")
            })
            .collect();
        AdjacencyStack { n: self.n, layers }
    }
}

/// Planted memberships together with one pure node index per community.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub pi_r: Membership,
    pub pi_c: Membership,
    pub pure_r: Vec<usize>,
    pub pure_c: Vec<usize>,
}

impl GroundTruth {
    pub fn new(pi_r: Membership, pi_c: Membership) -> Result<Self> {
        if pi_r.n() != pi_c.n() || pi_r.k() != pi_c.k() {
            return Err(Error::Dimension("row and column memberships differ in shape".into()));
        }
        let pure_r = pi_r
            .pure_indices()
            .ok_or_else(|| Error::Validation("a row community has no pure node".into()))?;
        let pure_c = pi_c
            .pure_indices()
            .ok_or_else(|| Error::Validation("a column community has no pure node".into()))?;
        Ok(GroundTruth {
            pi_r,
            pi_c,
            pure_r,
            pure_c,
        })
    }
}

/// `Omega_l = rho * Pi_r * B_l * Pi_c'` for every layer.
pub fn build_expectations(
    pi_r: &Membership,
    pi_c: &Membership,
    mixing: &MixingSequence,
    rho: SparsityParam,
) -> Result<ExpectationStack> {
    if pi_r.n() != pi_c.n() {
        return Err(Error::Dimension(format!(
            "row membership has {} nodes, column membership has {}",
            pi_r.n(),
            pi_c.n()
        )));
    }
    if pi_r.k() != mixing.k() || pi_c.k() != mixing.k() {
        return Err(Error::Dimension(format!(
            "memberships have {}/{} communities, mixing matrices are {}x{}",
            pi_r.k(),
            pi_c.k(),
            mixing.k(),
            mixing.k()
        )));
    }
    let rho = rho.get();
    let pc_t = pi_c.matrix().transpose();
    let layers = mixing
        .blocks()
        .par_iter()
        .map(|b| {
            let mut omega = pi_r.matrix() * b * &pc_t;
            omega *= rho;
            // rounding may push a product of probabilities a hair past rho
            omega.apply(|p| *p = p.clamp(0.0, rho));
            omega
        })
        .collect();
    Ok(ExpectationStack {
        n: pi_r.n(),
        layers,
    })
}

/// Draws every entry of every layer as an independent Bernoulli variable.
///
/// Layer `l` uses ChaCha8 stream `l` of the seed, filled row-major with one
/// uniform draw per entry, so results are identical for any thread count.
pub fn sample_network(omega: &ExpectationStack, seed: u64) -> Result<AdjacencyStack> {
    let n = omega.n();
    let layers = omega
        .layers()
        .par_iter()
        .enumerate()
        .map(|(l, p)| {
            if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(format!(
                    "layer {l} has probabilities outside [0, 1]"
                )));
            }
            let mut rng = stream_rng(seed, l as u64);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let u: f64 = rng.random();
                    if u < p[(i, j)] {
                        edges.push((i, j));
                    }
                }
            }
            Layer::from_edges(n, edges)
        })
        .collect::<Result<Vec<_>>>()?;
    AdjacencyStack::new(n, layers)
}

/// A synthetic instance: planted truth, mixing matrices and expectations.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub truth: GroundTruth,
    pub mixing: MixingSequence,
    pub omega: ExpectationStack,
}

fn mixed_row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    if k == 3 {
        let r1 = rng.random::<f64>() / 2.0;
        let r2 = rng.random::<f64>() / 2.0;
        vec![r1, r2, 1.0 - r1 - r2]
    } else {
        // flat Dirichlet via normalised unit exponentials
        let draws: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        draws.into_iter().map(|x| x / total).collect()
    }
}

fn planted_membership(n: usize, k: usize, n0: usize, rng: &mut ChaCha8Rng) -> Result<Membership> {
    let mut w = DMatrix::zeros(n, k);
    for c in 0..k {
        for i in c * n0..(c + 1) * n0 {
            w[(i, c)] = 1.0;
        }
    }
    for i in k * n0..n {
        for (c, v) in mixed_row(rng, k).into_iter().enumerate() {
            w[(i, c)] = v;
        }
    }
    Membership::new(w)
}

/// Generates a planted instance.
///
/// The first `k * n0_r` nodes are pure on the row side in contiguous blocks
/// of `n0_r` (community 0 first); the same holds for columns with `n0_c`.
/// For `k == 3` the remaining rows are `(u1/2, u2/2, 1 - u1/2 - u2/2)` with
/// `u1, u2 ~ U[0, 1]`; for other `k` they are flat-Dirichlet draws. Every
/// mixing entry is `U[0, 1]`.
pub fn synth_instance(
    n: usize,
    k: usize,
    n0_r: usize,
    n0_c: usize,
    layers: usize,
    rho: SparsityParam,
    seed: u64,
) -> Result<SyntheticInstance> {
    if k == 0 || layers == 0 {
        return Err(Error::Validation("need k >= 1 and at least one layer".into()));
    }
    if n0_r == 0 || n0_c == 0 {
        return Err(Error::Validation(
            "every community needs at least one pure node".into(),
        ));
    }
    if k * n0_r > n || k * n0_c > n {
        return Err(Error::Validation(format!(
            "insufficient room for pure nodes: k*n0_r = {}, k*n0_c = {}, n = {n}",
            k * n0_r,
            k * n0_c
        )));
    }
    let pi_r = planted_membership(n, k, n0_r, &mut stream_rng(seed, 0))?;
    let pi_c = planted_membership(n, k, n0_c, &mut stream_rng(seed, 1))?;
    let mut rng = stream_rng(seed, 2);
    let blocks = (0..layers)
        .map(|_| DMatrix::from_fn(k, k, |_, _| rng.random::<f64>()))
        .collect();
    let mixing = MixingSequence::new(blocks)?;
    let omega = build_expectations(&pi_r, &pi_c, &mixing, rho)?;
    let truth = GroundTruth {
        pure_r: (0..k).map(|c| c * n0_r).collect(),
        pure_c: (0..k).map(|c| c * n0_c).collect(),
        pi_r,
        pi_c,
    };
    Ok(SyntheticInstance {
        truth,
        mixing,
        omega,
    })
}

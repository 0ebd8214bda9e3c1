//! Synthetic benchmark grids.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! n = [200]
//! layers = [10, 20, 30]
//! rho = [0.1]
//! k = 3
//! n0_r = 50        # pure nodes per row community; a float is a fraction of n
//! n0_c = 40
//! replicates = 20
//! seed = 7
//! methods = ["cspdsos", "cspsos", "cspsum"]
//! ```
//!
//! Grid points are enumerated with `n` outermost, then `layers`, then `rho`.
//! Replicate `r` of grid point `g` draws its instance from
//! `derive_seed(seed, g, r)`, so each replicate is reproducible on its own and
//! the table does not depend on scheduling.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::instance::generate;
use crate::metrics::error_report;
use crate::model::derive_seed;
use crate::pipeline::{detect, Method};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PureCount {
    Count(usize),
    Fraction(f64),
}

impl PureCount {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            PureCount::Count(c) => c,
            PureCount::Fraction(f) => (f * n as f64).floor() as usize,
        }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub layers: Vec<usize>,
    pub rho: Vec<f64>,
    pub k: usize,
    pub n0_r: PureCount,
    pub n0_c: PureCount,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n.is_empty() || self.layers.is_empty() || self.rho.is_empty() {
            return bad("grid axes n, layers and rho must be nonempty");
        }
        if self.n.contains(&0) || self.layers.contains(&0) || self.k == 0 {
            return bad("sizes must be positive");
        }
        if self.rho.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return bad("every rho must lie in (0, 1]");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        Ok(())
    }

    /// `(n, layers, rho)` in table order.
    pub fn grid(&self) -> Vec<(usize, usize, f64)> {
        let mut points = Vec::new();
        for &n in &self.n {
            for &l in &self.layers {
                for &rho in &self.rho {
                    points.push((n, l, rho));
                }
            }
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub n: usize,
    pub layers: usize,
    pub rho: f64,
    pub method: Method,
    pub hamming_mean: f64,
    pub hamming_sd: f64,
    pub relative_mean: f64,
    pub relative_sd: f64,
    /// Successful replicates behind the statistics.
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub n: usize,
    pub layers: usize,
    pub rho: f64,
    pub replicate: usize,
    pub method: Option<Method>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub rows: Vec<ExperimentRow>,
    pub failures: Vec<ReplicateFailure>,
}

pub const EXPERIMENT_HEADER: [&str; 9] = [
    "n",
    "L",
    "rho",
    "method",
    "hamming_mean",
    "hamming_sd",
    "relative_mean",
    "relative_sd",
    "replicates",
];

impl ExperimentTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EXPERIMENT_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.layers.to_string(),
                r.rho.to_string(),
                r.method.to_string(),
                r.hamming_mean.to_string(),
                r.hamming_sd.to_string(),
                r.relative_mean.to_string(),
                r.relative_sd.to_string(),
                r.replicates.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<experiment csv>", e))?;
        Ok(())
    }

    pub fn row(&self, n: usize, layers: usize, rho: f64, method: Method) -> Option<&ExperimentRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.layers == layers && r.rho == rho && r.method == method)
    }
}

/// Mean and sample standard deviation (`n - 1` denominator, 0 for one value).
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let count = values.len();
    if count == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
    (mean, var.sqrt())
}

type MethodOutcome = std::result::Result<(f64, f64), String>;

fn run_replicate(
    cfg: &ExperimentConfig,
    (n, layers, rho): (usize, usize, f64),
    seed: u64,
) -> std::result::Result<Vec<MethodOutcome>, String> {
    let generated = generate(
        n,
        cfg.k,
        cfg.n0_r.resolve(n),
        cfg.n0_c.resolve(n),
        layers,
        rho,
        seed,
    )
    .map_err(|e| e.to_string())?;
    let truth = &generated.instance.truth;
    Ok(cfg
        .methods
        .iter()
        .map(|&method| {
            let result = detect(&generated.network, cfg.k, method).map_err(|e| e.to_string())?;
            let report = error_report(&result.pi_r_hat, &truth.pi_r, &result.pi_c_hat, &truth.pi_c)
                .map_err(|e| e.to_string())?;
            Ok((report.hamming, report.relative))
        })
        .collect())
}

/// Runs every replicate of every grid point; failures are recorded, not fatal.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentTable> {
    cfg.validate()?;
    let grid = cfg.grid();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..cfg.replicates).map(move |r| (g, r)))
        .collect();
    let outcomes: Vec<_> = tasks
        .par_iter()
        .map(|&(g, r)| run_replicate(cfg, grid[g], derive_seed(cfg.seed, g as u64, r as u64)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (g, &(n, layers, rho)) in grid.iter().enumerate() {
        let mut hamming = vec![Vec::new(); cfg.methods.len()];
        let mut relative = vec![Vec::new(); cfg.methods.len()];
        for r in 0..cfg.replicates {
            let fail = |method, message| ReplicateFailure { n, layers, rho, replicate: r, method, message };
            match &outcomes[g * cfg.replicates + r] {
                Err(message) => failures.push(fail(None, message.clone())),
                Ok(per_method) => {
                    for (m, outcome) in per_method.iter().enumerate() {
                        match outcome {
                            Ok((h, rel)) => {
                                hamming[m].push(*h);
                                relative[m].push(*rel);
                            }
                            Err(message) => failures.push(fail(Some(cfg.methods[m]), message.clone())),
                        }
                    }
                }
            }
        }
        for (m, &method) in cfg.methods.iter().enumerate() {
            let (hamming_mean, hamming_sd) = mean_sd(&hamming[m]);
            let (relative_mean, relative_sd) = mean_sd(&relative[m]);
            rows.push(ExperimentRow {
                n,
                layers,
                rho,
                method,
                hamming_mean,
                hamming_sd,
                relative_mean,
                relative_sd,
                replicates: hamming[m].len(),
            });
        }
    }
    for f in &failures {
        log::warn!("replicate {} at n={} L={} rho={} failed: {}", f.replicate, f.n, f.layers, f.rho, f.message);
    }
    Ok(ExperimentTable { rows, failures })
}

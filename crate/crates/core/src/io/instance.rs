//! Synthetic instances on disk.
//!
//! A directory holds `manifest.json`, the planted memberships as
//! `pi_r.csv`/`pi_c.csv`, the mixing matrices as `mixing.json`, and the
//! sampled network as `network.edges` with `nodes.txt`/`layers.txt`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::edgelist::{read_multiplex_dir, write_multiplex_dir, LabeledStack};
use crate::io::membership::save_membership;
use crate::io::results::{load_membership_pair, COLUMN_MEMBERSHIP_FILE, ROW_MEMBERSHIP_FILE};
use crate::model::{derive_seed, sample_network, synth_instance, AdjacencyStack, GroundTruth, MixingSequence, SparsityParam, SyntheticInstance};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MIXING_FILE: &str = "mixing.json";
pub const INSTANCE_FORMAT: &str = "mmscbm-instance v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub n: usize,
    pub k: usize,
    pub layers: usize,
    pub rho: f64,
    pub seed: u64,
    pub n0_r: usize,
    pub n0_c: usize,
}

/// A generated instance together with its sampled network.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub manifest: Manifest,
    pub instance: SyntheticInstance,
    pub network: AdjacencyStack,
}

/// `synth_instance` followed by `sample_network`, with the sampling seed
/// derived from `seed`.
pub fn generate(
    n: usize,
    k: usize,
    n0_r: usize,
    n0_c: usize,
    layers: usize,
    rho: f64,
    seed: u64,
) -> Result<GeneratedInstance> {
    let instance = synth_instance(n, k, n0_r, n0_c, layers, SparsityParam::new(rho)?, seed)?;
    let network = sample_network(&instance.omega, derive_seed(seed, 1, 0))?;
    Ok(GeneratedInstance {
        manifest: Manifest {
            format: INSTANCE_FORMAT.to_string(),
            n,
            k,
            layers,
            rho,
            seed,
            n0_r,
            n0_c,
        },
        instance,
        network,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), value)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

pub fn save_instance(dir: &Path, generated: &GeneratedInstance) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(MANIFEST_FILE), &generated.manifest)?;
    let ls = LabeledStack::with_index_labels(generated.network.clone());
    let truth = &generated.instance.truth;
    save_membership(&dir.join(ROW_MEMBERSHIP_FILE), &ls.node_labels, &truth.pi_r, None)?;
    save_membership(&dir.join(COLUMN_MEMBERSHIP_FILE), &ls.node_labels, &truth.pi_c, None)?;
    let blocks: Vec<Vec<Vec<f64>>> = generated
        .instance
        .mixing
        .blocks()
        .iter()
        .map(|b| b.row_iter().map(|r| r.iter().copied().collect()).collect())
        .collect();
    write_json(&dir.join(MIXING_FILE), &blocks)?;
    write_multiplex_dir(&ls, dir)
}

/// What can be read back from an instance directory.
#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub manifest: Manifest,
    pub truth: GroundTruth,
    pub mixing: MixingSequence,
    pub network: LabeledStack,
}

pub fn load_instance(dir: &Path) -> Result<LoadedInstance> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    let (_, pi_r, pi_c) = load_membership_pair(dir)?;
    let blocks: Vec<Vec<Vec<f64>>> = read_json(&dir.join(MIXING_FILE))?;
    let mixing = MixingSequence::new(
        blocks
            .iter()
            .map(|b| nalgebra::DMatrix::from_fn(b.len(), b.len(), |i, j| b[i][j]))
            .collect(),
    )?;
    Ok(LoadedInstance {
        manifest,
        truth: GroundTruth::new(pi_r, pi_c)?,
        mixing,
        network: read_multiplex_dir(dir)?,
    })
}

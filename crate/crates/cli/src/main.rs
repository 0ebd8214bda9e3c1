use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use mmscbm::io::analyze::{analyze_membership_pair, zero_degree_nodes, DEFAULT_MIXED_THRESHOLD};
use mmscbm::io::edgelist::{read_multiplex, read_multiplex_dir};
use mmscbm::io::experiment::{run_experiment, ExperimentConfig};
use mmscbm::io::instance::{generate, save_instance};
use mmscbm::io::results::{load_membership_pair, save_detection};
use mmscbm::io::{merge_nodes, parse_merge_spec, select_top_layers, LabeledStack};
use mmscbm::metrics::error_report;
use mmscbm::{detect, Membership, Method};

/// Overlapping community detection in multi-layer directed networks.
#[derive(Parser)]
#[command(name = "mmscbm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a planted instance and write it to a directory.
    Generate(GenerateArgs),
    /// Estimate sending and receiving memberships from a multiplex edge list.
    Detect(DetectArgs),
    /// Score estimated memberships against planted ones.
    Eval(EvalArgs),
    /// Run a benchmark grid from a TOML config and write a CSV table.
    Experiment(ExperimentArgs),
    /// Report home-base communities and highly mixed nodes of a detection run.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Pure nodes per row community.
    #[arg(long)]
    n0_r: usize,
    /// Pure nodes per column community.
    #[arg(long)]
    n0_c: usize,
    #[arg(long = "layers")]
    layers: usize,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Edge list file, or a directory written by `generate`.
    input: PathBuf,
    /// Node table (`nodeID nodeLabel`).
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Layer table (`layerID layerLabel`).
    #[arg(long = "layer-table")]
    layer_table: Option<PathBuf>,
    /// Number of communities.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value = "cspdsos")]
    method: Method,
    /// Keep only the N layers with the most edges.
    #[arg(long)]
    top_layers: Option<usize>,
    /// File of `kept<TAB>absorbed` node label pairs to merge before detection.
    #[arg(long)]
    merge_spec: Option<PathBuf>,
    /// Largest membership weight at or below which a node is flagged as highly mixed.
    #[arg(long, default_value_t = DEFAULT_MIXED_THRESHOLD)]
    threshold: f64,
    /// Output directory for `pi_r.csv`, `pi_c.csv` and `result.json`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory holding estimated `pi_r.csv` and `pi_c.csv`.
    #[arg(long)]
    estimate: PathBuf,
    /// Directory holding planted `pi_r.csv` and `pi_c.csv`.
    #[arg(long)]
    truth: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML grid configuration.
    config: PathBuf,
    /// CSV output path; stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory written by `detect`.
    result: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIXED_THRESHOLD)]
    threshold: f64,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = output(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn run_generate(a: GenerateArgs) -> Result<()> {
    let g = generate(a.n, a.k, a.n0_r, a.n0_c, a.layers, a.rho, a.seed)?;
    save_instance(&a.out, &g)?;
    info!(
        "wrote {} nodes, {} layers, {} edges to {}",
        a.n,
        a.layers,
        g.network.edge_counts().iter().sum::<usize>(),
        a.out.display()
    );
    Ok(())
}

fn load_network(a: &DetectArgs) -> Result<LabeledStack> {
    let ls = if a.input.is_dir() {
        read_multiplex_dir(&a.input)?
    } else {
        read_multiplex(&a.input, a.nodes.as_deref(), a.layer_table.as_deref())?
    };
    let ls = match &a.merge_spec {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let spec = parse_merge_spec(BufReader::new(file))?;
            merge_nodes(&ls, &spec)?
        }
        None => ls,
    };
    Ok(match a.top_layers {
        Some(t) => select_top_layers(&ls, t)?,
        None => ls,
    })
}

fn run_detect(a: DetectArgs) -> Result<()> {
    let ls = load_network(&a)?;
    info!("{} nodes, {} layers", ls.stack.n(), ls.stack.len());
    let isolated = zero_degree_nodes(&ls.stack);
    if !isolated.is_empty() {
        let names: Vec<&str> = isolated.iter().map(|&i| ls.node_labels[i].as_str()).collect();
        warn!("{} nodes have no edges in any layer: {}", names.len(), names.join(", "));
    }
    let result = detect(&ls.stack, a.k, a.method)?;
    let report = analyze_membership_pair(&result.pi_r_hat, &result.pi_c_hat, &ls.node_labels, a.threshold)?;
    save_detection(&a.out, &result, a.method, &ls.node_labels, &report)?;
    info!(
        "{}: {} highly mixed exporters, {} highly mixed importers; results in {}",
        a.method,
        report.mixed_exporters().count(),
        report.mixed_importers().count(),
        a.out.display()
    );
    Ok(())
}

/// Reorders `m` so that its rows follow `target` labels.
fn align_rows(labels: &[String], m: &Membership, target: &[String]) -> Result<Membership> {
    if labels == target {
        return Ok(m.clone());
    }
    if labels.len() != target.len() {
        bail!("estimate has {} nodes, truth has {}", labels.len(), target.len());
    }
    let perm = target
        .iter()
        .map(|t| {
            labels
                .iter()
                .position(|l| l == t)
                .with_context(|| format!("node `{t}` missing from the estimate"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(m.permute_rows(&perm))
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let (est_labels, est_r, est_c) = load_membership_pair(&a.estimate)?;
    let (labels, pi_r, pi_c) = load_membership_pair(&a.truth)?;
    let est_r = align_rows(&est_labels, &est_r, &labels)?;
    let est_c = align_rows(&est_labels, &est_c, &labels)?;
    let report = error_report(&est_r, &pi_r, &est_c, &pi_c)?;
    write_json(a.out.as_deref(), &report)
}

fn run_experiment_cmd(a: ExperimentArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_path(&a.config)?;
    let table = run_experiment(&cfg)?;
    if !table.failures.is_empty() {
        warn!("{} replicate runs failed", table.failures.len());
    }
    let mut out = output(a.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn run_analyze(a: AnalyzeArgs) -> Result<()> {
    let (labels, pi_r, pi_c) = load_membership_pair(&a.result)?;
    let report = analyze_membership_pair(&pi_r, &pi_c, &labels, a.threshold)?;
    write_json(a.out.as_deref(), &report)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Generate(a) => run_generate(a),
        Command::Detect(a) => run_detect(a),
        Command::Eval(a) => run_eval(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::Analyze(a) => run_analyze(a),
    }
}

//! Command implementations behind the `vgae` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use serde::{Deserialize, Serialize};

use vgae::dataset::{
    build_train_adjacency, load_content_cites, load_edgelist, split_edges, CitationDataset,
    EdgeSplit, Partition, SplitProfile,
};
use vgae::eval::{evaluate, Metrics};
use vgae::model::{embed_mean, Variant};
use vgae::numerics::DenseMatrix;
use vgae::training::{train_with_monitor, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vgae",
    version,
    about = "Graph auto-encoders for link prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Hold out validation and test edges and write the split file.
    Split(SplitArgs),
    /// Train one or more models on a fixed split and report metrics.
    Train(TrainArgs),
    /// Score stored embeddings against a split.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Tab-separated `<id> <features...> <label>` file.
    #[arg(long, requires = "cites", conflicts_with_all = ["edges", "features", "n_nodes"])]
    pub content: Option<PathBuf>,
    /// Tab-separated `<cited> <citing>` file.
    #[arg(long, requires = "content")]
    pub cites: Option<PathBuf>,
    /// Whitespace-separated integer edge list.
    #[arg(long, required_unless_present = "content")]
    pub edges: Option<PathBuf>,
    /// Dense feature file with an `N D` header, for use with --edges.
    #[arg(long, requires = "edges")]
    pub features: Option<PathBuf>,
    /// Node count for --edges when there is no feature file.
    #[arg(long, requires = "edges")]
    pub n_nodes: Option<usize>,
}

impl DatasetArgs {
    pub fn load(&self) -> Result<CitationDataset> {
        let data = match (&self.content, &self.cites, &self.edges) {
            (Some(content), Some(cites), _) => load_content_cites(content, cites)?,
            (_, _, Some(edges)) => load_edgelist(edges, self.features.as_deref(), self.n_nodes)?,
            _ => bail!("give either --content and --cites, or --edges"),
        };
        info!(
            "loaded {} nodes, {} edges, {} features",
            data.n_nodes,
            data.edges.len(),
            data.feature_dim()
        );
        if data.skipped_cites > 0 {
            info!("skipped {} citations with unknown ids", data.skipped_cites);
        }
        Ok(data)
    }
}

fn fraction(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1)"))
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value_t = 0.05, value_parser = fraction)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.10, value_parser = fraction)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Gae,
    Vgae,
}

impl From<ModelArg> for Variant {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Gae => Variant::Gae,
            ModelArg::Vgae => Variant::Vgae,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Split file written by `vgae split`.
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Gae)]
    pub model: ModelArg,
    /// Replace node features with the identity matrix.
    #[arg(long)]
    pub featureless: bool,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub hidden: u64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    pub latent: u64,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    /// Init seed of the first run; run k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// KL multiplier (default 1/N²).
    #[arg(long)]
    pub kl_scale: Option<f64>,
    /// Where to write the report JSON; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the last run's latent means as CSV.
    #[arg(long)]
    pub dump_embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichArg {
    Val,
    Test,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum, default_value_t = WhichArg::Test)]
    pub which: WhichArg,
}

/// Metrics and losses for one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub init_seed: u64,
    pub val_auc: f64,
    pub val_ap: f64,
    pub test_auc: f64,
    pub test_ap: f64,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStderr {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanStderr {
    /// Mean and sample standard deviation over √n; stderr is 0 for one value.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub val_auc: MeanStderr,
    pub val_ap: MeanStderr,
    pub test_auc: MeanStderr,
    pub test_ap: MeanStderr,
}

impl Aggregate {
    pub fn from_runs(runs: &[RunResult]) -> Self {
        let col =
            |f: fn(&RunResult) -> f64| MeanStderr::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            val_auc: col(|r| r.val_auc),
            val_ap: col(|r| r.val_ap),
            test_auc: col(|r| r.test_auc),
            test_ap: col(|r| r.test_ap),
        }
    }
}

/// Everything needed to rerun a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub dataset: Option<DatasetEcho>,
    pub split: Option<PathBuf>,
    pub split_seed: u64,
    pub runs: u64,
    pub train: TrainConfig,
    pub resolved_kl_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEcho {
    pub content: Option<PathBuf>,
    pub cites: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub n_nodes: Option<usize>,
}

impl From<&DatasetArgs> for DatasetEcho {
    fn from(a: &DatasetArgs) -> Self {
        Self {
            content: a.content.clone(),
            cites: a.cites.clone(),
            edges: a.edges.clone(),
            features: a.features.clone(),
            n_nodes: a.n_nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical invocations.
    pub timestamp: u64,
    pub config_echo: ConfigEcho,
    pub per_run: Vec<RunResult>,
    pub aggregate: Aggregate,
}

/// Runs `runs` trainings with seeds `base.seed + k` on a fixed split.
/// Returns the report and the latent means of the last run.
pub fn train_runs(
    data: &CitationDataset,
    split: &EdgeSplit,
    base: &TrainConfig,
    runs: u64,
) -> Result<(RunReport, DenseMatrix)> {
    if runs == 0 {
        bail!("runs must be at least 1");
    }
    let a_train = build_train_adjacency(data, split)?;
    let x = (!base.featureless).then_some(&data.features);
    let mut per_run = Vec::with_capacity(runs as usize);
    let mut last = None;
    for k in 0..runs {
        let config = TrainConfig {
            seed: base.seed.wrapping_add(k),
            ..base.clone()
        };
        let outcome = train_with_monitor(&config, &a_train, x, |epoch, loss, state| {
            if log::log_enabled!(log::Level::Debug) {
                let val = evaluate(&state.mu, split, Partition::Val);
                debug!("run {k} epoch {epoch}: loss {:.5} val {val:?}", loss.total);
            }
        })
        .with_context(|| format!("run {k} (seed {})", config.seed))?;
        let mu = embed_mean(&outcome.params, &outcome.a_norm, &outcome.features)?;
        let val = evaluate(&mu, split, Partition::Val)?;
        let test = evaluate(&mu, split, Partition::Test)?;
        let epoch_losses: Vec<f64> = outcome.history.iter().map(|l| l.total).collect();
        info!(
            "run {k}: val auc {:.4} ap {:.4}, test auc {:.4} ap {:.4}",
            val.auc, val.ap, test.auc, test.ap
        );
        per_run.push(RunResult {
            init_seed: config.seed,
            val_auc: val.auc,
            val_ap: val.ap,
            test_auc: test.auc,
            test_ap: test.ap,
            final_loss: *epoch_losses.last().unwrap_or(&f64::NAN),
            epoch_losses,
        });
        last = Some(mu);
    }
    let report = RunReport {
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        config_echo: ConfigEcho {
            dataset: None,
            split: None,
            split_seed: split.seed,
            runs,
            train: base.clone(),
            resolved_kl_scale: base.resolved_kl_scale(data.n_nodes),
        },
        aggregate: Aggregate::from_runs(&per_run),
        per_run,
    };
    Ok((report, last.expect("at least one run")))
}

/// CSV with header `node,z0,...` and one row per node, shortest round-trip
/// float formatting.
pub fn embeddings_to_csv(z: &DenseMatrix) -> String {
    let mut out = String::from("node");
    for f in 0..z.cols() {
        write!(out, ",z{f}").unwrap();
    }
    out.push('\n');
    for i in 0..z.rows() {
        write!(out, "{i}").unwrap();
        for v in z.row(i) {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn embeddings_from_csv(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().context("empty embeddings file")?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"node") {
        bail!("embeddings header must start with `node`");
    }
    let dim = cols.len() - 1;
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            bail!(
                "line {}: expected {} fields, got {}",
                lineno + 1,
                dim + 1,
                fields.len()
            );
        }
        let node: usize = fields[0]
            .parse()
            .with_context(|| format!("line {}: bad node index", lineno + 1))?;
        if node != rows {
            bail!("line {}: expected node {rows}, got {node}", lineno + 1);
        }
        for f in &fields[1..] {
            let v: f64 = f
                .parse()
                .with_context(|| format!("line {}: bad value `{f}`", lineno + 1))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok(DenseMatrix::new(rows, dim, data)?)
}

pub fn cmd_split(args: &SplitArgs) -> Result<EdgeSplit> {
    let data = args.dataset.load()?;
    let split = split_edges(
        &data,
        args.val_frac,
        args.test_frac,
        args.split_seed,
        SplitProfile::Benchmark,
    )?;
    split
        .write(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "train {} val {} test {} (nodes {})",
        split.train_edges.len(),
        split.val_edges.len(),
        split.test_edges.len(),
        data.n_nodes
    );
    Ok(split)
}

pub fn cmd_train(args: &TrainArgs) -> Result<RunReport> {
    let data = args.dataset.load()?;
    let split = EdgeSplit::read(&args.split)
        .with_context(|| format!("reading split {}", args.split.display()))?;
    let config = TrainConfig {
        epochs: args.epochs as usize,
        lr: args.lr,
        hidden_dim: args.hidden as usize,
        latent_dim: args.latent as usize,
        featureless: args.featureless,
        seed: args.seed,
        kl_scale: args.kl_scale,
        ..TrainConfig::new(args.model.into())
    };
    let (mut report, mu) = train_runs(&data, &split, &config, args.runs)?;
    report.config_echo.dataset = Some((&args.dataset).into());
    report.config_echo.split = Some(args.split.clone());

    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &args.dump_embeddings {
        write_file(path, &embeddings_to_csv(&mu))?;
    }
    let a = &report.aggregate;
    eprintln!(
        "test auc {:.4} ± {:.4}, ap {:.4} ± {:.4} over {} runs",
        a.test_auc.mean, a.test_auc.stderr, a.test_ap.mean, a.test_ap.stderr, args.runs
    );
    Ok(report)
}

pub fn cmd_eval(args: &EvalArgs) -> Result<Metrics> {
    let text = fs::read_to_string(&args.embeddings)
        .with_context(|| format!("reading {}", args.embeddings.display()))?;
    let z = embeddings_from_csv(&text)
        .with_context(|| format!("parsing {}", args.embeddings.display()))?;
    let split = EdgeSplit::read(&args.split)
        .with_context(|| format!("reading split {}", args.split.display()))?;
    split.check_node_count(z.rows())?;
    let which = match args.which {
        WhichArg::Val => Partition::Val,
        WhichArg::Test => Partition::Test,
    };
    let m = evaluate(&z, &split, which)?;
    println!("{}", serde_json::to_string(&m)?);
    Ok(m)
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Split(a) => cmd_split(a).map(drop),
        Command::Train(a) => cmd_train(a).map(drop),
        Command::Eval(a) => cmd_eval(a).map(drop),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

//! The four subcommands as library functions.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ggmeval::extract::GmaeConfig;
use ggmeval::graph::filter_by_size;
use ggmeval::metrics::SigmaPolicy;
use ggmeval::perturb::MixingSource;
use ggmeval::tud::{load_tud_dataset_with_report, write_tud_dataset, LoadReport};
use ggmeval::{DatasetStats, ExtractorConfig, MetricKind, PerturbationKind};

use crate::config::{preset_bounds, DatasetSource, RunConfig, SynthSpec};
use crate::error::{CliError, Stage};
use crate::plot::render_svg;
use crate::report::{evaluate, write_outputs, ReportDocument, CSV_FILE, REPORT_FILE};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "GGMEVAL_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "ggmeval", version, about = "Evaluate graph generative model metrics by controlled perturbation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print dataset statistics after preset filtering.
    Stats(StatsArgs),
    /// Write a synthetic Erdős–Rényi corpus in TUDataset format.
    Synth(SynthArgs),
    /// Run perturbation sweeps and write a report.
    Evaluate(Box<EvaluateArgs>),
    /// Render violin plots from a report.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset_dir: PathBuf,
    #[arg(long)]
    pub dataset_name: String,
    /// Overrides the dataset preset.
    #[arg(long)]
    pub min_nodes: Option<usize>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub n_graphs: usize,
    #[arg(long, default_value_t = 30)]
    pub min_nodes: usize,
    #[arg(long, default_value_t = 30)]
    pub max_nodes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub min_edge_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub max_edge_prob: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// File prefix of the written dataset.
    #[arg(long, default_value = "SYNTH")]
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtractorChoice {
    Stats,
    RandomGnn,
    Gmae,
}

/// Flags override the config file, which overrides dataset presets and
/// built-in defaults.
#[derive(Debug, Default, Args)]
pub struct EvaluateArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset_dir: Option<PathBuf>,
    #[arg(long)]
    pub dataset_name: Option<String>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub min_nodes: Option<usize>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long, value_enum)]
    pub extractor: Option<ExtractorChoice>,
    /// Hidden width of the network extractors.
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub num_layers: Option<usize>,
    /// GMAE training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Repeatable.
    #[arg(long = "perturbation")]
    pub perturbations: Vec<PerturbationKind>,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<MetricKind>>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Fixed RBF bandwidth instead of the median heuristic.
    #[arg(long)]
    pub rbf_sigma: Option<f64>,
    /// Edge probability of mixing replacements instead of density matching.
    #[arg(long)]
    pub mixing_edge_prob: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for report.json and results.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Load, filter and summarize a TUDataset.
pub fn cmd_stats(args: &StatsArgs) -> Result<(DatasetStats, LoadReport), CliError> {
    let (set, load) = load_tud_dataset_with_report(&args.dataset_dir, &args.dataset_name).stage("load dataset")?;
    let (lo, hi) = preset_bounds(&args.dataset_name);
    let filtered = filter_by_size(&set, args.min_nodes.unwrap_or(lo), args.max_nodes.unwrap_or(hi))
        .stage("filter dataset")?;
    Ok((filtered.stats().stage("dataset statistics")?, load))
}

pub fn format_stats_table(name: &str, s: &DatasetStats) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<20} {:>8} {:>10} {:>9} {:>9} {:>10} {:>9} {:>9}",
        "dataset", "graphs", "mean_nodes", "min_nodes", "max_nodes", "mean_edges", "min_edges", "max_edges"
    );
    let _ = writeln!(
        out,
        "{:<20} {:>8} {:>10.2} {:>9} {:>9} {:>10.2} {:>9} {:>9}",
        name, s.num_graphs, s.mean_nodes, s.min_nodes, s.max_nodes, s.mean_edges, s.min_edges, s.max_edges
    );
    out
}

/// Generate and write a synthetic corpus; returns the number of graphs.
pub fn cmd_synth(args: &SynthArgs) -> Result<usize, CliError> {
    let spec = SynthSpec {
        n_graphs: args.n_graphs,
        min_nodes: args.min_nodes,
        max_nodes: args.max_nodes,
        min_edge_prob: args.min_edge_prob,
        max_edge_prob: args.max_edge_prob,
        seed: args.seed,
    };
    let set = spec.generate()?;
    std::fs::create_dir_all(&args.out_dir).stage("create output directory")?;
    write_tud_dataset(&set, &args.out_dir, &args.name).stage("write dataset")?;
    Ok(set.len())
}

fn apply_extractor_flags(cfg: &mut RunConfig, args: &EvaluateArgs) -> Result<(), CliError> {
    if let Some(choice) = args.extractor {
        let wanted = match choice {
            ExtractorChoice::Stats => "stats",
            ExtractorChoice::RandomGnn => "random-gnn",
            ExtractorChoice::Gmae => "gmae",
        };
        if cfg.extractor.tag() != wanted {
            cfg.extractor = match choice {
                ExtractorChoice::Stats => ExtractorConfig::Stats,
                ExtractorChoice::RandomGnn => ExtractorConfig::random_gnn_default(),
                ExtractorChoice::Gmae => ExtractorConfig::gmae_default(),
            };
        }
    }
    match &mut cfg.extractor {
        ExtractorConfig::Stats => {
            if args.hidden_dim.is_some() || args.num_layers.is_some() || args.epochs.is_some() {
                return Err(CliError::Usage(
                    "--hidden-dim, --num-layers and --epochs need a network extractor".into(),
                ));
            }
        }
        ExtractorConfig::RandomGnn {
            hidden_dim, num_layers, ..
        } => {
            if args.epochs.is_some() {
                return Err(CliError::Usage("--epochs applies to the gmae extractor only".into()));
            }
            *hidden_dim = args.hidden_dim.unwrap_or(*hidden_dim);
            *num_layers = args.num_layers.unwrap_or(*num_layers);
        }
        ExtractorConfig::Gmae { config, .. } => {
            let GmaeConfig {
                hidden_dim,
                num_layers,
                epochs,
                ..
            } = config;
            *hidden_dim = args.hidden_dim.unwrap_or(*hidden_dim);
            *num_layers = args.num_layers.unwrap_or(*num_layers);
            *epochs = args.epochs.unwrap_or(*epochs);
        }
    }
    Ok(())
}

/// Merge defaults, the optional config file and flags.
pub fn resolve_config(args: &EvaluateArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config {}: {e}", path.display()))
        })?)?,
        None => RunConfig::default(),
    };
    match (&args.dataset_dir, &args.dataset_name) {
        (Some(dir), Some(name)) => {
            cfg.dataset = Some(DatasetSource::Tud {
                dir: dir.clone(),
                name: name.clone(),
            })
        }
        (None, None) => {}
        _ => {
            return Err(CliError::Usage(
                "--dataset-dir and --dataset-name must be given together".into(),
            ))
        }
    }
    macro_rules! set {
        ($($field:ident <- $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { cfg.$field = v; })*
        };
    }
    set!(
        sample_size <- args.sample_size,
        step <- args.step,
        runs <- args.runs,
        clusters <- args.clusters,
        knn_k <- args.knn_k,
        master_seed <- args.seed,
        out_dir <- args.out,
        metrics <- args.metrics,
    );
    if args.min_nodes.is_some() {
        cfg.min_nodes = args.min_nodes;
    }
    if args.max_nodes.is_some() {
        cfg.max_nodes = args.max_nodes;
    }
    if !args.perturbations.is_empty() {
        cfg.perturbations = args.perturbations.clone();
    }
    if let Some(s) = args.rbf_sigma {
        cfg.rbf_sigma = SigmaPolicy::Fixed(s);
    }
    if let Some(p) = args.mixing_edge_prob {
        cfg.mixing_source = MixingSource::Fixed(p);
    }
    apply_extractor_flags(&mut cfg, args)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn worker_count(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(CliError::Usage("worker count must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Validate everything, run on a dedicated worker pool and write the outputs.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<ReportDocument, CliError> {
    let cfg = resolve_config(args)?;
    let workers = worker_count(args.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io {
            stage: "start workers",
            source: std::io::Error::other(e),
        })?;
    let report = pool.install(|| evaluate(&cfg))?;
    write_outputs(&report, &cfg.out_dir)?;
    Ok(report)
}

pub fn format_summary(report: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:<14} {:<11} {:>8} {:>8}",
        "extractor", "perturbation", "metric", "median", "iqr"
    );
    for s in &report.summaries {
        for m in &s.metrics {
            let _ = writeln!(
                out,
                "{:<12} {:<14} {:<11} {:>8.4} {:>8.4}",
                s.extractor, s.perturbation, m.metric, m.median, m.iqr
            );
        }
    }
    out
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.report).stage("read report")?;
    let report = ReportDocument::from_json(&text)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).stage("create output directory")?;
    }
    std::fs::write(&args.out, render_svg(&report)).stage("write plot")
}

/// Parse arguments, run the command, report errors, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Stats(a) => cmd_stats(a).map(|(s, load)| {
            if load.self_loops_dropped + load.duplicate_pairs_dropped > 0 {
                eprintln!(
                    "dropped {} self-loops and {} duplicate edges while loading",
                    load.self_loops_dropped, load.duplicate_pairs_dropped
                );
            }
            print!("{}", format_stats_table(&a.dataset_name, &s));
        }),
        Command::Synth(a) => cmd_synth(a).map(|n| {
            println!("wrote {n} graphs to {}", a.out_dir.display());
        }),
        Command::Evaluate(a) => cmd_evaluate(a).map(|r| {
            print!("{}", format_summary(&r));
            eprintln!(
                "wrote {} and {} to {}",
                REPORT_FILE,
                CSV_FILE,
                r.config.out_dir.display()
            );
        }),
        Command::Plot(a) => cmd_plot(a).map(|()| {
            eprintln!("wrote {}", a.out.display());
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Path of the report written by `evaluate` into `out_dir`.
pub fn report_path(out_dir: &Path) -> PathBuf {
    out_dir.join(REPORT_FILE)
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use treebench_core::baselines::{
    default_grid, gamma_sweep, train_link_predictor, Encoder, FermiDiracParams, ModelConfig, SweepSettings,
};
use treebench_core::graph::{apsp, Graph};
use treebench_core::hyperbolicity::{delta_exact_with_cap, delta_sampled, DEFAULT_EXACT_CAP};
use treebench_core::hyperboloid::{average_distortion_with, tree_embed, Curvature};
use treebench_core::ricci::{curvature_profile_local, DEFAULT_BIN_WIDTH};
use treebench_core::treegen::{
    generate_dataset, make_splits, read_dataset, read_splits, write_atomic, write_dataset, write_splits, Dataset,
    TreeParams, DEFAULT_FRACS, EDGES_FILE,
};

const THREADS_ENV: &str = "TREEBENCH_THREADS";

/// Synthetic tree benchmarks, geometric diagnostics and Euclidean baselines.
#[derive(Parser, Debug)]
#[command(name = "treebench", version, about)]
struct Cli {
    /// Worker threads (default: TREEBENCH_THREADS, else all cores). Results do
    /// not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a Tree(b, l, gamma, delta, N(0, I_dim)) dataset directory.
    Generate(GenerateArgs),
    /// Write seeded link-prediction splits (splits.json) into a dataset.
    Split(SplitArgs),
    /// Geometric diagnostics of a dataset graph.
    #[command(subcommand)]
    Diagnose(Diagnose),
    /// Embed a tree dataset in the hyperbolic plane and measure distortion.
    Embed(EmbedArgs),
    /// Train one link predictor and report test AUC.
    Train(TrainArgs),
    /// Tuned multi-seed evaluation over a list of gamma values.
    Sweep(SweepArgs),
    /// Summarise a dataset directory as JSON.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Branch factor.
    #[arg(long)]
    b: usize,
    /// Levels below the root.
    #[arg(long)]
    levels: usize,
    /// Parental dependence of the features.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Noise scale of the fresh feature draw.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Feature dimension.
    #[arg(long, default_value_t = 1000)]
    dim: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SplitArgs {
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
    /// Train, validation and test fractions.
    #[arg(long, default_value = "0.85,0.05,0.10")]
    fracs: String,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Diagnose {
    /// Gromov delta-hyperbolicity (exact by default).
    Delta(DeltaArgs),
    /// Ollivier-Ricci curvature of every edge.
    Ricci(RicciArgs),
}

#[derive(Args, Debug)]
struct DeltaArgs {
    /// Dataset directory, or a plain edge-list file.
    #[arg(long)]
    dataset: PathBuf,
    /// Exhaustive search (the default).
    #[arg(long, conflicts_with = "samples")]
    exact: bool,
    /// Lower bound from this many random quadruples.
    #[arg(long)]
    samples: Option<u64>,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest block searched exhaustively.
    #[arg(long, default_value_t = DEFAULT_EXACT_CAP)]
    cap: usize,
}

#[derive(Args, Debug)]
struct RicciArgs {
    /// Dataset directory, or a plain edge-list file.
    #[arg(long)]
    dataset: PathBuf,
    /// Histogram bin width.
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    hist_width: f64,
    /// Per-edge CSV (u,v,kappa).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    /// Dataset directory, or a plain edge-list file.
    #[arg(long)]
    dataset: PathBuf,
    /// Curvature K < 0.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    curvature: f64,
    /// Geodesic length of every embedded edge.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Per-node CSV (node,x0,x1,x2).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ModelFlags {
    /// Model configuration JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Encoder: mlp or gcn.
    #[arg(long)]
    model: Option<Encoder>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    hidden: Option<String>,
    /// Width of the linear output layer (0 disables it).
    #[arg(long)]
    embed_dim: Option<usize>,
    /// Maximum training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// L2 weight decay on layer parameters.
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Dropout probability on layer inputs.
    #[arg(long)]
    dropout: Option<f64>,
    /// Epochs without a validation improvement before stopping.
    #[arg(long)]
    patience: Option<usize>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    /// Model seed; also seeds the splits when the dataset has none.
    #[arg(long)]
    seed: Option<u64>,
    /// Training report JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated gamma values.
    #[arg(long)]
    gammas: String,
    /// Seeds per gamma value.
    #[arg(long, default_value_t = 5)]
    trials: usize,
    /// Branch factor.
    #[arg(long, default_value_t = 10)]
    b: usize,
    /// Levels below the root.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Noise scale of the fresh feature draw.
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Feature dimension.
    #[arg(long, default_value_t = 1000)]
    dim: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base configuration; learning rate, weight decay and width are tuned.
    #[command(flatten)]
    model: ModelFlags,
    /// Sweep table CSV (gamma,mean_auc,std_auc,n_trials).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Dataset directory.
    #[arg(long)]
    dataset: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| CliError::Usage(format!("invalid {what} '{t}' in '{s}'"))))
        .collect()
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let s = serde_json::to_string_pretty(value).map_err(CliError::data)?;
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{s}").and_then(|()| out.flush()) {
        // A closed reader (`| head`) is not an error.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::data(e)),
        _ => Ok(()),
    }
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| CliError::Usage(format!("invalid output path {}", path.display())))?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    write_atomic(dir, name, bytes).map_err(CliError::data)
}

/// A dataset directory's graph, or a bare edge-list file.
fn load_graph(path: &Path) -> Result<Graph, CliError> {
    let file = if path.is_dir() { path.join(EDGES_FILE) } else { path.to_path_buf() };
    Graph::read_edge_file(&file).map_err(CliError::data)
}

fn load_dataset(path: &Path) -> Result<Dataset, CliError> {
    read_dataset(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn generate(a: GenerateArgs) -> CliResult {
    let params = TreeParams {
        b: a.b,
        levels: a.levels,
        gamma: a.gamma,
        delta: a.delta,
        dim: a.dim,
        seed: a.seed,
    };
    params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let ds = generate_dataset(&params).map_err(CliError::data)?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
    write_dataset(&ds, &a.out).map_err(CliError::data)?;
    eprintln!(
        "wrote {} ({} nodes, {} edges, dim {}) to {}",
        ds.name(),
        ds.graph.num_nodes(),
        ds.graph.num_edges(),
        a.dim,
        a.out.display()
    );
    print_json(&json!({
        "name": ds.name(),
        "nodes": ds.graph.num_nodes(),
        "edges": ds.graph.num_edges(),
        "params": params,
    }))
}

fn split(a: SplitArgs) -> CliResult {
    let fracs: Vec<f64> = parse_list(&a.fracs, "fraction")?;
    let [tr, va, te] = fracs[..] else {
        return Err(CliError::Usage(format!("--fracs needs three values, got {}", fracs.len())));
    };
    let g = load_graph(&a.dataset)?;
    let sp = make_splits(&g, (tr, va, te), a.seed).map_err(|e| match e {
        treebench_core::treegen::SplitError::InvalidFractions(_) => CliError::Usage(e.to_string()),
        other => CliError::data(other),
    })?;
    write_splits(&a.dataset, &sp).map_err(CliError::data)?;
    eprintln!(
        "split {} edges into {}/{}/{} (seed {})",
        g.num_edges(),
        sp.train_pos.len(),
        sp.val_pos.len(),
        sp.test_pos.len(),
        a.seed
    );
    print_json(&json!({
        "train": sp.train_pos.len(),
        "val": sp.val_pos.len(),
        "test": sp.test_pos.len(),
        "seed": a.seed,
        "train_connected": sp.train_connected,
    }))
}

fn diagnose_delta(a: DeltaArgs) -> CliResult {
    let g = load_graph(&a.dataset)?;
    let d = apsp(&g).map_err(CliError::data)?;
    let res = match a.samples {
        Some(n) => delta_sampled(&d, n, a.seed),
        None => delta_exact_with_cap(&d, Some(a.cap)),
    }
    .map_err(CliError::data)?;
    eprintln!("delta = {} on {} nodes", res.delta, g.num_nodes());
    print_json(&res)
}

fn diagnose_ricci(a: RicciArgs) -> CliResult {
    if !(a.hist_width > 0.0) {
        return Err(CliError::Usage(format!("--hist-width must be positive, got {}", a.hist_width)));
    }
    let g = load_graph(&a.dataset)?;
    let prof = curvature_profile_local(&g, a.hist_width).map_err(CliError::data)?;
    if let Some(out) = &a.out {
        let mut csv = String::from("u,v,kappa\n");
        for e in &prof.edges {
            csv.push_str(&format!("{},{},{}\n", e.edge.0, e.edge.1, e.kappa));
        }
        write_file(out, csv.as_bytes())?;
    }
    let k = prof.kappas();
    let mean = k.iter().sum::<f64>() / k.len() as f64;
    let min = k.iter().copied().fold(f64::INFINITY, f64::min);
    let max = k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    eprintln!("{} edges, kappa in [{min:.4}, {max:.4}], mean {mean:.4}", k.len());
    let bins: Vec<_> = prof.histogram.bins.iter().filter(|b| b.count > 0).collect();
    print_json(&json!({
        "edges": k.len(),
        "mean": mean,
        "min": min,
        "max": max,
        "bin_width": prof.histogram.bin_width,
        "bins": bins,
        "modal_bin": prof.histogram.modal_bin(),
    }))
}

fn embed(a: EmbedArgs) -> CliResult {
    let k = Curvature::new(a.curvature).map_err(|e| CliError::Usage(e.to_string()))?;
    if !(a.tau > 0.0 && a.tau.is_finite()) {
        return Err(CliError::Usage(format!("--tau must be positive, got {}", a.tau)));
    }
    let g = load_graph(&a.dataset)?;
    let emb = tree_embed(&g, k, a.tau).map_err(CliError::data)?;
    let d = apsp(&g).map_err(CliError::data)?;
    let distortion = average_distortion_with(&d, &emb.points, k, a.tau).map_err(CliError::data)?;
    if let Some(out) = &a.out {
        let mut csv = String::from("node,x0,x1,x2\n");
        for (i, p) in emb.points.iter().enumerate() {
            let c = p.coords();
            csv.push_str(&format!("{i},{},{},{}\n", c[0], c[1], c[2]));
        }
        write_file(out, csv.as_bytes())?;
    }
    eprintln!("average distortion {distortion:.6} (K = {}, tau = {})", a.curvature, a.tau);
    print_json(&json!({
        "nodes": g.num_nodes(),
        "curvature": a.curvature,
        "tau": a.tau,
        "average_distortion": distortion,
    }))
}

/// Defaults, then the config file, then individual flags.
fn model_config(f: &ModelFlags, seed: Option<u64>) -> Result<ModelConfig, CliError> {
    let mut cfg = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ModelConfig::default(),
    };
    if let Some(m) = f.model {
        cfg.encoder = m;
    }
    if let Some(h) = &f.hidden {
        cfg.hidden_dims = parse_list(h, "width")?;
    }
    if let Some(e) = f.embed_dim {
        cfg.embed_dim = (e > 0).then_some(e);
    }
    if let Some(v) = f.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = f.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = f.weight_decay {
        cfg.weight_decay = v;
    }
    if let Some(v) = f.dropout {
        cfg.dropout = v;
    }
    if let Some(v) = f.patience {
        cfg.patience = v;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn train(a: TrainArgs) -> CliResult {
    let cfg = model_config(&a.model, a.seed)?;
    let ds = load_dataset(&a.dataset)?;
    let splits = match read_splits(&a.dataset).map_err(CliError::data)? {
        Some(s) => s,
        None => make_splits(&ds.graph, DEFAULT_FRACS, cfg.seed).map_err(CliError::data)?,
    };
    let report = train_link_predictor(&ds, &splits, &cfg, &FermiDiracParams::default()).map_err(CliError::data)?;
    if let Some(out) = &a.out {
        let s = serde_json::to_string_pretty(&report).map_err(CliError::data)?;
        write_file(out, s.as_bytes())?;
    }
    eprintln!(
        "{:?} on {}: test AUC {:.4} at epoch {} (val {:.4}, {} epochs run)",
        cfg.encoder,
        ds.name(),
        report.test_auc,
        report.best_epoch,
        report.best_val_auc,
        report.per_epoch.len()
    );
    print_json(&report)
}

fn sweep(a: SweepArgs) -> CliResult {
    let gammas: Vec<f64> = parse_list(&a.gammas, "gamma")?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let base = model_config(&a.model, None)?;
    let params = TreeParams {
        b: a.b,
        levels: a.levels,
        gamma: 0.0,
        delta: a.delta,
        dim: a.dim,
        seed: a.seed,
    };
    for &g in &gammas {
        TreeParams { gamma: g, ..params }.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let settings = SweepSettings {
        trials: a.trials,
        seed: a.seed,
        ..SweepSettings::default()
    };
    let table = gamma_sweep(&gammas, &params, &default_grid(&base), &settings).map_err(CliError::data)?;
    if let Some(out) = &a.out {
        write_file(out, table.to_csv().as_bytes())?;
    }
    for r in &table.rows {
        eprintln!("gamma {:<5} AUC {:.4} ± {:.4} over {} trials", r.gamma, r.mean_auc, r.std_auc, r.n_trials);
    }
    print_json(&table)
}

fn report(a: ReportArgs) -> CliResult {
    let ds = load_dataset(&a.dataset)?;
    let splits = read_splits(&a.dataset).map_err(CliError::data)?;
    let deg = ds.graph.degrees();
    let n = ds.graph.num_nodes();
    eprintln!("{}: {} nodes, {} edges, dim {}", ds.name(), n, ds.graph.num_edges(), ds.features.ncols());
    print_json(&json!({
        "name": ds.name(),
        "nodes": n,
        "edges": ds.graph.num_edges(),
        "is_tree": ds.graph.is_tree(),
        "dim": ds.features.ncols(),
        "params": ds.params,
        "generator_version": ds.meta.generator_version,
        "degree": {
            "min": deg.iter().min(),
            "max": deg.iter().max(),
            "mean": deg.iter().sum::<usize>() as f64 / n as f64,
        },
        "splits": splits.map(|s| json!({
            "seed": s.seed,
            "train": s.train_pos.len(),
            "val": s.val_pos.len(),
            "test": s.test_pos.len(),
        })),
    }))
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> CliResult {
    if let Some(n) = threads(cli.threads)? {
        if n == 0 {
            return Err(CliError::Usage("thread count must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::data)?;
    }
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Split(a) => split(a),
        Command::Diagnose(Diagnose::Delta(a)) => diagnose_delta(a),
        Command::Diagnose(Diagnose::Ricci(a)) => diagnose_ricci(a),
        Command::Embed(a) => embed(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

//! Benchmark CLI: runs progressive emission methods over a dataset with
//! known ground truth and reports recall progressiveness.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use per_core::evaluation::{
    run_experiment, summarize, write_curve_csv, write_summary_csv, Budget, EvalError, RecallCurve,
    SummaryRow,
};
use per_core::ingest::{load_ground_truth, load_profiles, DataFormat, DatasetSpec, IngestError};
use per_core::matching::Matcher;
use per_core::synth::{generate, SynthParams};
use per_core::{build_emitter, Method, MethodParams, ProfileCollection};

#[derive(Parser)]
#[command(name = "per", version, about = "Progressive entity resolution benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method over a dataset and write its recall curve.
    Run(RunArgs),
    /// Run several methods over the same dataset, one summary row each.
    Bench(BenchArgs),
    /// Generate a synthetic dataset with planted duplicates.
    Synth(SynthArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Profile file (dirty mode), or the source-0 file in clean-clean mode.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Source-1 profile file; enables clean-clean mode.
    #[arg(long)]
    dataset2: Option<PathBuf>,
    /// Ground-truth CSV of external id pairs.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// The ground-truth CSV starts with a header row.
    #[arg(long)]
    gt_header: bool,
    /// File format: csv or jsonl. Inferred from the extension by default.
    #[arg(long)]
    format: Option<String>,
    /// Column or key holding the external id; the row index by default.
    #[arg(long)]
    id_column: Option<String>,
    /// Dataset label used in summary rows; the file stem by default.
    #[arg(long)]
    dataset_name: Option<String>,
}

#[derive(Args, Clone, Default)]
struct MethodArgs {
    /// Match function to execute per emission: jaccard, edit, or none.
    #[arg(long)]
    matcher: Option<String>,
    /// Standalone match decision threshold (jaccard: minimum similarity,
    /// edit: maximum distance). Recall always comes from the ground truth.
    #[arg(long)]
    match_threshold: Option<f64>,
    /// Window range for gs-psn (default 20; 200 suits large heterogeneous
    /// datasets); optional window cap for ls-psn.
    #[arg(long)]
    w_max: Option<usize>,
    /// Minimum suffix length for sa-psab.
    #[arg(long)]
    l_min: Option<usize>,
    /// Comparisons kept per scheduled profile for pps.
    #[arg(long)]
    k_max: Option<usize>,
    /// Block purging ratio for pbs, pps, and sa-psab.
    #[arg(long)]
    purge_ratio: Option<f64>,
    /// Block filtering ratio for pbs and pps.
    #[arg(long)]
    filter_ratio: Option<f64>,
    /// Whether sa-psab purges oversized suffix nodes (default true).
    #[arg(long)]
    psab_purge: Option<bool>,
    /// Stop after budget * |ground truth| emissions.
    #[arg(long)]
    budget: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// One of: sa-psn, sa-psab, ls-psn, gs-psn, pbs, pps.
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: MethodArgs,
    /// Recall-curve CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary CSV output path.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// JSON file supplying any of the above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated method list, e.g. "pbs,pps,ls-psn".
    #[arg(long)]
    methods: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: MethodArgs,
    /// Directory for per-method recall-curve CSVs (<method>_curve.csv).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Summary CSV output path; rows print to stdout when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// JSON file supplying any of the above; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Total number of profiles, duplicates included.
    #[arg(long)]
    n: usize,
    /// Fraction of profiles that are planted duplicates, in (0, 1).
    #[arg(long)]
    dup_rate: f64,
    /// Fraction of a duplicate's tokens replaced with junk, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Profile CSV output path.
    #[arg(long)]
    out_profiles: PathBuf,
    /// Ground-truth CSV output path.
    #[arg(long)]
    out_gt: PathBuf,
}

/// JSON shape of --config; every field optional, flags win.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    method: Option<String>,
    methods: Option<String>,
    dataset: Option<PathBuf>,
    dataset2: Option<PathBuf>,
    gt: Option<PathBuf>,
    gt_header: Option<bool>,
    format: Option<String>,
    id_column: Option<String>,
    dataset_name: Option<String>,
    matcher: Option<String>,
    match_threshold: Option<f64>,
    w_max: Option<usize>,
    l_min: Option<usize>,
    k_max: Option<usize>,
    purge_ratio: Option<f64>,
    filter_ratio: Option<f64>,
    psab_purge: Option<bool>,
    budget: Option<f64>,
    out: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    summary: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Ingest(IngestError),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Ingest(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("config error: {m}"),
            CliError::Ingest(e) => format!("ingestion error: {e}"),
            CliError::Runtime(m) => format!("runtime error: {m}"),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Ingest(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidBudget(v) => {
                CliError::Config(format!("budget must be positive, got {v}"))
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("per: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let file =
        File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(file).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Everything a single experiment needs, after merging flags over the file
/// config and applying defaults.
struct Experiment {
    collection: ProfileCollection,
    gt: per_core::GroundTruth,
    dataset_name: String,
    matcher: Matcher,
    params: MethodParams,
    budget: Budget,
}

fn parse_matcher(name: &str, threshold: Option<f64>) -> Result<Matcher, CliError> {
    match name {
        "jaccard" => Ok(Matcher::Jaccard { threshold }),
        "edit" => Ok(Matcher::EditDistance { threshold }),
        "none" => {
            if threshold.is_some() {
                return Err(CliError::Config("--match-threshold needs a matcher".into()));
            }
            Ok(Matcher::None)
        }
        other => Err(CliError::Config(format!("unknown matcher '{other}' (jaccard, edit, none)"))),
    }
}

fn parse_format(name: &str) -> Result<DataFormat, CliError> {
    match name {
        "csv" => Ok(DataFormat::Csv),
        "jsonl" => Ok(DataFormat::Jsonl),
        other => Err(CliError::Config(format!("unknown format '{other}' (csv, jsonl)"))),
    }
}

fn prepare(data: &DataArgs, params: &MethodArgs, file: &FileConfig) -> Result<Experiment, CliError> {
    let dataset = data
        .dataset
        .clone()
        .or_else(|| file.dataset.clone())
        .ok_or_else(|| CliError::Config("--dataset is required".into()))?;
    let dataset2 = data.dataset2.clone().or_else(|| file.dataset2.clone());
    let gt_path = data
        .gt
        .clone()
        .or_else(|| file.gt.clone())
        .ok_or_else(|| CliError::Config("--gt is required".into()))?;
    let format = match data.format.clone().or_else(|| file.format.clone()) {
        Some(name) => parse_format(&name)?,
        None => DataFormat::infer(&dataset),
    };
    let id_column = data.id_column.clone().or_else(|| file.id_column.clone());

    let mut spec = match &dataset2 {
        Some(second) => DatasetSpec::clean_clean(&dataset, second, format),
        None => DatasetSpec::dirty(&dataset, format),
    };
    if let Some(column) = id_column {
        spec = spec.with_id_column(column);
    }

    let (collection, id_maps) = load_profiles(&spec)?;
    let gt_header = data.gt_header || file.gt_header.unwrap_or(false);
    let gt = load_ground_truth(&gt_path, &id_maps, &collection, gt_header)?;

    let matcher_name = params.matcher.clone().or_else(|| file.matcher.clone());
    let matcher = parse_matcher(
        matcher_name.as_deref().unwrap_or("jaccard"),
        params.match_threshold.or(file.match_threshold),
    )?;

    let defaults = MethodParams::default();
    let method_params = MethodParams {
        l_min: params.l_min.or(file.l_min).unwrap_or(defaults.l_min),
        w_max: params.w_max.or(file.w_max).unwrap_or(defaults.w_max),
        ls_window_cap: params.w_max.or(file.w_max),
        k_max: params.k_max.or(file.k_max).unwrap_or(defaults.k_max),
        purge_ratio: params.purge_ratio.or(file.purge_ratio).unwrap_or(defaults.purge_ratio),
        filter_ratio: params.filter_ratio.or(file.filter_ratio).unwrap_or(defaults.filter_ratio),
        psab_purge: params.psab_purge.or(file.psab_purge).unwrap_or(defaults.psab_purge),
    };

    let budget = match params.budget.or(file.budget) {
        Some(value) => Budget::max_ec_star(value)?,
        None => Budget::Unlimited,
    };

    let dataset_name = data
        .dataset_name
        .clone()
        .or_else(|| file.dataset_name.clone())
        .or_else(|| dataset.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "dataset".to_string());

    Ok(Experiment { collection, gt, dataset_name, matcher, params: method_params, budget })
}

/// Flags that only some methods understand are rejected for the others.
fn validate_method_flags(method: Method, params: &MethodArgs) -> Result<(), CliError> {
    let reject = |flag: &str| {
        Err(CliError::Config(format!("--{flag} does not apply to method '{}'", method.name())))
    };
    if params.w_max.is_some() && !matches!(method, Method::LsPsn | Method::GsPsn) {
        return reject("w-max");
    }
    if params.l_min.is_some() && method != Method::SaPsab {
        return reject("l-min");
    }
    if params.k_max.is_some() && method != Method::Pps {
        return reject("k-max");
    }
    if params.purge_ratio.is_some() && !matches!(method, Method::Pbs | Method::Pps | Method::SaPsab)
    {
        return reject("purge-ratio");
    }
    if params.filter_ratio.is_some() && !matches!(method, Method::Pbs | Method::Pps) {
        return reject("filter-ratio");
    }
    if params.psab_purge.is_some() && method != Method::SaPsab {
        return reject("psab-purge");
    }
    Ok(())
}

fn run_one(method: Method, experiment: &Experiment) -> Result<(RecallCurve, SummaryRow), CliError> {
    let curve = run_experiment(
        &experiment.collection,
        || build_emitter(method, &experiment.collection, &experiment.params),
        &experiment.gt,
        experiment.matcher,
        experiment.budget,
    )?;
    let row = summarize(method.name(), &experiment.dataset_name, &curve);
    Ok((curve, row))
}

fn create_output(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn print_summary_line(row: &SummaryRow, curve: &RecallCurve) {
    println!(
        "method={} dataset={} emissions={} final_recall={:.4} init_ms={:.3} auc*@1={:.4} auc*@5={:.4} auc*@10={:.4} auc*@20={:.4}",
        row.method,
        row.dataset,
        curve.len(),
        curve.final_recall(),
        row.init_time_ns as f64 / 1e6,
        row.auc_stars[0],
        row.auc_stars[1],
        row.auc_stars[2],
        row.auc_stars[3],
    );
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let file = load_config(&args.config)?;
    let method_name = args
        .method
        .clone()
        .or_else(|| file.method.clone())
        .ok_or_else(|| CliError::Config("--method is required".into()))?;
    let method = Method::from_str(&method_name).map_err(CliError::Config)?;
    validate_method_flags(method, &args.params)?;

    let experiment = prepare(&args.data, &args.params, &file)?;
    let (curve, row) = run_one(method, &experiment)?;

    if let Some(path) = args.out.clone().or_else(|| file.out.clone()) {
        write_curve_csv(&curve, create_output(&path)?)?;
    }
    if let Some(path) = args.summary.clone().or_else(|| file.summary.clone()) {
        write_summary_csv(std::slice::from_ref(&row), create_output(&path)?)?;
    }
    print_summary_line(&row, &curve);
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let file = load_config(&args.config)?;
    let methods_arg = args
        .methods
        .clone()
        .or_else(|| file.methods.clone())
        .ok_or_else(|| CliError::Config("--methods is required".into()))?;
    let methods = methods_arg
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Method::from_str)
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::Config)?;
    if methods.is_empty() {
        return Err(CliError::Config("at least one method is required".into()));
    }

    let experiment = prepare(&args.data, &args.params, &file)?;
    let out_dir = args.out_dir.clone().or_else(|| file.out_dir.clone());
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }

    let mut rows = Vec::with_capacity(methods.len());
    for method in methods {
        let (curve, row) = run_one(method, &experiment)?;
        if let Some(dir) = &out_dir {
            let path = dir.join(format!("{}_curve.csv", method.name()));
            write_curve_csv(&curve, create_output(&path)?)?;
        }
        print_summary_line(&row, &curve);
        rows.push(row);
    }

    match args.summary.clone().or_else(|| file.summary.clone()) {
        Some(path) => write_summary_csv(&rows, create_output(&path)?)?,
        None => write_summary_csv(&rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let params =
        SynthParams { n: args.n, dup_rate: args.dup_rate, noise: args.noise, seed: args.seed };
    let dataset = generate(&params).map_err(|e| CliError::Config(e.to_string()))?;
    dataset
        .write_profiles_csv(create_output(&args.out_profiles)?)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    dataset
        .write_gt_csv(create_output(&args.out_gt)?)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "wrote {} profiles ({} duplicate pairs) to {} and {}",
        dataset.len(),
        dataset.pairs().len(),
        args.out_profiles.display(),
        args.out_gt.display(),
    );
    Ok(())
}

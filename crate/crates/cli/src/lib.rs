//! `wikiprop` command line: argument handling, config-file merging and the
//! summary/exit-code contract. Each subcommand is a thin wrapper over a
//! `wikiprop_core` call, see [`commands`].

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use chrono::{DateTime, NaiveDate};
use clap::parser::ValueSource;
use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::Value;

pub mod commands;

/// Environment variable consulted for the seed when `--seed` is absent.
pub const SEED_ENV: &str = "WIKIPROP_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "wikiprop", version, about = "Cross-language Wikipedia page-creation cascades")]
pub struct Cli {
    /// Seed for every stochastic step (falls back to $WIKIPROP_SEED, then 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON file of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and filter raw page-creation records.
    Ingest(IngestArgs),
    /// Group records into a cascade dataset file.
    Build(BuildArgs),
    /// Descriptive statistics of a dataset.
    Stats(StatsArgs),
    /// Pairwise Jaccard similarity of edition item sets.
    Jaccard(JaccardArgs),
    /// Rank correlation of Jaccard similarity with translation counts.
    Correlate(CorrelateArgs),
    /// Temporal split and supervised window instances.
    Split(SplitArgs),
    /// Train a sequence model on instance files.
    Train(TrainArgs),
    /// Evaluate a checkpoint on test instances.
    Evaluate(EvaluateArgs),
    /// Score instances with a checkpoint.
    Predict(PredictArgs),
    /// Generate synthetic records with ground truth.
    Synth(SynthArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Build(_) => "build",
            Command::Stats(_) => "stats",
            Command::Jaccard(_) => "jaccard",
            Command::Correlate(_) => "correlate",
            Command::Split(_) => "split",
            Command::Train(_) => "train",
            Command::Evaluate(_) => "evaluate",
            Command::Predict(_) => "predict",
            Command::Synth(_) => "synth",
        }
    }
}

/// Unix seconds or an ISO-8601 date / RFC 3339 timestamp.
pub fn parse_timestamp(s: &str) -> Result<i64, String> {
    if let Ok(n) = s.parse::<i64>() {
        return Ok(n);
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.timestamp());
    }
    if let Ok(t) = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Ok(t.and_utc().timestamp());
    }
    Err(format!("{s:?} is neither Unix seconds nor an ISO-8601 date"))
}

#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    /// Keep records whose creator is a bot.
    #[arg(long)]
    pub keep_bots: bool,
    /// Minimum topic score kept (inclusive).
    #[arg(long)]
    pub topic_threshold: Option<f64>,
    /// Earliest creation time kept (inclusive).
    #[arg(long, value_parser = parse_timestamp)]
    pub min_timestamp: Option<i64>,
    /// Creation times at or after this are dropped.
    #[arg(long, value_parser = parse_timestamp)]
    pub max_timestamp: Option<i64>,
    /// Abort if more than this share of lines is malformed.
    #[arg(long)]
    pub max_rejected_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Observation horizon; later records are an error unless --truncate.
    #[arg(long, value_parser = parse_timestamp)]
    pub cutoff: i64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the flat CSV export here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Drop records created after the cutoff instead of failing.
    #[arg(long)]
    pub truncate: bool,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stat {
    Lengths,
    SingleLanguage,
    Continuation,
    Intervals,
    Positions,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub stat: Stat,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Hops for `intervals`.
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5])]
    pub hops: Vec<usize>,
    /// First cascade start year for `positions`.
    #[arg(long, default_value_t = 2001)]
    pub min_year: i32,
}

#[derive(Debug, Args)]
pub struct JaccardArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Restrict to these editions (default: all, sorted by code).
    #[arg(long, value_delimiter = ',')]
    pub editions: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// CSV with header `source,target,count`.
    #[arg(long)]
    pub translations: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Binary,
    NextLanguage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CensoringArg {
    Exclude,
    LabelNegative,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long, value_parser = parse_timestamp, default_value = "2008-01-01")]
    pub train_start: i64,
    #[arg(long, value_parser = parse_timestamp, default_value = "2015-01-01")]
    pub train_end: i64,
    #[arg(long, value_parser = parse_timestamp, default_value = "2015-01-01")]
    pub test_start: i64,
    /// Window length K.
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    /// Continuation timeout in days (binary task).
    #[arg(long, default_value_t = 365)]
    pub timeout_days: i64,
    #[arg(long, value_enum, default_value = "exclude")]
    pub censoring: CensoringArg,
    /// Keep a seeded random sample of this many training instances.
    #[arg(long)]
    pub sample_train: Option<usize>,
    /// Keep a seeded random sample of this many test instances.
    #[arg(long)]
    pub sample_test: Option<usize>,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
    /// Edition vocabulary (JSON list; index i+1 is the i-th code).
    #[arg(long)]
    pub vocab_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long, value_enum)]
    pub task: Task,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    /// Stop once the validation metric reaches this value.
    #[arg(long)]
    pub stop_at: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch losses and validation metric as JSON.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// Largest window for accuracy@w (next-language task).
    #[arg(long, default_value_t = 5)]
    pub w_max: usize,
    /// JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Plain-text table (default: standard output).
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Ranked languages kept per instance (next-language task).
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GeneratorArg {
    CyclicOrder,
    ThresholdContinuation,
    HeavyTail,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub generator: GeneratorArg,
    #[arg(long)]
    pub editions: usize,
    #[arg(long)]
    pub items: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar JSON.
    #[arg(long)]
    pub metadata: PathBuf,
    #[arg(long)]
    pub start_span_days: Option<f64>,
    /// Cyclic order as comma-separated edition positions.
    #[arg(long, value_delimiter = ',')]
    pub cycle: Vec<usize>,
    #[arg(long)]
    pub min_length: Option<usize>,
    #[arg(long)]
    pub max_length: Option<usize>,
    #[arg(long)]
    pub mean_gap_days: Option<f64>,
    #[arg(long)]
    pub threshold_days: Option<f64>,
    #[arg(long)]
    pub forced_continuations: Option<usize>,
    #[arg(long)]
    pub continue_probability: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
}

/// A failure classified for the exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Resolved global settings.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub seed: u64,
    pub threads: Option<usize>,
}

fn json_to_flag(key: &str, value: &Value) -> Result<Option<String>, CliError> {
    let text = match value {
        Value::Bool(true) => return Ok(Some(format!("--{key}"))),
        Value::Bool(false) | Value::Null => return Ok(None),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(usage(format!("config key {key}: list entries must be scalars"))),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        Value::Object(_) => return Err(usage(format!("config key {key}: nested objects are not flags"))),
    };
    Ok(Some(format!("--{key}={text}")))
}

/// Append config-file values for every flag of the chosen subcommand that was
/// not given on the command line. Top-level keys apply to any subcommand
/// having that flag; an object under a subcommand's name applies to it alone.
fn merge_config(argv: Vec<OsString>, matches: &clap::ArgMatches) -> Result<Vec<OsString>, CliError> {
    let Some(path) = matches.get_one::<PathBuf>("config") else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    let Value::Object(root) = serde_json::from_str::<Value>(&text)
        .map_err(|e| usage(format!("--config {}: {e}", path.display())))?
    else {
        return Err(usage("--config: expected a JSON object"));
    };
    let (sub_name, sub_matches) = matches.subcommand().expect("subcommand required");
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(sub_name).expect("parsed subcommand");

    let mut known = std::collections::BTreeSet::new();
    for arg in cmd.get_arguments().chain(cmd.get_subcommands().flat_map(|s| s.get_arguments())) {
        if let Some(long) = arg.get_long() {
            known.insert(long.to_owned());
        }
    }
    let subcommands: Vec<&str> = cmd.get_subcommands().map(|s| s.get_name()).collect();
    let normalize = |k: &str| k.replace('_', "-");

    let mut values: Vec<(String, Value)> = Vec::new();
    let mut section = None;
    for (key, value) in &root {
        let key = normalize(key);
        if subcommands.contains(&key.as_str()) {
            if key == sub_name {
                section = Some(value.clone());
            }
            continue;
        }
        if !known.contains(&key) {
            return Err(usage(format!("--config: unknown key {key}")));
        }
        values.push((key, value.clone()));
    }
    if let Some(section) = section {
        let Value::Object(map) = section else {
            return Err(usage(format!("--config: section {sub_name} must be an object")));
        };
        for (key, value) in map {
            let key = normalize(&key);
            let has = |c: &clap::Command| c.get_arguments().any(|a| a.get_long() == Some(key.as_str()));
            if !has(sub) && !has(&cmd) {
                return Err(usage(format!("--config: {sub_name} has no flag --{key}")));
            }
            values.retain(|(k, _)| *k != key);
            values.push((key, value));
        }
    }

    let mut argv = argv;
    for (key, value) in values {
        if key == "config" {
            continue;
        }
        let find = |c: &clap::Command| c.get_arguments().find(|a| a.get_long() == Some(key.as_str())).cloned();
        let (arg, given) = match find(sub) {
            Some(a) => {
                let g = sub_matches.value_source(a.get_id().as_str());
                (a, g)
            }
            None => match find(&cmd) {
                Some(a) => {
                    let g = matches.value_source(a.get_id().as_str());
                    (a, g)
                }
                None => continue,
            },
        };
        if given == Some(ValueSource::CommandLine) {
            continue;
        }
        if matches!(arg.get_action(), ArgAction::SetTrue) && !matches!(value, Value::Bool(_)) {
            return Err(usage(format!("--config: {key} must be true or false")));
        }
        if let Some(flag) = json_to_flag(&key, &value)? {
            argv.push(flag.into());
        }
    }
    Ok(argv)
}

fn resolve_seed(cli_seed: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = cli_seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn parse(argv: Vec<OsString>) -> Result<Cli, clap::Error> {
    let matches = Cli::command().try_get_matches_from(argv)?;
    Cli::from_arg_matches(&matches)
}

/// Run with explicit output streams; returns the process exit code.
///
/// Data products go to files or `stdout`; the summary line
/// `status=<ok|error> elapsed_ms=<int> outputs=<paths>` goes to `stderr`.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let started = Instant::now();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let first = match Cli::command().try_get_matches_from(argv.clone()) {
        Ok(m) => m,
        Err(e) => return clap_exit(e, stdout, stderr),
    };
    let result = merge_config(argv, &first).and_then(|argv| match parse(argv) {
        Ok(cli) => Ok(cli),
        Err(e) => Err(usage(e.to_string())),
    });
    let outcome = result.and_then(|cli| {
        let globals = Globals {
            seed: resolve_seed(cli.seed)?,
            threads: cli.threads,
        };
        if globals.threads == Some(0) {
            return Err(usage("--threads must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(globals.threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Data(e.into()))?;
        let mut captured = Vec::new();
        let result = pool.install(|| commands::execute(&cli.command, globals, &mut captured));
        stdout
            .write_all(&captured)
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Data(e.into()))?;
        result
    });
    let elapsed = started.elapsed().as_millis();
    match outcome {
        Ok(outputs) => {
            let list = if outputs.is_empty() {
                "-".to_owned()
            } else {
                outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
            };
            let _ = writeln!(stderr, "status=ok elapsed_ms={elapsed} outputs={list}");
            EXIT_OK
        }
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            let _ = writeln!(stderr, "status=error elapsed_ms={elapsed} outputs=-");
            EXIT_USAGE
        }
        Err(CliError::Data(err)) => {
            let _ = writeln!(stderr, "error: {}", describe(&err));
            let _ = writeln!(stderr, "status=error elapsed_ms={elapsed} outputs=-");
            EXIT_DATA
        }
    }
}

/// The error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    let mut last = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !last.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
        last = text;
    }
    out
}

fn clap_exit(e: clap::Error, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    use clap::error::ErrorKind;
    let rendered = e.render().to_string();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
            let _ = write!(stdout, "{rendered}");
            EXIT_OK
        }
        _ => {
            let _ = write!(stderr, "{rendered}");
            let _ = writeln!(stderr, "status=error elapsed_ms=0 outputs=-");
            EXIT_USAGE
        }
    }
}

/// Run against the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

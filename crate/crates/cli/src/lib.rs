//! `nidb`: dataset statistics, training, evaluation, table reproduction and
//! batch scoring for NSL-KDD intrusion detection models.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nids_core::eval::{render_comparison, render_report, ReportFormat};
use nids_core::modelstore::{load_file, save_file, ModelKind};
use nids_core::pipeline::{comparison_rows, compare, evaluate_artifact, train_model, ExperimentConfig};
use nids_core::schema::{
    builtin_schema, count_by_category, parse_dataset, AttackTaxonomy, Category, FeatureMode,
    FeatureSchema, LabeledDataset,
};
use nids_core::Error;

pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nidb", version, about = "NSL-KDD intrusion detection experiments")]
pub struct Cli {
    /// Seed for the split and every model.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON experiment configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Output file: the artifact for `train`, the csv table for `compare`.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => ReportFormat::Text,
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Full,
    Sdn,
}

impl From<Mode> for FeatureMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Full => FeatureMode::Full,
            Mode::Sdn => FeatureMode::Sdn,
        }
    }
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Training file (KDDTrain+ format).
    #[arg(long, value_name = "PATH")]
    pub train: Option<PathBuf>,
    /// Test file (KDDTest+ format).
    #[arg(long, value_name = "PATH")]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-category record counts of the train and test files.
    Stats {
        train: Option<PathBuf>,
        test: Option<PathBuf>,
    },
    /// Train one model and write its artifact.
    Train {
        #[arg(long, value_parser = parse_kind)]
        kind: Option<ModelKind>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Evaluate a saved artifact on a labeled file.
    Evaluate {
        artifact: PathBuf,
        test: PathBuf,
        /// Feature mode the artifact is expected to have.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Train and evaluate every standard model on one shared split.
    Compare {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Classify unlabeled records, one verdict per line.
    Score {
        artifact: PathBuf,
        /// Input file; standard input when absent or `-`.
        input: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse()
}

/// Failure carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn data(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFiniteLoss { .. } => EXIT_TRAINING,
            _ => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Standard streams, injectable for tests.
pub struct Io<'a> {
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    pub stdin: &'a mut dyn BufRead,
}

/// Runs one command and returns the process exit code.
pub fn run(cli: Cli, io: &mut Io<'_>) -> i32 {
    match dispatch(cli, io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.stderr, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli, io: &mut Io<'_>) -> CliResult {
    let mut cfg = match &cli.config {
        Some(p) => read_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let format = ReportFormat::from(cli.format);
    match cli.command {
        Command::Stats { train, test } => {
            let train = train.or(cfg.train_path.clone());
            let test = test.or(cfg.test_path.clone());
            cmd_stats(train.as_deref(), test.as_deref(), format, io)
        }
        Command::Train { kind, data } => {
            apply_data_args(&mut cfg, data);
            if let Some(k) = kind {
                cfg.model_kind = Some(k);
            }
            cmd_train(&cfg, cli.out.as_deref(), format, io)
        }
        Command::Evaluate {
            artifact,
            test,
            mode,
        } => cmd_evaluate(&artifact, &test, mode.map(FeatureMode::from), format, io),
        Command::Compare { data } => {
            apply_data_args(&mut cfg, data);
            cmd_compare(&cfg, cli.out.as_deref(), format, io)
        }
        Command::Score { artifact, input } => cmd_score(&artifact, input.as_deref(), io),
    }
}

fn apply_data_args(cfg: &mut ExperimentConfig, data: DataArgs) {
    if let Some(p) = data.train {
        cfg.train_path = Some(p);
    }
    if let Some(p) = data.test {
        cfg.test_path = Some(p);
    }
    if let Some(m) = data.mode {
        cfg.feature_mode = m.into();
    }
}

fn read_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read config {}: {e}", path.display())))?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("invalid config {}: {e}", path.display())))?;
    Ok(cfg)
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(format!("cannot open {}: {e}", path.display())))
}

fn with_path(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

/// Parses a full 41-feature NSL-KDD file.
pub fn read_dataset(path: &Path) -> CliResult<LabeledDataset> {
    read_with_schema(path, &builtin_schema())
}

fn read_with_schema(path: &Path, schema: &FeatureSchema) -> CliResult<LabeledDataset> {
    parse_dataset(open(path)?, schema, &path.display().to_string()).map_err(|e| with_path(path, e))
}

/// Feature mode implied by the first record's field count (features plus
/// label, with or without the difficulty column).
fn sniff_mode(path: &Path) -> CliResult<FeatureMode> {
    let mut first = String::new();
    let mut reader = open(path)?;
    loop {
        first.clear();
        if reader.read_line(&mut first)? == 0 {
            return Err(with_path(path, Error::EmptyInput));
        }
        if !first.trim().is_empty() {
            break;
        }
    }
    let fields = first.trim_end().split(',').count();
    let full = builtin_schema().len();
    let sdn = FeatureMode::Sdn.schema().len();
    match fields {
        n if n == full + 1 || n == full + 2 => Ok(FeatureMode::Full),
        n if n == sdn + 1 || n == sdn + 2 => Ok(FeatureMode::Sdn),
        n => Err(with_path(
            path,
            Error::MalformedLine {
                line: 1,
                expected: format!("{} or {} (full) / {} or {} (sdn)", full + 1, full + 2, sdn + 1, sdn + 2),
                found: n,
            },
        )),
    }
}

fn require(path: Option<&PathBuf>, what: &str) -> CliResult<PathBuf> {
    path.cloned()
        .ok_or_else(|| CliError::data(format!("no {what} file given (flag or config)")))
}

pub fn cmd_stats(
    train: Option<&Path>,
    test: Option<&Path>,
    format: ReportFormat,
    io: &mut Io<'_>,
) -> CliResult {
    let files: Vec<(&str, &Path)> = [("Train", train), ("Test", test)]
        .into_iter()
        .filter_map(|(n, p)| p.map(|p| (n, p)))
        .collect();
    if files.is_empty() {
        return Err(CliError::data("stats needs at least one dataset file"));
    }
    let taxonomy = AttackTaxonomy::standard();
    let mut columns = Vec::new();
    for (name, path) in &files {
        let ds = read_dataset(path)?;
        columns.push((*name, count_by_category(&ds, &taxonomy)));
    }
    let mut rows: Vec<Category> = Category::ALL[..5].to_vec();
    if columns.iter().any(|(_, c)| c[&Category::UnknownAttack] > 0) {
        rows.push(Category::UnknownAttack);
    }
    let out = &mut *io.stdout;
    match format {
        ReportFormat::Text => {
            write!(out, "{:<14}", "Traffic")?;
            for (name, _) in &columns {
                write!(out, "{name:>10}")?;
            }
            writeln!(out)?;
            for c in &rows {
                write!(out, "{:<14}", c.as_str())?;
                for (_, counts) in &columns {
                    write!(out, "{:>10}", counts[c])?;
                }
                writeln!(out)?;
            }
            write!(out, "{:<14}", "Total")?;
            for (_, counts) in &columns {
                write!(out, "{:>10}", counts.values().sum::<usize>())?;
            }
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
            writeln!(out, "Traffic,{}", names.join(","))?;
            for c in &rows {
                let vals: Vec<String> = columns.iter().map(|(_, m)| m[c].to_string()).collect();
                writeln!(out, "{},{}", c.as_str(), vals.join(","))?;
            }
        }
        ReportFormat::Json => {
            let obj: serde_json::Map<String, serde_json::Value> = columns
                .iter()
                .map(|(name, counts)| {
                    let inner = rows
                        .iter()
                        .map(|c| (c.as_str().to_string(), serde_json::json!(counts[c])))
                        .collect::<serde_json::Map<_, _>>();
                    (name.to_lowercase(), serde_json::Value::Object(inner))
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&obj).expect("counts serialize"))?;
        }
    }
    Ok(())
}

pub fn cmd_train(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    format: ReportFormat,
    io: &mut Io<'_>,
) -> CliResult {
    let kind = cfg
        .model_kind
        .ok_or_else(|| CliError::data("no model kind given (--kind or config)"))?;
    let train = read_dataset(&require(cfg.train_path.as_ref(), "training")?)?;
    let test = match &cfg.test_path {
        Some(p) => Some(read_dataset(p)?),
        None => None,
    };
    let outcome = train_model(kind, &train, test.as_ref(), cfg)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| {
        PathBuf::from(format!("{}-{}.nidb", kind.as_str(), cfg.feature_mode))
    });
    save_file(&outcome.artifact, &path)?;
    io.stdout.write_all(render_report(&outcome.report, format).as_bytes())?;
    writeln!(io.stderr, "artifact written to {}", path.display())?;
    Ok(())
}

pub fn cmd_evaluate(
    artifact: &Path,
    test: &Path,
    expect: Option<FeatureMode>,
    format: ReportFormat,
    io: &mut Io<'_>,
) -> CliResult {
    let a = load_file(artifact).map_err(|e| with_path(artifact, e))?;
    if let Some(mode) = expect {
        if mode != a.feature_mode {
            return Err(CliError::data(format!(
                "schema fingerprint mismatch: {} is a {} artifact, expected {}",
                artifact.display(),
                a.feature_mode,
                mode
            )));
        }
    }
    let file_mode = sniff_mode(test)?;
    if file_mode == FeatureMode::Sdn && a.feature_mode == FeatureMode::Full {
        return Err(CliError::data(format!(
            "schema fingerprint mismatch: {} holds SDN records but the artifact needs all features",
            test.display()
        )));
    }
    let ds = read_with_schema(test, &file_mode.schema())?;
    let report = evaluate_artifact(&a, &ds)?;
    io.stdout.write_all(render_report(&report, format).as_bytes())?;
    Ok(())
}

pub fn cmd_compare(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    format: ReportFormat,
    io: &mut Io<'_>,
) -> CliResult {
    let train = read_dataset(&require(cfg.train_path.as_ref(), "training")?)?;
    let test = read_dataset(&require(cfg.test_path.as_ref(), "test")?)?;
    let results = compare(&train, &test, cfg);
    for (kind, r) in &results {
        if let Err(e) = r {
            writeln!(io.stderr, "{} failed: {e}", kind.display_name())?;
        }
    }
    let rows = comparison_rows(&results, cfg.feature_mode);
    io.stdout.write_all(render_comparison(&rows, format)?.as_bytes())?;
    let csv_path = out.map(Path::to_path_buf).unwrap_or_else(|| {
        PathBuf::from(format!("comparison-{}.csv", cfg.feature_mode))
    });
    std::fs::write(&csv_path, render_comparison(&rows, ReportFormat::Csv)?)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", csv_path.display())))?;
    writeln!(io.stderr, "table written to {}", csv_path.display())?;
    Ok(())
}

pub fn cmd_score(artifact: &Path, input: Option<&Path>, io: &mut Io<'_>) -> CliResult {
    let a = load_file(artifact).map_err(|e| with_path(artifact, e))?;
    let width = a.record_width();
    let mut file;
    let reader: &mut dyn BufRead = match input {
        Some(p) if p != Path::new("-") => {
            file = open(p)?;
            &mut file
        }
        _ => &mut *io.stdin,
    };
    let mut scored = 0usize;
    let mut line = String::new();
    let mut line_no = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let text = line.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != width {
            writeln!(
                io.stderr,
                "line {line_no}: expected {width} fields, found {}; skipped",
                fields.len()
            )?;
            continue;
        }
        let verdict = a
            .prepare_values(&fields, line_no)
            .and_then(|x| a.predict_proba(&x));
        match verdict {
            Ok(p) => {
                let label = if p[0] >= 0.5 { "attack" } else { "normal" };
                writeln!(io.stdout, "{line_no},{label},{}", p[0])?;
                scored += 1;
            }
            Err(e) => writeln!(io.stderr, "line {line_no}: {e}; skipped")?,
        }
    }
    if scored == 0 {
        return Err(CliError::data("no records scored"));
    }
    Ok(())
}

/// Caps the global worker pool at `NIDB_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("NIDB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

//! Command-line front end for `uwoc-fading`.
//!
//! Five subcommands wrap the library pipeline:
//!
//! | command      | output                                            |
//! |--------------|---------------------------------------------------|
//! | `analyze`    | [`AnalysisReport`] as JSON                        |
//! | `fit`        | one [`FitResult`] as JSON                         |
//! | `simulate`   | trace file with provenance headers                |
//! | `pdf`        | `h,density` CSV                                   |
//! | `covariance` | `lag_seconds,coefficient` CSV + coherence footer  |
//!
//! [`run`] is the whole program minus process plumbing, so tests can call
//! it in-process (for instance inside rayon pools of different sizes) and
//! compare output bytes.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use uwoc_fading::distributions::{self, FadingParams, Family};
use uwoc_fading::estimation::{self, DEFAULT_COHERENCE_THRESHOLD, MIN_COVARIANCE_SAMPLES};
use uwoc_fading::histogram::{build_histogram, BinSpec, EmpiricalPdf};
use uwoc_fading::io::{self, format_float, TraceFile};
use uwoc_fading::simulation::{generate_fading, FadingProcessSpec};
use uwoc_fading::trace::normalize_trace;
use uwoc_fading::{
    BinWeighting, ChannelStats, Error, FitOptions, FitResult, FitRow, DEFAULT_SAMPLE_RATE,
};

/// Environment variable prepended to every relative `--out`/`--table` path.
///
/// The prefix is joined textually, so `results/run1_` turns `report.json`
/// into `results/run1_report.json`.
pub const OUT_PREFIX_ENV: &str = "UWOC_OUT_PREFIX";

/// Lag window used by `analyze` when `--max-lag` is not given (seconds).
pub const DEFAULT_MAX_LAG: f64 = 0.02;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// Numerical failure inside the library (quadrature, bracketing, overflow).
    pub const FAILURE: i32 = 1;
    /// Unreadable or malformed input.
    pub const PARSE: i32 = 2;
    /// Data that admits no analysis (constant trace, empty histogram, ...).
    pub const DEGENERATE: i32 = 3;
    /// The requested family cannot describe this data.
    pub const INAPPLICABLE: i32 = 4;
    /// Flags that violate a precondition.
    pub const INVALID: i32 = 5;
}

const SUBCOMMANDS: [&str; 5] = ["analyze", "fit", "simulate", "pdf", "covariance"];

// ---------------------------------------------------------------------------
// Flags
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "uwoc",
    version,
    about = "Fading statistics for underwater optical channel traces",
    args_override_self = true
)]
struct Cli {
    /// JSON object of default flag values; keys mirror flag names and
    /// command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Statistics, histogram, four-family fit table and coherence time.
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Fit a single family to a trace's histogram.
    #[command(args_override_self = true)]
    Fit(FitArgs),
    /// Generate a correlated fading trace.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Tabulate a density on an equispaced grid.
    #[command(args_override_self = true)]
    Pdf(PdfArgs),
    /// Temporal covariance coefficient and coherence time of a trace.
    #[command(args_override_self = true)]
    Covariance(CovarianceArgs),
}

#[derive(Debug, Args)]
struct FitFlags {
    /// Histogram bins: `auto`, a bin count, or comma-separated edges.
    #[arg(long, default_value = "auto", value_parser = parse_bins)]
    bins: BinSpec,
    /// Number of optimizer start points per family.
    #[arg(long, default_value_t = 32)]
    multistart: usize,
    /// Force unit mean on mixture fits.
    #[arg(long)]
    constrain_mean: bool,
    /// Objective-evaluation budget per local descent.
    #[arg(long, default_value_t = 4000)]
    max_evaluations: usize,
    /// Convergence tolerance on the objective.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Weight squared residuals by bin counts instead of uniformly.
    #[arg(long)]
    count_weighted: bool,
}

impl FitFlags {
    fn options(&self) -> FitOptions {
        FitOptions {
            constrain_mean: self.constrain_mean,
            multistart_count: self.multistart,
            max_evaluations: self.max_evaluations,
            tolerance: self.tolerance,
            bin_weighting: if self.count_weighted {
                BinWeighting::CountWeighted
            } else {
                BinWeighting::Uniform
            },
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trace file (one sample per line, or `time,value`).
    input: PathBuf,
    #[command(flatten)]
    fit: FitFlags,
    /// Families to fit, comma-separated (default: all four).
    #[arg(long, value_delimiter = ',')]
    families: Vec<Family>,
    /// Largest covariance lag in seconds (default 0.02, capped at half the
    /// trace duration).
    #[arg(long)]
    max_lag: Option<f64>,
    /// Covariance level defining the coherence time.
    #[arg(long, default_value_t = DEFAULT_COHERENCE_THRESHOLD)]
    threshold: f64,
    /// Skip the covariance/coherence estimate.
    #[arg(long)]
    no_covariance: bool,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the fit table as CSV.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Trace file.
    input: PathBuf,
    #[arg(long)]
    family: Family,
    #[command(flatten)]
    fit: FitFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Family tag plus its parameters; only the flags of the chosen family may
/// be given.
#[derive(Debug, Args)]
struct ModelFlags {
    #[arg(long)]
    family: Family,
    /// LogNormal log-amplitude variance σ²_X.
    #[arg(long = "sigma2-x", allow_negative_numbers = true)]
    sigma2_x: Option<f64>,
    /// K / Gamma-Gamma shape α.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Gamma-Gamma shape β.
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Mixture weight of the exponential lobe.
    #[arg(long, allow_negative_numbers = true)]
    k: Option<f64>,
    /// Mean of the exponential lobe.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Log-mean of the log-normal lobe.
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Log-variance of the log-normal lobe.
    #[arg(long, allow_negative_numbers = true)]
    sigma2: Option<f64>,
}

impl ModelFlags {
    fn params(&self) -> Result<FadingParams, CliError> {
        let given = [
            ("sigma2-x", self.sigma2_x),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("k", self.k),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("sigma2", self.sigma2),
        ];
        let wanted: &[&str] = match self.family {
            Family::LogNormal => &["sigma2-x"],
            Family::KDist => &["alpha"],
            Family::GammaGamma => &["alpha", "beta"],
            Family::ExpLogNormal => &["k", "gamma", "mu", "sigma2"],
        };
        for (name, value) in given {
            if value.is_some() && !wanted.contains(&name) {
                return Err(CliError::Usage(format!(
                    "--{name} does not apply to family {}",
                    self.family
                )));
            }
        }
        let get = |name: &str| -> Result<f64, CliError> {
            given
                .iter()
                .find(|(n, _)| *n == name)
                .and_then(|(_, v)| *v)
                .ok_or_else(|| CliError::Usage(format!("family {} requires --{name}", self.family)))
        };
        let params = match self.family {
            Family::LogNormal => FadingParams::LogNormal {
                sigma2_x: get("sigma2-x")?,
            },
            Family::KDist => FadingParams::KDist {
                alpha: get("alpha")?,
            },
            Family::GammaGamma => FadingParams::GammaGamma {
                alpha: get("alpha")?,
                beta: get("beta")?,
            },
            Family::ExpLogNormal => FadingParams::ExpLogNormal {
                k: get("k")?,
                gamma: get("gamma")?,
                mu: get("mu")?,
                sigma2: get("sigma2")?,
            },
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Latent coherence time τ₀ in seconds.
    #[arg(long)]
    tau: f64,
    /// Sampling rate in Sa/s.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_RATE)]
    rate: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 32768)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the trace here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PdfArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Grid `lo:hi:steps`, endpoints included.
    #[arg(long, value_parser = parse_range)]
    range: GridRange,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CovarianceArgs {
    /// Trace file.
    input: PathBuf,
    /// Largest lag in seconds; must be below the trace duration.
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    max_lag: f64,
    #[arg(long, default_value_t = DEFAULT_COHERENCE_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct GridRange {
    lo: f64,
    hi: f64,
    steps: usize,
}

fn parse_range(s: &str) -> Result<GridRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(format!("expected lo:hi:steps, got `{s}`"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let steps: usize = steps
        .trim()
        .parse()
        .map_err(|_| format!("`{steps}` is not a step count"))?;
    if lo < 0.0 {
        return Err("range must start at h >= 0".into());
    }
    if hi <= lo {
        return Err("range end must exceed its start".into());
    }
    if steps < 2 {
        return Err("range needs at least 2 steps".into());
    }
    Ok(GridRange { lo, hi, steps })
}

fn parse_bins(s: &str) -> Result<BinSpec, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("auto") {
        return Ok(BinSpec::Auto);
    }
    if s.contains(',') {
        let edges = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bin edge `{t}` is not a number"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(BinSpec::Edges(edges));
    }
    s.parse::<usize>()
        .map(BinSpec::Count)
        .map_err(|_| format!("expected `auto`, a bin count or edges, got `{s}`"))
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum CliError {
    Core(Error),
    /// Flag combination rejected before reaching the library.
    Usage(String),
    /// Malformed `--config` file.
    Config(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::INVALID,
            CliError::Config(_) => exit::PARSE,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
            CliError::Config(m) => write!(f, "config: {m}"),
        }
    }
}

/// Exit code for a library error.
pub fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Io(_) | Error::InvalidTrace(_) => exit::PARSE,
        Error::ZeroMeanTrace(_)
        | Error::DegenerateRange
        | Error::ZeroVariance
        | Error::DegenerateHistogram
        | Error::TooFewSamples { .. } => exit::DEGENERATE,
        Error::InfeasibleFamily { .. } | Error::OutOfSupport { .. } => exit::INAPPLICABLE,
        Error::InvalidParams { .. }
        | Error::InvalidBins(_)
        | Error::InvalidArgument(_)
        | Error::UnresolvableCoherence { .. }
        | Error::Infeasible(_)
        | Error::LengthMismatch(..)
        | Error::UnderdeterminedFamily(_) => exit::INVALID,
        Error::NumericOverflow(_) | Error::QuadratureFailure { .. } | Error::BracketFailure(_) => {
            exit::FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Where a report came from and how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: String,
    pub options: AnalyzeOptions,
    /// Seeds recorded in the trace headers (empty for measured data).
    pub seeds: Vec<u64>,
    /// Every `# key=value` header of the input trace, in file order.
    pub trace_headers: Map<String, Value>,
}

/// Resolved analysis options, as actually used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    pub bins: BinSpec,
    pub families: Vec<Family>,
    pub fit: FitOptions,
    /// `None` when the covariance step was skipped.
    pub max_lag: Option<f64>,
    pub threshold: f64,
}

/// Everything `analyze` learns about one trace. Fits are ordered by
/// descending R², inapplicable families last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub stats: ChannelStats,
    pub histogram: EmpiricalPdf,
    pub fits: Vec<FitRow>,
}

/// Canonical JSON rendering used for every JSON output: pretty-printed,
/// struct field order, shortest round-trip floats, trailing newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Run the program with `args` (including the program name) and return the
/// exit code. Normal output goes to `stdout` unless redirected with `--out`;
/// diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    exit::OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    exit::INVALID
                }
            };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a, stdout, stderr),
        Command::Fit(a) => cmd_fit(&a, stdout),
        Command::Simulate(a) => cmd_simulate(&a, stdout),
        Command::Pdf(a) => cmd_pdf(&a, stdout),
        Command::Covariance(a) => cmd_covariance(&a, stdout),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code()
        }
    }
}

/// Splice `--config` values into the argument list right after the
/// subcommand name, so explicit flags (which come later) override them.
fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--" {
            break;
        }
        if a == "--config" {
            if i + 1 >= args.len() {
                // Let clap report the missing value.
                return Ok(args);
            }
            path = Some(PathBuf::from(args.remove(i + 1)));
            args.remove(i);
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
            args.remove(i);
            continue;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config(format!(
            "{}: expected a JSON object",
            path.display()
        )));
    };
    let mut injected = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => injected.push(flag),
            Value::Number(n) => {
                injected.push(flag);
                injected.push(n.to_string());
            }
            Value::String(s) => {
                injected.push(flag);
                injected.push(s);
            }
            Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|item| match item {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(CliError::Config(format!("`{key}`: unsupported list item"))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                injected.push(flag);
                injected.push(parts.join(","));
            }
            Value::Object(_) => {
                return Err(CliError::Config(format!(
                    "`{key}`: nested objects are not flags"
                )));
            }
        }
    }
    let at = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map(|p| p + 1)
        .unwrap_or(args.len());
    let tail = args.split_off(at);
    args.extend(injected.into_iter().map(OsString::from));
    args.extend(tail);
    Ok(args)
}

fn output_path(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_PREFIX_ENV) {
        Some(prefix) if path.is_relative() => {
            let mut joined = prefix;
            joined.push(path.as_os_str());
            PathBuf::from(joined)
        }
        _ => path.to_path_buf(),
    }
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => {
            let p = output_path(p);
            std::fs::write(&p, text)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

fn load(path: &Path) -> Result<TraceFile, CliError> {
    io::read_trace(path).map_err(|e| match e {
        Error::Parse { line, message } => CliError::Core(Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        }),
        other => other.into(),
    })
}

/// A trace whose samples are all equal has no fluctuation to analyze.
fn reject_constant(trace: &TraceFile) -> Result<(), CliError> {
    let s = trace.trace.samples();
    if s.len() >= 2 && s.iter().all(|&v| v == s[0]) {
        return Err(Error::ZeroVariance.into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// Run the analysis pipeline on an already-loaded trace.
pub fn analyze_trace(
    file: &TraceFile,
    input: &str,
    options: &AnalyzeOptions,
) -> Result<AnalysisReport, Error> {
    let raw = &file.trace;
    let normalized = normalize_trace(raw)?;
    let histogram = build_histogram(&normalized, &options.bins)?;
    let coherence = match options.max_lag {
        Some(max_lag) => {
            let curve = estimation::temporal_covariance(&normalized, max_lag)?;
            Some(estimation::coherence_time(&curve, options.threshold)?)
        }
        None => None,
    };
    let stats = ChannelStats::new(raw, &normalized, coherence)?;
    let fits = uwoc_fading::fitting::fit_report(&histogram, &options.families, &options.fit);
    let seeds = file
        .header("seed")
        .and_then(|s| s.parse::<u64>().ok())
        .into_iter()
        .collect();
    let trace_headers = file
        .headers
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    Ok(AnalysisReport {
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: "analyze".to_string(),
            input: input.to_string(),
            options: options.clone(),
            seeds,
            trace_headers,
        },
        stats,
        histogram,
        fits,
    })
}

fn cmd_analyze(
    a: &AnalyzeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let fit = a.fit.options();
    fit.validate()?;
    let file = load(&a.input)?;
    reject_constant(&file)?;
    let trace = &file.trace;
    let max_lag = if a.no_covariance {
        None
    } else if let Some(lag) = a.max_lag {
        Some(lag)
    } else if trace.len() >= MIN_COVARIANCE_SAMPLES {
        // Keep at least half the record available at every lag.
        let half = 0.5 * trace.duration();
        Some(DEFAULT_MAX_LAG.min(half))
    } else {
        let _ = writeln!(
            stderr,
            "note: {} samples are too few for a covariance estimate; skipping",
            trace.len()
        );
        None
    };
    let options = AnalyzeOptions {
        bins: a.fit.bins.clone(),
        families: if a.families.is_empty() {
            Family::ALL.to_vec()
        } else {
            a.families.clone()
        },
        fit,
        max_lag,
        threshold: a.threshold,
    };
    let report = analyze_trace(&file, &a.input.display().to_string(), &options)?;
    if let Some(table) = &a.table {
        emit(
            &uwoc_fading::fitting::report_csv(&report.fits),
            Some(table),
            stdout,
        )?;
    }
    emit(&to_canonical_json(&report), a.out.as_deref(), stdout)
}

fn cmd_fit(a: &FitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let options = a.fit.options();
    options.validate()?;
    let file = load(&a.input)?;
    reject_constant(&file)?;
    let normalized = normalize_trace(&file.trace)?;
    let histogram = build_histogram(&normalized, &a.fit.bins)?;
    let result: FitResult = uwoc_fading::fitting::fit(&histogram, a.family, &options)?;
    emit(&to_canonical_json(&result), a.out.as_deref(), stdout)
}

fn cmd_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let marginal = a.model.params()?;
    let spec = FadingProcessSpec {
        marginal,
        coherence_time: a.tau,
        sample_rate: a.rate,
        n_samples: a.n,
    };
    spec.validate()?;
    let trace = generate_fading(&spec, a.seed)?;
    let params_json = serde_json::to_string(&marginal).expect("parameters serialize to JSON");
    let headers = vec![
        ("seed".to_string(), a.seed.to_string()),
        ("family".to_string(), marginal.family().to_string()),
        ("coherence_time".to_string(), format_float(a.tau)),
        ("params".to_string(), params_json),
    ];
    emit(
        &io::format_trace(&trace, &headers),
        a.out.as_deref(),
        stdout,
    )
}

fn cmd_pdf(a: &PdfArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = a.model.params()?;
    let GridRange { lo, hi, steps } = a.range;
    let mut out = String::from("h,density\n");
    let last = (steps - 1) as f64;
    for i in 0..steps {
        // Pin the last point to `hi` exactly.
        let h = if i + 1 == steps {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / last)
        };
        let d = distributions::pdf(&params, h)?;
        out.push_str(&format_float(h));
        out.push(',');
        out.push_str(&format_float(d));
        out.push('\n');
    }
    emit(&out, a.out.as_deref(), stdout)
}

fn cmd_covariance(a: &CovarianceArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load(&a.input)?;
    reject_constant(&file)?;
    let normalized = normalize_trace(&file.trace)?;
    let curve = estimation::temporal_covariance(&normalized, a.max_lag)?;
    let coherence = estimation::coherence_time(&curve, a.threshold)?;
    let mut out = io::format_covariance(&curve);
    out.push_str(&format!(
        "# coherence_time={} threshold={} saturated={}\n",
        format_float(coherence.seconds),
        format_float(coherence.threshold),
        coherence.saturated
    ));
    emit(&out, a.out.as_deref(), stdout)
}

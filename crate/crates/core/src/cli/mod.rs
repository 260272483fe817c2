//! Command-line experiment runner.
//!
//! Every command reads its parameters from flags, then overlays the keys of
//! an optional JSON config file, and writes one report (CSV or JSON) that
//! echoes the version and the resolved config.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::bounds;
use crate::error::Error;
use crate::estimators::{
    delta_star, prior_averaged_rmse_fc, worst_case_over_family, EstimatorSpec,
};
use crate::geometry::{ball_volume_ratio, packing_on_ball};
use crate::instances::{fad_family, WeightOracle};
use crate::spectral::{spectral_report, ConductanceMode, DiscreteChain};

pub const VERSION: &str = env!("METROBALL_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "metroball", version = VERSION, about = "Estimators for integrals against unnormalized densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Base seed for all random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Replications per instance.
    #[arg(long)]
    reps: Option<usize>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file whose keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simple Monte Carlo on the ratio-bounded hard family against its error bounds.
    BenchFc {
        #[command(flatten)]
        common: Common,
        /// Ratio bounds C (comma separated).
        #[arg(long = "C", value_delimiter = ',')]
        c: Vec<f64>,
        /// Sample sizes, strictly increasing (comma separated).
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<usize>,
        /// Prior draws per (C, n) point.
        #[arg(long)]
        prior_draws: Option<usize>,
    },
    /// Worst-case error of simple Monte Carlo and Metropolis on the log-concave hard family.
    BenchGap {
        #[command(flatten)]
        common: Common,
        /// Dimension of the ball.
        #[arg(long)]
        d: Option<usize>,
        /// Log-Lipschitz constant of the density.
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of packed balls.
        #[arg(long)]
        m: Option<usize>,
        /// Chain length and sample count.
        #[arg(long = "n")]
        n: Option<usize>,
        /// Step size (defaults to the conductance-optimal step).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Spectral gap and conductance of discretized one-dimensional Metropolis chains.
    Spectral {
        #[command(flatten)]
        common: Common,
        /// Tilt parameters (comma separated).
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// Step sizes (comma separated).
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        /// Number of cells (comma separated).
        #[arg(long, value_delimiter = ',')]
        states: Vec<usize>,
        /// Conductance computation.
        #[arg(long, value_enum)]
        mode: Option<ConductanceModeArg>,
    },
    /// Evaluate closed-form bounds by name.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Bound names (comma separated), or `all`.
        #[arg(long, value_delimiter = ',')]
        name: Vec<String>,
        /// Parameter assignment `key=value` (repeatable).
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConductanceModeArg {
    Exhaustive,
    Contiguous,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("bad value for `{k}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchFcConfig {
    pub seed: u64,
    pub reps: usize,
    pub prior_draws: usize,
    #[serde(rename = "C")]
    pub c: Vec<f64>,
    pub n: Vec<usize>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchGapConfig {
    pub seed: u64,
    pub reps: usize,
    pub d: usize,
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
    pub delta: Option<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub seed: Option<u64>,
    pub alpha: Vec<f64>,
    pub delta: Vec<f64>,
    pub states: Vec<usize>,
    pub mode: ConductanceMode,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    pub name: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io(_) => EXIT_USAGE,
            Self::Lib(Error::PropertyViolation(_)) => EXIT_PROPERTY,
            Self::Lib(Error::PackingFailure { .. } | Error::SizeLimit { .. }) => EXIT_INFEASIBLE,
            Self::Lib(_) => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Lib(e) => write!(f, "{e}"),
            Self::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

/// Builds a config from the non-empty flag values, then overlays the JSON file.
fn resolve<T: DeserializeOwned>(mut flags: Map<String, Value>, config: Option<&PathBuf>) -> Result<T, CliError> {
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))?;
        let Value::Object(file) = value else {
            return Err(CliError::Usage("config must be a JSON object".into()));
        };
        flags.extend(file);
    }
    serde_json::from_value(Value::Object(flags)).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
}

fn put<T: Serialize>(map: &mut Map<String, Value>, key: &str, value: T) {
    map.insert(key.into(), serde_json::to_value(value).expect("plain config value"));
}

fn common_flags(common: &Common, default_reps: usize, default_format: Format) -> Map<String, Value> {
    let mut m = Map::new();
    if let Some(s) = common.seed {
        put(&mut m, "seed", s);
    }
    put(&mut m, "reps", common.reps.unwrap_or(default_reps));
    put(&mut m, "format", common.format.unwrap_or(default_format));
    put(&mut m, "out", &common.out);
    m
}

fn list_or<T: Serialize + Clone>(values: &[T], default: &[T]) -> Vec<T> {
    if values.is_empty() {
        default.to_vec()
    } else {
        values.to_vec()
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize, R: Serialize, S: Serialize> {
    version: &'a str,
    command: &'a str,
    config: &'a C,
    rows: &'a [R],
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a S>,
}

fn render<C: Serialize, R: Serialize, S: Serialize>(
    command: &str,
    config: &C,
    format: Format,
    rows: &[R],
    summary: Option<&S>,
) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => {
            let report = Report {
                version: VERSION,
                command,
                config,
                rows,
                summary,
            };
            let mut out = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Usage(e.to_string()))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# metroball {VERSION}")?;
            writeln!(out, "# command {command}")?;
            let echo = serde_json::to_string(config).map_err(|e| CliError::Usage(e.to_string()))?;
            writeln!(out, "# config {echo}")?;
            {
                let mut w = csv::Writer::from_writer(&mut out);
                for row in rows {
                    w.serialize(row).map_err(|e| CliError::Usage(e.to_string()))?;
                }
                w.flush()?;
            }
            if let Some(s) = summary {
                let echo = serde_json::to_string(s).map_err(|e| CliError::Usage(e.to_string()))?;
                writeln!(out, "# summary {echo}")?;
            }
            Ok(out)
        }
    }
}

fn emit(bytes: &[u8], out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn check_increasing(n: &[usize]) -> Result<(), CliError> {
    if n.is_empty() || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("n schedule must be non-empty and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchFcRow {
    #[serde(rename = "C")]
    pub c: f64,
    pub n: usize,
    pub empirical_rmse: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub inside_sandwich: bool,
}

pub fn bench_fc_rows(cfg: &BenchFcConfig) -> crate::Result<Vec<BenchFcRow>> {
    let mut rows = Vec::new();
    for &c in &cfg.c {
        for &n in &cfg.n {
            let rep = prior_averaged_rmse_fc(&EstimatorSpec::Simple, n, c, cfg.prior_draws, cfg.reps, cfg.seed)?;
            let lower = bounds::lower_bound_fc(n, c);
            let upper = bounds::upper_bound_simple(n, c);
            rows.push(BenchFcRow {
                c,
                n,
                empirical_rmse: rep.rmse,
                lower_bound: lower,
                upper_bound: upper,
                inside_sandwich: lower <= rep.rmse && rep.rmse <= upper,
            });
        }
    }
    Ok(rows)
}

fn cmd_bench_fc(cfg: BenchFcConfig) -> Result<(Vec<u8>, bool), CliError> {
    check_increasing(&cfg.n)?;
    if cfg.c.is_empty() || cfg.c.iter().any(|c| !(*c >= 1.0) || !c.is_finite()) {
        return Err(CliError::Usage("C values must be finite and at least 1".into()));
    }
    if cfg.reps < 1 || cfg.prior_draws < 1 {
        return Err(CliError::Usage("reps and prior_draws must be positive".into()));
    }
    let rows = bench_fc_rows(&cfg)?;
    let ok = rows.iter().all(|r| r.inside_sandwich);
    let bytes = render::<_, _, ()>("bench-fc", &cfg, cfg.format, &rows, None)?;
    Ok((bytes, ok))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchGapRow {
    pub estimator: String,
    pub index: usize,
    pub sign: i8,
    pub n: usize,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchGapSummary {
    pub delta: f64,
    pub worst_simple: f64,
    pub worst_metropolis: f64,
    /// `worst_simple / worst_metropolis`.
    pub ratio: f64,
    pub lower_bound_nonadaptive: f64,
    pub lower_bound_nonadaptive_valid: bool,
}

pub fn bench_gap_rows(cfg: &BenchGapConfig) -> crate::Result<(Vec<BenchGapRow>, BenchGapSummary)> {
    let packing = packing_on_ball(cfg.m, cfg.d)?;
    let family = fad_family(cfg.alpha, &packing)?;
    let delta = cfg.delta.unwrap_or_else(|| delta_star(cfg.d, cfg.alpha));
    let mut rows = Vec::new();
    let mut worst = Vec::new();
    for (label, spec) in [
        ("simple", EstimatorSpec::Simple),
        ("metropolis", EstimatorSpec::Metropolis { delta }),
    ] {
        let wc = worst_case_over_family(&family, &spec, cfg.n, cfg.reps, cfg.seed)?;
        for (k, rep) in wc.reports.iter().enumerate() {
            rows.push(BenchGapRow {
                estimator: label.into(),
                index: k / 2,
                sign: if k % 2 == 0 { 1 } else { -1 },
                n: cfg.n,
                rmse: rep.rmse,
            });
        }
        worst.push(wc.rmse);
    }
    let vr = ball_volume_ratio(cfg.d)?;
    Ok((
        rows,
        BenchGapSummary {
            delta,
            worst_simple: worst[0],
            worst_metropolis: worst[1],
            ratio: worst[0] / worst[1],
            lower_bound_nonadaptive: bounds::lower_bound_nonadaptive(cfg.n, cfg.d, cfg.alpha, vr),
            lower_bound_nonadaptive_valid: bounds::nonadaptive_valid(cfg.n, cfg.d, cfg.alpha, vr),
        },
    ))
}

fn cmd_bench_gap(cfg: BenchGapConfig) -> Result<Vec<u8>, CliError> {
    if cfg.reps < 2 || cfg.n < 1 || cfg.d < 1 || cfg.m < 1 {
        return Err(CliError::Usage("need reps >= 2 and positive n, d, m".into()));
    }
    if cfg.delta.is_some_and(|d| !(d > 0.0)) {
        return Err(CliError::Usage("delta must be positive".into()));
    }
    let (rows, summary) = bench_gap_rows(&cfg)?;
    render("bench-gap", &cfg, cfg.format, &rows, Some(&summary))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub alpha: f64,
    pub delta: f64,
    pub states: usize,
    pub beta: f64,
    pub lambda: f64,
    pub conductance: f64,
    pub conductance_mode: ConductanceMode,
    pub cheeger_ok: bool,
    pub detailed_balance_defect: f64,
    /// Smallest escape probability of the constant-density chain.
    pub escape_floor: f64,
    /// Continuous-chain conductance bound with the discrete escape floor;
    /// a heuristic reference, not a guarantee for the discrete chain.
    pub reference_conductance: f64,
    pub reference_holds: bool,
}

pub fn spectral_rows(cfg: &SpectralConfig) -> crate::Result<Vec<SpectralRow>> {
    let mut rows = Vec::new();
    for &alpha in &cfg.alpha {
        for &delta in &cfg.delta {
            for &states in &cfg.states {
                let chain = DiscreteChain::discretize_1d(&WeightOracle::exp_tilt(alpha), delta, states)?;
                let flat = DiscreteChain::discretize_1d(&WeightOracle::constant(1.0), delta, states)?;
                let report = spectral_report(&chain, cfg.mode)?;
                let floor = flat.min_escape();
                let reference = bounds::conductance_lb_metropolis(floor, delta, 2.0, 1, alpha);
                rows.push(SpectralRow {
                    alpha,
                    delta,
                    states,
                    beta: report.beta,
                    lambda: report.lambda,
                    conductance: report.conductance,
                    conductance_mode: report.conductance_mode,
                    cheeger_ok: report.cheeger_ok,
                    detailed_balance_defect: chain.detailed_balance_defect(),
                    escape_floor: floor,
                    reference_conductance: reference,
                    reference_holds: report.conductance >= reference,
                });
            }
        }
    }
    Ok(rows)
}

fn cmd_spectral(cfg: SpectralConfig) -> Result<(Vec<u8>, bool), CliError> {
    if cfg.alpha.iter().any(|a| !(*a >= 0.0)) {
        return Err(CliError::Usage("alpha must be non-negative".into()));
    }
    let rows = spectral_rows(&cfg)?;
    let ok = rows.iter().all(|r| r.cheeger_ok && r.detailed_balance_defect <= 1e-12);
    let bytes = render::<_, _, ()>("spectral", &cfg, cfg.format, &rows, None)?;
    Ok((bytes, ok))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub name: String,
    pub value: f64,
    pub regime: String,
    /// Inputs as a JSON object.
    pub inputs: String,
}

fn cmd_bounds(cfg: BoundsConfig) -> Result<Vec<u8>, CliError> {
    let names: Vec<String> = if cfg.name.is_empty() || cfg.name.iter().any(|n| n == "all") {
        bounds::BOUND_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.name.clone()
    };
    let mut rows = Vec::new();
    for name in &names {
        let set = bounds::evaluate(name, &cfg.params)?;
        rows.push(BoundRow {
            name: set.name,
            value: set.value,
            regime: set.regime,
            inputs: serde_json::to_string(&set.inputs).expect("map of reals"),
        });
    }
    render::<_, _, ()>("bounds", &cfg, cfg.format, &rows, None)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::BenchFc {
            common,
            c,
            n,
            prior_draws,
        } => {
            let mut m = common_flags(&common, 50, Format::Csv);
            put(&mut m, "prior_draws", prior_draws.unwrap_or(200));
            put(&mut m, "C", list_or(&c, &[8.0]));
            put(&mut m, "n", list_or(&n, &[1024]));
            let cfg: BenchFcConfig = resolve(m, common.config.as_ref())?;
            let out = cfg.out.clone();
            let (bytes, ok) = cmd_bench_fc(cfg)?;
            emit(&bytes, &out)?;
            if !ok {
                eprintln!("metroball: empirical error outside the bound sandwich");
                return Ok(EXIT_PROPERTY);
            }
        }
        Command::BenchGap {
            common,
            d,
            alpha,
            m: balls,
            n,
            delta,
        } => {
            let mut m = common_flags(&common, 400, Format::Csv);
            put(&mut m, "d", d.unwrap_or(2));
            put(&mut m, "alpha", alpha.unwrap_or(6.0));
            put(&mut m, "m", balls.unwrap_or(8));
            put(&mut m, "n", n.unwrap_or(256));
            put(&mut m, "delta", delta);
            let cfg: BenchGapConfig = resolve(m, common.config.as_ref())?;
            let out = cfg.out.clone();
            emit(&cmd_bench_gap(cfg)?, &out)?;
        }
        Command::Spectral {
            common,
            alpha,
            delta,
            states,
            mode,
        } => {
            let mut m = common_flags(&common, 0, Format::Json);
            m.remove("reps");
            put(&mut m, "alpha", list_or(&alpha, &[0.0, 1.0, 2.0, 4.0]));
            put(&mut m, "delta", list_or(&delta, &[0.25, 0.5]));
            put(&mut m, "states", list_or(&states, &[8, 12, 16]));
            let mode = match mode {
                Some(ConductanceModeArg::Contiguous) => ConductanceMode::Contiguous,
                _ => ConductanceMode::Exhaustive,
            };
            put(&mut m, "mode", mode);
            let cfg: SpectralConfig = resolve(m, common.config.as_ref())?;
            let out = cfg.out.clone();
            let (bytes, ok) = cmd_spectral(cfg)?;
            emit(&bytes, &out)?;
            if !ok {
                eprintln!("metroball: Cheeger or detailed-balance check failed");
                return Ok(EXIT_PROPERTY);
            }
        }
        Command::Bounds { common, name, params } => {
            let mut m = common_flags(&common, 0, Format::Csv);
            m.remove("reps");
            m.remove("seed");
            put(&mut m, "name", name);
            put(&mut m, "params", params.into_iter().collect::<BTreeMap<_, _>>());
            let cfg: BoundsConfig = resolve(m, common.config.as_ref())?;
            let out = cfg.out.clone();
            emit(&cmd_bounds(cfg)?, &out)?;
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("metroball: {e}");
            e.exit_code()
        }
    }
}

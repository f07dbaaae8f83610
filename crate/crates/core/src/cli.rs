//! Command implementations behind the `spectral-pivot` binary.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 invalid
//! arguments or configuration, 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::limit::CauchyMixture;
use crate::simulation::{
    run_experiment, verify_experiment, CovarianceModel, Experiment, MonteCarloReport,
    SamplingScheme, Spectrum, Thresholds, TrialConfig,
};

pub const WORKERS_ENV: &str = "SPECTRAL_PIVOT_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Model section of a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub dim: Option<usize>,
    pub spikes: Option<Vec<f64>>,
    pub sigma2: Option<f64>,
    pub top: Option<f64>,
    pub ratio: Option<f64>,
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub target_index: usize,
    #[serde(default)]
    pub rotate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Spiked,
    Geometric,
    Explicit,
}

/// JSON run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_oracle_reps")]
    pub oracle_reps: usize,
    pub workers: Option<usize>,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub output_path: Option<PathBuf>,
    #[serde(default)]
    pub sampling: SamplingScheme,
}

fn default_oracle_reps() -> usize {
    crate::simulation::DEFAULT_ORACLE_REPS
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl ModelConfig {
    pub fn to_model(&self, master_seed: u64) -> Result<CovarianceModel, CliError> {
        fn need<T: Clone>(v: &Option<T>, name: &str, kind: &str) -> Result<T, CliError> {
            v.clone()
                .ok_or_else(|| CliError::Config(format!("model kind {kind} requires `{name}`")))
        }
        let unused = |names: &[(&str, bool)], kind: &str| -> Result<(), CliError> {
            match names.iter().find(|(_, set)| *set) {
                Some((name, _)) => Err(CliError::Config(format!(
                    "`{name}` does not apply to model kind {kind}"
                ))),
                None => Ok(()),
            }
        };
        let (dim, spectrum) = match self.kind {
            ModelKind::Spiked => {
                unused(
                    &[
                        ("top", self.top.is_some()),
                        ("ratio", self.ratio.is_some()),
                        ("eigenvalues", self.eigenvalues.is_some()),
                    ],
                    "spiked",
                )?;
                (
                    need(&self.dim, "dim", "spiked")?,
                    Spectrum::Spiked {
                        spikes: need(&self.spikes, "spikes", "spiked")?,
                        sigma2: need(&self.sigma2, "sigma2", "spiked")?,
                    },
                )
            }
            ModelKind::Geometric => {
                unused(
                    &[
                        ("spikes", self.spikes.is_some()),
                        ("sigma2", self.sigma2.is_some()),
                        ("eigenvalues", self.eigenvalues.is_some()),
                    ],
                    "geometric",
                )?;
                (
                    need(&self.dim, "dim", "geometric")?,
                    Spectrum::Geometric {
                        top: need(&self.top, "top", "geometric")?,
                        ratio: need(&self.ratio, "ratio", "geometric")?,
                    },
                )
            }
            ModelKind::Explicit => {
                unused(
                    &[
                        ("spikes", self.spikes.is_some()),
                        ("sigma2", self.sigma2.is_some()),
                        ("top", self.top.is_some()),
                        ("ratio", self.ratio.is_some()),
                    ],
                    "explicit",
                )?;
                let eigenvalues = need(&self.eigenvalues, "eigenvalues", "explicit")?;
                (
                    self.dim.unwrap_or(eigenvalues.len()),
                    Spectrum::Explicit { eigenvalues },
                )
            }
        };
        Ok(CovarianceModel {
            dim,
            spectrum,
            target_index: self.target_index,
            rotation: self.rotate.then_some(master_seed),
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(config_err)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_json(&text)
    }

    /// Trial configuration with the worker override applied.
    pub fn trial_config(&self, workers_override: Option<usize>) -> Result<TrialConfig, CliError> {
        let cfg = TrialConfig {
            model: self.model.to_model(self.master_seed)?,
            n: self.n,
            trials: self.trials,
            master_seed: self.master_seed,
            oracle_reps: self.oracle_reps,
            workers: workers_override.or(self.workers),
            sampling: self.sampling,
        };
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }
}

/// Parses `SPECTRAL_PIVOT_WORKERS`, if set.
pub fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(Some(w)),
            _ => Err(CliError::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

/// Formats like C's `%.17g`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spectral-pivot",
    version,
    about = "Cauchy-mixture pivots for spectral projectors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Query the Cauchy mixture Y(alpha, beta).
    Dist {
        #[command(subcommand)]
        query: DistQuery,
    },
    /// Run a configured experiment and write the report and per-trial CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Report path; overrides `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configured experiment; exit 0 iff every check passes.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Law {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Sampler {
    Direct,
    Ratio,
}

#[derive(Debug, Subcommand)]
pub enum DistQuery {
    Pdf {
        #[command(flatten)]
        law: Law,
        #[arg(long, required = true, num_args = 1.., allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    Cdf {
        #[command(flatten)]
        law: Law,
        #[arg(long, required = true, num_args = 1.., allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    Quantile {
        #[command(flatten)]
        law: Law,
        #[arg(long, required = true, num_args = 1.., allow_hyphen_values = true)]
        p: Vec<f64>,
    },
    Sample {
        #[command(flatten)]
        law: Law,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Sampler::Direct)]
        sampler: Sampler,
    },
}

fn law(l: &Law) -> Result<CauchyMixture, CliError> {
    CauchyMixture::new(l.alpha, l.beta).map_err(config_err)
}

/// Values printed by `dist`, one per line.
pub fn dist_values(query: &DistQuery) -> Result<Vec<f64>, CliError> {
    match query {
        DistQuery::Pdf { law: l, x } => {
            let d = law(l)?;
            Ok(x.iter().map(|&x| d.pdf(x)).collect())
        }
        DistQuery::Cdf { law: l, x } => {
            let d = law(l)?;
            Ok(x.iter().map(|&x| d.cdf(x)).collect())
        }
        DistQuery::Quantile { law: l, p } => {
            let d = law(l)?;
            p.iter()
                .map(|&p| d.quantile(p).map_err(config_err))
                .collect()
        }
        DistQuery::Sample {
            law: l,
            count,
            seed,
            sampler,
        } => {
            let d = law(l)?;
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..*count)
                .map(|_| match sampler {
                    Sampler::Direct => d.sample_direct(&mut rng),
                    Sampler::Ratio => d.sample_ratio(&mut rng),
                })
                .collect())
        }
    }
}

/// One CSV row per trial.
#[derive(Debug, Serialize)]
struct TrialRow {
    trial: usize,
    b_hat: f64,
    b_tilde: f64,
    denom: f64,
    proj_error_sq: Option<f64>,
    pivot_bias: Option<f64>,
    pivot_proj: Option<f64>,
    normalized_proj_stat: f64,
    bias_z: f64,
    op_norm_error: f64,
    degenerate: bool,
}

pub fn write_trials_csv(path: &Path, exp: &Experiment) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for o in &exp.outcomes {
        w.serialize(TrialRow {
            trial: o.trial,
            b_hat: o.pivots.b_hat,
            b_tilde: o.pivots.b_tilde,
            denom: o.pivots.denom,
            proj_error_sq: o.pivots.proj_error_sq,
            pivot_bias: o.pivots.pivot_bias,
            pivot_proj: o.pivots.pivot_proj,
            normalized_proj_stat: o.normalized_proj_stat,
            bias_z: o.bias_z,
            op_norm_error: o.op_norm_error,
            degenerate: o.degenerate,
        })
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn report_json(report: &MonteCarloReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Loads a config, runs it and returns the report with the experiment.
pub fn run_config(path: &Path) -> Result<(RunConfig, MonteCarloReport, Experiment), CliError> {
    let rc = RunConfig::load(path)?;
    let cfg = rc.trial_config(workers_from_env()?)?;
    let exp = run_experiment(&cfg).map_err(config_err)?;
    let report = verify_experiment(&cfg, &rc.thresholds, &exp).map_err(config_err)?;
    Ok((rc, report, exp))
}

fn emit_report(
    report: &MonteCarloReport,
    target: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let json = report_json(report);
    match target {
        Some(p) => fs::write(p, json).map_err(|e| io_err(p, e)),
        None => out
            .write_all(json.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn simulate(config: &Path, out_path: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let (rc, report, exp) = run_config(config)?;
    let target = out_path.map(Path::to_path_buf).or(rc.output_path);
    emit_report(&report, target.as_deref(), out)?;
    if let Some(p) = &target {
        write_trials_csv(&p.with_extension("csv"), &exp)?;
    }
    Ok(EXIT_OK)
}

fn verify_cmd(
    config: &Path,
    out_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let (rc, report, _) = run_config(config)?;
    let target = out_path.map(Path::to_path_buf).or(rc.output_path);
    emit_report(&report, target.as_deref(), out)?;
    Ok(if report.pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            return if code == 0 { EXIT_OK } else { EXIT_CONFIG };
        }
    };
    let result = match &cli.command {
        Command::Dist { query } => dist_values(query).and_then(|vals| {
            for v in vals {
                writeln!(out, "{}", format_g17(v)).map_err(|e| CliError::Io(e.to_string()))?;
            }
            Ok(EXIT_OK)
        }),
        Command::Simulate { config, out: path } => simulate(config, path.as_deref(), out),
        Command::Verify { config, out: path } => verify_cmd(config, path.as_deref(), out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "spectral-pivot: {e}");
            e.exit_code()
        }
    }
}

//! `countfix` command line: `countfix run [flags]` and `countfix simulate [flags]`.
//!
//! Flags may also be given in a TOML file passed with `--config`; flags on
//! the command line win. Exit codes: 0 on success, 2 for usage or validation
//! errors, 3 for I/O errors.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::detector::{build_matrix, ConditionalMatrix, DetectorParams, DEFAULT_TAIL_EPSILON};
use crate::inference::{optimisation_map, posterior, OptimisationReport, PosteriorMatrix};
use crate::montecarlo::{empirical_matrix, simulate_joint, total_variation, ShotConfig};
use crate::priors::{custom_prior, pdc_prior, uniform_prior, NumberPrior};
use crate::render;

pub const DEFAULT_N_MAX: usize = 19;
pub const DEFAULT_SHOTS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "error: {msg}"),
            CliError::Io(msg) => write!(f, "I/O error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Debug, Parser)]
#[command(
    name = "countfix",
    version,
    about = "Bayesian reinterpretation of photon-number-resolving detector signatures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build P(m|n), invert it against a prior and emit maps and fidelities.
    Run(RunArgs),
    /// Monte Carlo simulation of detector shots, compared with the analytic model.
    Simulate(RunArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// TOML file with default values for any of the flags below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Per-photon loss probability in [0, 1].
    #[arg(long = "p-loss", allow_negative_numbers = true)]
    pub p_loss: Option<f64>,
    /// Mean number of dark counts per shot.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Probability mass allowed above the truncated range of m.
    #[arg(long = "tail-eps", allow_negative_numbers = true)]
    pub tail_eps: Option<f64>,
    /// Largest incident photon number represented.
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    /// pdc:<chi> | uniform:<lo>:<hi> | custom:<path to JSON array>
    #[arg(long)]
    pub prior: Option<String>,
    /// Comma-separated artifacts: pmn,pn,pnm,optmap,fidelity,simulate
    #[arg(long)]
    pub emit: Option<String>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte Carlo seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo shots per simulated column.
    #[arg(long)]
    pub shots: Option<u64>,
}

impl RunArgs {
    /// Fill every unset field from `base`.
    fn or(self, base: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config.or(base.config),
            p_loss: self.p_loss.or(base.p_loss),
            lambda: self.lambda.or(base.lambda),
            tail_eps: self.tail_eps.or(base.tail_eps),
            n_max: self.n_max.or(base.n_max),
            prior: self.prior.or(base.prior),
            emit: self.emit.or(base.emit),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            shots: self.shots.or(base.shots),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    Pdc(f64),
    Uniform(usize, usize),
    Custom(PathBuf),
}

impl FromStr for PriorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "pdc" => rest
                .parse::<f64>()
                .map(PriorSpec::Pdc)
                .map_err(|_| format!("expected pdc:<chi>, got {s:?}")),
            "uniform" => {
                let parsed = rest
                    .split_once(':')
                    .and_then(|(lo, hi)| Some((lo.parse().ok()?, hi.parse().ok()?)));
                parsed
                    .map(|(lo, hi)| PriorSpec::Uniform(lo, hi))
                    .ok_or_else(|| format!("expected uniform:<lo>:<hi>, got {s:?}"))
            }
            "custom" if !rest.is_empty() => Ok(PriorSpec::Custom(PathBuf::from(rest))),
            _ => Err(format!(
                "expected pdc:<chi>, uniform:<lo>:<hi> or custom:<path>, got {s:?}"
            )),
        }
    }
}

impl fmt::Display for PriorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorSpec::Pdc(chi) => write!(f, "pdc:{chi}"),
            PriorSpec::Uniform(lo, hi) => write!(f, "uniform:{lo}:{hi}"),
            PriorSpec::Custom(p) => write!(f, "custom:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Artifact {
    Pmn,
    Pn,
    Pnm,
    Optmap,
    Fidelity,
    Simulate,
}

impl Artifact {
    fn needs_prior(self) -> bool {
        matches!(self, Artifact::Pn | Artifact::Pnm | Artifact::Optmap | Artifact::Fidelity)
    }
}

impl FromStr for Artifact {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "pmn" => Artifact::Pmn,
            "pn" => Artifact::Pn,
            "pnm" => Artifact::Pnm,
            "optmap" => Artifact::Optmap,
            "fidelity" => Artifact::Fidelity,
            "simulate" => Artifact::Simulate,
            other => return Err(format!("unknown artifact {other:?}")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub detector: DetectorParams,
    pub prior_spec: Option<PriorSpec>,
    pub n_max: usize,
    pub outputs: BTreeSet<Artifact>,
    pub seed: u64,
    pub shots: u64,
    pub out_dir: PathBuf,
    pub format: Format,
}

const RUN_DEFAULT_EMIT: &str = "pmn,pn,pnm,optmap,fidelity";

fn load_config_file(path: &Path) -> Result<RunArgs, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
}

fn flag_check<T>(flag: &str, r: crate::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Usage(format!("invalid value for {flag}: {e}")))
}

/// Merge flags with an optional config file, apply defaults and validate.
pub fn resolve(args: RunArgs, simulate: bool) -> Result<RunConfig, CliError> {
    let args = match &args.config {
        Some(path) => {
            let file = load_config_file(path)?;
            args.or(file)
        }
        None => args,
    };

    let p_loss = args.p_loss.unwrap_or(0.0);
    let lambda = args.lambda.unwrap_or(0.0);
    let tail_eps = args.tail_eps.unwrap_or(DEFAULT_TAIL_EPSILON);
    flag_check("--p-loss", DetectorParams::new(p_loss, 0.0))?;
    flag_check("--lambda", DetectorParams::new(0.0, lambda))?;
    flag_check("--tail-eps", DetectorParams::with_tail_epsilon(0.0, 0.0, tail_eps))?;
    let detector = flag_check("--p-loss", DetectorParams::with_tail_epsilon(p_loss, lambda, tail_eps))?;

    let prior_spec = args
        .prior
        .as_deref()
        .map(|s| s.parse::<PriorSpec>())
        .transpose()
        .map_err(|e| CliError::Usage(format!("invalid value for --prior: {e}")))?;

    let emit = match (&args.emit, simulate) {
        (Some(e), _) => e.clone(),
        (None, true) => "simulate".to_string(),
        (None, false) => RUN_DEFAULT_EMIT.to_string(),
    };
    let mut outputs = BTreeSet::new();
    for item in emit.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        outputs.insert(
            item.parse::<Artifact>()
                .map_err(|e| CliError::Usage(format!("invalid value for --emit: {e}")))?,
        );
    }
    if simulate {
        outputs.insert(Artifact::Simulate);
    }
    if outputs.is_empty() {
        return usage("--emit must select at least one artifact");
    }
    if prior_spec.is_none() {
        if let Some(a) = outputs.iter().find(|a| a.needs_prior()) {
            return usage(format!(
                "--prior is required to emit {}",
                serde_json::to_value(a).unwrap().as_str().unwrap()
            ));
        }
    }

    let format = match args.format.as_deref().unwrap_or("csv") {
        "csv" => Format::Csv,
        "json" => Format::Json,
        other => return usage(format!("invalid value for --format: {other:?} (expected csv or json)")),
    };

    let shots = args.shots.unwrap_or(DEFAULT_SHOTS);
    if shots == 0 {
        return usage("invalid value for --shots: must be >= 1");
    }

    let config = RunConfig {
        detector,
        prior_spec,
        n_max: args.n_max.unwrap_or(DEFAULT_N_MAX),
        outputs,
        seed: args.seed.unwrap_or(DEFAULT_SEED),
        shots,
        out_dir: args.out.unwrap_or_else(|| PathBuf::from(".")),
        format,
    };
    if let Some(PriorSpec::Pdc(chi)) = config.prior_spec {
        flag_check("--prior", pdc_prior(chi, Some(0)))?;
    }
    if let Some(PriorSpec::Uniform(lo, hi)) = config.prior_spec {
        flag_check("--prior", uniform_prior(lo, hi))?;
    }
    Ok(config)
}

/// Parse an argument vector (including the program name).
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    match cli.command {
        Command::Run(args) => resolve(args, false),
        Command::Simulate(args) => resolve(args, true),
    }
}

fn load_prior(spec: &PriorSpec, n_max: usize) -> Result<NumberPrior, CliError> {
    let prior = match spec {
        PriorSpec::Pdc(chi) => pdc_prior(*chi, Some(n_max)),
        PriorSpec::Uniform(lo, hi) => uniform_prior(*lo, *hi),
        PriorSpec::Custom(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("invalid value for --prior: {}: {e}", path.display()))
            })?;
            let weights: Vec<f64> = serde_json::from_str(&text).map_err(|e| {
                CliError::Usage(format!(
                    "invalid value for --prior: {} is not a JSON array of numbers: {e}",
                    path.display()
                ))
            })?;
            custom_prior(&weights)
        }
    };
    flag_check("--prior", prior)
}

/// Everything computed for one invocation.
pub struct Pipeline {
    pub matrix: ConditionalMatrix,
    pub prior: Option<NumberPrior>,
    pub posterior: Option<PosteriorMatrix>,
    pub report: Option<OptimisationReport>,
}

/// Build the matrix and, when a prior is configured, the posterior and
/// report. The matrix is widened to cover the prior's support.
pub fn compute(config: &RunConfig) -> Result<Pipeline, CliError> {
    let prior = config
        .prior_spec
        .as_ref()
        .map(|s| load_prior(s, config.n_max))
        .transpose()?;
    let n_max = prior
        .as_ref()
        .map_or(config.n_max, |p| config.n_max.max(p.support_max()));
    let matrix = build_matrix(&config.detector, n_max);
    let (posterior, report) = match &prior {
        Some(p) => {
            let post = posterior(&matrix, p).map_err(|e| CliError::Usage(e.to_string()))?;
            let report = optimisation_map(&post);
            (Some(post), Some(report))
        }
        None => (None, None),
    };
    Ok(Pipeline {
        matrix,
        prior,
        posterior,
        report,
    })
}

struct Writer<'a> {
    dir: &'a Path,
    format: Format,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, stem: &str, contents: String, what: &str) -> Result<(), CliError> {
        let path = self.dir.join(format!("{stem}.{}", self.format.ext()));
        self.write_path(path, contents, what)
    }

    fn write_path(&mut self, path: PathBuf, contents: String, what: &str) -> Result<(), CliError> {
        fs::write(&path, contents)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}: {what}", path.display());
        self.written.push(path);
        Ok(())
    }
}

fn ranges(values: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let mut j = i;
        while j + 1 < values.len() && values[j + 1] == values[j] + 1 {
            j += 1;
        }
        parts.push(if i == j {
            values[i].to_string()
        } else {
            format!("{}..={}", values[i], values[j])
        });
        i = j + 1;
    }
    parts.join(",")
}

/// Execute a resolved configuration. Returns the files written.
pub fn run(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let pipeline = compute(config)?;
    fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::Io(format!("cannot create output directory {}: {e}", config.out_dir.display()))
    })?;
    let mut w = Writer {
        dir: &config.out_dir,
        format: config.format,
        written: Vec::new(),
    };
    let json = config.format == Format::Json;
    let matrix = &pipeline.matrix;
    let shape = |r: usize, c: usize| format!("{r}x{c}");

    if config.outputs.contains(&Artifact::Pmn) {
        let text = if json { render::pmn_json(matrix) } else { render::pmn_csv(matrix) };
        let what = format!("P(m|n), {} rows m by {} columns n", matrix.m_max() + 1, matrix.n_max() + 1);
        w.write("pmn", text, &what)?;
    }
    if let (Some(prior), true) = (&pipeline.prior, config.outputs.contains(&Artifact::Pn)) {
        let text = if json { render::pn_json(prior) } else { render::pn_csv(prior) };
        w.write("pn", text, &format!("P(n) for {}", prior.label()))?;
    }
    if let (Some(post), Some(report)) = (&pipeline.posterior, &pipeline.report) {
        let wants_posterior = config.outputs.iter().any(|a| {
            matches!(a, Artifact::Pnm | Artifact::Optmap | Artifact::Fidelity)
        });
        if wants_posterior && !report.undefined.is_empty() {
            eprintln!(
                "warning: readings m={} have zero probability under this prior and detector; marked {}",
                ranges(&report.undefined),
                render::UNDEFINED
            );
        }
        if config.outputs.contains(&Artifact::Pnm) {
            let text = if json { render::pnm_json(post) } else { render::pnm_csv(post) };
            w.write("pnm", text, &format!("P(n|m), {}", shape(post.n_max() + 1, post.m_max() + 1)))?;
        }
        if config.outputs.contains(&Artifact::Optmap) {
            let text = if json { render::optmap_json(report) } else { render::optmap_csv(report) };
            let moved = report.defined_entries().filter(|(m, o, _, _)| m != o).count();
            w.write("optmap", text, &format!("m -> m_opt, {moved} readings reinterpreted"))?;
        }
        if config.outputs.contains(&Artifact::Fidelity) {
            let text = if json { render::fidelity_json(report) } else { render::fidelity_csv(report) };
            let what = format!(
                "fidelities, average raw {:.6} optimised {:.6}",
                report.avg_fidelity_raw, report.avg_fidelity_opt
            );
            w.write("fidelity", text, &what)?;
        }
    }

    let mut simulation = serde_json::Value::Null;
    if config.outputs.contains(&Artifact::Simulate) {
        simulation = simulate_artifacts(config, &pipeline, &mut w)?;
    }

    let summary = json!({
        "tool": "countfix",
        "version": env!("CARGO_PKG_VERSION"),
        "parameters": {
            "p_loss": config.detector.p_loss(),
            "lambda": config.detector.lambda(),
            "tail_epsilon": config.detector.tail_epsilon(),
            "n_max": matrix.n_max(),
            "m_max": matrix.m_max(),
            "prior": config.prior_spec.as_ref().map(ToString::to_string),
            "prior_label": pipeline.prior.as_ref().map(|p| p.label().to_string()),
            "format": config.format,
            "emit": config.outputs,
        },
        "avg_fidelity_raw": pipeline.report.as_ref().map(|r| r.avg_fidelity_raw),
        "avg_fidelity_opt": pipeline.report.as_ref().map(|r| r.avg_fidelity_opt),
        "undefined_outcomes": pipeline.report.as_ref().map(|r| r.undefined.clone()),
        "tied_outcomes": pipeline.report.as_ref().map(|r| r.ties.clone()),
        "simulation": simulation,
    });
    let text = serde_json::to_string_pretty(&summary).unwrap() + "\n";
    w.write_path(config.out_dir.join("summary.json"), text, "run summary")?;
    Ok(w.written)
}

fn simulate_artifacts(
    config: &RunConfig,
    pipeline: &Pipeline,
    w: &mut Writer<'_>,
) -> Result<serde_json::Value, CliError> {
    let json = config.format == Format::Json;
    let matrix = &pipeline.matrix;
    let shot_config = ShotConfig::new(config.detector, config.seed, config.shots)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let columns = empirical_matrix(&shot_config, matrix.n_max());
    let text = if json {
        render::empirical_pmn_json(&columns)
    } else {
        render::empirical_pmn_csv(&columns)
    };
    w.write("pmn_empirical", text, &format!("simulated P(m|n), {} shots per column", config.shots))?;

    let tv: Vec<Option<f64>> = columns
        .iter()
        .map(|c| Some(total_variation(&c.frequencies(), matrix.column(c.n))))
        .collect();
    let max_tv = tv.iter().flatten().copied().fold(0.0, f64::max);
    let text = if json {
        render::series_json("tv_distance", &tv)
    } else {
        render::series_csv("n,tv_distance", &tv)
    };
    w.write("tv", text, &format!("TV distance per column, max {max_tv:.6}"))?;

    let mut posterior_tv_max = None;
    if let (Some(prior), Some(post)) = (&pipeline.prior, &pipeline.posterior) {
        let joint = simulate_joint(&shot_config, prior);
        let text = if json {
            render::empirical_pnm_json(&joint)
        } else {
            render::empirical_pnm_csv(&joint)
        };
        w.write("pnm_empirical", text, &format!("simulated P(n|m), {} shots", config.shots))?;

        let tvs: Vec<Option<f64>> = (0..joint.counts.len())
            .map(|m| {
                if m > post.m_max() {
                    return None;
                }
                Some(total_variation(&joint.conditional(m)?, post.column(m)?))
            })
            .collect();
        posterior_tv_max = Some(tvs.iter().flatten().copied().fold(0.0, f64::max));
        let text = if json {
            render::series_json("posterior_tv_distance", &tvs)
        } else {
            render::series_csv("m,posterior_tv_distance", &tvs)
        };
        w.write("pnm_tv", text, "TV distance between simulated and analytic P(n|m)")?;
    }

    Ok(json!({
        "seed": config.seed,
        "shots": config.shots,
        "max_column_tv": max_tv,
        "max_posterior_tv": posterior_tv_max,
    }))
}

/// Entry point used by the binary. Returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let resolved = match cli.command {
        Command::Run(args) => resolve(args, false),
        Command::Simulate(args) => resolve(args, true),
    };
    match resolved.and_then(|config| run(&config)) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        parse_config(std::iter::once("countfix").chain(args.iter().copied()))
    }

    #[test]
    fn maps_flags_to_config() {
        let c = parse(&["run", "--p-loss", "0.5", "--lambda", "0", "--prior", "pdc:0.7", "--emit", "pnm,optmap"]).unwrap();
        assert_eq!(c.detector, DetectorParams::new(0.5, 0.0).unwrap());
        assert_eq!(c.prior_spec, Some(PriorSpec::Pdc(0.7)));
        assert_eq!(c.outputs, BTreeSet::from([Artifact::Pnm, Artifact::Optmap]));
        assert_eq!(c.n_max, DEFAULT_N_MAX);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.seed, 0);
        assert_eq!(c.shots, 1_000_000);
        assert_eq!(c.detector.tail_epsilon(), 1e-10);
    }

    #[test]
    fn uniform_prior_spec() {
        let c = parse(&["run", "--prior", "uniform:0:9"]).unwrap();
        assert_eq!(c.prior_spec, Some(PriorSpec::Uniform(0, 9)));
        let prior = load_prior(c.prior_spec.as_ref().unwrap(), c.n_max).unwrap();
        assert!(prior.probs().iter().all(|&p| p == 0.1));
    }

    #[test]
    fn range_violation_names_flag() {
        let err = parse(&["run", "--p-loss", "1.5", "--prior", "pdc:0.5"]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
        assert!(err.to_string().contains("--p-loss"), "{err}");

        let err = parse(&["run", "--lambda", "-1", "--prior", "pdc:0.5"]).unwrap_err();
        assert!(err.to_string().contains("--lambda"), "{err}");
        let err = parse(&["run", "--tail-eps", "2", "--prior", "pdc:0.5"]).unwrap_err();
        assert!(err.to_string().contains("--tail-eps"), "{err}");
        let err = parse(&["run", "--prior", "pdc:1.0"]).unwrap_err();
        assert!(err.to_string().contains("--prior"), "{err}");
        let err = parse(&["run", "--prior", "uniform:5:2"]).unwrap_err();
        assert!(err.to_string().contains("--prior"), "{err}");
    }

    #[test]
    fn usage_errors() {
        assert_eq!(parse(&["run", "--bogus", "1"]).unwrap_err().exit_code(), EXIT_USAGE);
        assert_eq!(parse(&["run", "--p-loss", "abc"]).unwrap_err().exit_code(), EXIT_USAGE);
        assert!(parse(&["run", "--prior", "pdc:0.5", "--emit", "pmn,nope"]).is_err());
        assert!(parse(&["run", "--prior", "pdc:0.5", "--emit", ""]).is_err());
        assert!(parse(&["run", "--prior", "pdc:0.5", "--format", "xml"]).is_err());
        assert!(parse(&["run", "--prior", "gauss:1"]).is_err());
        assert!(parse(&["run", "--prior", "uniform:1"]).is_err());
        assert!(parse(&["run", "--emit", "optmap"]).is_err());
        assert!(parse(&["simulate", "--shots", "0"]).is_err());
    }

    #[test]
    fn pmn_and_simulate_need_no_prior() {
        assert!(parse(&["run", "--emit", "pmn"]).is_ok());
        let c = parse(&["simulate", "--p-loss", "0.5", "--lambda", "1"]).unwrap();
        assert_eq!(c.outputs, BTreeSet::from([Artifact::Simulate]));
    }

    #[test]
    fn prior_spec_round_trips_through_display() {
        for s in ["pdc:0.7", "uniform:0:9", "custom:weights.json"] {
            assert_eq!(s.parse::<PriorSpec>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn missing_custom_prior_file_is_usage_error() {
        let c = parse(&["run", "--prior", "custom:/nonexistent/w.json"]).unwrap();
        let err = compute(&c).err().unwrap();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn config_file_values_yield_to_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        fs::write(&path, "p-loss = 0.25\nlambda = 2.0\nprior = \"uniform:0:9\"\nn-max = 12\nemit = \"optmap\"\n").unwrap();
        let c = parse(&["run", "--config", path.to_str().unwrap(), "--lambda", "0.5"]).unwrap();
        assert_eq!(c.detector.p_loss(), 0.25);
        assert_eq!(c.detector.lambda(), 0.5);
        assert_eq!(c.n_max, 12);
        assert_eq!(c.outputs, BTreeSet::from([Artifact::Optmap]));

        fs::write(&path, "p-los = 0.25\n").unwrap();
        assert!(parse(&["run", "--config", path.to_str().unwrap()]).is_err());
    }

    #[test]
    fn formats_undefined_ranges() {
        assert_eq!(ranges(&[3]), "3");
        assert_eq!(ranges(&[10, 11, 12, 15]), "10..=12,15");
    }

    #[test]
    fn matrix_widens_to_prior_support() {
        let c = parse(&["run", "--prior", "uniform:0:30", "--n-max", "5"]).unwrap();
        let p = compute(&c).unwrap();
        assert_eq!(p.matrix.n_max(), 30);
        let c = parse(&["run", "--prior", "pdc:0.7", "--n-max", "5"]).unwrap();
        assert_eq!(compute(&c).unwrap().matrix.n_max(), 5);
    }
}

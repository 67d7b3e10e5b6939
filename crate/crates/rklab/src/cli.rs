//! Command-line surface: flags or a JSON run config, dispatch, report output.
//!
//! Exit codes: 0 all checks pass, 1 some check fails, 2 usage, config or I/O
//! error, 3 numerical-failure rate above the limit (takes precedence over 1).

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rklab_core::reinforced::HazardScheme;
use serde::{Deserialize, Deserializer};

use crate::experiments::{self, Context, DumpSpec, Experiment};
use crate::graph_file::load_graph;
use crate::report::{write_report, ExperimentReport, Outcome, OutputFormat, RunMeta};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rklab", version, about = "Monte Carlo checks of Ray-Knight identities on small weighted graphs")]
pub struct Cli {
    /// JSON run config; flags given on the command line override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Second Ray-Knight identity: (l(tau_u) + phi^2/2) against (phi + sqrt(2u))^2/2.
    Rk2(RunConfig),
    /// Field given Phi at tau_u against the magnetized reversed process plus Ising signs.
    InverseRk2(RunConfig),
    /// First Ray-Knight identity from z0 with signed and positive weights.
    Rk1(RunConfig),
    /// Field given Phi at H_x0 against the magnetized reversed process stopped at x0.
    InverseRk1(RunConfig),
    /// Martingale means of M and N plus the exact identities along jump paths.
    MartingaleCheck(RunConfig),
    /// Change-of-measure checks for the three reinforced processes.
    RnCheck(RunConfig),
    /// Exact partition functions and magnetizations at couplings beta W.
    IsingTable(RunConfig),
    /// Run the experiment named in --config.
    Run(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeArg {
    Exact,
    Quadrature,
}

/// Amplitudes per vertex in declared order, written `1.4,1.3,0.7`; one value is broadcast.
#[derive(Debug, Clone, PartialEq)]
pub struct Amplitudes(pub Vec<f64>);

impl FromStr for Amplitudes {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(Amplitudes)
    }
}

impl<'de> Deserialize<'de> for Amplitudes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(f64),
            Many(Vec<f64>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(x) => Ok(Amplitudes(vec![x])),
            Raw::Many(v) => Ok(Amplitudes(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every run setting. The same fields are accepted as flags and as keys of
/// the `--config` file (kebab-case).
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    /// Experiment to run (config files and `run` only).
    #[arg(skip)]
    pub experiment: Option<Experiment>,
    /// Graph JSON file, or builtin:<single-edge|triangle|chain|cycle-chord>.
    #[arg(long)]
    pub graph: Option<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per sample.
    #[arg(long, short = 'n')]
    pub replicates: Option<usize>,
    /// Report path; the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads; the report does not depend on it.
    #[arg(long, env = "RKLAB_THREADS")]
    pub threads: Option<usize>,
    /// Directory for path dumps of the first replicates.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Replicates dumped per pipeline.
    #[arg(long)]
    pub dump_count: Option<usize>,
    /// Hazard inversion for the reinforced processes.
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Local-time level at x0 (rk2, inverse-rk2).
    #[arg(long)]
    pub u: Option<f64>,
    /// Level multiplier for the rk2 comparison sample; 1 is the true law.
    #[arg(long)]
    pub control_factor: Option<f64>,
    /// Shift (rk1, inverse-rk1).
    #[arg(long)]
    pub s: Option<f64>,
    /// Start vertex label, not x0 (rk1, inverse-rk1).
    #[arg(long)]
    pub z0: Option<String>,
    /// Evaluation time, repeatable (martingale-check).
    #[arg(long)]
    pub t: Vec<f64>,
    /// Amplitude vector, repeatable (martingale-check).
    #[arg(long)]
    pub phi: Vec<Amplitudes>,
    #[arg(long)]
    pub t_vrjp: Option<f64>,
    #[arg(long)]
    pub t_reversed: Option<f64>,
    #[arg(long)]
    pub t_magnetized: Option<f64>,
    #[arg(long)]
    pub phi_vrjp: Option<Amplitudes>,
    #[arg(long)]
    pub phi_reversed: Option<Amplitudes>,
    #[arg(long)]
    pub phi_magnetized: Option<Amplitudes>,
    /// Coupling scale, repeatable (ising-table).
    #[arg(long)]
    pub beta: Vec<f64>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($opt:ident),*; $($vec:ident),*) => {{
        $( if $top.$opt.is_some() { $base.$opt = $top.$opt; } )*
        $( if !$top.$vec.is_empty() { $base.$vec = $top.$vec; } )*
    }};
}

impl RunConfig {
    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: RunConfig) -> RunConfig {
        overlay!(self, top;
            experiment, graph, seed, replicates, out, format, threads, dump, dump_count, scheme,
            u, control_factor, s, z0, t_vrjp, t_reversed, t_magnetized, phi_vrjp, phi_reversed, phi_magnetized;
            t, phi, beta);
        self
    }

    /// Names of the experiment-specific settings that are present.
    fn given(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        let mut flag = |set: bool, name: &'static str| {
            if set {
                v.push(name);
            }
        };
        flag(self.u.is_some(), "u");
        flag(self.control_factor.is_some(), "control-factor");
        flag(self.s.is_some(), "s");
        flag(self.z0.is_some(), "z0");
        flag(!self.t.is_empty(), "t");
        flag(!self.phi.is_empty(), "phi");
        flag(self.t_vrjp.is_some(), "t-vrjp");
        flag(self.t_reversed.is_some(), "t-reversed");
        flag(self.t_magnetized.is_some(), "t-magnetized");
        flag(self.phi_vrjp.is_some(), "phi-vrjp");
        flag(self.phi_reversed.is_some(), "phi-reversed");
        flag(self.phi_magnetized.is_some(), "phi-magnetized");
        flag(!self.beta.is_empty(), "beta");
        v
    }
}

fn allowed(exp: Experiment) -> &'static [&'static str] {
    match exp {
        Experiment::Rk2 => &["u", "control-factor"],
        Experiment::InverseRk2 => &["u"],
        Experiment::Rk1 | Experiment::InverseRk1 => &["s", "z0"],
        Experiment::MartingaleCheck => &["t", "phi"],
        Experiment::RnCheck => &["t-vrjp", "t-reversed", "t-magnetized", "phi-vrjp", "phi-reversed", "phi-magnetized"],
        Experiment::IsingTable => &["beta"],
    }
}

fn default_replicates(exp: Experiment) -> usize {
    match exp {
        Experiment::Rk2 | Experiment::InverseRk2 | Experiment::InverseRk1 => 20_000,
        Experiment::Rk1 => 50_000,
        Experiment::MartingaleCheck | Experiment::RnCheck => 100_000,
        Experiment::IsingTable => 10_000,
    }
}

/// Usage and configuration problems (exit code 2).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("reading config {path}: {source}")]
    ConfigIo { path: PathBuf, source: std::io::Error },
    #[error("parsing config {path}: {source}")]
    ConfigJson { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Graph(#[from] crate::graph_file::GraphFileError),
    #[error(transparent)]
    Experiment(#[from] experiments::ExperimentError),
    #[error("writing report: {0}")]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require<T: Clone>(x: &Option<T>, exp: Experiment, name: &str) -> Result<T, CliError> {
    x.clone().ok_or_else(|| usage(format!("{} requires --{name}", exp.name())))
}

/// Resolves the command line plus optional config file into one config.
pub fn resolve(cli: Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigIo { path: path.clone(), source })?;
            serde_json::from_str::<RunConfig>(&text).map_err(|source| CliError::ConfigJson { path: path.clone(), source })?
        }
        None => RunConfig::default(),
    };
    let (sub, flags) = match cli.command {
        None => (None, RunConfig::default()),
        Some(Command::Run(c)) => (None, c),
        Some(Command::Rk2(c)) => (Some(Experiment::Rk2), c),
        Some(Command::InverseRk2(c)) => (Some(Experiment::InverseRk2), c),
        Some(Command::Rk1(c)) => (Some(Experiment::Rk1), c),
        Some(Command::InverseRk1(c)) => (Some(Experiment::InverseRk1), c),
        Some(Command::MartingaleCheck(c)) => (Some(Experiment::MartingaleCheck), c),
        Some(Command::RnCheck(c)) => (Some(Experiment::RnCheck), c),
        Some(Command::IsingTable(c)) => (Some(Experiment::IsingTable), c),
    };
    if let (Some(s), Some(c)) = (sub, base.experiment) {
        if s != c {
            return Err(usage(format!(
                "subcommand {} conflicts with experiment {} in the config file",
                s.name(),
                c.name()
            )));
        }
    }
    let mut cfg = base.overlay(flags);
    cfg.experiment = sub.or(cfg.experiment);
    if cfg.experiment.is_none() {
        return Err(usage("no experiment given; use a subcommand or set \"experiment\" in --config"));
    }
    Ok(cfg)
}

fn scheme(cfg: &RunConfig) -> HazardScheme {
    match cfg.scheme {
        Some(SchemeArg::Quadrature) => HazardScheme::Quadrature,
        _ => HazardScheme::Exact,
    }
}

/// Runs a resolved config; returns the report without writing it.
pub fn execute(cfg: &RunConfig, pool: &rayon::ThreadPool) -> Result<ExperimentReport, CliError> {
    let exp = cfg.experiment.ok_or_else(|| usage("no experiment given"))?;
    if let Some(bad) = cfg.given().into_iter().find(|f| !allowed(exp).contains(f)) {
        return Err(usage(format!("--{bad} does not apply to {}", exp.name())));
    }
    let source = cfg.graph.as_deref().ok_or_else(|| usage(format!("{} requires --graph", exp.name())))?;
    let g = load_graph(source)?;
    let dump = cfg.dump.as_ref().map(|dir| DumpSpec { dir: dir.clone(), count: cfg.dump_count.unwrap_or(10) });
    let ctx = Context::new(&g, cfg.seed.unwrap_or(0), pool)
        .with_scheme(scheme(cfg))
        .with_dump(dump.as_ref());
    let n = cfg.replicates.unwrap_or_else(|| default_replicates(exp));
    let report = match exp {
        Experiment::Rk2 => experiments::run_rk2(
            &ctx,
            &experiments::Rk2Params {
                u: require(&cfg.u, exp, "u")?,
                replicates: n,
                control_factor: cfg.control_factor.unwrap_or(1.0),
            },
        )?,
        Experiment::InverseRk2 => experiments::run_inverse_rk2(
            &ctx,
            &experiments::InverseRk2Params { u: require(&cfg.u, exp, "u")?, replicates: n },
        )?,
        Experiment::Rk1 => experiments::run_rk1(
            &ctx,
            &experiments::Rk1Params {
                z0: require(&cfg.z0, exp, "z0")?,
                s: require(&cfg.s, exp, "s")?,
                replicates: n,
            },
        )?,
        Experiment::InverseRk1 => experiments::run_inverse_rk1(
            &ctx,
            &experiments::InverseRk1Params {
                z0: require(&cfg.z0, exp, "z0")?,
                s: require(&cfg.s, exp, "s")?,
                replicates: n,
            },
        )?,
        Experiment::MartingaleCheck => {
            let mut p = experiments::MartingaleParams::defaults(&g, n);
            if !cfg.t.is_empty() {
                p.times = cfg.t.clone();
            }
            if !cfg.phi.is_empty() {
                p.phis = cfg.phi.iter().map(|a| a.0.clone()).collect();
            }
            experiments::run_martingale_check(&ctx, &p)?
        }
        Experiment::RnCheck => {
            let mut p = experiments::RnParams::defaults(n);
            p.t_vrjp = cfg.t_vrjp.unwrap_or(p.t_vrjp);
            p.t_reversed = cfg.t_reversed.unwrap_or(p.t_reversed);
            p.t_magnetized = cfg.t_magnetized.unwrap_or(p.t_magnetized);
            let pick = |a: &Option<Amplitudes>, d: Vec<f64>| a.as_ref().map_or(d, |a| a.0.clone());
            p.phi_vrjp = pick(&cfg.phi_vrjp, p.phi_vrjp);
            p.phi_reversed = pick(&cfg.phi_reversed, p.phi_reversed);
            p.phi_magnetized = pick(&cfg.phi_magnetized, p.phi_magnetized);
            experiments::run_rn_check(&ctx, &p)?
        }
        Experiment::IsingTable => {
            let mut p = experiments::IsingTableParams::defaults(n);
            if !cfg.beta.is_empty() {
                p.betas = cfg.beta.clone();
            }
            experiments::run_ising_table(&ctx, &p)?
        }
    };
    Ok(report)
}

pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = match threads {
        Some(0) => return Err(usage("--threads must be at least 1")),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?)
}

fn output_format(cfg: &RunConfig) -> OutputFormat {
    match cfg.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Both) => OutputFormat::Both,
        _ => OutputFormat::Json,
    }
}

fn run_with(cfg: RunConfig) -> Result<i32, CliError> {
    let started = Instant::now();
    let pool = thread_pool(cfg.threads)?;
    let report = execute(&cfg, &pool)?;
    let format = output_format(&cfg);
    match &cfg.out {
        Some(out) => {
            let meta = RunMeta {
                wall_time_seconds: started.elapsed().as_secs_f64(),
                threads: pool.current_num_threads(),
                finished_unix_seconds: std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
                version: env!("CARGO_PKG_VERSION").to_string(),
            };
            write_report(&report, out, format, &meta)?;
        }
        None => match format {
            OutputFormat::Csv => print!("{}", report.to_csv()),
            OutputFormat::Json => print!("{}", report.to_json()),
            OutputFormat::Both => {
                print!("{}", report.to_json());
                print!("{}", report.to_csv());
            }
        },
    }
    let tested = report.checks.iter().filter(|c| c.kind != crate::report::CheckKind::Info).count();
    let failed: Vec<&str> = report.failed_checks().map(|c| c.name.as_str()).collect();
    eprintln!(
        "{}: {} ({} checks, {} failed, {} numerical failures in {} replicates)",
        report.experiment,
        match report.outcome() {
            Outcome::Pass => "pass",
            Outcome::StatisticalFail => "fail",
            Outcome::NumericalBreach => "numerical-failure rate exceeded",
        },
        tested,
        failed.len(),
        report.numerical_failures,
        report.replicates.values().sum::<usize>(),
    );
    for name in failed {
        eprintln!("  failed: {name}");
    }
    for w in &report.warnings {
        eprintln!("  warning: {w}");
    }
    Ok(match report.outcome() {
        Outcome::Pass => EXIT_PASS,
        Outcome::StatisticalFail => EXIT_FAIL,
        Outcome::NumericalBreach => EXIT_NUMERICAL,
    })
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match resolve(cli).and_then(run_with) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

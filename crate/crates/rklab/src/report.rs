//! Experiment reports and their JSON / CSV encodings.
//!
//! Reports are deterministic: floats are written with 17 significant digits,
//! map keys are ordered, and anything that depends on the machine or the
//! clock goes into a separate `<out>.meta.json` sidecar.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

/// z-score bound for a pass.
pub const Z_LIMIT: f64 = 4.0;
/// Smallest passing KS p-value.
pub const KS_ALPHA: f64 = 0.001;
/// Largest tolerated fraction of replicates lost to numerical failures.
pub const MAX_FAILURE_RATE: f64 = 0.001;
/// Effective sample sizes below this trigger a warning.
pub const MIN_ESS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    /// `|z| ≤ 4`.
    Z,
    /// Two-sample Kolmogorov-Smirnov, `p ≥ 0.001`.
    Ks,
    /// Deterministic comparison within a tolerance.
    Exact,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub target: Option<f64>,
    /// z-score, KS statistic, or the worst deviation for exact checks.
    pub stat: Option<f64>,
    pub p_value: Option<f64>,
    pub verdict: Verdict,
}

impl Check {
    /// `estimate ± stderr` against a known target.
    pub fn z_target(name: impl Into<String>, estimate: f64, stderr: f64, target: f64) -> Self {
        let z = if stderr > 0.0 {
            (estimate - target) / stderr
        } else if estimate == target {
            0.0
        } else {
            f64::INFINITY
        };
        Self::from_z(name.into(), estimate, stderr, Some(target), z)
    }

    /// Difference of two independent estimates, with the combined stderr.
    pub fn z_two_sample(name: impl Into<String>, a: (f64, f64), b: (f64, f64)) -> Self {
        let se = a.1.hypot(b.1);
        let d = a.0 - b.0;
        let z = if se > 0.0 {
            d / se
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self::from_z(name.into(), a.0, se, Some(b.0), z)
    }

    fn from_z(name: String, estimate: f64, stderr: f64, target: Option<f64>, z: f64) -> Self {
        let verdict = if z.abs() <= Z_LIMIT { Verdict::Pass } else { Verdict::Fail };
        Check {
            name,
            kind: CheckKind::Z,
            estimate,
            stderr: Some(stderr),
            target,
            stat: Some(z),
            p_value: Some(crate::stats::z_pvalue(z)),
            verdict,
        }
    }

    pub fn ks(name: impl Into<String>, statistic: f64, p: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Ks,
            estimate: statistic,
            stderr: None,
            target: None,
            stat: Some(statistic),
            p_value: Some(p),
            verdict: if p >= KS_ALPHA { Verdict::Pass } else { Verdict::Fail },
        }
    }

    /// Passes iff `worst ≤ tol`; `estimate` is the reported quantity.
    pub fn exact(name: impl Into<String>, estimate: f64, target: Option<f64>, worst: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Exact,
            estimate,
            stderr: None,
            target,
            stat: Some(worst),
            p_value: None,
            verdict: if worst <= tol { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn info(name: impl Into<String>, estimate: f64, stderr: Option<f64>) -> Self {
        Check {
            name: name.into(),
            kind: CheckKind::Info,
            estimate,
            stderr,
            target: None,
            stat: None,
            p_value: None,
            verdict: Verdict::Info,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Everything needed to rerun the experiment.
    pub config: serde_json::Value,
    /// SHA-256 of the serialized `config`.
    pub config_hash: String,
    pub master_seed: u64,
    pub replicates: BTreeMap<String, usize>,
    pub numerical_failures: usize,
    pub failure_rate: f64,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub note: String,
    pub verdict: Verdict,
}

/// Outcome class of a report, in order of precedence for exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    StatisticalFail,
    NumericalBreach,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: serde_json::Value, master_seed: u64) -> Self {
        let config_hash = hash_json(&config);
        Self {
            experiment: experiment.to_string(),
            config,
            config_hash,
            master_seed,
            replicates: BTreeMap::new(),
            numerical_failures: 0,
            failure_rate: 0.0,
            checks: Vec::new(),
            warnings: Vec::new(),
            note: String::new(),
            verdict: Verdict::Pass,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Records replicate totals; failures count against the failure rate.
    pub fn count(&mut self, name: &str, attempted: usize, failed: usize) {
        self.replicates.insert(name.to_string(), attempted);
        self.numerical_failures += failed;
        let total: usize = self.replicates.values().sum();
        self.failure_rate = if total > 0 {
            self.numerical_failures as f64 / total as f64
        } else {
            0.0
        };
    }

    /// Fills in the overall verdict and the multiple-testing note.
    pub fn finish(&mut self) {
        let tested = self.checks.iter().filter(|c| c.kind != CheckKind::Info).count();
        self.note = format!(
            "{tested} checks at |z| <= {Z_LIMIT}, KS p >= {KS_ALPHA}; no multiplicity correction \
             (Bonferroni level for the family would be {:.3e})",
            crate::stats::z_pvalue(Z_LIMIT) * tested as f64
        );
        let failed = self.checks.iter().any(|c| c.verdict == Verdict::Fail);
        self.verdict = if failed || self.failure_rate > MAX_FAILURE_RATE {
            Verdict::Fail
        } else {
            Verdict::Pass
        };
    }

    pub fn outcome(&self) -> Outcome {
        if self.failure_rate > MAX_FAILURE_RATE {
            Outcome::NumericalBreach
        } else if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Outcome::StatisticalFail
        } else {
            Outcome::Pass
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,stderr,target,stat,p,verdict\n");
        for c in &self.checks {
            let row = [
                csv_field(&c.name),
                fmt_f64(c.estimate),
                c.stderr.map(fmt_f64).unwrap_or_default(),
                c.target.map(fmt_f64).unwrap_or_default(),
                c.stat.map(fmt_f64).unwrap_or_default(),
                c.p_value.map(fmt_f64).unwrap_or_default(),
                verdict_name(c.verdict).to_string(),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Info => "info",
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Wraps a formatter so every float is written with 17 significant digits.
pub struct SigDigits<F>(pub F);

impl<F: Formatter> Formatter for SigDigits<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Compact form without whitespace; `serde_json`'s default formatter.
struct Compact;
impl Formatter for Compact {}

fn serialize_with<T: Serialize, F: Formatter>(value: &T, formatter: F) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigits(formatter));
    value.serialize(&mut ser).expect("report values serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serialize_with(value, PrettyFormatter::new());
    s.push('\n');
    s
}

pub fn to_json_compact<T: Serialize>(value: &T) -> String {
    serialize_with(value, Compact)
}

/// Hex SHA-256 of the compact encoding.
pub fn hash_json(value: &serde_json::Value) -> String {
    let digest = Sha256::digest(to_json_compact(value).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

/// Paths written by [`write_report`].
pub fn output_paths(out: &Path, format: OutputFormat) -> Vec<PathBuf> {
    let with = |ext: &str| {
        if out.extension().is_some_and(|e| e == ext) {
            out.to_path_buf()
        } else {
            out.with_extension(ext)
        }
    };
    match format {
        OutputFormat::Json => vec![out.to_path_buf()],
        OutputFormat::Csv => vec![out.to_path_buf()],
        OutputFormat::Both => vec![with("json"), with("csv")],
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub finished_unix_seconds: u64,
    pub version: String,
}

/// Writes the report body and the `.meta.json` sidecar next to the first output.
pub fn write_report(report: &ExperimentReport, out: &Path, format: OutputFormat, meta: &RunMeta) -> io::Result<Vec<PathBuf>> {
    let paths = output_paths(out, format);
    for p in &paths {
        let body = match (format, p.extension().and_then(|e| e.to_str())) {
            (OutputFormat::Csv, _) | (OutputFormat::Both, Some("csv")) => report.to_csv(),
            _ => report.to_json(),
        };
        std::fs::write(p, body)?;
    }
    let mut sidecar = paths[0].clone().into_os_string();
    sidecar.push(".meta.json");
    std::fs::write(&sidecar, to_json_pretty(meta))?;
    let mut all = paths;
    all.push(PathBuf::from(sidecar));
    Ok(all)
}

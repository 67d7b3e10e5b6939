//! End-to-end Monte Carlo experiments.
//!
//! Every experiment is a pure function of the graph, its parameters and the
//! master seed. Replicate `r` of pipeline `c` draws from
//! `stream(seed, experiment id, c, r)`; replicates may run on any number of
//! threads but are collected and aggregated in replicate order.

use std::collections::BTreeMap;
use std::sync::Mutex;

use rayon::prelude::*;
use rayon::ThreadPool;
use rklab_core::reinforced::{HazardScheme, ReversedRun, SimOptions};
use rklab_core::stream::{stream, StreamRng};
use rklab_core::{JumpPath, WeightedGraph};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::graph_file::GraphFile;
use crate::report::{Check, ExperimentReport};
use crate::stats::{self, StatsError};

mod inverse;
mod ising_table;
mod martingale;
mod rk1;
mod rk2;
mod rn;

pub use inverse::{run_inverse_rk1, run_inverse_rk2, InverseRk1Params, InverseRk2Params};
pub use ising_table::{run_ising_table, IsingTableParams};
pub use martingale::{run_martingale_check, MartingaleParams};
pub use rk1::{run_rk1, Rk1Params};
pub use rk2::{run_rk2, Rk2Params};
pub use rn::{run_rn_check, RnParams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] rklab_core::Error),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("writing dump files: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Rk2,
    InverseRk2,
    Rk1,
    InverseRk1,
    MartingaleCheck,
    RnCheck,
    IsingTable,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Rk2,
        Experiment::InverseRk2,
        Experiment::Rk1,
        Experiment::InverseRk1,
        Experiment::MartingaleCheck,
        Experiment::RnCheck,
        Experiment::IsingTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rk2 => "rk2",
            Experiment::InverseRk2 => "inverse-rk2",
            Experiment::Rk1 => "rk1",
            Experiment::InverseRk1 => "inverse-rk1",
            Experiment::MartingaleCheck => "martingale-check",
            Experiment::RnCheck => "rn-check",
            Experiment::IsingTable => "ising-table",
        }
    }

    /// Experiment coordinate of the random streams.
    pub fn stream_id(self) -> u16 {
        match self {
            Experiment::Rk2 => 1,
            Experiment::InverseRk2 => 2,
            Experiment::Rk1 => 3,
            Experiment::InverseRk1 => 4,
            Experiment::MartingaleCheck => 5,
            Experiment::RnCheck => 6,
            Experiment::IsingTable => 7,
        }
    }
}

/// Where to write the paths of the first few replicates.
#[derive(Debug, Clone)]
pub struct DumpSpec {
    pub dir: std::path::PathBuf,
    pub count: usize,
}

/// Shared inputs of every experiment.
pub struct Context<'a> {
    pub graph: &'a WeightedGraph,
    pub seed: u64,
    pub pool: &'a ThreadPool,
    pub scheme: HazardScheme,
    pub dump: Option<&'a DumpSpec>,
    files: Mutex<BTreeMap<String, String>>,
}

/// Replicates that completed, in replicate order, plus the count lost to numerics.
pub struct Batch<T> {
    pub values: Vec<T>,
    pub attempted: usize,
    pub failed: usize,
}

impl<'a> Context<'a> {
    pub fn new(graph: &'a WeightedGraph, seed: u64, pool: &'a ThreadPool) -> Self {
        Self {
            graph,
            seed,
            pool,
            scheme: HazardScheme::Exact,
            dump: None,
            files: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn with_scheme(mut self, scheme: HazardScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dump(mut self, dump: Option<&'a DumpSpec>) -> Self {
        self.dump = dump;
        self
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            scheme: self.scheme,
            ..SimOptions::default()
        }
    }

    pub fn rng(&self, exp: Experiment, channel: u16, replicate: usize) -> StreamRng {
        stream(self.seed, exp.stream_id(), channel, replicate as u32)
    }

    /// Runs `f(r)` for `r in 0..n` on the pool. Numerical failures are counted
    /// and dropped; any other error aborts the experiment.
    pub fn replicates<T, F>(&self, n: usize, f: F) -> Result<Batch<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        if n > u32::MAX as usize {
            return Err(ExperimentError::Invalid(format!("{n} replicates exceed the stream range")));
        }
        let raw: Vec<Result<T>> = self.pool.install(|| (0..n).into_par_iter().map(&f).collect());
        let mut values = Vec::with_capacity(n);
        let mut failed = 0;
        for r in raw {
            match r {
                Ok(v) => values.push(v),
                Err(ExperimentError::Core(e)) if e.is_numerical() => failed += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(Batch { values, attempted: n, failed })
    }

    fn dumping(&self, r: usize) -> bool {
        self.dump.is_some_and(|d| r < d.count)
    }

    /// Records a jump path as `time,vertex` rows for the dump, if `r` is dumped.
    pub fn dump_path(&self, name: &str, r: usize, path: &JumpPath) {
        if !self.dumping(r) {
            return;
        }
        let g = self.graph;
        let mut csv = String::from("time,vertex\n");
        csv.push_str(&format!("{},{}\n", crate::report::fmt_f64(0.0), g.label(path.start())));
        for j in path.jumps() {
            csv.push_str(&format!("{},{}\n", crate::report::fmt_f64(j.time), g.label(j.target)));
        }
        self.files.lock().unwrap().insert(format!("{name}-{r:06}.csv"), csv);
    }

    /// Records a reversed run as `z_time,vertex,L_<v>...` rows, one per epoch.
    pub fn dump_run(&self, name: &str, r: usize, run: &ReversedRun) {
        if !self.dumping(r) {
            return;
        }
        let g = self.graph;
        let mut csv = String::from("z_time,vertex");
        for v in 0..g.len() {
            csv.push_str(&format!(",L_{}", g.label(v)));
        }
        csv.push('\n');
        for e in &run.epochs {
            csv.push_str(&format!("{},{}", crate::report::fmt_f64(e.z_time), g.label(e.vertex)));
            for a in &e.amplitudes {
                csv.push(',');
                csv.push_str(&crate::report::fmt_f64(*a));
            }
            csv.push('\n');
        }
        self.files.lock().unwrap().insert(format!("{name}-{r:06}.csv"), csv);
    }

    /// Writes the collected dump files; returns how many were written.
    pub fn flush_dump(&self) -> Result<usize> {
        let Some(d) = self.dump else { return Ok(0) };
        std::fs::create_dir_all(&d.dir)?;
        let files = std::mem::take(&mut *self.files.lock().unwrap());
        for (name, body) in &files {
            std::fs::write(d.dir.join(name), body)?;
        }
        Ok(files.len())
    }

    pub(crate) fn vertex(&self, label: &str) -> Result<usize> {
        self.graph
            .index_of(label)
            .ok_or_else(|| ExperimentError::Invalid(format!("unknown vertex `{label}`")))
    }

    /// Report skeleton with the config echo: graph, seed, scheme and parameters.
    pub(crate) fn report(&self, exp: Experiment, params: &impl Serialize) -> ExperimentReport {
        let config = json!({
            "experiment": exp.name(),
            "graph": GraphFile::from_graph(self.graph),
            "seed": self.seed,
            "scheme": match self.scheme {
                HazardScheme::Exact => "exact",
                HazardScheme::Quadrature => "quadrature",
            },
            "params": params,
        });
        ExperimentReport::new(exp.name(), config, self.seed)
    }
}

pub(crate) fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ExperimentError::Invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

pub(crate) fn check_replicates(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(ExperimentError::Invalid(format!("need at least {min} replicates, got {n}")))
    } else {
        Ok(())
    }
}

/// Resolves a per-vertex amplitude vector; a single entry is broadcast.
pub(crate) fn amplitude_vector(g: &WeightedGraph, name: &str, values: &[f64]) -> Result<Vec<f64>> {
    let v = match values.len() {
        1 => vec![values[0]; g.len()],
        n if n == g.len() => values.to_vec(),
        n => {
            return Err(ExperimentError::Invalid(format!(
                "{name} has {n} entries; give 1 or {} (one per vertex in declared order)",
                g.len()
            )))
        }
    };
    for &x in &v {
        check_positive(name, x)?;
    }
    Ok(v)
}

/// Largest deviation of `ℓ^Ž(z_time) = ½(Φ² - L̂²)` over the epochs of a run, relative to `½Φ²`.
pub fn clock_deviation(run: &ReversedRun, phi: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for e in &run.epochs {
        let ell = run.z_path.local_times(e.z_time)?.into_inner();
        for v in 0..phi.len() {
            let budget = 0.5 * phi[v] * phi[v];
            let predicted = 0.5 * (phi[v] - e.amplitudes[v]) * (phi[v] + e.amplitudes[v]);
            worst = worst.max((ell[v] - predicted).abs() / budget);
        }
    }
    Ok(worst)
}

/// `|y_end - Σ(Φ - L_end)|` relative to `ΣΦ`.
pub fn y_end_deviation(run: &ReversedRun, phi: &[f64]) -> f64 {
    let total: f64 = phi.iter().sum();
    let expect: f64 = phi.iter().zip(run.l_end.iter()).map(|(p, l)| p - l).sum();
    (run.y_end_time - expect).abs() / total
}

/// Two-sample z-check of the means of `a` and `b`.
pub(crate) fn mean_check(name: String, a: &[f64], b: &[f64]) -> Result<Check> {
    let ma = stats::mean_stderr(a)?;
    let mb = stats::mean_stderr(b)?;
    Ok(Check::z_two_sample(name, (ma.mean, ma.stderr), (mb.mean, mb.stderr)))
}

pub(crate) fn variance_check(name: String, a: &[f64], b: &[f64]) -> Result<Check> {
    let va = stats::variance_stderr(a)?;
    let vb = stats::variance_stderr(b)?;
    Ok(Check::z_two_sample(name, (va.mean, va.stderr), (vb.mean, vb.stderr)))
}

pub(crate) fn target_check(name: String, xs: &[f64], target: f64) -> Result<Check> {
    let m = stats::mean_stderr(xs)?;
    Ok(Check::z_target(name, m.mean, m.stderr, target))
}

/// Column `k` of a list of records.
pub(crate) fn column<T>(rows: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

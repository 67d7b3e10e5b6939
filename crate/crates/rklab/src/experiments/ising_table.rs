//! Exact Ising quantities with couplings `β W` and `+1` at `x0`, plus a
//! sampling check of the spin sampler against the exact magnetizations.

use rklab_core::IsingSpec;
use serde::Serialize;

use super::*;
use crate::report::Check;

#[derive(Debug, Clone, Serialize)]
pub struct IsingTableParams {
    pub betas: Vec<f64>,
    pub replicates: usize,
}

impl IsingTableParams {
    pub fn defaults(replicates: usize) -> Self {
        Self { betas: vec![0.1, 1.0, 5.0], replicates }
    }
}

pub fn run_ising_table(ctx: &Context<'_>, p: &IsingTableParams) -> Result<ExperimentReport> {
    check_replicates(p.replicates, 10)?;
    if p.betas.is_empty() {
        return Err(ExperimentError::Invalid("need at least one beta".into()));
    }
    for &b in &p.betas {
        if !(b.is_finite() && b >= 0.0) {
            return Err(ExperimentError::Invalid(format!("beta must be finite and nonnegative, got {b}")));
        }
    }
    let g = ctx.graph;
    let x0 = g.x0();
    let exp = Experiment::IsingTable;
    let free = g.free_vertices();
    let mut rep = ctx.report(exp, p);
    let mut previous: Option<(f64, Vec<f64>)> = None;

    for (k, &beta) in p.betas.iter().enumerate() {
        let spec = IsingSpec::scaled(g, beta)?;
        let mags = spec.magnetizations();
        rep.push(Check::info(format!("ln Z (beta={beta})"), spec.log_partition(), None));
        for &v in free {
            let m = mags[v];
            let out = if (0.0..=1.0).contains(&m) { 0.0 } else { 1.0 };
            rep.push(Check::exact(format!("<s[{}]> in [0,1] (beta={beta})", g.label(v)), m, None, out, 0.0));
        }
        if let [a] = free {
            let j = beta * g.weight(*a, x0);
            let z = 2.0 * j.cosh();
            let rel = (spec.partition_function() - z).abs() / z;
            rep.push(Check::exact(format!("Z = 2cosh(J) (beta={beta})"), spec.partition_function(), Some(z), rel, 1e-12));
            let m = j.tanh();
            let dev = (mags[*a] - m).abs() / m.abs().max(f64::MIN_POSITIVE);
            rep.push(Check::exact(format!("<s> = tanh(J) (beta={beta})"), mags[*a], Some(m), dev, 1e-12));
        }
        if let Some((b0, prev)) = &previous {
            if beta >= *b0 {
                let drop = free.iter().map(|&v| (prev[v] - mags[v]).max(0.0)).fold(0.0, f64::max);
                rep.push(Check::exact(format!("magnetizations nondecreasing from beta={b0} to {beta}"), drop, Some(0.0), drop, 1e-12));
            }
        }
        let batch = ctx.replicates(p.replicates, |r| {
            let s = spec.sample_spins(&mut ctx.rng(exp, k as u16, r));
            Ok(free.iter().map(|&v| s.sign(v)).collect::<Vec<f64>>())
        })?;
        rep.count(&format!("beta={beta}"), batch.attempted, batch.failed);
        for (i, &v) in free.iter().enumerate() {
            let xs = column(&batch.values, |s| s[i]);
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            // Null-hypothesis stderr; the sample one vanishes when every spin agrees.
            let se = ((1.0 - mags[v] * mags[v]).max(0.0) / xs.len() as f64).sqrt();
            rep.push(Check::z_target(format!("sampled <s[{}]> (beta={beta})", g.label(v)), mean, se, mags[v]));
        }
        previous = Some((beta, mags.into_inner()));
    }
    rep.finish();
    Ok(rep)
}

//! Martingale checks along budget-stopped jump paths from `x0`:
//! `E[M^{σΦ}_{t∧T}] = M_0`, `E[N_{t∧T}] = N_0`, and the exact identities
//! (sum against closed form for `N`, the reversed density against
//! `M^{+Φ}`, vanishing of `N_T` when `T` is a depletion away from `x0`).

use rklab_core::functionals::{log_eval_m, log_eval_n, log_rn_reversed, stopped_time, NMethod};
use rklab_core::mjp::simulate_until_budget;
use rklab_core::{EndReason, SpinVector};
use serde::Serialize;

use super::*;
use crate::report::Check;

/// Replicates that also go through the exact comparisons.
pub const EXACT_PREFIX: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleParams {
    pub times: Vec<f64>,
    /// Amplitude vectors in declared vertex order; one entry is broadcast.
    pub phis: Vec<Vec<f64>>,
    pub replicates: usize,
}

impl MartingaleParams {
    /// `t ∈ {0.25, 1}`; `Φ ≡ √2` and a graded vector (`√2` at `x0`, `1.3` down to `0.7` on `U`).
    pub fn defaults(g: &WeightedGraph, replicates: usize) -> Self {
        Self {
            times: vec![0.25, 1.0],
            phis: default_phis(g),
            replicates,
        }
    }
}

pub fn default_phis(g: &WeightedGraph) -> Vec<Vec<f64>> {
    let root2 = std::f64::consts::SQRT_2;
    let free = g.free_vertices();
    let mut graded = vec![root2; g.len()];
    for (k, &v) in free.iter().enumerate() {
        graded[v] = if free.len() == 1 {
            1.3
        } else {
            1.3 - 0.6 * k as f64 / (free.len() - 1) as f64
        };
    }
    vec![vec![root2; g.len()], graded]
}

/// All plus, the first free spin flipped, every free spin flipped.
pub fn sign_vectors(g: &WeightedGraph) -> Vec<SpinVector> {
    let free = g.free_vertices().len() as u32;
    let all = if free >= 32 { u32::MAX } else { (1u32 << free) - 1 };
    let mut masks = vec![0, 1, all];
    masks.dedup();
    masks.into_iter().map(|m| SpinVector::from_mask(g, m)).collect()
}

fn sign_label(g: &WeightedGraph, s: &SpinVector) -> String {
    g.free_vertices()
        .iter()
        .map(|&v| if s.sign(v) > 0.0 { '+' } else { '-' })
        .collect()
}

struct EvalAt {
    m: Vec<f64>,
    n: f64,
    /// `N` at `t < T` (so it must be positive).
    pre_stop: bool,
    sum_vs_closed: Option<f64>,
    rn_vs_m: Option<f64>,
}

struct Replicate {
    at: Vec<EvalAt>,
    /// `|N_T| / N_0` when `T` is a depletion away from `x0`.
    flipped: Option<f64>,
}

pub fn run_martingale_check(ctx: &Context<'_>, p: &MartingaleParams) -> Result<ExperimentReport> {
    check_replicates(p.replicates, 10)?;
    if p.times.is_empty() || p.phis.is_empty() {
        return Err(ExperimentError::Invalid("need at least one time and one amplitude vector".into()));
    }
    for &t in &p.times {
        check_positive("t", t)?;
    }
    let g = ctx.graph;
    let x0 = g.x0();
    let exp = Experiment::MartingaleCheck;
    let signs = sign_vectors(g);
    let plus = SpinVector::all_plus(g);
    let mut rep = ctx.report(exp, p);

    for (k, raw) in p.phis.iter().enumerate() {
        let phi = amplitude_vector(g, "Phi", raw)?;
        let tag = format!("Phi#{}", k + 1);
        let batch = ctx.replicates(p.replicates, |r| {
            let mut rng = ctx.rng(exp, k as u16, r);
            let path = simulate_until_budget(g, x0, &phi, &mut rng)?;
            ctx.dump_path(&format!("martingale-{tag}"), r, &path);
            let m0: Vec<_> = signs.iter().map(|s| log_eval_m(g, s, &phi, &path, 0.0)).collect::<rklab_core::Result<_>>()?;
            let n0 = log_eval_n(g, &phi, &path, 0.0, NMethod::Closed)?;
            let m0_plus = log_eval_m(g, &plus, &phi, &path, 0.0)?;
            let depletion = path.depletion_time(&phi);
            let mut at = Vec::with_capacity(p.times.len());
            for &t in &p.times {
                let s = stopped_time(&path, &phi, t);
                let m = signs
                    .iter()
                    .zip(&m0)
                    .map(|(sg, m0)| log_eval_m(g, sg, &phi, &path, s).map(|m| m.ratio(m0)))
                    .collect::<rklab_core::Result<Vec<f64>>>()?;
                let closed = log_eval_n(g, &phi, &path, s, NMethod::Closed)?;
                let n = closed.ratio(&n0);
                let pre_stop = depletion.is_none_or(|d| t < d);
                let (sum_vs_closed, rn_vs_m) = if r < EXACT_PREFIX {
                    let sum = log_eval_n(g, &phi, &path, s, NMethod::Sum)?.ratio(&n0);
                    let stopped_away = !pre_stop && path.position_at(s) != x0;
                    let denom = if stopped_away { 1.0 } else { n.abs() };
                    let rn = log_rn_reversed(g, &phi, &path, t)?;
                    let mp = log_eval_m(g, &plus, &phi, &path, s)?;
                    let rel = ((rn - (mp.log_abs - m0_plus.log_abs)).exp_m1()).abs();
                    (Some((sum - n).abs() / denom), Some(rel))
                } else {
                    (None, None)
                };
                at.push(EvalAt { m, n, pre_stop, sum_vs_closed, rn_vs_m });
            }
            let flipped = match path.end_reason() {
                EndReason::BudgetDepleted { vertex, .. } if vertex != x0 => {
                    let n_t = log_eval_n(g, &phi, &path, path.end_time(), NMethod::Closed)?;
                    Some(n_t.ratio(&n0).abs())
                }
                _ => None,
            };
            Ok(Replicate { at, flipped })
        })?;
        rep.count(&tag, batch.attempted, batch.failed);
        let rows = &batch.values;

        for (i, &t) in p.times.iter().enumerate() {
            for (j, s) in signs.iter().enumerate() {
                let xs = column(rows, |x| x.at[i].m[j]);
                let name = format!("E M[{}](t={t})/M_0 [{tag}] = 1", sign_label(g, s));
                rep.push(target_check(name, &xs, 1.0)?);
            }
            let ns = column(rows, |x| x.at[i].n);
            rep.push(target_check(format!("E N(t={t})/N_0 [{tag}] = 1"), &ns, 1.0)?);
            let bad = rows.iter().filter(|x| x.at[i].pre_stop && !(x.at[i].n > 0.0)).count();
            rep.push(Check::exact(format!("N(t={t}) > 0 before T [{tag}]"), bad as f64, Some(0.0), bad as f64, 0.0));
            let worst = rows.iter().filter_map(|x| x.at[i].sum_vs_closed).fold(0.0, f64::max);
            rep.push(Check::exact(format!("N sum vs closed (t={t}) [{tag}]"), worst, Some(0.0), worst, 1e-10));
            let worst = rows.iter().filter_map(|x| x.at[i].rn_vs_m).fold(0.0, f64::max);
            rep.push(Check::exact(format!("reversed density vs M[+](t={t})/M_0 [{tag}]"), worst, Some(0.0), worst, 1e-12));
        }
        let flips: Vec<f64> = rows.iter().filter_map(|x| x.flipped).collect();
        let worst = flips.iter().copied().fold(0.0, f64::max);
        rep.push(Check::exact(format!("|N_T|/N_0 on {} depletions away from x0 [{tag}]", flips.len()), worst, Some(0.0), worst, 1e-8));
    }
    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

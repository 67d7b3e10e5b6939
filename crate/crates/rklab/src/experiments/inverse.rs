//! Inversions: the field given `Φ` against the magnetized reversed process
//! followed by an Ising sign draw.
//!
//! Both pipelines generate `Φ` the same way from independent streams, so the
//! conditional laws agree iff the joint laws of `(Φ, field)` agree; the joint
//! laws are compared on a fixed panel of moments.

use rklab_core::gff::GaussianFreeField;
use rklab_core::ising::IsingSpec;
use rklab_core::mjp::{simulate_until_hit, simulate_until_tau};
use rklab_core::reinforced::{simulate_magnetized_reversed_with, EndKind, ReversedStop};
use rklab_core::stream::StreamRng;
use serde::Serialize;

use super::*;
use crate::report::Check;

#[derive(Debug, Clone, Serialize)]
pub struct InverseRk2Params {
    pub u: f64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseRk1Params {
    pub z0: String,
    pub s: f64,
    pub replicates: usize,
}

struct Sample {
    phi_amp: Vec<f64>,
    field: Vec<f64>,
    /// `ℓ` from the jump process (A) or `½(Φ² - L̂²)` (B).
    ell: Vec<f64>,
}

struct ReversedSample {
    sample: Sample,
    end_kind: EndKind,
    end_site: usize,
    clock: f64,
    y_end: f64,
}

fn amplitudes(ell: &[f64], shifted: &[f64]) -> Vec<f64> {
    ell.iter().zip(shifted).map(|(l, f)| (f * f + 2.0 * l).sqrt()).collect()
}

/// `Ž` from `start` under `Φ`, then `σ` under couplings `W L_i L_j`.
fn reversed_sample(
    ctx: &Context<'_>,
    name: &str,
    r: usize,
    phi_amp: Vec<f64>,
    start: usize,
    stop: ReversedStop,
    rng: &mut StreamRng,
) -> Result<ReversedSample> {
    let g = ctx.graph;
    let run = simulate_magnetized_reversed_with(g, &phi_amp, start, stop, &ctx.sim_options(), rng)?;
    ctx.dump_run(name, r, &run);
    let spec = IsingSpec::from_amplitudes(g, &run.l_end)?;
    let sigma = spec.sample_spins(rng);
    let field = (0..g.len()).map(|v| sigma.sign(v) * run.l_end[v]).collect();
    let ell = (0..g.len())
        .map(|v| 0.5 * (phi_amp[v] - run.l_end[v]) * (phi_amp[v] + run.l_end[v]))
        .collect();
    Ok(ReversedSample {
        clock: clock_deviation(&run, &phi_amp)?,
        y_end: y_end_deviation(&run, &phi_amp),
        end_kind: run.end_kind,
        end_site: run.end_site,
        sample: Sample { phi_amp, field, ell },
    })
}

/// Joint moments of `(Φ, field)` over the free vertices.
fn panel(rep: &mut ExperimentReport, g: &WeightedGraph, a: &[&Sample], b: &[&Sample]) -> Result<()> {
    let free = g.free_vertices();
    type Term = Box<dyn Fn(&Sample) -> f64>;
    let mut terms: Vec<(String, Term)> = Vec::new();
    for &v in free {
        let l = g.label(v);
        terms.push((format!("Phi[{l}]"), Box::new(move |x: &Sample| x.phi_amp[v])));
        terms.push((format!("Phi[{l}]^2"), Box::new(move |x: &Sample| x.phi_amp[v].powi(2))));
        terms.push((format!("field[{l}]"), Box::new(move |x: &Sample| x.field[v])));
        terms.push((format!("field[{l}]^2"), Box::new(move |x: &Sample| x.field[v].powi(2))));
        terms.push((format!("Phi[{l}]*field[{l}]"), Box::new(move |x: &Sample| x.phi_amp[v] * x.field[v])));
    }
    for (i, &v) in free.iter().enumerate() {
        for &w in &free[i + 1..] {
            let name = format!("field[{}]*field[{}]", g.label(v), g.label(w));
            terms.push((name, Box::new(move |x: &Sample| x.field[v] * x.field[w])));
        }
    }
    for (name, f) in &terms {
        rep.push(mean_check(format!("E {name}: A vs B"), &column(a, |x| f(x)), &column(b, |x| f(x)))?);
    }
    Ok(())
}

/// End-site checks plus the clock identity and `y_end` consistency over the `Ž` runs.
fn run_checks(rep: &mut ExperimentReport, g: &WeightedGraph, runs: &[ReversedSample], want: EndKind) {
    let x0 = g.x0();
    let bad = runs.iter().filter(|s| s.end_kind != want || s.end_site != x0).count();
    let what = match want {
        EndKind::Depleted => "depletion runs ending at x0",
        EndKind::HitX0 => "runs reaching x0 before depletion",
    };
    let frac = if runs.is_empty() { 0.0 } else { 1.0 - bad as f64 / runs.len() as f64 };
    rep.push(Check::exact(format!("fraction of {what}"), frac, Some(1.0), bad as f64, 0.0));
    let worst = runs.iter().map(|s| s.clock).fold(0.0, f64::max);
    rep.push(Check::exact("clock identity along B runs (relative)", worst, Some(0.0), worst, 1e-9));
    let worst = runs.iter().map(|s| s.y_end).fold(0.0, f64::max);
    rep.push(Check::exact("y_end = sum(Phi - L_end) (relative)", worst, Some(0.0), worst, 1e-9));
}

pub fn run_inverse_rk2(ctx: &Context<'_>, p: &InverseRk2Params) -> Result<ExperimentReport> {
    check_positive("u", p.u)?;
    check_replicates(p.replicates, 10)?;
    let g = ctx.graph;
    let x0 = g.x0();
    let exp = Experiment::InverseRk2;
    let gff = GaussianFreeField::new(g);

    let generate = |rng: &mut StreamRng, dump: Option<(&str, usize)>| -> Result<Sample> {
        let phi = gff.sample(rng);
        let path = simulate_until_tau(g, p.u, rng)?;
        if let Some((name, r)) = dump {
            ctx.dump_path(name, r, &path);
        }
        let ell = path.local_times(path.end_time())?.into_inner();
        Ok(Sample { phi_amp: amplitudes(&ell, &phi), field: phi.into_inner(), ell })
    };
    let a = ctx.replicates(p.replicates, |r| generate(&mut ctx.rng(exp, 0, r), Some(("inverse-rk2-A", r))))?;
    let b = ctx.replicates(p.replicates, |r| {
        let phi_amp = generate(&mut ctx.rng(exp, 1, r), None)?.phi_amp;
        let mut rng = ctx.rng(exp, 2, r);
        reversed_sample(ctx, "inverse-rk2-B", r, phi_amp, x0, ReversedStop::Depletion, &mut rng)
    })?;

    let mut rep = ctx.report(exp, p);
    rep.count("A", a.attempted, a.failed);
    rep.count("B", b.attempted, b.failed);
    let bs: Vec<&Sample> = b.values.iter().map(|s| &s.sample).collect();
    let av: Vec<&Sample> = a.values.iter().collect();

    let root = (2.0 * p.u).sqrt();
    let worst_root = av.iter().chain(&bs).map(|s| (s.phi_amp[x0] - root).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("Phi[{}] = sqrt(2u) in A and B", g.label(x0)), root, Some(root), worst_root, 1e-12 * root));
    let worst_ell = bs.iter().map(|s| (s.ell[x0] - p.u).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("B ell[{}] = u", g.label(x0)), p.u, Some(p.u), worst_ell, 1e-12 * p.u));
    run_checks(&mut rep, g, &b.values, EndKind::Depleted);
    for &v in g.free_vertices() {
        let l = g.label(v);
        rep.push(target_check(format!("E field[{l}] in A = 0"), &column(&av, |s| s.field[v]), 0.0)?);
        rep.push(target_check(format!("E field[{l}] in B = 0"), &column(&bs, |s| s.field[v]), 0.0)?);
    }
    panel(&mut rep, g, &av, &bs)?;
    for &v in g.free_vertices() {
        let l = g.label(v);
        let ea = column(&av, |s| s.ell[v]);
        let eb = column(&bs, |s| s.ell[v]);
        rep.push(mean_check(format!("E ell[{l}]: A vs B"), &ea, &eb)?);
        let sq = |xs: &[f64]| xs.iter().map(|x| x * x).collect::<Vec<f64>>();
        rep.push(mean_check(format!("E ell[{l}]^2: A vs B"), &sq(&ea), &sq(&eb))?);
    }
    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

pub fn run_inverse_rk1(ctx: &Context<'_>, p: &InverseRk1Params) -> Result<ExperimentReport> {
    check_positive("s", p.s)?;
    check_replicates(p.replicates, 10)?;
    let g = ctx.graph;
    let x0 = g.x0();
    let z0 = ctx.vertex(&p.z0)?;
    if z0 == x0 {
        return Err(ExperimentError::Invalid("z0 must differ from x0".into()));
    }
    let exp = Experiment::InverseRk1;
    let gff = GaussianFreeField::new(g);

    let generate = |rng: &mut StreamRng, dump: Option<(&str, usize)>| -> Result<Sample> {
        let phi = gff.sample(rng);
        let path = simulate_until_hit(g, z0, rng)?;
        if let Some((name, r)) = dump {
            ctx.dump_path(name, r, &path);
        }
        let ell = path.local_times(path.end_time())?.into_inner();
        let shifted: Vec<f64> = phi.iter().map(|x| x + p.s).collect();
        Ok(Sample { phi_amp: amplitudes(&ell, &shifted), field: shifted, ell })
    };
    let a = ctx.replicates(p.replicates, |r| generate(&mut ctx.rng(exp, 0, r), Some(("inverse-rk1-A", r))))?;
    let b = ctx.replicates(p.replicates, |r| {
        let phi_amp = generate(&mut ctx.rng(exp, 1, r), None)?.phi_amp;
        let mut rng = ctx.rng(exp, 2, r);
        reversed_sample(ctx, "inverse-rk1-B", r, phi_amp, z0, ReversedStop::HitX0, &mut rng)
    })?;

    let mut rep = ctx.report(exp, p);
    rep.count("A", a.attempted, a.failed);
    rep.count("B", b.attempted, b.failed);
    let bs: Vec<&Sample> = b.values.iter().map(|s| &s.sample).collect();
    let av: Vec<&Sample> = a.values.iter().collect();

    let lx = g.label(x0);
    let worst_a = av.iter().map(|s| (s.field[x0] - p.s).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("A field[{lx}] = s"), p.s, Some(p.s), worst_a, 1e-12 * p.s));
    let worst_b = bs.iter().map(|s| (s.field[x0] - p.s).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("B field[{lx}] = s"), p.s, Some(p.s), worst_b, 1e-12 * p.s));
    run_checks(&mut rep, g, &b.values, EndKind::HitX0);
    panel(&mut rep, g, &av, &bs)?;
    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

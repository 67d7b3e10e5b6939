//! Change of measure: `E_MJP[D · f] = E_process[f]` for the three reinforced
//! processes started at `x0`, where `D` is the VRJP density, the reversed
//! density, or `N_{t∧T} / N_0` for the magnetized process.

use rklab_core::functionals::{log_eval_n, rn_reversed, rn_vrjp, stopped_time, NMethod};
use rklab_core::mjp::{simulate_until_budget, simulate_until_horizon};
use rklab_core::reinforced::{
    simulate_magnetized_reversed_with, simulate_reversed_vrjp_with, simulate_vrjp_timechanged_with, EndKind,
    ReversedStop,
};
use serde::Serialize;

use super::*;
use crate::report::Check;

#[derive(Debug, Clone, Serialize)]
pub struct RnParams {
    pub t_vrjp: f64,
    pub t_reversed: f64,
    pub t_magnetized: f64,
    pub phi_vrjp: Vec<f64>,
    pub phi_reversed: Vec<f64>,
    pub phi_magnetized: Vec<f64>,
    pub replicates: usize,
}

impl RnParams {
    pub fn defaults(replicates: usize) -> Self {
        Self {
            t_vrjp: 1.0,
            t_reversed: 0.5,
            t_magnetized: 0.5,
            phi_vrjp: vec![1.0],
            phi_reversed: vec![2.0],
            phi_magnetized: vec![std::f64::consts::SQRT_2],
            replicates,
        }
    }
}

/// Names of the test functions, in the order [`panel`] evaluates them.
fn panel_names(g: &WeightedGraph) -> Vec<String> {
    let x0 = g.x0();
    let mut names = vec!["1".to_string()];
    for k in 0..3 {
        names.push(format!("#jumps<={k}"));
    }
    for &(a, _, _) in g.neighbors(x0) {
        names.push(format!("first jump to {}", g.label(a)));
    }
    for v in 0..g.len() {
        names.push(format!("ell[{}]", g.label(v)));
    }
    names
}

fn panel(g: &WeightedGraph, path: &JumpPath, s: f64) -> rklab_core::Result<Vec<f64>> {
    let ind = |b: bool| if b { 1.0 } else { 0.0 };
    let n = path.jumps_until(s);
    let mut out = vec![1.0];
    for k in 0..3 {
        out.push(ind(n <= k));
    }
    let first = path.jumps().first().filter(|j| j.time <= s).map(|j| j.target);
    for &(a, _, _) in g.neighbors(g.x0()) {
        out.push(ind(first == Some(a)));
    }
    out.extend(path.local_times(s)?.into_inner());
    Ok(out)
}

struct Weighted {
    w: f64,
    f: Vec<f64>,
}

fn compare(rep: &mut ExperimentReport, names: &[String], tag: &str, mjp: &[Weighted], process: &[Vec<f64>]) -> Result<()> {
    for (k, name) in names.iter().enumerate() {
        let a: Vec<f64> = mjp.iter().map(|x| x.w * x.f[k]).collect();
        let b: Vec<f64> = process.iter().map(|x| x[k]).collect();
        rep.push(mean_check(format!("{tag}: E_MJP[D {name}] vs E[{name}]"), &a, &b)?);
    }
    Ok(())
}

pub fn run_rn_check(ctx: &Context<'_>, p: &RnParams) -> Result<ExperimentReport> {
    check_replicates(p.replicates, 10)?;
    for (name, t) in [("t-vrjp", p.t_vrjp), ("t-reversed", p.t_reversed), ("t-magnetized", p.t_magnetized)] {
        check_positive(name, t)?;
    }
    let g = ctx.graph;
    let x0 = g.x0();
    let exp = Experiment::RnCheck;
    let opts = ctx.sim_options();
    let names = panel_names(g);
    let phi_v = amplitude_vector(g, "phi-vrjp", &p.phi_vrjp)?;
    let phi_r = amplitude_vector(g, "phi-reversed", &p.phi_reversed)?;
    let phi_m = amplitude_vector(g, "phi-magnetized", &p.phi_magnetized)?;
    let mut rep = ctx.report(exp, p);

    let t = p.t_vrjp;
    let mjp = ctx.replicates(p.replicates, |r| {
        let path = simulate_until_horizon(g, x0, t, &mut ctx.rng(exp, 0, r))?;
        ctx.dump_path("rn-vrjp-mjp", r, &path);
        Ok(Weighted { w: rn_vrjp(g, &phi_v, &path, t)?, f: panel(g, &path, t)? })
    })?;
    let process = ctx.replicates(p.replicates, |r| {
        let run = simulate_vrjp_timechanged_with(g, &phi_v, x0, t, &opts, &mut ctx.rng(exp, 1, r))?;
        ctx.dump_path("rn-vrjp-Z", r, &run.path);
        Ok(panel(g, &run.path, t)?)
    })?;
    rep.count("vrjp MJP", mjp.attempted, mjp.failed);
    rep.count("vrjp Z", process.attempted, process.failed);
    compare(&mut rep, &names, "vrjp", &mjp.values, &process.values)?;

    let t = p.t_reversed;
    let mjp = ctx.replicates(p.replicates, |r| {
        let path = simulate_until_budget(g, x0, &phi_r, &mut ctx.rng(exp, 2, r))?;
        ctx.dump_path("rn-reversed-mjp", r, &path);
        let s = stopped_time(&path, &phi_r, t);
        Ok(Weighted { w: rn_reversed(g, &phi_r, &path, t)?, f: panel(g, &path, s)? })
    })?;
    let process = ctx.replicates(p.replicates, |r| {
        let run = simulate_reversed_vrjp_with(g, &phi_r, x0, &opts, &mut ctx.rng(exp, 3, r))?;
        ctx.dump_run("rn-reversed-Z", r, &run);
        Ok(panel(g, &run.z_path, t.min(run.z_path.end_time()))?)
    })?;
    rep.count("reversed MJP", mjp.attempted, mjp.failed);
    rep.count("reversed Z", process.attempted, process.failed);
    compare(&mut rep, &names, "reversed", &mjp.values, &process.values)?;

    let t = p.t_magnetized;
    let mjp = ctx.replicates(p.replicates, |r| {
        let path = simulate_until_budget(g, x0, &phi_m, &mut ctx.rng(exp, 4, r))?;
        ctx.dump_path("rn-magnetized-mjp", r, &path);
        let s = stopped_time(&path, &phi_m, t);
        let n0 = log_eval_n(g, &phi_m, &path, 0.0, NMethod::Closed)?;
        let n = log_eval_n(g, &phi_m, &path, s, NMethod::Closed)?;
        Ok(Weighted { w: n.ratio(&n0), f: panel(g, &path, s)? })
    })?;
    let process = ctx.replicates(p.replicates, |r| {
        let run = simulate_magnetized_reversed_with(g, &phi_m, x0, ReversedStop::Depletion, &opts, &mut ctx.rng(exp, 5, r))?;
        ctx.dump_run("rn-magnetized-Z", r, &run);
        let f = panel(g, &run.z_path, t.min(run.z_path.end_time()))?;
        let at_x0 = run.end_kind == EndKind::Depleted && run.end_site == x0;
        Ok((f, at_x0, clock_deviation(&run, &phi_m)?))
    })?;
    rep.count("magnetized MJP", mjp.attempted, mjp.failed);
    rep.count("magnetized Z", process.attempted, process.failed);
    let fs: Vec<Vec<f64>> = process.values.iter().map(|x| x.0.clone()).collect();
    compare(&mut rep, &names, "magnetized", &mjp.values, &fs)?;
    let bad = process.values.iter().filter(|x| !x.1).count();
    rep.push(Check::exact("magnetized runs not ending at x0", bad as f64, Some(0.0), bad as f64, 0.0));
    let worst = process.values.iter().map(|x| x.2).fold(0.0, f64::max);
    rep.push(Check::exact("clock identity along magnetized runs (relative)", worst, Some(0.0), worst, 1e-9));

    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

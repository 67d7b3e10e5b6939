//! `(ℓ(τ_u) + ½φ²)` against `½(φ + √(2u))²`.

use rklab_core::gff::GaussianFreeField;
use rklab_core::mjp::simulate_until_tau;
use serde::Serialize;

use super::*;
use crate::report::Check;
use crate::stats::two_sample_ks;

#[derive(Debug, Clone, Serialize)]
pub struct Rk2Params {
    pub u: f64,
    pub replicates: usize,
    /// Sample B is drawn at level `control_factor · u`; anything but 1 is a
    /// deliberately wrong law that the comparison should reject.
    pub control_factor: f64,
}

pub fn run_rk2(ctx: &Context<'_>, p: &Rk2Params) -> Result<ExperimentReport> {
    check_positive("u", p.u)?;
    check_positive("control factor", p.control_factor)?;
    check_replicates(p.replicates, 1000)?;
    let g = ctx.graph;
    let exp = Experiment::Rk2;
    let gff = GaussianFreeField::new(g);
    let u_b = p.control_factor * p.u;
    let shift = (2.0 * u_b).sqrt();

    let a = ctx.replicates(p.replicates, |r| {
        let mut rng = ctx.rng(exp, 0, r);
        let phi = gff.sample(&mut rng);
        let path = simulate_until_tau(g, p.u, &mut rng)?;
        ctx.dump_path("rk2-A", r, &path);
        let ell = path.local_times(path.end_time())?.into_inner();
        Ok((0..g.len()).map(|v| ell[v] + 0.5 * phi[v] * phi[v]).collect::<Vec<f64>>())
    })?;
    let b = ctx.replicates(p.replicates, |r| {
        let mut rng = ctx.rng(exp, 1, r);
        let phi = gff.sample(&mut rng);
        Ok((0..g.len()).map(|v| 0.5 * (phi[v] + shift).powi(2)).collect::<Vec<f64>>())
    })?;

    let mut rep = ctx.report(exp, p);
    rep.count("A", a.attempted, a.failed);
    rep.count("B", b.attempted, b.failed);

    let x0 = g.x0();
    let worst = |rows: &[Vec<f64>]| rows.iter().map(|x| (x[x0] - p.u).abs()).fold(0.0, f64::max) / p.u;
    let a0 = column(&a.values, |x| x[x0]);
    let b0 = column(&b.values, |x| x[x0]);
    rep.push(Check::exact(format!("A[{}] = u", g.label(x0)), a0[0], Some(p.u), worst(&a.values), 1e-12));
    rep.push(Check::exact(format!("B[{}] = u", g.label(x0)), b0[0], Some(p.u), worst(&b.values), 1e-12));

    let green = g.green_function();
    for &v in g.free_vertices() {
        let label = g.label(v);
        let xa = column(&a.values, |x| x[v]);
        let xb = column(&b.values, |x| x[v]);
        let (d, pv) = two_sample_ks(&xa, &xb)?;
        rep.push(Check::ks(format!("ks A[{label}] vs B[{label}]"), d, pv));
        rep.push(mean_check(format!("mean A[{label}] vs B[{label}]"), &xa, &xb)?);
        rep.push(variance_check(format!("var A[{label}] vs B[{label}]"), &xa, &xb)?);
        let k = g.free_position(v).expect("free vertex");
        let target = p.u + 0.5 * green[(k, k)];
        rep.push(target_check(format!("mean A[{label}] = u + g({label},{label})/2"), &xa, target)?);
    }
    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

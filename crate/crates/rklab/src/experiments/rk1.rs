//! `ℓ(H_x0) + ½(φ + s)²` from `z0` against `½(φ + s)²` under the signed
//! weight `1 + φ_z0 / s`, and under its positive reformulation
//! `⟨σ_z0⟩ |s + φ_z0| / s` with couplings `W_ij |φ_i + s| |φ_j + s|`.

use rklab_core::gff::GaussianFreeField;
use rklab_core::ising::IsingSpec;
use rklab_core::mjp::simulate_until_hit;
use serde::Serialize;

use super::*;
use crate::report::{Check, MIN_ESS};
use crate::stats::weighted_moment_ci;

#[derive(Debug, Clone, Serialize)]
pub struct Rk1Params {
    pub z0: String,
    pub s: f64,
    pub replicates: usize,
}

struct Weighted {
    values: Vec<f64>,
    signed: f64,
    positive: f64,
}

pub fn run_rk1(ctx: &Context<'_>, p: &Rk1Params) -> Result<ExperimentReport> {
    check_positive("s", p.s)?;
    check_replicates(p.replicates, 10)?;
    let g = ctx.graph;
    let x0 = g.x0();
    let z0 = ctx.vertex(&p.z0)?;
    if z0 == x0 {
        return Err(ExperimentError::Invalid("z0 must differ from x0".into()));
    }
    let exp = Experiment::Rk1;
    let gff = GaussianFreeField::new(g);

    let a = ctx.replicates(p.replicates, |r| {
        let mut rng = ctx.rng(exp, 0, r);
        let phi = gff.sample(&mut rng);
        let path = simulate_until_hit(g, z0, &mut rng)?;
        ctx.dump_path("rk1-A", r, &path);
        let ell = path.local_times(path.end_time())?.into_inner();
        Ok((0..g.len()).map(|v| ell[v] + 0.5 * (phi[v] + p.s).powi(2)).collect::<Vec<f64>>())
    })?;
    let b = ctx.replicates(p.replicates, |r| {
        let mut rng = ctx.rng(exp, 1, r);
        let phi = gff.sample(&mut rng);
        let abs: Vec<f64> = phi.iter().map(|x| (x + p.s).abs()).collect();
        let spec = IsingSpec::from_amplitudes(g, &abs)?;
        Ok(Weighted {
            values: (0..g.len()).map(|v| 0.5 * (phi[v] + p.s).powi(2)).collect(),
            signed: 1.0 + phi[z0] / p.s,
            positive: spec.magnetization(z0) * abs[z0] / p.s,
        })
    })?;

    let mut rep = ctx.report(exp, p);
    rep.count("A", a.attempted, a.failed);
    rep.count("B", b.attempted, b.failed);

    let half = 0.5 * p.s * p.s;
    let lx = g.label(x0);
    let worst_a = a.values.iter().map(|x| (x[x0] - half).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("A[{lx}] = s^2/2"), half, Some(half), worst_a, 1e-12 * half));
    let worst_b = b.values.iter().map(|x| (x.values[x0] - half).abs()).fold(0.0, f64::max);
    rep.push(Check::exact(format!("B[{lx}] = s^2/2"), half, Some(half), worst_b, 1e-12 * half));

    let signed = column(&b.values, |x| x.signed);
    let positive = column(&b.values, |x| x.positive);
    rep.push(target_check("mean signed weight = 1".into(), &signed, 1.0)?);
    rep.push(target_check("mean positive weight = 1".into(), &positive, 1.0)?);

    for (name, w) in [("signed", &signed), ("positive", &positive)] {
        let ones = vec![1.0; w.len()];
        let ess = weighted_moment_ci(&ones, w)?.ess;
        rep.push(Check::info(format!("ESS of B ({name} weights)"), ess, None));
        if ess < MIN_ESS {
            rep.warnings.push(format!("effective sample size with {name} weights is {ess:.3}"));
        }
    }

    for &v in g.free_vertices() {
        let l = g.label(v);
        for (k, tag) in [(1, "E"), (2, "E^2")] {
            let xa: Vec<f64> = a.values.iter().map(|x| x[v].powi(k)).collect();
            let xb: Vec<f64> = b.values.iter().map(|x| x.values[v].powi(k)).collect();
            let ma = crate::stats::mean_stderr(&xa)?;
            let ms = weighted_moment_ci(&xb, &signed)?;
            let mp = weighted_moment_ci(&xb, &positive)?;
            rep.push(Check::z_two_sample(
                format!("{tag} A[{l}] vs signed B[{l}]"),
                (ma.mean, ma.stderr),
                (ms.mean, ms.stderr),
            ));
            rep.push(Check::z_two_sample(
                format!("{tag} A[{l}] vs positive B[{l}]"),
                (ma.mean, ma.stderr),
                (mp.mean, mp.stderr),
            ));
            rep.push(Check::z_two_sample(
                format!("{tag} signed B[{l}] vs positive B[{l}]"),
                (ms.mean, ms.stderr),
                (mp.mean, mp.stderr),
            ));
        }
    }
    ctx.flush_dump()?;
    rep.finish();
    Ok(rep)
}

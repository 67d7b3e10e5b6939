//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use rayon::ThreadPool;
use rklab::cli::thread_pool;
use rklab::experiments::*;
use rklab::graph_file::builtin;
use rklab::report::{CheckKind, ExperimentReport, Verdict, MAX_FAILURE_RATE};
use rklab_core::reinforced::{simulate_magnetized_reversed_with, EndKind, ReversedStop};
use rklab_core::WeightedGraph;

const SEED: u64 = 20_240_601;
/// Graphs for the identity checks.
const REFERENCE: [&str; 2] = ["triangle", "cycle-chord"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn failures(rep: &ExperimentReport) -> Vec<String> {
    rep.failed_checks().map(|c| c.name.clone()).collect()
}

fn summary(reps: &[&ExperimentReport]) -> Outcome {
    let mut failed = Vec::new();
    let mut checks = 0;
    let mut breach = false;
    for r in reps {
        checks += r.checks.iter().filter(|c| c.kind != CheckKind::Info).count();
        failed.extend(failures(r).into_iter().map(|n| format!("{}: {n}", r.experiment)));
        breach |= r.failure_rate > MAX_FAILURE_RATE;
    }
    let worst_rate = reps.iter().map(|r| r.failure_rate).fold(0.0, f64::max);
    Outcome {
        pass: failed.is_empty() && !breach,
        detail: if failed.is_empty() {
            format!("{checks} checks, numerical-failure rate <= {worst_rate:.2e}")
        } else {
            format!("{} of {checks} checks failed: {}", failed.len(), failed.join("; "))
        },
    }
}

fn ctx<'a>(g: &'a WeightedGraph, pool: &'a ThreadPool) -> Context<'a> {
    Context::new(g, SEED, pool)
}

fn graph(name: &str) -> WeightedGraph {
    builtin(name).unwrap()
}

fn exactness(pool: &ThreadPool) -> Outcome {
    let mut failed = Vec::new();
    let mut count = 0;
    for name in ["single-edge", "triangle", "cycle-chord"] {
        let g = graph(name);
        let c = ctx(&g, pool);
        let rep = run_martingale_check(&c, &MartingaleParams::defaults(&g, 1000)).unwrap();
        for chk in &rep.checks {
            let gate = chk.name.starts_with("N sum vs closed")
                || chk.name.starts_with("|N_T|/N_0")
                || chk.name.starts_with("reversed density vs M");
            if gate {
                count += 1;
                if chk.verdict != Verdict::Pass {
                    failed.push(format!("{name}: {}", chk.name));
                }
            }
        }
        let phi: Vec<f64> = (0..g.len()).map(|v| 1.0 + 0.3 * v as f64).collect();
        let opts = c.sim_options();
        let worst = c
            .replicates(1000, |r| {
                let run = simulate_magnetized_reversed_with(&g, &phi, g.x0(), ReversedStop::Depletion, &opts, &mut c.rng(Experiment::InverseRk2, 9, r))?;
                clock_deviation(&run, &phi)
            })
            .unwrap();
        count += 1;
        let w = worst.values.iter().copied().fold(0.0, f64::max);
        if w > 1e-9 || worst.failed > 0 {
            failed.push(format!("{name}: clock identity deviation {w:.3e}"));
        }
    }
    let g = graph("single-edge");
    let rep = run_ising_table(&ctx(&g, pool), &IsingTableParams { betas: vec![0.05, 0.5, 2.5], replicates: 100 }).unwrap();
    for chk in rep.checks.iter().filter(|c| c.name.starts_with("Z = 2cosh") || c.name.starts_with("<s> = tanh")) {
        count += 1;
        if chk.verdict != Verdict::Pass {
            failed.push(chk.name.clone());
        }
    }
    Outcome {
        pass: failed.is_empty() && count == 3 * 11 + 6,
        detail: format!("{count} gates, failed: [{}]", failed.join("; ")),
    }
}

fn martingales(pool: &ThreadPool) -> Outcome {
    let g = graph("triangle");
    let rep = run_martingale_check(&ctx(&g, pool), &MartingaleParams::defaults(&g, 100_000)).unwrap();
    summary(&[&rep])
}

fn change_of_measure(pool: &ThreadPool) -> Outcome {
    let g = graph("triangle");
    let rep = run_rn_check(&ctx(&g, pool), &RnParams::defaults(100_000)).unwrap();
    summary(&[&rep])
}

fn endpoints(pool: &ThreadPool) -> Outcome {
    let g = graph("triangle");
    let c = ctx(&g, pool);
    let a = g.index_of("a").unwrap();
    let phi = [std::f64::consts::SQRT_2, 1.3, 0.7];
    let opts = c.sim_options();
    let mut parts = Vec::new();
    let mut pass = true;
    for (label, start, stop, want) in [
        ("depletion from x0", g.x0(), ReversedStop::Depletion, EndKind::Depleted),
        ("hit-x0 from a", a, ReversedStop::HitX0, EndKind::HitX0),
    ] {
        let batch = c
            .replicates(10_000, |r| {
                let run = simulate_magnetized_reversed_with(&g, &phi, start, stop, &opts, &mut c.rng(Experiment::InverseRk1, 9, r))?;
                Ok(run.end_kind == want && run.end_site == g.x0())
            })
            .unwrap();
        let good = batch.values.iter().filter(|&&b| b).count();
        let rate = batch.failed as f64 / batch.attempted as f64;
        pass &= good == batch.values.len() && rate <= MAX_FAILURE_RATE;
        parts.push(format!("{label}: {good}/{} at x0, {} numerical failures", batch.values.len(), batch.failed));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn rk2(pool: &ThreadPool) -> Outcome {
    let mut runs = Vec::new();
    let mut expected = 0;
    for name in REFERENCE {
        let g = graph(name);
        expected += 2 * g.free_vertices().len();
        for u in [0.5, 1.0] {
            runs.push(run_rk2(&ctx(&g, pool), &Rk2Params { u, replicates: 20_000, control_factor: 1.0 }).unwrap());
        }
    }
    let mut out = summary(&runs.iter().collect::<Vec<_>>());
    let analytic = runs.iter().flat_map(|r| &r.checks).filter(|c| c.name.contains("u + g(")).count();
    let g = graph("triangle");
    let control = run_rk2(&ctx(&g, pool), &Rk2Params { u: 1.0, replicates: 20_000, control_factor: 1.5 }).unwrap();
    let rejected = control
        .checks
        .iter()
        .filter(|c| c.kind == CheckKind::Ks && c.verdict == Verdict::Fail)
        .map(|c| format!("{} (p = {:.1e})", c.name, c.p_value.unwrap()))
        .collect::<Vec<_>>();
    out.pass &= analytic == expected && !rejected.is_empty() && control.verdict == Verdict::Fail;
    out.detail = format!("{}; control u' = 1.5u rejected by [{}]", out.detail, rejected.join(", "));
    out
}

fn inverse_rk2(pool: &ThreadPool) -> Outcome {
    let runs: Vec<ExperimentReport> = REFERENCE
        .iter()
        .map(|name| run_inverse_rk2(&ctx(&graph(name), pool), &InverseRk2Params { u: 1.0, replicates: 20_000 }).unwrap())
        .collect();
    summary(&runs.iter().collect::<Vec<_>>())
}

fn rk1(pool: &ThreadPool) -> Outcome {
    let mut runs = Vec::new();
    for name in REFERENCE {
        let g = graph(name);
        for s in [0.5, 1.0] {
            runs.push(run_rk1(&ctx(&g, pool), &Rk1Params { z0: "a".into(), s, replicates: 50_000 }).unwrap());
        }
    }
    summary(&runs.iter().collect::<Vec<_>>())
}

fn inverse_rk1(pool: &ThreadPool) -> Outcome {
    let runs: Vec<ExperimentReport> = REFERENCE
        .iter()
        .map(|name| {
            let p = InverseRk1Params { z0: "a".into(), s: 1.0, replicates: 20_000 };
            run_inverse_rk1(&ctx(&graph(name), pool), &p).unwrap()
        })
        .collect();
    summary(&runs.iter().collect::<Vec<_>>())
}

fn every_experiment(g: &WeightedGraph, pool: &ThreadPool) -> Vec<String> {
    let c = ctx(g, pool);
    let n = 2000;
    vec![
        run_rk2(&c, &Rk2Params { u: 1.0, replicates: n, control_factor: 1.0 }).unwrap().to_json(),
        run_inverse_rk2(&c, &InverseRk2Params { u: 1.0, replicates: n }).unwrap().to_json(),
        run_rk1(&c, &Rk1Params { z0: "a".into(), s: 1.0, replicates: n }).unwrap().to_json(),
        run_inverse_rk1(&c, &InverseRk1Params { z0: "a".into(), s: 1.0, replicates: n }).unwrap().to_json(),
        run_martingale_check(&c, &MartingaleParams::defaults(g, n)).unwrap().to_json(),
        run_rn_check(&c, &RnParams::defaults(n)).unwrap().to_json(),
        run_ising_table(&c, &IsingTableParams::defaults(n)).unwrap().to_json(),
    ]
}

fn reproducibility(_: &ThreadPool) -> Outcome {
    let g = graph("triangle");
    let one = thread_pool(Some(1)).unwrap();
    let four = thread_pool(Some(4)).unwrap();
    let a = every_experiment(&g, &one);
    let b = every_experiment(&g, &one);
    let c = every_experiment(&g, &four);
    let same = (0..a.len()).filter(|&i| a[i] == b[i] && a[i] == c[i]).count();
    Outcome {
        pass: same == a.len(),
        detail: format!("{same}/{} experiments identical across reruns and 1 vs 4 threads", a.len()),
    }
}

fn main() {
    let pool = thread_pool(None).unwrap();
    type Criterion = fn(&ThreadPool) -> Outcome;
    let criteria: [(&str, Criterion); 9] = [
        ("exactness gates", exactness),
        ("martingale suite", martingales),
        ("change of measure", change_of_measure),
        ("reversed runs end at x0", endpoints),
        ("second Ray-Knight identity", rk2),
        ("inversion at tau_u", inverse_rk2),
        ("first Ray-Knight identity", rk1),
        ("inversion at H_x0", inverse_rk1),
        ("reproducibility", reproducibility),
    ];
    let mut all = true;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f(&pool);
        all &= out.pass;
        println!(
            "criterion {}: {} {name} ({:.1}s) {}",
            k + 1,
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}

//! Independent reference simulators and small statistics helpers.
#![allow(dead_code)]

use rand::Rng;
use rklab_core::WeightedGraph;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Per-neighbor Euler discretization of a jump process whose rates depend on
/// the local-time vector. Holdings are quantized to `dt`.
pub struct Euler {
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct EulerRun {
    pub jumps: Vec<(f64, usize)>,
    pub end_time: f64,
    pub end_site: usize,
    pub ell: Vec<f64>,
}

/// Brute-force magnetizations by listing all spin configurations.
pub fn brute_magnetizations(g: &WeightedGraph, amp: &[f64]) -> Vec<f64> {
    let free: Vec<usize> = (0..g.len()).filter(|&v| v != g.x0()).collect();
    let mut z = 0.0;
    let mut m = vec![0.0; g.len()];
    let shift: f64 = g.edges().iter().map(|e| e.weight * amp[e.u] * amp[e.v]).sum();
    for mask in 0..1u32 << free.len() {
        let mut s = vec![1.0; g.len()];
        for (k, &v) in free.iter().enumerate() {
            if mask >> k & 1 == 1 {
                s[v] = -1.0;
            }
        }
        let en: f64 = g.edges().iter().map(|e| e.weight * amp[e.u] * amp[e.v] * s[e.u] * s[e.v]).sum();
        let w = (en - shift).exp();
        z += w;
        for v in 0..g.len() {
            m[v] += w * s[v];
        }
    }
    m.iter().map(|x| x / z).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Vrjp,
    Reversed,
    Magnetized,
}

impl Euler {
    /// Runs until `horizon` (VRJP) or first depletion (reversed kinds).
    pub fn run<R: Rng>(&self, g: &WeightedGraph, kind: Kind, phi: &[f64], start: usize, horizon: f64, rng: &mut R) -> EulerRun {
        let n = g.len();
        let mut ell = vec![0.0; n];
        let mut at = start;
        let mut t = 0.0;
        let mut jumps = Vec::new();
        loop {
            let amp: Vec<f64> = match kind {
                Kind::Vrjp => (0..n).map(|v| (phi[v] * phi[v] + 2.0 * ell[v]).sqrt()).collect(),
                _ => (0..n).map(|v| (phi[v] * phi[v] - 2.0 * ell[v]).max(0.0).sqrt()).collect(),
            };
            // Near depletion the rates blow up like 1/r; refine the grid geometrically.
            let step = if kind == Kind::Vrjp {
                if t + self.dt > horizon {
                    return EulerRun { jumps, end_time: horizon, end_site: at, ell };
                }
                self.dt
            } else {
                let budget = 0.5 * phi[at] * phi[at];
                let rem = budget - ell[at];
                if rem <= (0.5 * (1e-9 * phi[at]).powi(2)).max(1e3 * f64::EPSILON * budget) {
                    t += rem;
                    ell[at] = budget;
                    return EulerRun { jumps, end_time: t, end_site: at, ell };
                }
                self.dt.min(rem / 64.0)
            };
            let mag = if kind == Kind::Magnetized { brute_magnetizations(g, &amp) } else { vec![1.0; n] };
            let u: f64 = rng.random();
            let mut total = 0.0;
            let rates: Vec<(usize, f64)> = g
                .neighbors(at)
                .iter()
                .map(|&(j, w, _)| {
                    let r = w * amp[j] / amp[at] * mag[j] / mag[at];
                    total += r;
                    (j, r)
                })
                .collect();
            let p_jump = -(-total * step).exp_m1();
            let mut next = None;
            if u < p_jump {
                let mut acc = 0.0;
                for &(j, r) in &rates {
                    acc += r / total * p_jump;
                    if u < acc {
                        next = Some(j);
                        break;
                    }
                }
                next = next.or(rates.last().map(|x| x.0));
            }
            ell[at] += step;
            t += step;
            if let Some(j) = next {
                at = j;
                jumps.push((t, j));
            }
        }
    }
}

/// Chi-square homogeneity test for two count vectors; bins with no counts are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> f64 {
    let na: f64 = a.iter().sum::<u64>() as f64;
    let nb: f64 = b.iter().sum::<u64>() as f64;
    let mut stat = 0.0;
    let mut bins = 0;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        bins += 1;
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    if bins < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// z-score of the difference of two independent sample means.
pub fn two_sample_z(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_se(a);
    let (mb, sb) = mean_se(b);
    (ma - mb) / (sa * sa + sb * sb).sqrt()
}

//! The Markov jump process with rates `W_{ij}` and its stopping rules.
//!
//! Each step at vertex `i` consumes one uniform for the holding time
//! (`Exp(W_i)` by inversion) and, if the holding is not truncated by the
//! stopping rule, one uniform for the target (`j` with probability
//! `W_{ij}/W_i`, neighbors in edge-declaration order). Truncated holdings
//! do not consume the target uniform.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::path::{half_square, EndReason, Jump, JumpPath};
use crate::stream::{exp1, uniform};

/// Stopping rule for [`simulate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    /// `τ_u`: local time at `x0` reaches `u`.
    InverseLocalTime(f64),
    /// First arrival at `x0`.
    HitX0,
    /// First time some `ℓ_i` reaches `Φ_i²/2`.
    Budget(Vec<f64>),
    /// Fixed horizon.
    Horizon(f64),
}

/// Picks a neighbor of `i` with probability proportional to `weights[k]`.
pub(crate) fn pick_neighbor(g: &WeightedGraph, i: usize, weights: impl Fn(usize, f64) -> f64, u: f64) -> usize {
    let nb = g.neighbors(i);
    let total: f64 = nb.iter().map(|&(j, w, _)| weights(j, w)).sum();
    let mut acc = 0.0;
    let threshold = u * total;
    for &(j, w, _) in nb {
        acc += weights(j, w);
        if threshold < acc {
            return j;
        }
    }
    // Rounding can leave `threshold` at `total`; take the last positive weight.
    nb.iter()
        .rev()
        .find(|&&(j, w, _)| weights(j, w) > 0.0)
        .map_or(nb[nb.len() - 1].0, |&(j, _, _)| j)
}

/// Runs the jump process from `start` until `stop`.
pub fn simulate<R: RngCore + ?Sized>(g: &WeightedGraph, start: usize, stop: &Stop, rng: &mut R) -> Result<JumpPath> {
    g.check_vertex(start)?;
    let n = g.len();
    let x0 = g.x0();
    match stop {
        Stop::InverseLocalTime(u) | Stop::Horizon(u) if !(u.is_finite() && *u > 0.0) => {
            return Err(Error::NonPositive { name: "stopping level", value: *u });
        }
        Stop::Budget(phi) => {
            g.check_len(phi.len())?;
            if let Some(v) = phi.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
                return Err(Error::NonPositiveEntry { name: "Φ", vertex: v, value: phi[v] });
            }
        }
        _ => {}
    }
    if *stop == Stop::HitX0 && start == x0 {
        return Ok(JumpPath::new(n, start, Vec::new(), 0.0, EndReason::HitX0));
    }

    let budgets: Vec<f64> = match stop {
        Stop::Budget(phi) => phi.iter().map(|&p| half_square(p)).collect(),
        _ => Vec::new(),
    };
    let mut ell = vec![0.0; n];
    let mut jumps = Vec::new();
    let mut t = 0.0;
    let mut at = start;
    loop {
        let hold = exp1(rng) / g.total_weight(at);
        match stop {
            Stop::InverseLocalTime(u) if at == x0 && ell[x0] + hold >= *u => {
                let end = t + (*u - ell[x0]);
                return Ok(JumpPath::new(
                    n,
                    start,
                    jumps,
                    end,
                    EndReason::InverseLocalTime { vertex: x0, level: *u },
                ));
            }
            Stop::Budget(_) if ell[at] + hold >= budgets[at] => {
                let end = t + (budgets[at] - ell[at]);
                return Ok(JumpPath::new(
                    n,
                    start,
                    jumps,
                    end,
                    EndReason::BudgetDepleted { vertex: at, budget: budgets[at] },
                ));
            }
            Stop::Horizon(h) if t + hold >= *h => {
                return Ok(JumpPath::new(n, start, jumps, *h, EndReason::Horizon));
            }
            _ => {}
        }
        ell[at] += hold;
        t += hold;
        at = pick_neighbor(g, at, |_, w| w, uniform(rng));
        jumps.push(Jump { time: t, target: at });
        if *stop == Stop::HitX0 && at == x0 {
            return Ok(JumpPath::new(n, start, jumps, t, EndReason::HitX0));
        }
    }
}

/// Path from `x0` stopped at `τ_u`; `ℓ_{x0}` at the end equals `u` exactly.
pub fn simulate_until_tau<R: RngCore + ?Sized>(g: &WeightedGraph, u: f64, rng: &mut R) -> Result<JumpPath> {
    simulate(g, g.x0(), &Stop::InverseLocalTime(u), rng)
}

/// Path from `z0` stopped at the first arrival at `x0`.
pub fn simulate_until_hit<R: RngCore + ?Sized>(g: &WeightedGraph, z0: usize, rng: &mut R) -> Result<JumpPath> {
    simulate(g, z0, &Stop::HitX0, rng)
}

/// Path from `start` stopped at `T`, the first exhaustion of a budget `Φ_i²/2`.
pub fn simulate_until_budget<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    start: usize,
    phi: &[f64],
    rng: &mut R,
) -> Result<JumpPath> {
    simulate(g, start, &Stop::Budget(phi.to_vec()), rng)
}

/// Path from `start` on `[0, horizon]`.
pub fn simulate_until_horizon<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<JumpPath> {
    simulate(g, start, &Stop::Horizon(horizon), rng)
}

/// `Φ_i(t) = sqrt(Φ_i² - 2ℓ_i(t))` along a path.
pub fn remaining_amplitudes(path: &JumpPath, phi: &[f64], t: f64) -> Result<Vec<f64>> {
    path.local_times(t)?.remaining_amplitudes(phi)
}

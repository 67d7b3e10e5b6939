//! Reinforced jump processes in their natural (local-time) clock.
//!
//! Three processes are simulated, all parameterized by an amplitude vector:
//!
//! * `Z`, the time-changed VRJP: amplitudes `ψ_j = sqrt(φ_j² + 2ℓ_j)` grow,
//!   rates `W_{ij} ψ_j / ψ_i`.
//! * `Z̃`, the time-changed reversed VRJP: amplitudes `r_j = sqrt(Φ_j² - 2ℓ_j)`
//!   shrink, rates `W_{ij} r_j / r_i`, stopped at the first depletion.
//! * `Ž`, the magnetized reversed process: rates
//!   `W_{ij} (r_j / r_i) ⟨σ_j⟩ / ⟨σ_i⟩` for the Ising model with couplings
//!   `W_{ij} r_i r_j` and `+1` boundary at `x0`.
//!
//! While sitting at `i` only `r_i` (or `ψ_i`) moves, and `dr_i/dt = -1/r_i`.
//! The cumulative hazard over a holding is therefore a function of the
//! amplitude alone:
//!
//! * `Z`:  `Λ = A (ψ_i(t) - ψ_i)` with `A = Σ_j W_{ij} ψ_j`;
//! * `Z̃`:  `Λ = A (r_i - r_i(t))` with `A = Σ_j W_{ij} r_j`;
//! * `Ž`:  `Λ = ln K_i(r_i) - ln K_i(r_i(t))` with `K_i = Σ_σ σ_i e^{Σ J σσ} = F ⟨σ_i⟩`,
//!   since `∂K_i/∂r_i = Σ_j W_{ij} r_j F ⟨σ_j⟩`.
//!
//! [`HazardScheme::Exact`] inverts these directly (a bisection on `ln K_i`
//! for `Ž`). [`HazardScheme::Quadrature`] integrates the rate numerically with
//! [`crate::hazard`]; it consumes the same random numbers and is kept as an
//! independent cross-check.
//!
//! Each step draws one `Exp(1)` for the holding and, if a jump follows, one
//! uniform for the target (neighbors in declaration order).

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::{FieldVector, WeightedGraph};
use crate::hazard::{self, Holding, QuadratureOptions};
use crate::ising::IsingSpec;
use crate::math;
use crate::mjp::pick_neighbor;
use crate::path::{half_square, EndReason, Jump, JumpPath};
use crate::stream::{exp1, uniform};

/// A site counts as depleted once its amplitude falls to `ε Φ`.
pub const DEPLETION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HazardScheme {
    /// Closed-form inversion of the cumulative hazard.
    #[default]
    Exact,
    /// Adaptive quadrature of the rate plus root solve.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub scheme: HazardScheme,
    /// Hard cap on the number of jumps of one run.
    pub max_jumps: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            scheme: HazardScheme::Exact,
            max_jumps: 10_000_000,
        }
    }
}

/// Stopping rule of the magnetized process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReversedStop {
    /// First depletion of some amplitude.
    Depletion,
    /// First arrival at `x0`; requires a start away from `x0`.
    HitX0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    Depleted,
    HitX0,
}

/// State at a jump epoch (and at the start and end of the run).
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub z_time: f64,
    /// Elapsed time in the original clock (`Y̌` or `Ỹ`, or `Y` for the VRJP).
    pub y_time: f64,
    /// Vertex occupied from this epoch on.
    pub vertex: usize,
    pub amplitudes: Vec<f64>,
}

/// A run of `Z̃` or `Ž`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversedRun {
    /// The path in the local-time clock.
    pub z_path: JumpPath,
    /// Remaining amplitudes at the end, `L̂` in the original clock.
    pub l_end: FieldVector,
    pub end_site: usize,
    pub end_kind: EndKind,
    /// Original-clock duration, `Σ_i (Φ_i - L̂_i)`.
    pub y_end_time: f64,
    /// Epoch 0 is the start; one epoch per jump; the last one is the end state.
    pub epochs: Vec<Epoch>,
}

/// A run of the time-changed VRJP `Z` up to a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct VrjpRun {
    pub path: JumpPath,
    /// Amplitudes `sqrt(φ² + 2ℓ(t))` at the horizon.
    pub amplitudes: FieldVector,
    /// `D⁻¹(t)`, accumulated from the original-clock holding lengths.
    pub y_time: f64,
    pub epochs: Vec<Epoch>,
}

/// Which rate formula [`jump_rates`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    Vrjp,
    Reversed,
    Magnetized,
}

/// Per-neighbor rates out of `i` for the given amplitudes, in neighbor order.
pub fn jump_rates(g: &WeightedGraph, process: Process, amplitudes: &[f64], i: usize) -> Result<Vec<(usize, f64)>> {
    g.check_len(amplitudes.len())?;
    g.check_vertex(i)?;
    let sq = |j: usize, w: f64| w * amplitudes[j] / amplitudes[i];
    match process {
        Process::Vrjp | Process::Reversed => Ok(g.neighbors(i).iter().map(|&(j, w, _)| (j, sq(j, w))).collect()),
        Process::Magnetized => {
            let spec = IsingSpec::from_amplitudes(g, amplitudes)?;
            let mi = spec.magnetization(i);
            if !(mi > 0.0) {
                return Err(Error::MagnetizationUnderflow { vertex: i });
            }
            Ok(g
                .neighbors(i)
                .iter()
                .map(|&(j, w, _)| (j, sq(j, w) * spec.magnetization(j) / mi))
                .collect())
        }
    }
}

fn check_field(g: &WeightedGraph, phi: &[f64], name: &'static str) -> Result<()> {
    g.check_len(phi.len())?;
    if let Some(v) = phi.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::NonPositiveEntry { name, vertex: v, value: phi[v] });
    }
    Ok(())
}

fn quadrature_margin(phi_i: f64, cap: f64) -> QuadratureOptions {
    QuadratureOptions {
        margin: half_square(DEPLETION_TOL * phi_i).max(64.0 * (f64::from_bits(cap.to_bits() + 1) - cap)),
        ..QuadratureOptions::default()
    }
}

/// `Z` with rates `W_{ij} sqrt((φ_j² + 2ℓ_j) / (φ_i² + 2ℓ_i))` on `[0, horizon]`.
pub fn simulate_vrjp_timechanged<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi0: &[f64],
    start: usize,
    horizon: f64,
    rng: &mut R,
) -> Result<VrjpRun> {
    simulate_vrjp_timechanged_with(g, phi0, start, horizon, &SimOptions::default(), rng)
}

pub fn simulate_vrjp_timechanged_with<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi0: &[f64],
    start: usize,
    horizon: f64,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<VrjpRun> {
    check_field(g, phi0, "φ")?;
    g.check_vertex(start)?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::NonPositive { name: "horizon", value: horizon });
    }
    let n = g.len();
    let mut psi = phi0.to_vec();
    let mut ell = vec![0.0; n];
    let mut t = 0.0;
    let mut y = 0.0;
    let mut at = start;
    let mut jumps = Vec::new();
    let mut epochs = vec![Epoch { z_time: 0.0, y_time: 0.0, vertex: start, amplitudes: psi.clone() }];
    loop {
        if jumps.len() >= opts.max_jumps {
            return Err(Error::JumpLimit(opts.max_jumps));
        }
        let e = exp1(rng);
        let a: f64 = g.neighbors(at).iter().map(|&(j, w, _)| w * psi[j]).sum();
        let p = psi[at];
        let left = horizon - t;
        let hold = match opts.scheme {
            HazardScheme::Exact => {
                let grown = p + e / a;
                Some((grown - p) * (grown + p) / 2.0)
            }
            HazardScheme::Quadrature => {
                let rate = |h: f64| a / math::sqrt(p * p + 2.0 * h);
                match hazard::invert_cumulative_hazard(rate, left, e, &QuadratureOptions::default())? {
                    Holding::Jump(h) => Some(h),
                    Holding::Depleted => None,
                }
            }
        };
        match hold {
            Some(h) if h < left => {
                t += h;
                ell[at] += h;
                let grown = math::sqrt(phi0[at] * phi0[at] + 2.0 * ell[at]);
                y += grown - psi[at];
                psi[at] = grown;
                at = pick_neighbor(g, at, |j, w| w * psi[j], uniform(rng));
                jumps.push(Jump { time: t, target: at });
                epochs.push(Epoch { z_time: t, y_time: y, vertex: at, amplitudes: psi.clone() });
            }
            _ => {
                ell[at] += left;
                let grown = math::sqrt(phi0[at] * phi0[at] + 2.0 * ell[at]);
                y += grown - psi[at];
                psi[at] = grown;
                epochs.push(Epoch { z_time: horizon, y_time: y, vertex: at, amplitudes: psi.clone() });
                return Ok(VrjpRun {
                    path: JumpPath::new(n, start, jumps, horizon, EndReason::Horizon),
                    amplitudes: FieldVector::from(psi),
                    y_time: y,
                    epochs,
                });
            }
        }
    }
}

/// `D⁻¹(t) = Σ_i (sqrt(φ_i² + 2ℓ_i(t)) - φ_i)` for a `Z` path.
pub fn vrjp_inverse_time_change(path: &JumpPath, phi0: &[f64], t: f64) -> Result<f64> {
    let ell = path.local_times(t)?;
    Ok(ell
        .iter()
        .zip(phi0)
        .map(|(&l, &p)| math::sqrt(p * p + 2.0 * l) - p)
        .sum())
}

/// `Z̃` with rates `W_{ij} sqrt((Φ_j² - 2ℓ_j) / (Φ_i² - 2ℓ_i))`, stopped at the first depletion.
pub fn simulate_reversed_vrjp<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi: &[f64],
    start: usize,
    rng: &mut R,
) -> Result<ReversedRun> {
    simulate_reversed_vrjp_with(g, phi, start, &SimOptions::default(), rng)
}

pub fn simulate_reversed_vrjp_with<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi: &[f64],
    start: usize,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<ReversedRun> {
    check_field(g, phi, "Φ")?;
    g.check_vertex(start)?;
    run_reversed(g, phi, start, ReversedStop::Depletion, false, opts, rng)
}

/// `Ž`, the magnetized reversed process, stopped at depletion or at `x0`.
pub fn simulate_magnetized_reversed<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi: &[f64],
    start: usize,
    stop: ReversedStop,
    rng: &mut R,
) -> Result<ReversedRun> {
    simulate_magnetized_reversed_with(g, phi, start, stop, &SimOptions::default(), rng)
}

pub fn simulate_magnetized_reversed_with<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi: &[f64],
    start: usize,
    stop: ReversedStop,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<ReversedRun> {
    check_field(g, phi, "Φ")?;
    g.check_vertex(start)?;
    if stop == ReversedStop::HitX0 && start == g.x0() {
        return Err(Error::StartAtX0);
    }
    // Validates the enumeration guard once.
    IsingSpec::from_amplitudes(g, phi)?;
    run_reversed(g, phi, start, stop, true, opts, rng)
}

enum Step {
    /// Jump after the amplitude at the current site fell to this value.
    Move(f64),
    Deplete,
}

struct Magnetized<'g> {
    spec: IsingSpec<'g>,
    scratch: Vec<f64>,
}

impl<'g> Magnetized<'g> {
    fn log_k(&mut self, i: usize, r: &[f64], x: f64) -> f64 {
        self.scratch.copy_from_slice(r);
        self.scratch[i] = x;
        self.spec.set_amplitudes(&self.scratch);
        self.spec.log_signed_sum(i)
    }

    fn magnetizations_at(&mut self, r: &[f64]) -> FieldVector {
        self.spec.set_amplitudes(r);
        self.spec.magnetizations()
    }

    fn exact_step(&mut self, g: &WeightedGraph, r: &[f64], phi_i: f64, i: usize, e: f64) -> Result<Step> {
        let now = self.log_k(i, r, r[i]);
        if now == f64::NEG_INFINITY {
            return Err(Error::MagnetizationUnderflow { vertex: i });
        }
        let target = now - e;
        if i == g.x0() && target <= self.log_k(i, r, 0.0) {
            return Ok(Step::Deplete);
        }
        // ln K_i is increasing in r_i; bisect for ln K_i(x) = target.
        let mut lo = 0.0;
        let mut hi = r[i];
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_k(i, r, mid) > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        if root <= DEPLETION_TOL * phi_i {
            Ok(Step::Deplete)
        } else {
            Ok(Step::Move(root))
        }
    }

    fn quadrature_step(&mut self, g: &WeightedGraph, r: &[f64], phi_i: f64, i: usize, e: f64) -> Result<Step> {
        let ri = r[i];
        let cap = half_square(ri);
        let mut underflow = false;
        let nb = g.neighbors(i);
        let rate = |h: f64| {
            let x = math::sqrt((ri * ri - 2.0 * h).max(0.0));
            self.scratch.copy_from_slice(r);
            self.scratch[i] = x;
            self.spec.set_amplitudes(&self.scratch);
            let mi = self.spec.magnetization(i);
            if !(mi > 0.0) {
                underflow = true;
                return f64::INFINITY;
            }
            let flow: f64 = nb.iter().map(|&(j, w, _)| w * r[j] * self.spec.magnetization(j)).sum();
            flow / (x * mi)
        };
        let res = hazard::invert_cumulative_hazard(rate, cap, e, &quadrature_margin(phi_i, cap));
        match res {
            Err(_) if underflow => Err(Error::MagnetizationUnderflow { vertex: i }),
            Err(err) => Err(err),
            Ok(Holding::Depleted) => Ok(Step::Deplete),
            Ok(Holding::Jump(h)) => {
                let x = math::sqrt((ri * ri - 2.0 * h).max(0.0));
                if x <= DEPLETION_TOL * phi_i {
                    Ok(Step::Deplete)
                } else {
                    Ok(Step::Move(x))
                }
            }
        }
    }
}

fn reversed_step(g: &WeightedGraph, r: &[f64], phi_i: f64, i: usize, e: f64, scheme: HazardScheme) -> Result<Step> {
    let a: f64 = g.neighbors(i).iter().map(|&(j, w, _)| w * r[j]).sum();
    let ri = r[i];
    let x = match scheme {
        HazardScheme::Exact => {
            if e >= a * ri {
                return Ok(Step::Deplete);
            }
            ri - e / a
        }
        HazardScheme::Quadrature => {
            let cap = half_square(ri);
            let rate = |h: f64| a / math::sqrt((ri * ri - 2.0 * h).max(0.0));
            match hazard::invert_cumulative_hazard(rate, cap, e, &quadrature_margin(phi_i, cap))? {
                Holding::Depleted => return Ok(Step::Deplete),
                Holding::Jump(h) => math::sqrt((ri * ri - 2.0 * h).max(0.0)),
            }
        }
    };
    if x <= DEPLETION_TOL * phi_i {
        Ok(Step::Deplete)
    } else {
        Ok(Step::Move(x))
    }
}

fn run_reversed<R: RngCore + ?Sized>(
    g: &WeightedGraph,
    phi: &[f64],
    start: usize,
    stop: ReversedStop,
    magnetized: bool,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<ReversedRun> {
    let n = g.len();
    let x0 = g.x0();
    let mut mag = if magnetized {
        Some(Magnetized {
            spec: IsingSpec::from_amplitudes(g, phi)?,
            scratch: phi.to_vec(),
        })
    } else {
        None
    };
    let mut r = phi.to_vec();
    let mut ell = vec![0.0; n];
    let mut t = 0.0;
    let mut y = 0.0;
    let mut at = start;
    let mut jumps = Vec::new();
    let mut epochs = vec![Epoch { z_time: 0.0, y_time: 0.0, vertex: start, amplitudes: r.clone() }];
    loop {
        if jumps.len() >= opts.max_jumps {
            return Err(Error::JumpLimit(opts.max_jumps));
        }
        let e = exp1(rng);
        let step = match mag.as_mut() {
            Some(m) => match opts.scheme {
                HazardScheme::Exact => m.exact_step(g, &r, phi[at], at, e)?,
                HazardScheme::Quadrature => m.quadrature_step(g, &r, phi[at], at, e)?,
            },
            None => reversed_step(g, &r, phi[at], at, e, opts.scheme)?,
        };
        match step {
            Step::Deplete => {
                let budget = half_square(phi[at]);
                t += budget - ell[at];
                ell[at] = budget;
                y += r[at];
                r[at] = 0.0;
                epochs.push(Epoch { z_time: t, y_time: y, vertex: at, amplitudes: r.clone() });
                return Ok(ReversedRun {
                    z_path: JumpPath::new(n, start, jumps, t, EndReason::BudgetDepleted { vertex: at, budget }),
                    l_end: FieldVector::from(r),
                    end_site: at,
                    end_kind: EndKind::Depleted,
                    y_end_time: y,
                    epochs,
                });
            }
            Step::Move(x) => {
                let h = (r[at] - x) * (r[at] + x) / 2.0;
                t += h;
                ell[at] += h;
                y += r[at] - x;
                r[at] = x;
                let u = uniform(rng);
                at = match mag.as_mut() {
                    Some(m) => {
                        let mags = m.magnetizations_at(&r);
                        pick_neighbor(g, at, |j, w| w * r[j] * mags[j], u)
                    }
                    None => pick_neighbor(g, at, |j, w| w * r[j], u),
                };
                jumps.push(Jump { time: t, target: at });
                epochs.push(Epoch { z_time: t, y_time: y, vertex: at, amplitudes: r.clone() });
                if stop == ReversedStop::HitX0 && at == x0 {
                    return Ok(ReversedRun {
                        z_path: JumpPath::new(n, start, jumps, t, EndReason::HitX0),
                        l_end: FieldVector::from(r),
                        end_site: x0,
                        end_kind: EndKind::HitX0,
                        y_end_time: y,
                        epochs,
                    });
                }
            }
        }
    }
}

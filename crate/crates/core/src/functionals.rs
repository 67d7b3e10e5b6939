//! Path functionals: the signed martingales `M^{σΦ}`, their spin sum `N^Φ`,
//! and the densities of the VRJP and its reversal against the jump process.
//!
//! Everything is evaluated as a sign and a log-magnitude, since amplitudes
//! near depletion make the raw products underflow.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ising::{IsingSpec, SpinVector, MAX_FREE_VERTICES};
use crate::math;
use crate::path::JumpPath;

/// `sign · exp(log_abs)`; `sign` is `0.0` exactly when the value is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub log_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        log_abs: f64::NEG_INFINITY,
    };

    pub fn positive(log_abs: f64) -> Self {
        if log_abs == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { sign: 1.0, log_abs }
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * math::exp(self.log_abs)
        }
    }

    /// `self / other` as a plain float.
    pub fn ratio(&self, other: &SignedLog) -> f64 {
        if self.sign == 0.0 {
            return 0.0;
        }
        self.sign * other.sign * math::exp(self.log_abs - other.log_abs)
    }
}

/// Signed log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
struct SignedSum {
    pos: (f64, f64),
    neg: (f64, f64),
}

impl SignedSum {
    fn new() -> Self {
        Self {
            pos: (f64::NEG_INFINITY, 0.0),
            neg: (f64::NEG_INFINITY, 0.0),
        }
    }

    fn push(acc: &mut (f64, f64), x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > acc.0 {
            acc.1 = acc.1 * math::exp(acc.0 - x) + 1.0;
            acc.0 = x;
        } else {
            acc.1 += math::exp(x - acc.0);
        }
    }

    fn add(&mut self, term: SignedLog) {
        if term.sign > 0.0 {
            Self::push(&mut self.pos, term.log_abs);
        } else if term.sign < 0.0 {
            Self::push(&mut self.neg, term.log_abs);
        }
    }

    fn value(self) -> SignedLog {
        let lp = if self.pos.1 > 0.0 { self.pos.0 + math::ln(self.pos.1) } else { f64::NEG_INFINITY };
        let ln = if self.neg.1 > 0.0 { self.neg.0 + math::ln(self.neg.1) } else { f64::NEG_INFINITY };
        if lp == ln {
            return SignedLog::ZERO;
        }
        let (sign, hi, lo) = if lp > ln { (1.0, lp, ln) } else { (-1.0, ln, lp) };
        SignedLog {
            sign,
            log_abs: hi + math::ln(-math::exp_m1(lo - hi)),
        }
    }
}

fn check_positive(g: &WeightedGraph, phi: &[f64], name: &'static str) -> Result<()> {
    g.check_len(phi.len())?;
    if let Some(v) = phi.iter().position(|&p| !(p.is_finite() && p > 0.0)) {
        return Err(Error::NonPositiveEntry { name, vertex: v, value: phi[v] });
    }
    Ok(())
}

/// Shared pieces of `M^{σΦ}_t` for every `σ`.
struct Frame {
    /// `Φ(t)`.
    remaining: Vec<f64>,
    /// `X_t`.
    at: usize,
    /// `Σ_{j≠base} ln Φ_j - Σ_{j≠X_t} ln Φ_j(t)`.
    log_products: f64,
}

fn frame(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64, base: usize) -> Result<Frame> {
    check_positive(g, phi, "Φ")?;
    g.check_len(path.n_vertices())?;
    let remaining = path.local_times(t)?.remaining_amplitudes(phi)?;
    let at = path.position_at(t);
    let mut log_products = 0.0;
    for v in 0..g.len() {
        if v != base {
            log_products += math::ln(phi[v]);
        }
        if v != at {
            if remaining[v] == 0.0 {
                return Err(Error::ZeroAmplitude(v));
            }
            log_products -= math::ln(remaining[v]);
        }
    }
    Ok(Frame {
        remaining,
        at,
        log_products,
    })
}

fn signed_m(g: &WeightedGraph, sigma: &SpinVector, f: &Frame) -> SignedLog {
    let field: Vec<f64> = f.remaining.iter().enumerate().map(|(v, &r)| sigma.sign(v) * r).collect();
    SignedLog {
        // Π_{j≠x0} σ_j / Π_{j≠X_t} σ_j = σ_{X_t} because σ_{x0} = +1.
        sign: sigma.sign(f.at),
        log_abs: -0.5 * g.energy_unchecked(&field) + f.log_products,
    }
}

/// `M^{σΦ}_t` in sign/log form.
pub fn log_eval_m(g: &WeightedGraph, sigma: &SpinVector, phi: &[f64], path: &JumpPath, t: f64) -> Result<SignedLog> {
    g.check_len(sigma.len())?;
    let f = frame(g, phi, path, t, g.x0())?;
    Ok(signed_m(g, sigma, &f))
}

/// `M^{σΦ}_t = exp(-½ E(σΦ(t))) Π_{j≠x0} σ_j Φ_j / Π_{j≠X_t} σ_j Φ_j(t)`.
pub fn eval_m(g: &WeightedGraph, sigma: &SpinVector, phi: &[f64], path: &JumpPath, t: f64) -> Result<f64> {
    log_eval_m(g, sigma, phi, path, t).map(|m| m.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NMethod {
    /// Sum of `M^{σΦ}` over all sign vectors.
    Sum,
    /// Partition function times the magnetization at `X_t`.
    Closed,
}

/// `N^Φ_t = Σ_σ M^{σΦ}_t` in sign/log form.
pub fn log_eval_n(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64, method: NMethod) -> Result<SignedLog> {
    let f = frame(g, phi, path, t, g.x0())?;
    let free = g.free_vertices().len();
    match method {
        NMethod::Sum => {
            if free > MAX_FREE_VERTICES {
                return Err(Error::TooManyVertices { max: MAX_FREE_VERTICES, found: free });
            }
            let mut acc = SignedSum::new();
            for sigma in SpinVector::enumerate(g) {
                acc.add(signed_m(g, &sigma, &f));
            }
            Ok(acc.value())
        }
        NMethod::Closed => {
            let spec = IsingSpec::from_amplitudes(g, &f.remaining)?;
            let mut log_w = 0.0;
            for v in 0..g.len() {
                // ℓ_v - ½Φ_v² = -½Φ_v(t)².
                log_w -= 0.5 * g.total_weight(v) * f.remaining[v] * f.remaining[v];
            }
            let log_k = spec.log_signed_sum(f.at);
            Ok(SignedLog::positive(log_w + log_k + f.log_products))
        }
    }
}

pub fn eval_n(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64, method: NMethod) -> Result<f64> {
    log_eval_n(g, phi, path, t, method).map(|n| n.value())
}

/// `t ∧ T` with `T` the first depletion of `Φ²/2` along the path.
pub fn stopped_time(path: &JumpPath, phi: &[f64], t: f64) -> f64 {
    match path.depletion_time(phi) {
        Some(d) if d < t => d,
        _ => t,
    }
}

/// `ln` of the VRJP density against the jump process on `[0, t]`:
/// `½(E(sqrt(φ² + 2ℓ(t))) - E(φ)) + Σ_{j≠X_0} ln φ_j - Σ_{j≠X_t} ln sqrt(φ_j² + 2ℓ_j(t))`.
pub fn log_rn_vrjp(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64) -> Result<f64> {
    check_positive(g, phi, "φ")?;
    g.check_len(path.n_vertices())?;
    let grown = path.local_times(t)?.grown_amplitudes(phi);
    let at = path.position_at(t);
    let mut log = 0.5 * (g.energy_unchecked(&grown) - g.energy_unchecked(phi));
    for v in 0..g.len() {
        if v != path.start() {
            log += math::ln(phi[v]);
        }
        if v != at {
            log -= math::ln(grown[v]);
        }
    }
    Ok(log)
}

pub fn rn_vrjp(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64) -> Result<f64> {
    log_rn_vrjp(g, phi, path, t).map(math::exp)
}

/// `ln` of the reversed-VRJP density against the jump process on `[0, t ∧ T]`.
pub fn log_rn_reversed(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64) -> Result<f64> {
    check_positive(g, phi, "Φ")?;
    let s = stopped_time(path, phi, t);
    let f = frame(g, phi, path, s, path.start())?;
    Ok(-0.5 * (g.energy_unchecked(&f.remaining) - g.energy_unchecked(phi)) + f.log_products)
}

pub fn rn_reversed(g: &WeightedGraph, phi: &[f64], path: &JumpPath, t: f64) -> Result<f64> {
    log_rn_reversed(g, phi, path, t).map(math::exp)
}

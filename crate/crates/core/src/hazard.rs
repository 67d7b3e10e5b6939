//! Sampling a holding time from a time-varying hazard by cumulative-hazard inversion.
//!
//! Given a hazard `λ(h) ≥ 0` on `[0, cap)`, draw `E ~ Exp(1)` and return the `h`
//! with `Λ(h) = ∫₀ʰ λ = E`, or [`Holding::Depleted`] when `Λ` stays below `E`
//! up to the cap. `Λ` is built with adaptive Simpson steps (Richardson
//! corrected); the root inside the crossing step is found by safeguarded
//! Newton iteration on the same quadrature.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::stream::exp1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Holding {
    /// The event fires after this holding time.
    Jump(f64),
    /// No event before the cap.
    Depleted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Relative tolerance per Simpson step.
    pub rel_tol: f64,
    /// Step attempts allowed before giving up.
    pub max_steps: usize,
    /// Absolute tolerance on the returned time.
    pub time_tol: f64,
    /// Integration stops this far short of the cap (at least 64 ulp of the cap).
    pub margin: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_steps: 1_000_000,
            time_tol: 1e-12,
            margin: 0.0,
        }
    }
}

fn ulp(x: f64) -> f64 {
    if x.is_finite() {
        f64::from_bits(x.to_bits() + 1) - x
    } else {
        0.0
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Draws `E ~ Exp(1)` from `rng` and inverts the cumulative hazard with default options.
pub fn next_jump_time<R: RngCore + ?Sized>(hazard: impl FnMut(f64) -> f64, cap: f64, rng: &mut R) -> Result<Holding> {
    let e = exp1(rng);
    invert_cumulative_hazard(hazard, cap, e, &QuadratureOptions::default())
}

/// Solves `Λ(h) = target` on `[0, cap - margin]`.
pub fn invert_cumulative_hazard(
    mut hazard: impl FnMut(f64) -> f64,
    cap: f64,
    target: f64,
    opts: &QuadratureOptions,
) -> Result<Holding> {
    if !(cap > 0.0) {
        return Ok(Holding::Depleted);
    }
    let end = cap - opts.margin.max(64.0 * ulp(cap));
    if !(end > 0.0) {
        return Ok(Holding::Depleted);
    }
    let mut t = 0.0;
    let mut acc = 0.0;
    let mut ft = hazard(0.0);
    let mut step = if cap.is_finite() { cap / 8.0 } else { 1.0 };
    let mut attempts = 0usize;

    while t < end {
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(Error::Integration("step budget exhausted"));
        }
        let mut h = step.min((cap - t) / 8.0).min(end - t);
        if end - (t + h) <= 64.0 * ulp(end) {
            h = end - t;
        }
        let b = t + h;
        let fm = hazard(t + 0.5 * h);
        let fb = hazard(b);
        let fq1 = hazard(t + 0.25 * h);
        let fq3 = hazard(t + 0.75 * h);
        if !(ft.is_finite() && fm.is_finite() && fb.is_finite() && fq1.is_finite() && fq3.is_finite()) {
            if h <= opts.time_tol {
                return Err(Error::Integration("hazard not finite"));
            }
            step = 0.5 * h;
            continue;
        }
        let coarse = simpson(ft, fm, fb, h);
        let fine = simpson(ft, fq1, fm, 0.5 * h) + simpson(fm, fq3, fb, 0.5 * h);
        let err = (fine - coarse) / 15.0;
        let scale = (acc + fine).abs().max(fine.abs()).max(f64::MIN_POSITIVE);
        if err.abs() > opts.rel_tol * scale && h > opts.time_tol {
            step = 0.5 * h;
            continue;
        }
        let piece = fine + err;
        if acc + piece >= target {
            let offset = solve_in_step(&mut hazard, t, ft, h, target - acc, opts.time_tol);
            return Ok(Holding::Jump(t + offset));
        }
        acc += piece;
        t = b;
        ft = fb;
        if err.abs() < 0.05 * opts.rel_tol * scale {
            step = 2.0 * h;
        } else {
            step = h;
        }
    }
    Ok(Holding::Depleted)
}

/// Root of `∫_a^x λ = need` for `x ∈ (a, a + h]`.
fn solve_in_step(hazard: &mut impl FnMut(f64) -> f64, a: f64, fa: f64, h: f64, need: f64, tol: f64) -> f64 {
    let mut lo = a;
    let mut hi = a + h;
    let integral = |hz: &mut dyn FnMut(f64) -> f64, x: f64| -> f64 {
        let w = x - a;
        let fm = hz(a + 0.5 * w);
        let fq1 = hz(a + 0.25 * w);
        let fq3 = hz(a + 0.75 * w);
        let fx = hz(x);
        simpson(fa, fq1, fm, 0.5 * w) + simpson(fm, fq3, fx, 0.5 * w)
    };
    let mut x = a + h * (need / integral(hazard, hi)).clamp(0.0, 1.0);
    for _ in 0..200 {
        let g = integral(hazard, x) - need;
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = hazard(x);
        let mut next = if slope > 0.0 { x - g / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= tol || hi - lo <= tol {
            return next - a;
        }
        x = next;
    }
    0.5 * (lo + hi) - a
}

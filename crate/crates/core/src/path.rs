//! Piecewise-constant jump paths and their local times.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, Index};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub target: usize,
}

/// Why a path stopped.
///
/// Stops that truncate a holding interval carry the exact local-time level
/// reached at the stopping vertex, so that [`JumpPath::local_times`] at the
/// end time reproduces it without accumulated rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EndReason {
    /// Local time at `vertex` reached `level` (the inverse local time `τ_u`).
    InverseLocalTime { vertex: usize, level: f64 },
    /// First arrival at `x0`.
    HitX0,
    /// Local time at `vertex` reached its budget.
    BudgetDepleted { vertex: usize, budget: f64 },
    /// Fixed time horizon.
    Horizon,
}

impl EndReason {
    pub fn name(&self) -> &'static str {
        match self {
            EndReason::InverseLocalTime { .. } => "inverse-local-time",
            EndReason::HitX0 => "hit-x0",
            EndReason::BudgetDepleted { .. } => "budget-depleted",
            EndReason::Horizon => "horizon",
        }
    }
}

/// A right-continuous trajectory: start vertex plus jump records on `[0, end_time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPath {
    n_vertices: usize,
    start: usize,
    jumps: Vec<Jump>,
    end_time: f64,
    end_reason: EndReason,
}

impl JumpPath {
    /// Assembles a path; jump times must be strictly increasing and at most `end_time`.
    pub fn new(n_vertices: usize, start: usize, jumps: Vec<Jump>, end_time: f64, end_reason: EndReason) -> Self {
        debug_assert!(jumps.windows(2).all(|w| w[0].time < w[1].time));
        debug_assert!(jumps.last().is_none_or(|j| j.time <= end_time));
        Self {
            n_vertices,
            start,
            jumps,
            end_time,
            end_reason,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn end_time(&self) -> f64 {
        self.end_time
    }

    pub fn end_reason(&self) -> EndReason {
        self.end_reason
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Position at the end time.
    pub fn end_position(&self) -> usize {
        self.jumps.last().map_or(self.start, |j| j.target)
    }

    /// `X_t`, right-continuous: a jump at time `t` is already taken.
    pub fn position_at(&self, t: f64) -> usize {
        let k = self.jumps.partition_point(|j| j.time <= t);
        if k == 0 {
            self.start
        } else {
            self.jumps[k - 1].target
        }
    }

    /// Number of jumps in `[0, t]`.
    pub fn jumps_until(&self, t: f64) -> usize {
        self.jumps.partition_point(|j| j.time <= t)
    }

    /// Holding intervals `(vertex, from, to)` covering `[0, end_time]`.
    pub fn segments(&self) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let starts = core::iter::once((self.start, 0.0)).chain(self.jumps.iter().map(|j| (j.target, j.time)));
        let ends = self.jumps.iter().map(|j| j.time).chain(core::iter::once(self.end_time));
        starts.zip(ends).map(|((v, a), b)| (v, a, b))
    }

    /// `ℓ_x(t)` for every vertex.
    pub fn local_times(&self, t: f64) -> Result<LocalTimes> {
        if !(0.0..=self.end_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, end: self.end_time });
        }
        let mut ell = vec![0.0; self.n_vertices];
        for (v, a, b) in self.segments() {
            if a >= t {
                break;
            }
            ell[v] += b.min(t) - a;
        }
        if t == self.end_time {
            match self.end_reason {
                EndReason::InverseLocalTime { vertex, level } => ell[vertex] = level,
                EndReason::BudgetDepleted { vertex, budget } => ell[vertex] = budget,
                EndReason::HitX0 | EndReason::Horizon => {}
            }
        }
        Ok(LocalTimes(ell))
    }

    /// First time some `ℓ_i` reaches `Φ_i²/2`, if it happens on the path.
    pub fn depletion_time(&self, phi: &[f64]) -> Option<f64> {
        if let EndReason::BudgetDepleted { vertex, budget } = self.end_reason {
            if budget == half_square(phi[vertex]) {
                return Some(self.end_time);
            }
        }
        let mut ell = vec![0.0; self.n_vertices];
        for (v, a, b) in self.segments() {
            let left = half_square(phi[v]) - ell[v];
            if b - a >= left {
                return Some(a + left);
            }
            ell[v] += b - a;
        }
        None
    }

    /// The path restricted to `[0, t]`, ending by horizon.
    pub fn truncate(&self, t: f64) -> Result<JumpPath> {
        if !(0.0..=self.end_time).contains(&t) {
            return Err(Error::TimeOutOfRange { t, end: self.end_time });
        }
        if t == self.end_time {
            return Ok(self.clone());
        }
        let k = self.jumps_until(t);
        Ok(JumpPath::new(
            self.n_vertices,
            self.start,
            self.jumps[..k].to_vec(),
            t,
            EndReason::Horizon,
        ))
    }
}

/// `x²/2`, the local-time budget carried by an amplitude `x`.
///
/// Budgets are always formed through this function so that a stop recorded
/// at a budget subtracts back to exactly zero.
#[inline]
pub fn half_square(x: f64) -> f64 {
    0.5 * x * x
}

/// Occupation times per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimes(Vec<f64>);

impl LocalTimes {
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `sqrt(Φ_i² - 2ℓ_i)`, clamped at zero for rounding-level overshoot.
    ///
    /// Fails if some budget is exceeded by more than rounding.
    pub fn remaining_amplitudes(&self, phi: &[f64]) -> Result<Vec<f64>> {
        self.0
            .iter()
            .zip(phi)
            .map(|(&l, &p)| {
                let budget = half_square(p);
                let left = budget - l;
                if left < -1e-12 * budget.max(1.0) {
                    Err(Error::PastDepletion { t: l, depletion: budget })
                } else {
                    Ok(math::sqrt(2.0 * left.max(0.0)))
                }
            })
            .collect()
    }

    /// `sqrt(φ_i² + 2ℓ_i)`.
    pub fn grown_amplitudes(&self, phi: &[f64]) -> Vec<f64> {
        self.0
            .iter()
            .zip(phi)
            .map(|(&l, &p)| math::sqrt(p * p + 2.0 * l))
            .collect()
    }
}

impl Deref for LocalTimes {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for LocalTimes {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for LocalTimes {
    type Output = f64;
    fn index(&self, v: usize) -> &f64 {
        &self.0[v]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_jump() -> JumpPath {
        JumpPath::new(2, 0, vec![Jump { time: 1.0, target: 1 }], 2.0, EndReason::Horizon)
    }

    #[test]
    fn local_times_examples() {
        let p = one_jump();
        assert_eq!(p.local_times(0.0).unwrap().as_ref(), &[0.0, 0.0]);
        let l = p.local_times(1.5).unwrap();
        assert_eq!(l[0], 1.0);
        assert_eq!(l[1], 0.5);
        assert_eq!(l.total(), 1.5);
        assert!(matches!(p.local_times(2.5), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(p.local_times(-0.1), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn position_is_right_continuous() {
        let p = one_jump();
        assert_eq!(p.position_at(0.999), 0);
        assert_eq!(p.position_at(1.0), 1);
        assert_eq!(p.jumps_until(1.0), 1);
        assert_eq!(p.end_position(), 1);
    }

    #[test]
    fn end_reason_pins_exact_level() {
        let p = JumpPath::new(
            2,
            0,
            vec![Jump { time: 0.1, target: 1 }, Jump { time: 0.3, target: 0 }],
            0.3 + (1.0 - 0.1),
            EndReason::InverseLocalTime { vertex: 0, level: 1.0 },
        );
        assert_eq!(p.local_times(p.end_time()).unwrap()[0], 1.0);
    }

    #[test]
    fn depletion_time_from_segments() {
        let p = one_jump();
        assert_eq!(p.depletion_time(&[2.0, 1.0]), Some(1.5));
        assert_eq!(p.depletion_time(&[1.0, 5.0]), Some(0.5));
        assert_eq!(p.depletion_time(&[5.0, 5.0]), None);
    }

    #[test]
    fn truncate_drops_later_jumps() {
        let p = one_jump();
        let q = p.truncate(0.5).unwrap();
        assert!(q.jumps().is_empty());
        assert_eq!(q.end_time(), 0.5);
        assert_eq!(q.local_times(0.5).unwrap()[0], 0.5);
    }
}

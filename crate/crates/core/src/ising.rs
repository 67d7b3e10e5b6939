//! Exact Ising inference with boundary condition `σ_{x0} = +1`.
//!
//! Everything is exhaustive enumeration over `{-1,+1}^U` in ascending bit
//! order: bit `k` of a configuration mask set means spin `-1` at the `k`-th
//! vertex of `U`. Sums run in the log domain, shifted by the maximal exponent
//! `Σ_e J_e` (all spins `+1`, which is the maximum for nonnegative couplings).

use alloc::vec::Vec;
use core::ops::Deref;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::{FieldVector, WeightedGraph};
use crate::math;
use crate::stream::uniform;

/// Enumeration guard on `|U|`.
pub const MAX_FREE_VERTICES: usize = 24;

/// Spins `σ_x ∈ {-1,+1}` per vertex with `σ_{x0} = +1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(g: &WeightedGraph, spins: Vec<i8>) -> Result<Self> {
        g.check_len(spins.len())?;
        for (v, &s) in spins.iter().enumerate() {
            if !(s == 1 || s == -1) || (v == g.x0() && s != 1) {
                return Err(Error::BadSpin { vertex: v, value: s });
            }
        }
        Ok(Self(spins))
    }

    pub fn all_plus(g: &WeightedGraph) -> Self {
        Self(alloc::vec![1; g.len()])
    }

    /// Decodes a configuration mask over `U`.
    pub fn from_mask(g: &WeightedGraph, mask: u32) -> Self {
        let mut s = alloc::vec![1i8; g.len()];
        for (k, &v) in g.free_vertices().iter().enumerate() {
            if mask >> k & 1 == 1 {
                s[v] = -1;
            }
        }
        Self(s)
    }

    /// All `2^{|U|}` sign vectors in mask order.
    pub fn enumerate(g: &WeightedGraph) -> impl Iterator<Item = SpinVector> + '_ {
        (0..1u32 << g.free_vertices().len()).map(move |m| Self::from_mask(g, m))
    }

    /// `σ_v` as a float.
    pub fn sign(&self, v: usize) -> f64 {
        f64::from(self.0[v])
    }
}

impl Deref for SpinVector {
    type Target = [i8];
    fn deref(&self) -> &[i8] {
        &self.0
    }
}

/// Streaming `ln Σ exp(x)`.
#[derive(Debug, Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * math::exp(self.max - x) + 1.0;
            self.max = x;
        } else {
            self.sum += math::exp(x - self.max);
        }
    }

    fn value(self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + math::ln(self.sum)
        }
    }
}

/// Ferromagnetic couplings on the edges of a graph, with `+1` boundary at `x0`.
#[derive(Debug, Clone)]
pub struct IsingSpec<'g> {
    graph: &'g WeightedGraph,
    couplings: Vec<f64>,
    // Free positions of the edge endpoints; `None` is the pinned `x0`.
    ends: Vec<(Option<usize>, Option<usize>)>,
}

impl<'g> IsingSpec<'g> {
    /// Couplings indexed like [`WeightedGraph::edges`].
    pub fn new(graph: &'g WeightedGraph, couplings: Vec<f64>) -> Result<Self> {
        let free = graph.free_vertices().len();
        if free > MAX_FREE_VERTICES {
            return Err(Error::TooManyVertices {
                max: MAX_FREE_VERTICES,
                found: free,
            });
        }
        if couplings.len() != graph.edges().len() {
            return Err(Error::DimensionMismatch {
                expected: graph.edges().len(),
                found: couplings.len(),
            });
        }
        if let Some(edge) = couplings.iter().position(|&j| !(j.is_finite() && j >= 0.0)) {
            return Err(Error::NegativeCoupling {
                edge,
                value: couplings[edge],
            });
        }
        let ends = graph
            .edges()
            .iter()
            .map(|e| (graph.free_position(e.u), graph.free_position(e.v)))
            .collect();
        Ok(Self {
            graph,
            couplings,
            ends,
        })
    }

    /// `J_{ij} = W_{ij} L_i L_j` for a nonnegative amplitude vector `L`.
    pub fn from_amplitudes(graph: &'g WeightedGraph, amplitudes: &[f64]) -> Result<Self> {
        graph.check_len(amplitudes.len())?;
        let couplings = graph
            .edges()
            .iter()
            .map(|e| e.weight * amplitudes[e.u] * amplitudes[e.v])
            .collect();
        Self::new(graph, couplings)
    }

    /// `J_{ij} = β W_{ij}`.
    pub fn scaled(graph: &'g WeightedGraph, beta: f64) -> Result<Self> {
        Self::new(graph, graph.edges().iter().map(|e| beta * e.weight).collect())
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Replaces the couplings by `W_{ij} L_i L_j` without revalidating the layout.
    pub(crate) fn set_amplitudes(&mut self, amplitudes: &[f64]) {
        for (j, e) in self.couplings.iter_mut().zip(self.graph.edges()) {
            *j = e.weight * amplitudes[e.u] * amplitudes[e.v];
        }
    }

    fn n_free(&self) -> usize {
        self.graph.free_vertices().len()
    }

    fn shift(&self) -> f64 {
        self.couplings.iter().sum()
    }

    #[inline]
    fn spin(mask: u32, pos: Option<usize>) -> f64 {
        match pos {
            Some(k) if mask >> k & 1 == 1 => -1.0,
            _ => 1.0,
        }
    }

    /// `Σ_e J_e σ_u σ_v` for a mask.
    #[inline]
    fn energy(&self, mask: u32) -> f64 {
        self.couplings
            .iter()
            .zip(&self.ends)
            .map(|(&j, &(a, b))| j * Self::spin(mask, a) * Self::spin(mask, b))
            .sum()
    }

    /// Splits the energy at free position `k` (with `σ_k = +1`) into the
    /// part not touching `k` and the local field at `k`.
    #[inline]
    fn split_energy(&self, mask: u32, k: usize) -> (f64, f64) {
        let mut rest = 0.0;
        let mut field = 0.0;
        for (&j, &(a, b)) in self.couplings.iter().zip(&self.ends) {
            if a == Some(k) {
                field += j * Self::spin(mask, b);
            } else if b == Some(k) {
                field += j * Self::spin(mask, a);
            } else {
                rest += j * Self::spin(mask, a) * Self::spin(mask, b);
            }
        }
        (rest, field)
    }

    /// `ln F`.
    pub fn log_partition(&self) -> f64 {
        let mut acc = LogSum::new();
        for mask in 0..1u32 << self.n_free() {
            acc.add(self.energy(mask));
        }
        acc.value()
    }

    /// `F = Σ_σ exp(Σ_e J_e σ_u σ_v)`, exponentiated from the log value.
    pub fn partition_function(&self) -> f64 {
        math::exp(self.log_partition())
    }

    /// Computes `(Σ e^{rest-shift} sinh(h), Σ e^{rest-shift} cosh(h))` over
    /// configurations of `U \ {v}`, for free position `k` of `v`.
    fn paired_sums(&self, k: usize) -> (f64, f64) {
        let shift = self.shift();
        let mut num = 0.0;
        let mut den = 0.0;
        for mask in 0..1u32 << self.n_free() {
            if mask >> k & 1 == 1 {
                continue;
            }
            let (rest, field) = self.split_energy(mask, k);
            num += math::scaled_sinh(rest - shift, field);
            den += math::scaled_cosh(rest - shift, field);
        }
        (num, den)
    }

    /// `⟨σ_v⟩`; exactly 1 at `x0`.
    pub fn magnetization(&self, v: usize) -> f64 {
        match self.graph.free_position(v) {
            None => 1.0,
            Some(k) => {
                let (num, den) = self.paired_sums(k);
                num / den
            }
        }
    }

    pub fn magnetizations(&self) -> FieldVector {
        FieldVector::from((0..self.graph.len()).map(|v| self.magnetization(v)).collect::<Vec<f64>>())
    }

    /// `ln Σ_σ σ_v exp(Σ_e J_e σ_u σ_v) = ln(F ⟨σ_v⟩)`; `-∞` when the sum vanishes.
    pub fn log_signed_sum(&self, v: usize) -> f64 {
        match self.graph.free_position(v) {
            None => self.log_partition(),
            Some(k) => {
                let (num, _) = self.paired_sums(k);
                if num > 0.0 {
                    self.shift() + math::ln(2.0 * num)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `⟨f(σ)⟩` by enumeration.
    pub fn expectation(&self, mut f: impl FnMut(&SpinVector) -> f64) -> f64 {
        let log_z = self.log_partition();
        let mut total = 0.0;
        for mask in 0..1u32 << self.n_free() {
            let w = math::exp(self.energy(mask) - log_z);
            if w > 0.0 {
                total += w * f(&SpinVector::from_mask(self.graph, mask));
            }
        }
        total
    }

    /// `⟨σ_i σ_j⟩`.
    pub fn pair_correlation(&self, i: usize, j: usize) -> f64 {
        self.expectation(|s| s.sign(i) * s.sign(j))
    }

    /// `ln Σ_σ exp(Σ_e J_e σ_u σ_v + Σ_x h_x σ_x)`, `h` indexed by vertex.
    #[cfg(test)]
    pub(crate) fn log_partition_with_field(&self, h: &[f64]) -> f64 {
        let x0 = self.graph.x0();
        let free = self.graph.free_vertices();
        let mut acc = LogSum::new();
        for mask in 0..1u32 << self.n_free() {
            let field: f64 = free
                .iter()
                .enumerate()
                .map(|(k, &v)| h[v] * Self::spin(mask, Some(k)))
                .sum();
            acc.add(self.energy(mask) + field + h[x0]);
        }
        acc.value()
    }

    /// Exact draw from the Gibbs measure by sequential conditionals.
    ///
    /// Spins of `U` are fixed in `U` order; each conditional
    /// `P(σ_k = +1 | σ_{<k})` is the ratio of two restricted enumerations.
    /// Consumes one uniform per vertex of `U`.
    pub fn sample_spins<R: RngCore + ?Sized>(&self, rng: &mut R) -> SpinVector {
        let n = self.n_free();
        let mut prefix = 0u32;
        for k in 0..n {
            let free_bits = n - k - 1;
            let mut plus = LogSum::new();
            let mut minus = LogSum::new();
            for rest in 0..1u32 << free_bits {
                let tail = rest << (k + 1);
                plus.add(self.energy(prefix | tail));
                minus.add(self.energy(prefix | 1 << k | tail));
            }
            let p_plus = 1.0 / (1.0 + math::exp(minus.value() - plus.value()));
            if uniform(rng) >= p_plus {
                prefix |= 1 << k;
            }
        }
        SpinVector::from_mask(self.graph, prefix)
    }
}

/// `F` for a set of couplings.
pub fn partition_function(spec: &IsingSpec<'_>) -> f64 {
    spec.partition_function()
}

pub fn magnetizations(spec: &IsingSpec<'_>) -> FieldVector {
    spec.magnetizations()
}

pub fn sample_spins<R: RngCore + ?Sized>(spec: &IsingSpec<'_>, rng: &mut R) -> SpinVector {
    spec.sample_spins(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::stream::stream;
    use std::vec;
    use std::vec::Vec;

    #[test]
    fn zero_coupling_is_uniform() {
        for g in [single_edge(1.0), triangle(), cycle_with_chord()] {
            let spec = IsingSpec::scaled(&g, 0.0).unwrap();
            let n = g.free_vertices().len() as i32;
            assert!((spec.partition_function() - 2f64.powi(n)).abs() < 1e-12);
            let m = spec.magnetizations();
            assert_eq!(m[g.x0()], 1.0);
            for &v in g.free_vertices() {
                assert_eq!(m[v], 0.0);
            }
        }
    }

    #[test]
    fn two_spin_closed_forms() {
        let g = single_edge(1.0);
        for j in [0.1, 1.0, 5.0] {
            let spec = IsingSpec::new(&g, vec![j]).unwrap();
            let f = spec.partition_function();
            assert!((f - 2.0 * j.cosh()).abs() <= 1e-12 * f);
            let m = spec.magnetization(1);
            assert!((m - j.tanh()).abs() <= 1e-12 * j.tanh());
        }
        let spec = IsingSpec::new(&g, vec![1.0]).unwrap();
        assert!((spec.partition_function() - 3.0861612696304874).abs() < 1e-13);
        assert!((spec.magnetization(1) - 0.7615941559557649).abs() < 1e-15);
    }

    #[test]
    fn triangle_matches_brute_force() {
        let g = triangle();
        let spec = IsingSpec::scaled(&g, 1.0).unwrap();
        let mut f = 0.0;
        let mut ma = 0.0;
        for sa in [-1.0f64, 1.0] {
            for sb in [-1.0f64, 1.0] {
                let w = (sa + sb + sa * sb).exp();
                f += w;
                ma += sa * w;
            }
        }
        assert!((spec.partition_function() - f).abs() < 1e-12 * f);
        assert!((spec.magnetization(1) - ma / f).abs() < 1e-14);
        assert!((spec.magnetization(2) - ma / f).abs() < 1e-14);
    }

    #[test]
    fn chain_magnetization_is_tanh_squared() {
        let g = chain();
        let spec = IsingSpec::scaled(&g, 1.0).unwrap();
        let expected = 1f64.tanh().powi(2);
        assert!((spec.magnetization(2) - expected).abs() < 1e-14);
        assert!((expected - 0.58002).abs() < 1e-5);
    }

    #[test]
    fn magnetization_is_field_derivative() {
        let g = triangle();
        let spec = IsingSpec::new(&g, vec![0.7, 1.3, 0.4]).unwrap();
        let step = 1e-5;
        for &v in g.free_vertices() {
            let mut h = vec![0.0; g.len()];
            h[v] = step;
            let up = spec.log_partition_with_field(&h);
            h[v] = -step;
            let down = spec.log_partition_with_field(&h);
            let fd = (up - down) / (2.0 * step);
            let m = spec.magnetization(v);
            assert!((fd - m).abs() <= 1e-6 * m, "fd {fd} vs {m}");
        }
    }

    #[test]
    fn signed_sum_is_partition_times_magnetization() {
        let g = cycle_with_chord();
        let spec = IsingSpec::new(&g, vec![0.3, 1.1, 0.05, 2.0, 0.8]).unwrap();
        for v in 0..g.len() {
            let direct = spec.log_partition() + spec.magnetization(v).ln();
            assert!((spec.log_signed_sum(v) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn large_couplings_stay_finite() {
        let g = triangle();
        let spec = IsingSpec::scaled(&g, 800.0).unwrap();
        assert!((spec.log_partition() - 2400.0).abs() < 1e-9);
        assert!(spec.partition_function().is_infinite());
        let m = spec.magnetization(1);
        assert!(m.is_finite() && (m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_local_field_keeps_relative_precision() {
        // Edge x0-a nearly cut: <σ_a> = tanh(J) must keep all digits.
        let g = single_edge(1.0);
        let j = 1e-12;
        let spec = IsingSpec::new(&g, vec![j]).unwrap();
        assert!((spec.magnetization(1) / j.tanh() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        let g = triangle();
        assert!(matches!(
            IsingSpec::new(&g, vec![1.0, -0.1, 1.0]),
            Err(Error::NegativeCoupling { edge: 1, .. })
        ));
        assert!(matches!(
            IsingSpec::new(&g, vec![1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let edges: Vec<(usize, usize, f64)> = (0..25).map(|i| (i, i + 1, 1.0)).collect();
        let long = WeightedGraph::from_indices(26, 0, &edges).unwrap();
        assert!(matches!(
            IsingSpec::scaled(&long, 1.0),
            Err(Error::TooManyVertices { max: 24, found: 25 })
        ));
    }

    #[test]
    fn positivity_and_fkg_monotonicity() {
        let g = triangle();
        let grid = [0.0, 0.25, 0.5, 1.0, 2.0];
        let bump = 0.1;
        for &ja in &grid {
            for &jab in &grid {
                let base = [ja, 0.5, jab];
                let m0 = IsingSpec::new(&g, base.to_vec()).unwrap().magnetizations();
                assert!(m0.iter().all(|&m| m >= 0.0));
                for e in 0..3 {
                    let mut bumped = base;
                    bumped[e] += bump;
                    let m1 = IsingSpec::new(&g, bumped.to_vec()).unwrap().magnetizations();
                    for v in 0..3 {
                        assert!(m1[v] >= m0[v] - 1e-15, "J={base:?} edge {e} vertex {v}");
                    }
                }
            }
        }
    }

    fn spin_mean(samples: &[SpinVector], f: impl Fn(&SpinVector) -> f64) -> (f64, f64) {
        let n = samples.len() as f64;
        let xs: Vec<f64> = samples.iter().map(f).collect();
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }

    #[test]
    fn sampling_matches_enumeration() {
        let n = 100_000;
        let g = cycle_with_chord();
        let free = IsingSpec::scaled(&g, 0.0).unwrap();
        let mut rng = stream(21, 0, 0, 0);
        let draws: Vec<_> = (0..n).map(|_| free.sample_spins(&mut rng)).collect();
        assert!(draws.iter().all(|s| s[g.x0()] == 1));
        for &v in g.free_vertices() {
            let (p, se) = spin_mean(&draws, |s| f64::from(s[v] == 1));
            assert!((p - 0.5).abs() < 4.0 * se);
        }

        let edge = single_edge(1.0);
        let spec = IsingSpec::new(&edge, vec![1.0]).unwrap();
        let draws: Vec<_> = (0..n).map(|_| spec.sample_spins(&mut rng)).collect();
        let (m, se) = spin_mean(&draws, |s| s.sign(1));
        assert!((m - 1f64.tanh()).abs() < 4.0 * se);

        let spec = IsingSpec::new(&g, vec![0.3, 1.1, 0.05, 2.0, 0.8]).unwrap();
        let draws: Vec<_> = (0..n).map(|_| spec.sample_spins(&mut rng)).collect();
        for (i, j) in [(1, 2), (1, 3), (2, 3)] {
            let (m, se) = spin_mean(&draws, |s| s.sign(i) * s.sign(j));
            let target = spec.pair_correlation(i, j);
            assert!((m - target).abs() < 4.0 * se, "({i},{j}): {m} vs {target}");
        }
    }

    #[test]
    fn spin_vector_validation() {
        let g = triangle();
        assert!(SpinVector::new(&g, vec![1, -1, 1]).is_ok());
        assert_eq!(
            SpinVector::new(&g, vec![-1, 1, 1]),
            Err(Error::BadSpin { vertex: 0, value: -1 })
        );
        assert!(SpinVector::new(&g, vec![1, 0, 1]).is_err());
        assert_eq!(SpinVector::enumerate(&g).count(), 4);
    }
}

//! Weighted graphs, the Dirichlet form, and the Green function killed outside `U`.

use alloc::collections::VecDeque;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut, Index, IndexMut};

use nalgebra::DMatrix;

use crate::error::{Error, GraphError, Result};

/// Unvalidated graph input: labelled vertices, the special vertex, weighted edges.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDescription {
    pub vertices: Vec<String>,
    pub x0: String,
    pub edges: Vec<(String, String, f64)>,
}

impl GraphDescription {
    pub fn new<I, S>(vertices: I, x0: impl Into<String>) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            vertices: vertices.into_iter().map(Into::into).collect(),
            x0: x0.into(),
            edges: Vec::new(),
        }
    }

    pub fn edge(mut self, u: impl Into<String>, v: impl Into<String>, weight: f64) -> Self {
        self.edges.push((u.into(), v.into(), weight));
        self
    }

    pub fn build(&self) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::build(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    /// The endpoint opposite to `w`, if `w` is an endpoint.
    pub fn other(&self, w: usize) -> Option<usize> {
        if w == self.u {
            Some(self.v)
        } else if w == self.v {
            Some(self.u)
        } else {
            None
        }
    }
}

/// A finite connected graph with positive symmetric conductances and a
/// distinguished vertex `x0`.
///
/// Immutable after construction. Neighbor lists follow edge declaration order,
/// which fixes the order in which jump targets are drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    x0: usize,
    edges: Vec<Edge>,
    // (neighbor, weight, edge index)
    neighbors: Vec<Vec<(usize, f64, usize)>>,
    total_weight: Vec<f64>,
    free: Vec<usize>,
    free_pos: Vec<Option<usize>>,
}

impl WeightedGraph {
    pub fn build(desc: &GraphDescription) -> Result<Self, GraphError> {
        if desc.vertices.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut labels: Vec<String> = Vec::with_capacity(desc.vertices.len());
        for v in &desc.vertices {
            if labels.contains(v) {
                return Err(GraphError::DuplicateVertex(v.clone()));
            }
            labels.push(v.clone());
        }
        let lookup = |s: &str| labels.iter().position(|l| l == s);
        let x0 = lookup(&desc.x0).ok_or_else(|| GraphError::MissingX0(desc.x0.clone()))?;

        let n = labels.len();
        let mut edges = Vec::with_capacity(desc.edges.len());
        for (a, b, w) in &desc.edges {
            let u = lookup(a).ok_or_else(|| GraphError::UnknownVertex(a.clone()))?;
            let v = lookup(b).ok_or_else(|| GraphError::UnknownVertex(b.clone()))?;
            if u == v {
                return Err(GraphError::SelfLoop(a.clone()));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(GraphError::NonPositiveWeight {
                    u: a.clone(),
                    v: b.clone(),
                    weight: *w,
                });
            }
            if edges
                .iter()
                .any(|e: &Edge| (e.u == u && e.v == v) || (e.u == v && e.v == u))
            {
                return Err(GraphError::DuplicateEdge(a.clone(), b.clone()));
            }
            edges.push(Edge { u, v, weight: *w });
        }

        let mut neighbors = vec![Vec::new(); n];
        let mut total_weight = vec![0.0; n];
        for (k, e) in edges.iter().enumerate() {
            neighbors[e.u].push((e.v, e.weight, k));
            neighbors[e.v].push((e.u, e.weight, k));
            total_weight[e.u] += e.weight;
            total_weight[e.v] += e.weight;
        }

        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([x0]);
        seen[x0] = true;
        while let Some(v) = queue.pop_front() {
            for &(w, _, _) in &neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        if let Some(lost) = seen.iter().position(|s| !s) {
            return Err(GraphError::Disconnected(labels[lost].clone(), labels[x0].clone()));
        }

        let free: Vec<usize> = (0..n).filter(|&v| v != x0).collect();
        let mut free_pos = vec![None; n];
        for (k, &v) in free.iter().enumerate() {
            free_pos[v] = Some(k);
        }

        Ok(Self {
            labels,
            x0,
            edges,
            neighbors,
            total_weight,
            free,
            free_pos,
        })
    }

    /// Graph on vertices labelled `"0"`, `"1"`, ... given by index.
    pub fn from_indices(n: usize, x0: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut desc = GraphDescription::new((0..n).map(|i| i.to_string()), x0.to_string());
        for &(u, v, w) in edges {
            desc = desc.edge(u.to_string(), v.to_string(), w);
        }
        Self::build(&desc)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn x0(&self) -> usize {
        self.x0
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(neighbor, weight, edge index)` triples in edge declaration order.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64, usize)] {
        &self.neighbors[v]
    }

    /// `W_v`, the sum of conductances at `v`.
    pub fn total_weight(&self, v: usize) -> f64 {
        self.total_weight[v]
    }

    /// `W_{u,v}`, zero for non-adjacent pairs.
    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.neighbors[u]
            .iter()
            .find(|(w, _, _)| *w == v)
            .map_or(0.0, |&(_, w, _)| w)
    }

    /// Vertices of `U`, in declared order.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Position of `v` within [`free_vertices`](Self::free_vertices).
    pub fn free_position(&self, v: usize) -> Option<usize> {
        self.free_pos[v]
    }

    pub fn description(&self) -> GraphDescription {
        GraphDescription {
            vertices: self.labels.clone(),
            x0: self.labels[self.x0].clone(),
            edges: self
                .edges
                .iter()
                .map(|e| (self.labels[e.u].clone(), self.labels[e.v].clone(), e.weight))
                .collect(),
        }
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                found,
            })
        }
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// `E(f,f) = 1/2 sum_{x,y} W_{x,y} (f(x) - f(y))^2`.
    pub fn dirichlet_energy(&self, f: &[f64]) -> Result<f64> {
        self.check_len(f.len())?;
        Ok(self.energy_unchecked(f))
    }

    /// Each unordered edge appears twice in the double sum, so the half cancels.
    pub(crate) fn energy_unchecked(&self, f: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                let d = f[e.u] - f[e.v];
                e.weight * d * d
            })
            .sum()
    }

    /// `Lf(x) = sum_y W_{x,y} (f(y) - f(x))`.
    pub fn generator(&self, f: &[f64]) -> Result<FieldVector> {
        self.check_len(f.len())?;
        Ok(FieldVector::from(
            (0..self.len())
                .map(|x| {
                    self.neighbors[x]
                        .iter()
                        .map(|&(y, w, _)| w * (f[y] - f[x]))
                        .sum()
                })
                .collect::<Vec<f64>>(),
        ))
    }

    /// The Laplacian `diag(W_i) - W` restricted to `U x U`.
    pub fn restricted_laplacian(&self) -> DMatrix<f64> {
        let m = self.free.len();
        let mut lap = DMatrix::zeros(m, m);
        for (r, &v) in self.free.iter().enumerate() {
            lap[(r, r)] = self.total_weight[v];
            for &(w, weight, _) in &self.neighbors[v] {
                if let Some(c) = self.free_pos[w] {
                    lap[(r, c)] -= weight;
                }
            }
        }
        lap
    }

    /// `G_U`, the inverse of the restricted Laplacian.
    ///
    /// Rows and columns follow [`free_vertices`](Self::free_vertices).
    pub fn green_function(&self) -> DMatrix<f64> {
        let m = self.free.len();
        if m == 0 {
            return DMatrix::zeros(0, 0);
        }
        let chol = self
            .restricted_laplacian()
            .cholesky()
            .expect("restricted Laplacian of a connected graph is positive definite");
        let mut g = chol.inverse();
        // Symmetrize away rounding asymmetry.
        for i in 0..m {
            for j in (i + 1)..m {
                let s = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }
}

/// One real value per vertex, indexed by declared vertex order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldVector(Vec<f64>);

impl FieldVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Fails unless every entry is finite and strictly positive.
    pub fn ensure_positive(&self, name: &'static str) -> Result<()> {
        match self.0.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
            None => Ok(()),
            Some(vertex) => Err(Error::NonPositiveEntry {
                name,
                vertex,
                value: self.0[vertex],
            }),
        }
    }
}

impl From<Vec<f64>> for FieldVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<&[f64]> for FieldVector {
    fn from(v: &[f64]) -> Self {
        Self(v.to_vec())
    }
}

impl Deref for FieldVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl Index<usize> for FieldVector {
    type Output = f64;
    fn index(&self, v: usize) -> &f64 {
        &self.0[v]
    }
}

impl IndexMut<usize> for FieldVector {
    fn index_mut(&mut self, v: usize) -> &mut f64 {
        &mut self.0[v]
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_edge_total_weight() {
        let g = single_edge(2.0);
        assert_eq!(g.total_weight(1), 2.0);
        assert_eq!(g.free_vertices(), &[1]);
    }

    #[test]
    fn triangle_total_weight() {
        assert_eq!(triangle().total_weight(1), 2.0);
    }

    #[test]
    fn validation_errors_are_distinct() {
        let no_edges = GraphDescription::new(["x0", "a"], "x0").build();
        assert!(matches!(no_edges, Err(GraphError::Disconnected(..))));

        let bad_weight = GraphDescription::new(["x0", "a"], "x0").edge("x0", "a", 0.0).build();
        assert!(matches!(bad_weight, Err(GraphError::NonPositiveWeight { .. })));
        let nan_weight = GraphDescription::new(["x0", "a"], "x0")
            .edge("x0", "a", f64::NAN)
            .build();
        assert!(matches!(nan_weight, Err(GraphError::NonPositiveWeight { .. })));

        let self_loop = GraphDescription::new(["x0", "a"], "x0")
            .edge("x0", "a", 1.0)
            .edge("a", "a", 1.0)
            .build();
        assert_eq!(self_loop, Err(GraphError::SelfLoop("a".into())));

        let dup = GraphDescription::new(["x0", "a"], "x0")
            .edge("x0", "a", 1.0)
            .edge("a", "x0", 3.0)
            .build();
        assert!(matches!(dup, Err(GraphError::DuplicateEdge(..))));

        let missing = GraphDescription::new(["p", "a"], "x0").edge("p", "a", 1.0).build();
        assert_eq!(missing, Err(GraphError::MissingX0("x0".into())));

        let unknown = GraphDescription::new(["x0", "a"], "x0").edge("x0", "z", 1.0).build();
        assert_eq!(unknown, Err(GraphError::UnknownVertex("z".into())));
    }

    #[test]
    fn x0_need_not_be_first() {
        let g = GraphDescription::new(["a", "x0", "b"], "x0")
            .edge("a", "x0", 1.0)
            .edge("x0", "b", 1.0)
            .build()
            .unwrap();
        assert_eq!(g.x0(), 1);
        assert_eq!(g.free_vertices(), &[0, 2]);
        assert_eq!(g.free_position(2), Some(1));
        assert_eq!(g.free_position(1), None);
    }

    #[test]
    fn energy_examples() {
        let g = single_edge(2.0);
        assert_eq!(g.dirichlet_energy(&[0.0, 1.0]).unwrap(), 2.0);
        assert_eq!(g.dirichlet_energy(&[3.5, 3.5]).unwrap(), 0.0);
        let t = triangle();
        assert_eq!(t.dirichlet_energy(&[0.0, 1.0, 2.0]).unwrap(), 6.0);
        assert!(matches!(
            t.dirichlet_energy(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn energy_matches_generator_pairing() {
        // E(f,f) = -<f, Lf>
        let g = cycle_with_chord();
        let f = [0.3, -1.2, 0.7, 2.0];
        let lf = g.generator(&f).unwrap();
        let pairing: f64 = f.iter().zip(lf.iter()).map(|(a, b)| a * b).sum();
        assert!((g.dirichlet_energy(&f).unwrap() + pairing).abs() < 1e-12);
    }

    #[test]
    fn green_function_examples() {
        let g = single_edge(2.0).green_function();
        assert!((g[(0, 0)] - 0.5).abs() < 1e-15);

        let g = triangle().green_function();
        let expected = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - expected[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn green_function_inverts_laplacian() {
        for graph in [single_edge(2.0), triangle(), cycle_with_chord(), chain()] {
            let g = graph.green_function();
            let lap = graph.restricted_laplacian();
            let prod = &g * &lap;
            let m = g.nrows();
            for i in 0..m {
                for j in 0..m {
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((prod[(i, j)] - target).abs() < 1e-12);
                    assert!((g[(i, j)] - g[(j, i)]).abs() < 1e-12);
                }
            }
            assert!(g.clone().cholesky().is_some());
        }
    }

    proptest! {
        #[test]
        fn energy_is_shift_and_sign_invariant(
            f in proptest::collection::vec(-10.0f64..10.0, 4),
            c in -100.0f64..100.0,
        ) {
            let g = cycle_with_chord();
            let e = g.dirichlet_energy(&f).unwrap();
            let shifted: Vec<f64> = f.iter().map(|x| x + c).collect();
            let negated: Vec<f64> = f.iter().map(|x| -x).collect();
            let es = g.dirichlet_energy(&shifted).unwrap();
            prop_assert!((es - e).abs() <= 1e-12 * e.max(1.0) * (1.0 + c.abs()));
            prop_assert_eq!(g.dirichlet_energy(&negated).unwrap(), e);
            prop_assert!(e >= 0.0);
        }
    }
}

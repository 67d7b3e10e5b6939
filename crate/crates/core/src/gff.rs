//! The Gaussian free field pinned to zero at `x0`.
//!
//! Samples use the Cholesky factor `L` of the precision matrix `Λ_U`:
//! drawing `z` standard normal (one per vertex of `U`, in `U` order) and
//! solving `Lᵀ φ_U = z` gives covariance `(L Lᵀ)⁻¹ = G_U`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::error::{Error, Result};
use crate::graph::{FieldVector, WeightedGraph};
use crate::math;
use crate::stream::standard_normal;

/// Precomputed sampler and density for one graph.
#[derive(Debug, Clone)]
pub struct GaussianFreeField {
    n: usize,
    free: Vec<usize>,
    precision_factor: DMatrix<f64>,
    log_normalizer: f64,
}

impl GaussianFreeField {
    pub fn new(g: &WeightedGraph) -> Self {
        let free = g.free_vertices().to_vec();
        let m = free.len();
        let (precision_factor, log_det_precision) = if m == 0 {
            (DMatrix::zeros(0, 0), 0.0)
        } else {
            let l = g
                .restricted_laplacian()
                .cholesky()
                .expect("restricted Laplacian of a connected graph is positive definite")
                .unpack();
            let log_det = 2.0 * (0..m).map(|i| math::ln(l[(i, i)])).sum::<f64>();
            (l, log_det)
        };
        // log C = -|U|/2 log(2π) - 1/2 log det G_U, and det G_U = 1 / det Λ_U.
        let log_normalizer = -0.5 * m as f64 * math::ln(2.0 * PI) + 0.5 * log_det_precision;
        Self {
            n: g.len(),
            free,
            precision_factor,
            log_normalizer,
        }
    }

    /// `log C = log((2π)^{-|U|/2} (det G_U)^{-1/2})`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> FieldVector {
        let mut phi = FieldVector::zeros(self.n);
        if self.free.is_empty() {
            return phi;
        }
        let z = DVector::from_iterator(self.free.len(), self.free.iter().map(|_| standard_normal(rng)));
        let x = self
            .precision_factor
            .tr_solve_lower_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        for (k, &v) in self.free.iter().enumerate() {
            phi[v] = x[k];
        }
        phi
    }

    /// `log C - E(φ,φ)/2`; requires `φ_{x0} = 0`.
    pub fn log_density(&self, g: &WeightedGraph, phi: &[f64]) -> Result<f64> {
        g.check_len(phi.len())?;
        let at_x0 = phi[g.x0()];
        if at_x0 != 0.0 {
            return Err(Error::NonzeroAtX0(at_x0));
        }
        Ok(self.log_normalizer - 0.5 * g.energy_unchecked(phi))
    }
}

/// One draw of the pinned field; `φ_{x0} = 0` exactly.
pub fn sample_gff<R: RngCore + ?Sized>(g: &WeightedGraph, rng: &mut R) -> FieldVector {
    GaussianFreeField::new(g).sample(rng)
}

pub fn gff_log_density(g: &WeightedGraph, phi: &[f64]) -> Result<f64> {
    GaussianFreeField::new(g).log_density(g, phi)
}

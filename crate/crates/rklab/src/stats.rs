//! Sample statistics used by the experiment reports.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    Empty,
    #[error("values and weights differ in length ({values} vs {weights})")]
    LengthMismatch { values: usize, weights: usize },
    #[error("weights sum to zero")]
    DegenerateWeights,
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moment {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> Result<Moment, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(Moment {
        mean,
        stderr: (var / n).sqrt(),
        n: xs.len(),
    })
}

/// Unbiased sample variance and a large-sample standard error for it.
pub fn variance_stderr(xs: &[f64]) -> Result<Moment, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::Empty);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Ok(Moment {
        mean: m2 * n / (n - 1.0),
        stderr: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        n: xs.len(),
    })
}

/// Self-normalized weighted mean `Σ w v / Σ w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedMoment {
    pub mean: f64,
    /// Delta-method standard error.
    pub stderr: f64,
    /// `(Σ w)² / Σ w²`.
    pub ess: f64,
}

pub fn weighted_moment_ci(values: &[f64], weights: &[f64]) -> Result<WeightedMoment, StatsError> {
    if values.len() != weights.len() {
        return Err(StatsError::LengthMismatch {
            values: values.len(),
            weights: weights.len(),
        });
    }
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    if sw == 0.0 || sw2 == 0.0 {
        return Err(StatsError::DegenerateWeights);
    }
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / sw;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (w * (v - mean)).powi(2))
        .sum::<f64>()
        / (sw * sw);
    Ok(WeightedMoment {
        mean,
        stderr: var.sqrt(),
        ess: sw * sw / sw2,
    })
}

/// Two-sided normal tail probability of a z-score.
pub fn z_pvalue(z: f64) -> f64 {
    if !z.is_finite() {
        return 0.0;
    }
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut p = 0.0;
    let mut prev = f64::INFINITY;
    for k in 1..=100 {
        let k = f64::from(k);
        let term = (-2.0 * k * k * lambda * lambda).exp();
        p += if k as u32 % 2 == 1 { term } else { -term };
        if term <= 1e-16 * p || term == prev {
            break;
        }
        prev = term;
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
///
/// The p-value uses the effective size `n m / (n + m)` with the usual
/// small-sample correction `λ = (√n_e + 0.12 + 0.11/√n_e) D`.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<(f64, f64), StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // Whatever remains of one sample only moves its CDF toward 1.
    d = d.max((i as f64 / na - j as f64 / nb).abs());
    if d == 0.0 {
        return Ok((0.0, 1.0));
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok((d, kolmogorov_tail(lambda)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rklab_core::stream::{standard_normal, stream};

    #[test]
    fn ks_examples() {
        let a = [0.3, 1.2, -0.5, 2.0];
        assert_eq!(two_sample_ks(&a, &a).unwrap(), (0.0, 1.0));
        assert_eq!(two_sample_ks(&[0.0], &[1.0]).unwrap().0, 1.0);
        assert_eq!(two_sample_ks(&[], &[1.0]), Err(StatsError::Empty));
        let (d, _) = two_sample_ks(&[1.0, 2.0, 3.0, 4.0], &[3.5, 4.5]).unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn ks_calibration_on_normal_samples() {
        let mut ok = 0;
        for rep in 0..100 {
            let mut ra = stream(17, 0, 0, rep);
            let mut rb = stream(17, 0, 1, rep);
            let a: Vec<f64> = (0..10_000).map(|_| standard_normal(&mut ra)).collect();
            let b: Vec<f64> = (0..10_000).map(|_| standard_normal(&mut rb)).collect();
            if two_sample_ks(&a, &b).unwrap().1 >= 0.001 {
                ok += 1;
            }
        }
        assert!(ok >= 99, "{ok}");
    }

    #[test]
    fn weighted_examples() {
        let v = [1.0, 2.0, 4.0, 5.0];
        let plain = mean_stderr(&v).unwrap();
        let w = weighted_moment_ci(&v, &[1.0; 4]).unwrap();
        assert!((w.mean - plain.mean).abs() < 1e-15);
        assert_eq!(w.ess, 4.0);
        // Delta-method stderr uses 1/n instead of 1/(n-1).
        assert!((w.stderr - plain.stderr * (3.0f64 / 4.0).sqrt()).abs() < 1e-15);

        assert_eq!(weighted_moment_ci(&[3.0, 99.0], &[2.0, 0.0]).unwrap().mean, 3.0);
        assert_eq!(weighted_moment_ci(&[1.0, 2.0], &[1.0, -1.0]), Err(StatsError::DegenerateWeights));
        let near = weighted_moment_ci(&[1.0, 2.0, 3.0], &[1.0, -1.0, 1e-3]).unwrap();
        assert!(near.ess < 10.0);
        assert!(weighted_moment_ci(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn tails() {
        assert!((z_pvalue(1.959963984540054) - 0.05).abs() < 1e-12);
        assert_eq!(kolmogorov_tail(0.0), 1.0);
        // Tabulated: P(K > 1.36) ≈ 0.0494.
        assert!((kolmogorov_tail(1.36) - 0.04946).abs() < 1e-4);
    }

    #[test]
    fn variance_of_normals() {
        let mut rng = stream(18, 0, 0, 0);
        let xs: Vec<f64> = (0..50_000).map(|_| 2.0 * standard_normal(&mut rng)).collect();
        let v = variance_stderr(&xs).unwrap();
        assert!((v.mean - 4.0).abs() < 4.0 * v.stderr);
    }
}

//! Small statistical helpers shared by the analysis code and the
//! acceptance checks.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Result of a chi-square test of a count series against the
/// constant-rate hypothesis (expected value = sample mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatnessTest {
    /// Pearson statistic Σ (n_k − n̄)² / n̄.
    pub statistic: f64,
    /// Degrees of freedom (points − 1; the mean is estimated).
    pub dof: usize,
    /// Upper-tail probability of the statistic under χ²(dof).
    pub p_value: f64,
}

impl FlatnessTest {
    /// True when the series is consistent with a constant rate at the
    /// given significance level (e.g. 0.05).
    pub fn is_flat(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Tests whether Poisson counts are consistent with a constant rate.
pub fn chi_square_flatness(counts: &[u64]) -> Result<FlatnessTest> {
    if counts.len() < 2 {
        return Err(Error::NotEnoughData {
            context: "chi-square flatness test",
            needed: 2,
            got: counts.len(),
        });
    }
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::invalid(
            "counts",
            "all-zero series has no defined flatness statistic",
        ));
    }
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - mean;
            d * d / mean
        })
        .sum::<f64>();
    let dof = counts.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = 1.0 - chi.cdf(statistic);
    Ok(FlatnessTest {
        statistic,
        dof,
        p_value,
    })
}

/// Probability that a zero-mean Gaussian variable with standard deviation
/// `sigma` falls in `[lo, hi)`. Degenerates to an indicator at σ = 0.
pub fn gaussian_window_probability(sigma: f64, lo: f64, hi: f64) -> f64 {
    if sigma <= 0.0 {
        return if lo <= 0.0 && 0.0 < hi { 1.0 } else { 0.0 };
    }
    let z = |x: f64| 0.5 * (1.0 + erf(x / (sigma * std::f64::consts::SQRT_2)));
    z(hi) - z(lo)
}

/// Error function, via the statrs implementation.
pub fn erf(x: f64) -> f64 {
    use statrs::function::erf;
    erf::erf(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    #[test]
    fn flat_poisson_series_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let poisson = Poisson::new(500.0).unwrap();
        let counts: Vec<u64> = (0..24).map(|_| poisson.sample(&mut rng) as u64).collect();
        let test = chi_square_flatness(&counts).unwrap();
        assert_eq!(test.dof, 23);
        assert!(test.is_flat(0.05), "p = {}", test.p_value);
    }

    #[test]
    fn modulated_series_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let counts: Vec<u64> = (0..24)
            .map(|k| {
                let mean = 500.0 * (1.0 + 0.5 * (k as f64 * 0.5).cos());
                Poisson::new(mean).unwrap().sample(&mut rng) as u64
            })
            .collect();
        let test = chi_square_flatness(&counts).unwrap();
        assert!(!test.is_flat(0.05), "p = {}", test.p_value);
    }

    #[test]
    fn statistic_matches_hand_computation() {
        let test = chi_square_flatness(&[10, 12, 8, 10]).unwrap();
        // mean 10, deviations (0, 2, -2, 0) -> 8/10.
        assert_abs_diff_eq!(test.statistic, 0.8, epsilon = 1e-12);
        assert_eq!(test.dof, 3);
        assert!(test.is_flat(0.05));
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(chi_square_flatness(&[5]).is_err());
        assert!(chi_square_flatness(&[0, 0, 0]).is_err());
    }

    #[test]
    fn window_probability() {
        // Symmetric ±1σ window: ~68.27 %. The erf implementation is good
        // to ~1e-10, far below any statistical tolerance used downstream.
        assert_abs_diff_eq!(
            gaussian_window_probability(1.0, -1.0, 1.0),
            0.682_689_492_137_086,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(gaussian_window_probability(1.0, -50.0, 50.0), 1.0, epsilon = 1e-12);
        // σ = 0: everything lands at exactly zero.
        assert_eq!(gaussian_window_probability(0.0, -0.5, 0.5), 1.0);
        assert_eq!(gaussian_window_probability(0.0, 0.1, 0.5), 0.0);
        // Monte Carlo cross-check.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma = 21.5e-12;
        let (lo, hi) = (-46e-12, 42e-12);
        let hits = (0..200_000)
            .filter(|_| {
                let x: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * sigma;
                lo <= x && x < hi
            })
            .count();
        let p = gaussian_window_probability(sigma, lo, hi);
        assert_abs_diff_eq!(hits as f64 / 200_000.0, p, epsilon = 5e-3);
    }
}

//! Spatial beating of the routed two-photon states.
//!
//! Scanning a relative delay Δτ between the two photons of a routed state
//! produces an interference pattern whose carrier frequency identifies the
//! state: the antibunched output beats at the signal-idler *difference*
//! frequency (|ν_i − ν_s| ≈ 0.8 THz, millimeter-scale path period), the
//! bunched output at the *sum* frequency (≈ 386 THz, i.e. at half the
//! pump wavelength — sub-micron period). The envelope is the sinc-shaped
//! overlap of the flat-top single-photon spectra.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::seed::derive_seed;
use crate::source::SourceModel;
use crate::{Error, Result, SPEED_OF_LIGHT};

/// Seed stream reserved for beating scans.
const STREAM_BEATING: u64 = 5;

/// Which routed state the delay scan interrogates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeatingMode {
    /// Photons split between the outputs; beats at `|ν_i − ν_s|`.
    Antibunched,
    /// Both photons on one output; beats at `ν_i + ν_s`.
    Bunched,
}

/// Parameters of the two-photon beating pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatingConfig {
    pub mode: BeatingMode,
    /// Carrier frequency of the pattern, Hz.
    pub beat_frequency_hz: f64,
    /// Envelope parameter σ, rad/s: the sinc envelope is `sinc(σ Δτ)`
    /// with its first zero at `Δτ = π/σ`.
    pub sigma_rad_per_s: f64,
    /// Interference visibility of the scan.
    pub visibility: f64,
}

impl BeatingConfig {
    /// Builds the pattern parameters for one routed state of a source.
    ///
    /// The envelope uses the signal-channel bandwidth; the model assumes
    /// both channels share it, as the reference filters do.
    pub fn from_source(source: &SourceModel, mode: BeatingMode, visibility: f64) -> Result<Self> {
        source.validate()?;
        let beat_frequency_hz = match mode {
            BeatingMode::Antibunched => source.frequency_spacing_hz(),
            BeatingMode::Bunched => source.frequency_sum_hz(),
        };
        let cfg = Self {
            mode,
            beat_frequency_hz,
            sigma_rad_per_s: std::f64::consts::TAU * source.signal.bandwidth_3db_hz,
            visibility,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beat_frequency_hz.is_finite() || self.beat_frequency_hz <= 0.0 {
            return Err(Error::invalid(
                "beating.beat_frequency_hz",
                format!("must be positive, got {}", self.beat_frequency_hz),
            ));
        }
        if !self.sigma_rad_per_s.is_finite() || self.sigma_rad_per_s <= 0.0 {
            return Err(Error::invalid(
                "beating.sigma_rad_per_s",
                format!("must be positive, got {}", self.sigma_rad_per_s),
            ));
        }
        if !self.visibility.is_finite() || !(0.0..=1.0).contains(&self.visibility) {
            return Err(Error::invalid(
                "beating.visibility",
                format!("must lie in [0, 1], got {}", self.visibility),
            ));
        }
        Ok(())
    }
}

/// `sin(x)/x` with the removable singularity handled by its series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // sin(x)/x = 1 − x²/6 + x⁴/120 − …; at |x| < 1e-4 the x⁴ term is
        // below f64 resolution.
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Normalized coincidence probability at one scan delay:
/// `(1 − V sinc(σΔτ) cos(2πνΔτ)) / 2`, which tends to 1/2 once the
/// envelope has decayed.
pub fn beating_probability(config: &BeatingConfig, delta_tau_s: f64) -> f64 {
    let envelope = sinc(config.sigma_rad_per_s * delta_tau_s);
    let carrier = (std::f64::consts::TAU * config.beat_frequency_hz * delta_tau_s).cos();
    (1.0 - config.visibility * envelope * carrier) / 2.0
}

/// Beat period in time and as free-space path length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatingPeriod {
    /// Temporal period `1/ν`, s.
    pub period_s: f64,
    /// Path-length period `c/ν`, m.
    pub path_length_m: f64,
}

/// Closed-form beat period of the pattern.
pub fn beating_period(config: &BeatingConfig) -> Result<BeatingPeriod> {
    config.validate()?;
    Ok(BeatingPeriod {
        period_s: 1.0 / config.beat_frequency_hz,
        path_length_m: SPEED_OF_LIGHT / config.beat_frequency_hz,
    })
}

/// Delay at which the sinc envelope first crosses zero, `π/σ`, s.
pub fn envelope_first_zero_s(config: &BeatingConfig) -> Result<f64> {
    config.validate()?;
    Ok(std::f64::consts::PI / config.sigma_rad_per_s)
}

/// Entanglement-fidelity lower bound implied by a beating visibility:
/// `F ≥ (1 + V) / 2`.
pub fn fidelity_from_visibility(visibility: f64) -> Result<f64> {
    if !visibility.is_finite() || !(0.0..=1.0).contains(&visibility) {
        return Err(Error::invalid(
            "visibility",
            format!("must lie in [0, 1], got {visibility}"),
        ));
    }
    Ok((1.0 + visibility) / 2.0)
}

/// One delay point of a simulated scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatingPoint {
    pub delta_tau_s: f64,
    /// Poisson-drawn coincidences.
    pub counts: u64,
    /// Expected counts at this delay.
    pub prediction: f64,
}

/// A simulated delay scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatingScan {
    pub config: BeatingConfig,
    /// Expected counts per point once the envelope has decayed.
    pub baseline_counts: f64,
    pub points: Vec<BeatingPoint>,
}

impl BeatingScan {
    pub fn delays(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.delta_tau_s).collect()
    }

    pub fn counts(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.counts).collect()
    }

    /// Writes the scan as CSV with header `delta_tau_ps,counts,prediction`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "delta_tau_ps,counts,prediction")?;
        for p in &self.points {
            writeln!(
                w,
                "{:.6},{},{:.6}",
                p.delta_tau_s * 1e12,
                p.counts,
                p.prediction
            )?;
        }
        Ok(())
    }
}

/// Uniform delay grid from 0 to `max_s` inclusive.
pub fn delay_grid(points: usize, max_s: f64) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::NotEnoughData {
            context: "delay grid",
            needed: 2,
            got: points,
        });
    }
    if !max_s.is_finite() || max_s <= 0.0 {
        return Err(Error::invalid(
            "delay_max_s",
            format!("must be positive, got {max_s}"),
        ));
    }
    let step = max_s / (points - 1) as f64;
    Ok((0..points).map(|k| k as f64 * step).collect())
}

/// Draws Poisson counts around the analytic pattern at each delay.
///
/// `baseline_counts` is the expected count level far outside the envelope
/// (where the probability is 1/2); the mean at each point is
/// `baseline · (1 − V sinc cos)`, i.e. twice the normalized probability
/// times the baseline.
pub fn simulate_beating_scan(
    config: &BeatingConfig,
    delays_s: &[f64],
    baseline_counts: f64,
    seed: u64,
) -> Result<BeatingScan> {
    config.validate()?;
    if delays_s.len() < 2 {
        return Err(Error::NotEnoughData {
            context: "beating scan",
            needed: 2,
            got: delays_s.len(),
        });
    }
    if delays_s.iter().any(|d| !d.is_finite()) {
        return Err(Error::invalid("delays_s", "delays must be finite"));
    }
    if !baseline_counts.is_finite() || baseline_counts <= 0.0 {
        return Err(Error::invalid(
            "baseline_counts",
            format!("must be positive, got {baseline_counts}"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_BEATING, 0));
    let points = delays_s
        .iter()
        .map(|&delta| {
            let prediction = baseline_counts * 2.0 * beating_probability(config, delta);
            let counts = if prediction > 0.0 {
                Poisson::new(prediction).expect("positive mean").sample(&mut rng) as u64
            } else {
                0
            };
            BeatingPoint {
                delta_tau_s: delta,
                counts,
                prediction,
            }
        })
        .collect();
    Ok(BeatingScan {
        config: config.clone(),
        baseline_counts,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn reference(mode: BeatingMode) -> BeatingConfig {
        BeatingConfig::from_source(&SourceModel::default(), mode, 0.99).unwrap()
    }

    #[test]
    fn antibunched_period_is_1_25_ps() {
        let period = beating_period(&reference(BeatingMode::Antibunched)).unwrap();
        // Frozen from 1/|ν_i − ν_s| with the reference wavelengths.
        assert_abs_diff_eq!(period.period_s, 1.250_400_852_130_712e-12, epsilon = 1e-24);
        assert_abs_diff_eq!(period.path_length_m, 374.86e-6, epsilon = 0.2e-6);
        // Within 1 % of the nominal 1.25 ps / 375 μm.
        assert!((period.period_s / 1.25e-12 - 1.0).abs() < 0.01);
        assert!((period.path_length_m / 375e-6 - 1.0).abs() < 0.01);
    }

    #[test]
    fn bunched_period_is_2_59_fs() {
        let period = beating_period(&reference(BeatingMode::Bunched)).unwrap();
        assert_abs_diff_eq!(period.period_s, 2.589_338_558_937_682e-15, epsilon = 1e-27);
        // The path period is half the pump wavelength: the pattern carries
        // the phase of the pump that created the pair.
        let source = SourceModel::default();
        assert_abs_diff_eq!(
            period.path_length_m,
            source.pump_wavelength_nm * 1e-9 / 2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(period.path_length_m, 776.26e-9, epsilon = 0.1e-9);
        // Within 1 % of the nominal 2.586 fs.
        assert!((period.period_s / 2.586e-15 - 1.0).abs() < 0.01);
    }

    #[test]
    fn envelope_zero_at_15_625_ps() {
        let zero = envelope_first_zero_s(&reference(BeatingMode::Antibunched)).unwrap();
        // π/σ = 1/(2Δν) with Δν = 32 GHz.
        assert_abs_diff_eq!(zero, 15.625e-12, epsilon = 1e-18);
        // The pattern modulation vanishes there regardless of the carrier.
        let cfg = reference(BeatingMode::Antibunched);
        assert_abs_diff_eq!(beating_probability(&cfg, zero), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn antibunched_scan_dips_at_zero_delay() {
        let cfg = reference(BeatingMode::Antibunched);
        assert_abs_diff_eq!(
            beating_probability(&cfg, 0.0),
            (1.0 - 0.99) / 2.0,
            epsilon = 1e-12
        );
        // Half a beat period later the pattern peaks (envelope ≈ 1 there).
        let half_period = 0.5 / cfg.beat_frequency_hz;
        assert!(beating_probability(&cfg, half_period) > 0.9);
    }

    #[test]
    fn sinc_series_matches_ratio_at_crossover() {
        for &x in &[1e-5f64, 5e-5, 9.9e-5, 1.1e-4, 1e-3] {
            let direct = x.sin() / x;
            assert_abs_diff_eq!(sinc(x), direct, epsilon = 1e-15);
            assert_abs_diff_eq!(sinc(-x), direct, epsilon = 1e-15);
        }
        assert_eq!(sinc(0.0), 1.0);
        assert_abs_diff_eq!(sinc(std::f64::consts::PI), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fidelity_bound() {
        assert_eq!(fidelity_from_visibility(0.99).unwrap(), 0.995);
        assert_eq!(fidelity_from_visibility(1.0).unwrap(), 1.0);
        assert_eq!(fidelity_from_visibility(0.0).unwrap(), 0.5);
        assert!(fidelity_from_visibility(1.2).is_err());
        assert!(fidelity_from_visibility(-0.1).is_err());
    }

    #[test]
    fn delay_grid_layout() {
        let grid = delay_grid(64, 5e-12).unwrap();
        assert_eq!(grid.len(), 64);
        assert_eq!(grid[0], 0.0);
        assert_abs_diff_eq!(grid[63], 5e-12, epsilon = 1e-24);
        assert!(delay_grid(1, 5e-12).is_err());
        assert!(delay_grid(64, 0.0).is_err());
    }

    #[test]
    fn scan_is_deterministic_and_poisson_like() {
        let cfg = reference(BeatingMode::Antibunched);
        let delays = delay_grid(64, 5e-12).unwrap();
        let a = simulate_beating_scan(&cfg, &delays, 500.0, 7).unwrap();
        let b = simulate_beating_scan(&cfg, &delays, 500.0, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_beating_scan(&cfg, &delays, 500.0, 8).unwrap();
        assert_ne!(a, c);
        // At zero delay the mean is 500·(1−0.99) = 5: counts must be tiny.
        assert!(a.points[0].counts < 30);
        assert_abs_diff_eq!(a.points[0].prediction, 5.0, epsilon = 1e-9);
        // Totals sit near the summed prediction.
        let total: u64 = a.counts().iter().sum();
        let expected: f64 = a.points.iter().map(|p| p.prediction).sum();
        assert!((total as f64 - expected).abs() < 5.0 * expected.sqrt());
    }

    #[test]
    fn csv_format() {
        let cfg = reference(BeatingMode::Antibunched);
        let scan = simulate_beating_scan(&cfg, &[0.0, 1e-12], 100.0, 3).unwrap();
        let mut buf = Vec::new();
        scan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "delta_tau_ps,counts,prediction");
        assert!(lines.next().unwrap().starts_with("0.000000,"));
        assert!(lines.next().unwrap().starts_with("1.000000,"));
    }

    proptest! {
        #[test]
        fn probability_stays_in_unit_interval(
            v in 0.0..=1.0f64,
            delta_ps in -50.0..50.0f64,
        ) {
            let cfg = BeatingConfig {
                visibility: v,
                ..reference(BeatingMode::Antibunched)
            };
            let p = beating_probability(&cfg, delta_ps * 1e-12);
            prop_assert!((0.0..=1.0).contains(&p));
        }

        #[test]
        fn pattern_is_even_in_delay(delta_ps in 0.0..20.0f64) {
            let cfg = reference(BeatingMode::Antibunched);
            let plus = beating_probability(&cfg, delta_ps * 1e-12);
            let minus = beating_probability(&cfg, -delta_ps * 1e-12);
            prop_assert!((plus - minus).abs() < 1e-12);
        }
    }
}

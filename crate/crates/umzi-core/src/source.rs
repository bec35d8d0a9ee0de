//! Spectral and statistical parameters of the entangled-pair source.
//!
//! The source is a continuously pumped spontaneous parametric
//! down-conversion emitter whose signal and idler photons are selected by
//! super-Gaussian bandpass filters on either side of the pump. Only the
//! quantities that feed the downstream model are kept: filter centers and
//! widths, the two-photon coherence time set by the pump laser, and the
//! rates that drive the Monte Carlo (pair emission and per-channel
//! accidental singles).

use serde::{Deserialize, Serialize};

use crate::{Error, Result, SPEED_OF_LIGHT};

/// Spectral selection applied to one photon of the pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    /// Bandpass filter center wavelength, nm.
    pub center_wavelength_nm: f64,
    /// Filter -3 dB full bandwidth, Hz.
    pub bandwidth_3db_hz: f64,
    /// Super-Gaussian filter order (1 = ordinary Gaussian).
    pub filter_order: u32,
}

impl SpectralMode {
    pub fn new(center_wavelength_nm: f64, bandwidth_3db_hz: f64, filter_order: u32) -> Self {
        Self {
            center_wavelength_nm,
            bandwidth_3db_hz,
            filter_order,
        }
    }

    /// Center optical frequency, Hz.
    pub fn center_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.center_wavelength_nm * 1e-9)
    }

    /// Center angular frequency, rad/s.
    pub fn center_angular_frequency(&self) -> f64 {
        std::f64::consts::TAU * self.center_frequency_hz()
    }

    /// Single-photon coherence time `1 / Δν`, s.
    ///
    /// The flat-top filters are wide enough that the inverse-bandwidth
    /// estimate is the only scale the rest of the model needs.
    pub fn coherence_time_s(&self) -> f64 {
        1.0 / self.bandwidth_3db_hz
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if !self.center_wavelength_nm.is_finite() || self.center_wavelength_nm <= 0.0 {
            return Err(Error::invalid(
                name,
                format!(
                    "center_wavelength_nm must be positive, got {}",
                    self.center_wavelength_nm
                ),
            ));
        }
        if !self.bandwidth_3db_hz.is_finite() || self.bandwidth_3db_hz <= 0.0 {
            return Err(Error::invalid(
                name,
                format!("bandwidth_3db_hz must be positive, got {}", self.bandwidth_3db_hz),
            ));
        }
        if self.filter_order == 0 {
            return Err(Error::invalid(name, "filter_order must be at least 1"));
        }
        Ok(())
    }
}

/// Full description of the pair source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    /// Pump wavelength, nm. Must satisfy energy conservation
    /// `2 ω_p = ω_s + ω_i` against the signal/idler centers to within
    /// 2π · 1 GHz.
    pub pump_wavelength_nm: f64,
    /// Signal-channel filter (long-wavelength side of the pump).
    pub signal: SpectralMode,
    /// Idler-channel filter (short-wavelength side of the pump).
    pub idler: SpectralMode,
    /// Two-photon coherence time, s. Set by the pump laser linewidth and
    /// normally orders of magnitude longer than the single-photon
    /// coherence times.
    pub two_photon_coherence_time_s: f64,
    /// Mean emitted pair rate, 1/s.
    pub pair_rate_hz: f64,
    /// Per-detection-channel accidental singles rate, 1/s. Lumps every
    /// uncorrelated background that is not detector dark counts: broadband
    /// noise photons, leaked pump, unpaired singles from lost partners.
    pub accidental_singles_rate_hz: f64,
}

impl Default for SourceModel {
    /// Reference source used throughout the tests and the shipped default
    /// configuration: 32 GHz-wide order-3 super-Gaussian filters at
    /// 1555.75 nm (signal) and 1549.32 nm (idler), 10 μs two-photon
    /// coherence time, 1e6 pairs/s. The pump wavelength is derived from the
    /// filter centers via energy conservation, `2/λ_p = 1/λ_s + 1/λ_i`, so
    /// the validated invariant holds to machine precision. The accidental
    /// rate is chosen so the default detection pipeline lands in the
    /// coincidence-to-accidental-ratio ≈ 32 regime.
    fn default() -> Self {
        let signal = SpectralMode::new(1555.75, 32e9, 3);
        let idler = SpectralMode::new(1549.32, 32e9, 3);
        let pump_wavelength_nm = 2.0 * signal.center_wavelength_nm * idler.center_wavelength_nm
            / (signal.center_wavelength_nm + idler.center_wavelength_nm);
        Self {
            pump_wavelength_nm,
            signal,
            idler,
            two_photon_coherence_time_s: 10e-6,
            pair_rate_hz: 1e6,
            accidental_singles_rate_hz: 1.65e5,
        }
    }
}

impl SourceModel {
    /// Pump center frequency, Hz.
    pub fn pump_frequency_hz(&self) -> f64 {
        SPEED_OF_LIGHT / (self.pump_wavelength_nm * 1e-9)
    }

    /// Signal-idler center-frequency spacing `|ν_i − ν_s|`, Hz.
    ///
    /// This is the antibunched-state beat frequency.
    pub fn frequency_spacing_hz(&self) -> f64 {
        (self.idler.center_frequency_hz() - self.signal.center_frequency_hz()).abs()
    }

    /// Signal-idler center-frequency sum `ν_i + ν_s`, Hz.
    ///
    /// This is the bunched-state beat frequency (twice the pump frequency
    /// when energy conservation holds).
    pub fn frequency_sum_hz(&self) -> f64 {
        self.idler.center_frequency_hz() + self.signal.center_frequency_hz()
    }

    /// Largest of the two single-photon coherence times, s.
    pub fn single_photon_coherence_time_s(&self) -> f64 {
        self.signal.coherence_time_s().max(self.idler.coherence_time_s())
    }

    /// Residual of the energy-conservation condition `|2ω_p − ω_s − ω_i|`,
    /// rad/s.
    pub fn energy_mismatch_rad_per_s(&self) -> f64 {
        std::f64::consts::TAU * (2.0 * self.pump_frequency_hz() - self.frequency_sum_hz()).abs()
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate("source.signal")?;
        self.idler.validate("source.idler")?;
        if !self.pump_wavelength_nm.is_finite() || self.pump_wavelength_nm <= 0.0 {
            return Err(Error::invalid(
                "source.pump_wavelength_nm",
                format!("must be positive, got {}", self.pump_wavelength_nm),
            ));
        }
        let mismatch = self.energy_mismatch_rad_per_s();
        let budget = std::f64::consts::TAU * 1e9;
        if mismatch >= budget {
            return Err(Error::invalid(
                "source.pump_wavelength_nm",
                format!(
                    "energy conservation violated: |2ω_p − ω_s − ω_i| = 2π × {:.3} GHz (≥ 2π × 1 GHz); \
                     for these filters the pump must sit at {:.6} nm",
                    mismatch / budget,
                    2.0 * self.signal.center_wavelength_nm * self.idler.center_wavelength_nm
                        / (self.signal.center_wavelength_nm + self.idler.center_wavelength_nm),
                ),
            ));
        }
        if !self.two_photon_coherence_time_s.is_finite() || self.two_photon_coherence_time_s <= 0.0 {
            return Err(Error::invalid(
                "source.two_photon_coherence_time_s",
                format!("must be positive, got {}", self.two_photon_coherence_time_s),
            ));
        }
        let tau_single = self.single_photon_coherence_time_s();
        if self.two_photon_coherence_time_s <= tau_single {
            return Err(Error::invalid(
                "source.two_photon_coherence_time_s",
                format!(
                    "two-photon coherence time {:.3e} s must exceed the single-photon \
                     coherence time {:.3e} s for the interference model to apply",
                    self.two_photon_coherence_time_s, tau_single
                ),
            ));
        }
        if !self.pair_rate_hz.is_finite() || self.pair_rate_hz < 0.0 {
            return Err(Error::invalid(
                "source.pair_rate_hz",
                format!("must be non-negative, got {}", self.pair_rate_hz),
            ));
        }
        if !self.accidental_singles_rate_hz.is_finite() || self.accidental_singles_rate_hz < 0.0 {
            return Err(Error::invalid(
                "source.accidental_singles_rate_hz",
                format!("must be non-negative, got {}", self.accidental_singles_rate_hz),
            ));
        }
        Ok(())
    }
}

//! Modulator-phase sweeps: the routing-fringe measurement.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::histogram::{correlate, TimeFilter};
use super::simulate::{simulate_run, DetectionSetup};
use crate::interferometer::{evolve_umzi, UmziConfig};
use crate::seed::derive_seed;
use crate::source::SourceModel;
use crate::{Error, Result};

/// Seed stream reserved for deriving per-point master seeds.
const STREAM_SWEEP_POINT: u64 = 4;

/// Acquisition plan for one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Modulator phases to visit, rad.
    pub phases_rad: Vec<f64>,
    /// Acquisition time per phase point, s.
    pub duration_per_point_s: f64,
    /// Histogram bin width, s.
    pub bin_width_s: f64,
    /// Full correlation window, s.
    pub window_s: f64,
    /// Coincidence filter applied at every point.
    pub filter: TimeFilter,
}

impl SweepPlan {
    /// `n` phases uniformly covering `[0, 2π)` with the reference
    /// acquisition: 4 ps bins, ±400 ps window, 88 ps central filter.
    pub fn uniform(n: usize, duration_per_point_s: f64) -> Self {
        let step = std::f64::consts::TAU / n.max(1) as f64;
        Self {
            phases_rad: (0..n).map(|k| k as f64 * step).collect(),
            duration_per_point_s,
            bin_width_s: 4e-12,
            window_s: 800e-12,
            filter: TimeFilter::central(88e-12),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.phases_rad.len() < 2 {
            return Err(Error::NotEnoughData {
                context: "phase sweep",
                needed: 2,
                got: self.phases_rad.len(),
            });
        }
        if self.phases_rad.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("sweep.phases_rad", "phases must be finite"));
        }
        if !self.duration_per_point_s.is_finite() || self.duration_per_point_s <= 0.0 {
            return Err(Error::invalid(
                "sweep.duration_per_point_s",
                format!("must be positive, got {}", self.duration_per_point_s),
            ));
        }
        self.filter.validate()
    }
}

/// One phase point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub phi_rad: f64,
    /// Filtered coincidences at this phase.
    pub coincidences: u64,
    /// Total signal-channel clicks at this phase.
    pub singles_signal: u64,
    /// Total idler-channel clicks at this phase.
    pub singles_idler: u64,
}

/// Result of a phase sweep on one port pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub ports: super::PortPair,
    pub filter: TimeFilter,
    pub duration_per_point_s: f64,
    pub points: Vec<SweepPoint>,
}

impl FringeScan {
    pub fn phases(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phi_rad).collect()
    }

    pub fn coincidences(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.coincidences).collect()
    }

    /// Writes the scan as CSV with header
    /// `phi_rad,coincidences,singles_s,singles_i`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "phi_rad,coincidences,singles_s,singles_i")?;
        for p in &self.points {
            writeln!(
                w,
                "{:.9},{},{},{}",
                p.phi_rad, p.coincidences, p.singles_signal, p.singles_idler
            )?;
        }
        Ok(())
    }
}

/// Runs the full pipeline (evolve, simulate, correlate, filter) at every
/// phase of the plan.
///
/// Each point gets an independent master seed derived from `seed` and the
/// point index, so the scan is reproducible point-by-point and insensitive
/// to chunking.
pub fn phase_sweep(
    umzi: &UmziConfig,
    source: &SourceModel,
    setup: &DetectionSetup,
    plan: &SweepPlan,
    seed: u64,
) -> Result<FringeScan> {
    plan.validate()?;
    umzi.validate()?;
    let mut points = Vec::with_capacity(plan.phases_rad.len());
    for (index, &phi) in plan.phases_rad.iter().enumerate() {
        let state = evolve_umzi(&umzi.with_phi(phi))?;
        let point_seed = derive_seed(seed, STREAM_SWEEP_POINT, index as u64);
        let (signal, idler) =
            simulate_run(&state, source, setup, plan.duration_per_point_s, point_seed)?;
        let histogram = correlate(&signal, &idler, plan.bin_width_s, plan.window_s)?;
        points.push(SweepPoint {
            phi_rad: phi,
            coincidences: histogram.filtered_counts(&plan.filter)?,
            singles_signal: histogram.singles_signal,
            singles_idler: histogram.singles_idler,
        });
    }
    Ok(FringeScan {
        ports: setup.ports,
        filter: plan.filter,
        duration_per_point_s: plan.duration_per_point_s,
        points,
    })
}

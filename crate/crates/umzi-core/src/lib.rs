//! Simulation of a phase-controlled entanglement router built from an
//! unbalanced Mach-Zehnder interferometer (UMZI).
//!
//! A frequency-nondegenerate, energy-time entangled photon pair enters the
//! UMZI through one port of a 50/50 coupler. Because the pair is emitted at
//! a single (unknown) time, the short-short and long-long arm histories are
//! indistinguishable after the output coupler, and the relative arm phase
//! routes the post-selected central time slot between a *bunched* state
//! (both photons exit the same port) and an *antibunched* state (photons
//! split between ports). The crate models:
//!
//! - the source spectra and pair statistics ([`source`]),
//! - exact two-photon state evolution through the UMZI ([`interferometer`]),
//! - Monte Carlo timestamp generation with detector efficiency, loss,
//!   jitter, dark and accidental counts, plus coincidence histogramming,
//!   time filtering, and phase sweeps ([`coincidence`]),
//! - the spatial-beating interference between the two router outputs
//!   ([`beating`]),
//! - weighted nonlinear least-squares fits for histogram peaks, routing
//!   fringes, and beating scans ([`fit`]).
//!
//! Everything stochastic is driven by explicit seeds and is reproducible
//! bit-for-bit, independent of how many parallel chunks the work is split
//! into.

pub mod beating;
pub mod coincidence;
pub mod error;
pub mod fit;
pub mod interferometer;
pub mod seed;
pub mod source;
pub mod stats;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// FWHM of a unit-variance Gaussian: `2 sqrt(2 ln 2)`.
pub const GAUSSIAN_FWHM_FACTOR: f64 = 2.354_820_045_030_949_3;

//! Monte Carlo detection and coincidence analysis.
//!
//! The four detectors sit behind wavelength demultiplexers on the two
//! interferometer outputs: port c splits into D (signal wavelength) and
//! E (idler wavelength), port d into F (signal) and G (idler). A
//! coincidence measurement pairs one signal-wavelength detector with one
//! idler-wavelength detector; [`PortPair`] names the four combinations.
//!
//! [`simulate::simulate_run`] turns a two-photon state plus source and
//! detector parameters into a pair of quantized timestamp streams;
//! [`histogram::correlate`] builds the arrival-time-difference histogram;
//! [`sweep::phase_sweep`] repeats the pipeline over a modulator-phase grid
//! and records time-filtered coincidence fringes.

pub mod histogram;
pub mod simulate;
pub mod sweep;

pub use histogram::{
    correlate, estimate_car, CarEstimate, CoincidenceEvent, CoincidenceHistogram, TimeFilter,
};
pub use simulate::{simulate_run, DetectionSetup, DetectorModel, TimestampStream};
pub use sweep::{phase_sweep, FringeScan, SweepPlan, SweepPoint};

use serde::{Deserialize, Serialize};

use crate::interferometer::{SpatialMode, VirtualPort};

/// A signal-wavelength detector paired with an idler-wavelength detector.
///
/// The letter pairs follow the demultiplexer layout: D and E listen on
/// interferometer output c, F and G on output d; D and F see the signal
/// wavelength, E and G the idler wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortPair {
    /// Signal at c, idler at c — bunched events on output c.
    DE,
    /// Signal at d, idler at d — bunched events on output d.
    FG,
    /// Idler at c, signal at d — antibunched events.
    EF,
    /// Signal at c, idler at d — antibunched events.
    DG,
}

impl PortPair {
    pub const ALL: [PortPair; 4] = [PortPair::DE, PortPair::FG, PortPair::EF, PortPair::DG];

    /// Spatial mode the signal-wavelength detector listens on.
    pub fn signal_mode(self) -> SpatialMode {
        match self {
            PortPair::DE | PortPair::DG => SpatialMode::C,
            PortPair::FG | PortPair::EF => SpatialMode::D,
        }
    }

    /// Spatial mode the idler-wavelength detector listens on.
    pub fn idler_mode(self) -> SpatialMode {
        match self {
            PortPair::DE | PortPair::EF => SpatialMode::C,
            PortPair::FG | PortPair::DG => SpatialMode::D,
        }
    }

    /// Which virtual output port this pair projects on in the central slot.
    pub fn virtual_port(self) -> VirtualPort {
        match self {
            PortPair::DE | PortPair::FG => VirtualPort::Bunched,
            PortPair::EF | PortPair::DG => VirtualPort::Antibunched,
        }
    }

    pub fn is_bunched(self) -> bool {
        self.virtual_port() == VirtualPort::Bunched
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn port_pair_layout() {
        assert_eq!(PortPair::DE.signal_mode(), SpatialMode::C);
        assert_eq!(PortPair::DE.idler_mode(), SpatialMode::C);
        assert_eq!(PortPair::FG.signal_mode(), SpatialMode::D);
        assert_eq!(PortPair::FG.idler_mode(), SpatialMode::D);
        assert_eq!(PortPair::EF.signal_mode(), SpatialMode::D);
        assert_eq!(PortPair::EF.idler_mode(), SpatialMode::C);
        assert_eq!(PortPair::DG.signal_mode(), SpatialMode::C);
        assert_eq!(PortPair::DG.idler_mode(), SpatialMode::D);
        assert!(PortPair::DE.is_bunched());
        assert!(PortPair::FG.is_bunched());
        assert!(!PortPair::EF.is_bunched());
        assert!(!PortPair::DG.is_bunched());
    }

    #[test]
    fn serde_names_are_detector_letters() {
        let s = serde_json::to_string(&PortPair::EF).unwrap();
        assert_eq!(s, "\"EF\"");
        let p: PortPair = serde_json::from_str("\"DG\"").unwrap();
        assert_eq!(p, PortPair::DG);
    }
}

//! Timestamp-stream generation.
//!
//! The acquisition is cut into fixed 1 s wall-time slices. Each slice owns
//! three independent RNG streams (pair process, signal background, idler
//! background) seeded from the master seed via [`crate::seed::derive_seed`],
//! so the generated event set is a pure function of the master seed. The
//! configured chunk count only groups slices for parallel execution and
//! can never change the output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PortPair;
use crate::interferometer::{SpatialMode, TimeSlot, TwoPhotonState};
use crate::seed::derive_seed;
use crate::source::SourceModel;
use crate::{Error, Result, GAUSSIAN_FWHM_FACTOR};

/// Wall-time slice length used for seed attribution, s.
const SLICE_S: f64 = 1.0;

/// RNG stream identifiers within a slice.
const STREAM_PAIRS: u64 = 0;
const STREAM_SIGNAL_BG: u64 = 1;
const STREAM_IDLER_BG: u64 = 2;

/// One physical detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// Detection efficiency, dimensionless in [0, 1].
    pub efficiency: f64,
    /// Dark count rate, 1/s.
    pub dark_count_rate_hz: f64,
    /// Timing jitter as FWHM of the Gaussian response, s.
    pub jitter_fwhm_s: f64,
}

impl DetectorModel {
    /// Reference signal-wavelength detector: 6 % efficiency, 10 Hz darks,
    /// 25 ps jitter.
    pub fn reference_signal() -> Self {
        Self {
            efficiency: 0.06,
            dark_count_rate_hz: 10.0,
            jitter_fwhm_s: 25e-12,
        }
    }

    /// Reference idler-wavelength detector: 4 % efficiency, 10 Hz darks,
    /// 44 ps jitter.
    pub fn reference_idler() -> Self {
        Self {
            efficiency: 0.04,
            dark_count_rate_hz: 10.0,
            jitter_fwhm_s: 44e-12,
        }
    }

    /// Noiseless, lossless, jitter-free detector.
    pub fn ideal() -> Self {
        Self {
            efficiency: 1.0,
            dark_count_rate_hz: 0.0,
            jitter_fwhm_s: 0.0,
        }
    }

    /// Gaussian jitter standard deviation, s.
    pub fn jitter_sigma_s(&self) -> f64 {
        self.jitter_fwhm_s / GAUSSIAN_FWHM_FACTOR
    }

    pub fn validate(&self, name: &'static str) -> Result<()> {
        if !self.efficiency.is_finite() || !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::invalid(
                name,
                format!("efficiency must lie in [0, 1], got {}", self.efficiency),
            ));
        }
        if !self.dark_count_rate_hz.is_finite() || self.dark_count_rate_hz < 0.0 {
            return Err(Error::invalid(
                name,
                format!(
                    "dark_count_rate_hz must be non-negative, got {}",
                    self.dark_count_rate_hz
                ),
            ));
        }
        if !self.jitter_fwhm_s.is_finite() || self.jitter_fwhm_s < 0.0 {
            return Err(Error::invalid(
                name,
                format!("jitter_fwhm_s must be non-negative, got {}", self.jitter_fwhm_s),
            ));
        }
        Ok(())
    }
}

/// Detection chain for one coincidence measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSetup {
    /// Which signal/idler detector pair is recorded.
    pub ports: PortPair,
    /// Detector on the signal wavelength.
    pub signal: DetectorModel,
    /// Detector on the idler wavelength.
    pub idler: DetectorModel,
    /// Device insertion loss applied per photon, dB.
    pub insertion_loss_db: f64,
    /// Time-tagger quantization step, s.
    pub resolution_s: f64,
    /// Number of parallel worker chunks the acquisition slices are grouped
    /// into. Any value ≥ 1 produces identical output.
    pub chunks: usize,
}

impl DetectionSetup {
    /// Reference chain on the given port pair: reference detectors, 4.2 dB
    /// insertion loss, 4 ps tagger resolution, single worker chunk.
    pub fn reference(ports: PortPair) -> Self {
        Self {
            ports,
            signal: DetectorModel::reference_signal(),
            idler: DetectorModel::reference_idler(),
            insertion_loss_db: 4.2,
            resolution_s: 4e-12,
            chunks: 1,
        }
    }

    /// Per-photon power transmission of the device, `10^(−IL/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        self.signal.validate("setup.signal")?;
        self.idler.validate("setup.idler")?;
        if !self.insertion_loss_db.is_finite() || self.insertion_loss_db < 0.0 {
            return Err(Error::invalid(
                "setup.insertion_loss_db",
                format!("must be non-negative, got {}", self.insertion_loss_db),
            ));
        }
        if !self.resolution_s.is_finite() || self.resolution_s <= 0.0 {
            return Err(Error::invalid(
                "setup.resolution_s",
                format!("must be positive, got {}", self.resolution_s),
            ));
        }
        if self.chunks == 0 {
            return Err(Error::invalid("setup.chunks", "must be at least 1"));
        }
        Ok(())
    }
}

/// Quantized detector clicks of one channel, sorted in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampStream {
    resolution_s: f64,
    duration_s: f64,
    ticks: Vec<i64>,
}

impl TimestampStream {
    /// Wraps raw tagger ticks. The ticks are taken as-is; consumers that
    /// require time order check it themselves.
    pub fn new(resolution_s: f64, duration_s: f64, ticks: Vec<i64>) -> Result<Self> {
        if !resolution_s.is_finite() || resolution_s <= 0.0 {
            return Err(Error::invalid(
                "resolution_s",
                format!("must be positive, got {resolution_s}"),
            ));
        }
        if !duration_s.is_finite() || duration_s < 0.0 {
            return Err(Error::invalid(
                "duration_s",
                format!("must be non-negative, got {duration_s}"),
            ));
        }
        Ok(Self {
            resolution_s,
            duration_s,
            ticks,
        })
    }

    pub fn resolution_s(&self) -> f64 {
        self.resolution_s
    }

    /// Nominal acquisition span, s.
    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn ticks(&self) -> &[i64] {
        &self.ticks
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn is_sorted(&self) -> bool {
        self.ticks.windows(2).all(|w| w[0] <= w[1])
    }

    /// Click time in seconds for one tick index.
    pub fn time_s(&self, index: usize) -> f64 {
        self.ticks[index] as f64 * self.resolution_s
    }
}

struct OutcomeTable {
    /// (signal mode, idler mode, slot, cumulative probability).
    entries: Vec<(SpatialMode, SpatialMode, TimeSlot, f64)>,
}

impl OutcomeTable {
    fn build(state: &TwoPhotonState) -> Result<Self> {
        let total = state.total_probability();
        if !(total > 1e-12) {
            return Err(Error::EmptyState);
        }
        let mut entries = Vec::with_capacity(12);
        let mut acc = 0.0;
        for s in SpatialMode::ALL {
            for i in SpatialMode::ALL {
                for slot in TimeSlot::ALL {
                    acc += state.outcome_probability(s, i, slot) / total;
                    entries.push((s, i, slot, acc));
                }
            }
        }
        // Guard against accumulated rounding: the last edge is exact.
        if let Some(last) = entries.last_mut() {
            last.3 = 1.0;
        }
        Ok(Self { entries })
    }

    fn draw(&self, u: f64) -> (SpatialMode, SpatialMode, TimeSlot) {
        for &(s, i, slot, edge) in &self.entries {
            if u < edge {
                return (s, i, slot);
            }
        }
        let &(s, i, slot, _) = self.entries.last().expect("table is never empty");
        (s, i, slot)
    }
}

/// Simulates one acquisition and returns the (signal, idler) timestamp
/// streams, each sorted and quantized to the tagger resolution.
///
/// Emission times follow a Poisson process at the source pair rate. Each
/// pair is assigned an output (ports, time slot) by sampling the state's
/// outcome probabilities; a photon reaches its stream only if its port
/// carries the matching detector, and then survives the insertion loss and
/// detector efficiency as a Bernoulli trial. Detected clicks get Gaussian
/// timing jitter and are floor-quantized. Dark and accidental counts enter
/// as uniform Poisson background per channel.
pub fn simulate_run(
    state: &TwoPhotonState,
    source: &SourceModel,
    setup: &DetectionSetup,
    duration_s: f64,
    seed: u64,
) -> Result<(TimestampStream, TimestampStream)> {
    source.validate()?;
    setup.validate()?;
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(Error::invalid(
            "duration_s",
            format!("must be non-negative, got {duration_s}"),
        ));
    }
    let outcomes = OutcomeTable::build(state)?;

    let n_slices = (duration_s / SLICE_S).ceil() as u64;
    let chunk_count = setup.chunks.min(n_slices.max(1) as usize).max(1);
    let bounds: Vec<(u64, u64)> = (0..chunk_count as u64)
        .map(|c| {
            let lo = c * n_slices / chunk_count as u64;
            let hi = (c + 1) * n_slices / chunk_count as u64;
            (lo, hi)
        })
        .collect();

    let tau_s = state.tau_s();
    let slice_results: Vec<(Vec<i64>, Vec<i64>)> = bounds
        .par_iter()
        .map(|&(lo, hi)| {
            let mut signal = Vec::new();
            let mut idler = Vec::new();
            for slice in lo..hi {
                generate_slice(
                    &outcomes,
                    source,
                    setup,
                    tau_s,
                    duration_s,
                    seed,
                    slice,
                    &mut signal,
                    &mut idler,
                );
            }
            (signal, idler)
        })
        .collect();

    let mut signal = Vec::with_capacity(slice_results.iter().map(|(s, _)| s.len()).sum());
    let mut idler = Vec::with_capacity(slice_results.iter().map(|(_, i)| i.len()).sum());
    for (s, i) in slice_results {
        signal.extend(s);
        idler.extend(i);
    }
    // Jitter can move clicks across slice boundaries, so the concatenated
    // streams are only approximately ordered.
    signal.sort_unstable();
    idler.sort_unstable();

    Ok((
        TimestampStream::new(setup.resolution_s, duration_s, signal)?,
        TimestampStream::new(setup.resolution_s, duration_s, idler)?,
    ))
}

#[allow(clippy::too_many_arguments)]
fn generate_slice(
    outcomes: &OutcomeTable,
    source: &SourceModel,
    setup: &DetectionSetup,
    tau_s: f64,
    duration_s: f64,
    seed: u64,
    slice: u64,
    signal: &mut Vec<i64>,
    idler: &mut Vec<i64>,
) {
    let start = slice as f64 * SLICE_S;
    let end = (start + SLICE_S).min(duration_s);
    let span = end - start;
    if span <= 0.0 {
        return;
    }
    let quantize = |t: f64| (t / setup.resolution_s).floor() as i64;
    let transmission = setup.transmission();

    // Pair process: emission walk, outcome draw, per-photon detection.
    if source.pair_rate_hz > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PAIRS, slice));
        let inter_arrival = Exp::new(source.pair_rate_hz).expect("positive rate");
        let jitter_s = Normal::new(0.0, setup.signal.jitter_sigma_s()).expect("finite sigma");
        let jitter_i = Normal::new(0.0, setup.idler.jitter_sigma_s()).expect("finite sigma");
        let p_signal = setup.signal.efficiency * transmission;
        let p_idler = setup.idler.efficiency * transmission;

        let mut t = start + inter_arrival.sample(&mut rng);
        while t < end {
            let (s_mode, i_mode, slot) = outcomes.draw(rng.gen::<f64>());
            // The slot sign fixes which photon went through the long arm
            // and therefore arrives a full arm delay late.
            let (signal_delay, idler_delay) = match slot {
                TimeSlot::Minus => (0.0, tau_s),
                TimeSlot::Zero => (0.0, 0.0),
                TimeSlot::Plus => (tau_s, 0.0),
            };
            if s_mode == setup.ports.signal_mode() && rng.gen::<f64>() < p_signal {
                let click = t + signal_delay + jitter_s.sample(&mut rng);
                signal.push(quantize(click));
            }
            if i_mode == setup.ports.idler_mode() && rng.gen::<f64>() < p_idler {
                let click = t + idler_delay + jitter_i.sample(&mut rng);
                idler.push(quantize(click));
            }
            t += inter_arrival.sample(&mut rng);
        }
    }

    // Backgrounds: merged dark + accidental rate, uniform in the slice.
    let backgrounds = [
        (
            STREAM_SIGNAL_BG,
            setup.signal.dark_count_rate_hz + source.accidental_singles_rate_hz,
            &mut *signal,
        ),
        (
            STREAM_IDLER_BG,
            setup.idler.dark_count_rate_hz + source.accidental_singles_rate_hz,
            &mut *idler,
        ),
    ];
    for (stream, rate, out) in backgrounds {
        if rate <= 0.0 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, slice));
        let n = Poisson::new(rate * span).expect("positive mean").sample(&mut rng) as u64;
        for _ in 0..n {
            let t = start + rng.gen::<f64>() * span;
            out.push(quantize(t));
        }
    }
}

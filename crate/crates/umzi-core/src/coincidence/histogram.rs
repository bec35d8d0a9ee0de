//! Arrival-time-difference histograms, time filtering, and the
//! coincidence-to-accidental ratio.

use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::simulate::TimestampStream;
use crate::{Error, Result};

/// One matched signal/idler click pair inside the coincidence window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceEvent {
    pub signal_tick: i64,
    pub idler_tick: i64,
    /// Signal minus idler click time, s.
    pub delta_t_s: f64,
}

/// Histogram of `t_signal − t_idler` over a symmetric window.
///
/// Bin centers sit at integer multiples of the bin width, so the central
/// bin is centered on Δt = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    /// Bin width, s.
    pub bin_width_s: f64,
    /// Center of bin 0, s (the most negative bin).
    pub origin_s: f64,
    /// Coincidence counts per bin.
    pub counts: Vec<u64>,
    /// Acquisition span the streams cover, s.
    pub acquisition_s: f64,
    /// Total clicks on the signal channel.
    pub singles_signal: u64,
    /// Total clicks on the idler channel.
    pub singles_idler: u64,
}

impl CoincidenceHistogram {
    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Center of bin `k`, s.
    pub fn bin_center_s(&self, k: usize) -> f64 {
        self.origin_s + k as f64 * self.bin_width_s
    }

    /// Centers of the first and last bins, s.
    pub fn span_s(&self) -> (f64, f64) {
        (self.bin_center_s(0), self.bin_center_s(self.n_bins() - 1))
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index and center of the fullest bin.
    pub fn max_bin(&self) -> (usize, f64, u64) {
        let (k, &c) = self
            .counts
            .iter()
            .enumerate()
            .max_by_key(|&(k, &c)| (c, std::cmp::Reverse(k)))
            .expect("histograms always have bins");
        (k, self.bin_center_s(k), c)
    }

    /// Bin indices whose centers fall inside the filter.
    ///
    /// The filter is half-open on bin centers, `[center − w/2, center + w/2)`,
    /// so an 88 ps filter over 4 ps bins selects exactly 22 bins.
    pub fn filter_bins(&self, filter: &TimeFilter) -> Result<Range<usize>> {
        filter.validate()?;
        let lo = filter.center_s - filter.width_s / 2.0;
        let hi = filter.center_s + filter.width_s / 2.0;
        // Robust against float rounding of the bin centers: exact-equal
        // edges stay included at lo and excluded at hi.
        let eps = self.bin_width_s * 1e-6;
        let first = self
            .counts
            .iter()
            .enumerate()
            .position(|(k, _)| self.bin_center_s(k) >= lo - eps);
        let (hist_lo, hist_hi) = self.span_s();
        let out_of_range = || Error::FilterOutOfRange {
            lo_ps: lo * 1e12,
            hi_ps: hi * 1e12,
            hist_lo_ps: hist_lo * 1e12,
            hist_hi_ps: hist_hi * 1e12,
        };
        let first = first.ok_or_else(out_of_range)?;
        let mut last = first;
        while last < self.n_bins() && self.bin_center_s(last) < hi - eps {
            last += 1;
        }
        if last == first {
            return Err(out_of_range());
        }
        Ok(first..last)
    }

    /// Sum of counts in the bins selected by the filter.
    pub fn filtered_counts(&self, filter: &TimeFilter) -> Result<u64> {
        Ok(self.filter_bins(filter)?.map(|k| self.counts[k]).sum())
    }

    /// Writes the histogram as CSV with header `delta_t_ps,counts`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "delta_t_ps,counts")?;
        for (k, &c) in self.counts.iter().enumerate() {
            writeln!(w, "{:.6},{}", self.bin_center_s(k) * 1e12, c)?;
        }
        Ok(())
    }
}

/// A rectangular window on the arrival-time difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeFilter {
    /// Window center, s.
    pub center_s: f64,
    /// Full window width, s.
    pub width_s: f64,
}

impl TimeFilter {
    /// Filter centered on Δt = 0.
    pub fn central(width_s: f64) -> Self {
        Self {
            center_s: 0.0,
            width_s,
        }
    }

    /// Filter centered at an arbitrary delay.
    pub fn at(center_s: f64, width_s: f64) -> Self {
        Self { center_s, width_s }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center_s.is_finite() {
            return Err(Error::invalid("filter.center_s", "must be finite"));
        }
        if !self.width_s.is_finite() || self.width_s <= 0.0 {
            return Err(Error::invalid(
                "filter.width_s",
                format!("must be positive, got {}", self.width_s),
            ));
        }
        Ok(())
    }
}

/// Calls `visit` for every (signal, idler) click pair closer than half the
/// window. Streams must be sorted; the sweep is linear in the stream
/// lengths plus the number of matches.
pub fn for_each_coincidence<F: FnMut(CoincidenceEvent)>(
    signal: &TimestampStream,
    idler: &TimestampStream,
    window_s: f64,
    mut visit: F,
) -> Result<()> {
    if !signal.is_sorted() {
        return Err(Error::UnsortedStream { stream: "signal" });
    }
    if !idler.is_sorted() {
        return Err(Error::UnsortedStream { stream: "idler" });
    }
    let half = window_s / 2.0;
    let s_res = signal.resolution_s();
    let i_res = idler.resolution_s();
    let idler_ticks = idler.ticks();
    let mut lo = 0usize;
    for &s_tick in signal.ticks() {
        let t = s_tick as f64 * s_res;
        while lo < idler_ticks.len() && (idler_ticks[lo] as f64) * i_res < t - half {
            lo += 1;
        }
        let mut j = lo;
        while j < idler_ticks.len() {
            let ti = idler_ticks[j] as f64 * i_res;
            if ti > t + half {
                break;
            }
            visit(CoincidenceEvent {
                signal_tick: s_tick,
                idler_tick: idler_ticks[j],
                delta_t_s: t - ti,
            });
            j += 1;
        }
    }
    Ok(())
}

/// Builds the coincidence histogram of two sorted streams.
///
/// The histogram covers every bin whose center lies within ±window/2 of
/// zero; pairs are assigned to the bin with the nearest center.
pub fn correlate(
    signal: &TimestampStream,
    idler: &TimestampStream,
    bin_width_s: f64,
    window_s: f64,
) -> Result<CoincidenceHistogram> {
    if !bin_width_s.is_finite() || bin_width_s <= 0.0 {
        return Err(Error::invalid(
            "bin_width_s",
            format!("must be positive, got {bin_width_s}"),
        ));
    }
    if !window_s.is_finite() || window_s < bin_width_s {
        return Err(Error::invalid(
            "window_s",
            format!("must be at least one bin width, got {window_s}"),
        ));
    }
    let half_bins = (window_s / 2.0 / bin_width_s + 1e-9).floor() as usize;
    let n_bins = 2 * half_bins + 1;
    let origin_s = -(half_bins as f64) * bin_width_s;
    let mut counts = vec![0u64; n_bins];
    for_each_coincidence(signal, idler, window_s, |event| {
        let k = ((event.delta_t_s - origin_s) / bin_width_s).round();
        if k >= 0.0 && (k as usize) < n_bins {
            counts[k as usize] += 1;
        }
    })?;
    Ok(CoincidenceHistogram {
        bin_width_s,
        origin_s,
        counts,
        acquisition_s: signal.duration_s().max(idler.duration_s()),
        singles_signal: signal.len() as u64,
        singles_idler: idler.len() as u64,
    })
}

/// Coincidence-to-accidental ratio of a histogram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CarEstimate {
    Finite {
        car: f64,
        /// Poisson propagation: `car · sqrt(1/S + 1/B_total)`.
        std_err: f64,
        signal_counts: u64,
        /// Mean accidental counts per background window.
        background_mean: f64,
    },
    /// No background counts in any window.
    Infinite { signal_counts: u64 },
}

/// Estimates the coincidence-to-accidental ratio: counts in the signal
/// filter divided by the mean counts in same-width windows placed at the
/// background offsets.
///
/// Every background window must stay clear of the listed peak positions
/// (within one filter width), otherwise the estimate would be biased and
/// an error is returned.
pub fn estimate_car(
    histogram: &CoincidenceHistogram,
    filter: &TimeFilter,
    background_offsets_s: &[f64],
    peak_centers_s: &[f64],
) -> Result<CarEstimate> {
    if background_offsets_s.is_empty() {
        return Err(Error::invalid(
            "background_offsets_s",
            "need at least one background window",
        ));
    }
    let signal_counts = histogram.filtered_counts(filter)?;
    let mut background_total = 0u64;
    for &offset in background_offsets_s {
        for &peak in peak_centers_s {
            if (offset - peak).abs() < filter.width_s {
                return Err(Error::BackgroundOverlapsPeak {
                    offset_ps: offset * 1e12,
                    peak_ps: peak * 1e12,
                });
            }
        }
        background_total +=
            histogram.filtered_counts(&TimeFilter::at(offset, filter.width_s))?;
    }
    if background_total == 0 {
        return Ok(CarEstimate::Infinite { signal_counts });
    }
    let n_windows = background_offsets_s.len() as f64;
    let background_mean = background_total as f64 / n_windows;
    let car = signal_counts as f64 / background_mean;
    let std_err =
        car * (1.0 / signal_counts.max(1) as f64 + 1.0 / background_total as f64).sqrt();
    Ok(CarEstimate::Finite {
        car,
        std_err,
        signal_counts,
        background_mean,
    })
}

//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter is outside its valid domain.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A timestamp stream handed to the correlator was not sorted.
    #[error("timestamp stream `{stream}` is not monotonically non-decreasing")]
    UnsortedStream { stream: &'static str },

    /// A time filter does not overlap the histogram span.
    #[error(
        "time filter [{lo_ps:.3}, {hi_ps:.3}] ps selects no bins of a histogram spanning \
         [{hist_lo_ps:.3}, {hist_hi_ps:.3}] ps"
    )]
    FilterOutOfRange {
        lo_ps: f64,
        hi_ps: f64,
        hist_lo_ps: f64,
        hist_hi_ps: f64,
    },

    /// A background estimation window overlaps one of the coincidence peaks.
    #[error(
        "background window at offset {offset_ps:.3} ps overlaps the coincidence peak at \
         {peak_ps:.3} ps"
    )]
    BackgroundOverlapsPeak { offset_ps: f64, peak_ps: f64 },

    /// The two-photon state carries no probability mass.
    #[error("two-photon state has no probability mass")]
    EmptyState,

    /// Not enough data points for the requested fit.
    #[error("{context}: need at least {needed} points, got {got}")]
    NotEnoughData {
        context: &'static str,
        needed: usize,
        got: usize,
    },

    /// The abscissa grid does not span enough of the model to constrain it.
    #[error(
        "{context}: grid spans {span:.6e}, less than one expected period {period:.6e}"
    )]
    DegenerateSpan {
        context: &'static str,
        span: f64,
        period: f64,
    },

    /// Fewer distinct peaks were found in the data than requested.
    #[error("peak seeding found {found} local maxima, need {needed}")]
    TooFewPeaks { found: usize, needed: usize },

    /// The optimizer failed to make progress.
    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// A linear solve inside the optimizer failed (singular normal matrix).
    #[error("normal equations are singular; model is degenerate for this data")]
    SingularNormalMatrix,
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`] with a formatted reason.
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

//! Weighted nonlinear least-squares fits for the three measurement types:
//! multi-peak coincidence histograms, routing fringes, and beating scans.
//!
//! All fits use Poisson weights `1/max(count, 1)` and analytic Jacobians.
//! Fit functions accept and report SI units (seconds, hertz, radians);
//! internally the models run in picoseconds and terahertz so the normal
//! equations stay well-conditioned, and results are scaled back along with
//! their covariance.

mod optimizer;

use serde::{Deserialize, Serialize};

pub use optimizer::FitModel;
use optimizer::{levenberg_marquardt, Solution};

use crate::coincidence::CoincidenceHistogram;
use crate::{Error, Result, GAUSSIAN_FWHM_FACTOR};

/// One fitted parameter with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
}

/// Visibility extracted from a fit: the reported value is clamped into
/// [0, 1]; the raw fitted value is kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub value: f64,
    pub raw: f64,
    pub std_err: f64,
}

/// Outcome of one least-squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Short model identifier (`gaussian_peaks`, `fringe`, …).
    pub model: String,
    pub params: Vec<FitParam>,
    /// Parameter covariance, row-major, same order as `params`.
    pub covariance: Vec<Vec<f64>>,
    /// Weighted residual sum of squares at the solution.
    pub weighted_rss: f64,
    /// Points minus parameters.
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Present for fringe and beating fits.
    pub visibility: Option<VisibilityEstimate>,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a named parameter; panics if absent (programmer error).
    pub fn value(&self, name: &str) -> f64 {
        self.param(name)
            .unwrap_or_else(|| panic!("fit `{}` has no parameter `{name}`", self.model))
            .value
    }

    /// Reduced chi-square, `weighted_rss / dof`.
    pub fn reduced_chi_square(&self) -> f64 {
        self.weighted_rss / self.dof.max(1) as f64
    }

    fn from_solution(
        model: &str,
        names: &[&str],
        scales: &[f64],
        solution: Solution,
        n_points: usize,
    ) -> Self {
        let n = names.len();
        let params = names
            .iter()
            .enumerate()
            .map(|(j, &name)| FitParam {
                name: name.to_string(),
                value: solution.params[j] * scales[j],
                std_err: solution.covariance[(j, j)].max(0.0).sqrt() * scales[j].abs(),
            })
            .collect();
        let covariance = (0..n)
            .map(|j| {
                (0..n)
                    .map(|l| solution.covariance[(j, l)] * scales[j] * scales[l])
                    .collect()
            })
            .collect();
        FitResult {
            model: model.to_string(),
            params,
            covariance,
            weighted_rss: solution.weighted_rss,
            dof: n_points - n,
            iterations: solution.iterations,
            converged: solution.converged,
            visibility: None,
        }
    }
}

/// Flips the sign of parameter `j` in a solution (value and covariance),
/// used when canonicalizing sign-symmetric parameters.
fn flip_param(solution: &mut Solution, j: usize) {
    solution.params[j] = -solution.params[j];
    let n = solution.params.len();
    for l in 0..n {
        if l != j {
            solution.covariance[(j, l)] = -solution.covariance[(j, l)];
            solution.covariance[(l, j)] = -solution.covariance[(l, j)];
        }
    }
}

/// Wraps an angle into [−π, π).
fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

fn poisson_weights(ys: &[f64]) -> Vec<f64> {
    ys.iter().map(|&y| 1.0 / y.max(1.0)).collect()
}

// ---------------------------------------------------------------------------
// Multi-Gaussian histogram model
// ---------------------------------------------------------------------------

/// `baseline + Σ_k A_k exp(−(x−μ_k)²/(2σ_k²))`, with `x` in picoseconds.
///
/// Parameter layout: `[baseline, A_0, μ_0, σ_0, A_1, μ_1, σ_1, …]`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPeaks {
    pub n_peaks: usize,
}

impl FitModel for GaussianPeaks {
    fn n_params(&self) -> usize {
        1 + 3 * self.n_peaks
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let mut y = p[0];
        for k in 0..self.n_peaks {
            let (a, mu, sigma) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let z = (x - mu) / sigma;
            y += a * (-0.5 * z * z).exp();
        }
        y
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
        for k in 0..self.n_peaks {
            let (a, mu, sigma) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let d = x - mu;
            let e = (-0.5 * d * d / (sigma * sigma)).exp();
            out[1 + 3 * k] = e;
            out[2 + 3 * k] = a * e * d / (sigma * sigma);
            out[3 + 3 * k] = a * e * d * d / (sigma * sigma * sigma);
        }
    }
}

fn seed_gaussian_peaks(
    xs_ps: &[f64],
    ys: &[f64],
    n_peaks: usize,
    bin_ps: f64,
) -> Result<Vec<f64>> {
    let mut sorted = ys.to_vec();
    sorted.sort_by(f64::total_cmp);
    let baseline = sorted[sorted.len() / 2];

    let mut work = ys.to_vec();
    let mut peaks: Vec<(f64, f64, f64)> = Vec::with_capacity(n_peaks);
    for _ in 0..n_peaks {
        let (k_star, &peak) = work
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty histogram");
        let amp = peak - baseline;
        // A peak must rise clear of Poisson noise on the baseline.
        if amp <= 3.0 * (baseline.max(0.0) + 1.0).sqrt() {
            return Err(Error::TooFewPeaks {
                found: peaks.len(),
                needed: n_peaks,
            });
        }
        let half = baseline + amp / 2.0;
        let mut left = k_star;
        while left > 0 && work[left] > half {
            left -= 1;
        }
        let mut right = k_star;
        while right + 1 < work.len() && work[right] > half {
            right += 1;
        }
        let fwhm_bins = (right - left).max(1) as f64;
        let sigma = (fwhm_bins * bin_ps / GAUSSIAN_FWHM_FACTOR).max(bin_ps / 2.0);
        peaks.push((amp, xs_ps[k_star], sigma));
        // Mask the found peak so the next argmax finds a different one. A
        // radius of 1.5 FWHM resolves neighbours two FWHM apart.
        let mask = (1.5 * fwhm_bins).ceil() as usize + 2;
        let lo = k_star.saturating_sub(mask);
        let hi = (k_star + mask).min(work.len() - 1);
        for w in &mut work[lo..=hi] {
            *w = baseline;
        }
    }
    peaks.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut params = Vec::with_capacity(1 + 3 * n_peaks);
    params.push(baseline);
    for (a, mu, sigma) in peaks {
        params.extend_from_slice(&[a, mu, sigma]);
    }
    Ok(params)
}

/// Fits `n_peaks` Gaussians plus a flat baseline to a coincidence
/// histogram. Peaks are reported in ascending center order with `center_k`
/// and `sigma_k` in seconds; `amp_k` and `baseline` in counts.
pub fn fit_gaussian_peaks(histogram: &CoincidenceHistogram, n_peaks: usize) -> Result<FitResult> {
    if n_peaks == 0 {
        return Err(Error::invalid("n_peaks", "must fit at least one peak"));
    }
    let model = GaussianPeaks { n_peaks };
    let xs: Vec<f64> = (0..histogram.n_bins())
        .map(|k| histogram.bin_center_s(k) * 1e12)
        .collect();
    let ys: Vec<f64> = histogram.counts.iter().map(|&c| c as f64).collect();
    if xs.len() <= model.n_params() {
        return Err(Error::NotEnoughData {
            context: "gaussian peak fit",
            needed: model.n_params() + 1,
            got: xs.len(),
        });
    }
    let seed = seed_gaussian_peaks(&xs, &ys, n_peaks, histogram.bin_width_s * 1e12)?;
    let weights = poisson_weights(&ys);
    let mut solution = levenberg_marquardt(&model, &xs, &ys, &weights, &seed)?;
    // The model is even in each σ; report the positive branch.
    for k in 0..n_peaks {
        if solution.params[3 + 3 * k] < 0.0 {
            flip_param(&mut solution, 3 + 3 * k);
        }
    }

    let mut names: Vec<String> = vec!["baseline".into()];
    let mut scales = vec![1.0];
    for k in 0..n_peaks {
        names.push(format!("amp_{k}"));
        names.push(format!("center_{k}"));
        names.push(format!("sigma_{k}"));
        scales.extend_from_slice(&[1.0, 1e-12, 1e-12]);
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(FitResult::from_solution(
        "gaussian_peaks",
        &name_refs,
        &scales,
        solution,
        xs.len(),
    ))
}

/// FWHM of a Gaussian with the given standard deviation.
pub fn gaussian_fwhm(sigma: f64) -> f64 {
    GAUSSIAN_FWHM_FACTOR * sigma
}

// ---------------------------------------------------------------------------
// Routing fringe models
// ---------------------------------------------------------------------------

/// `A (1 + V cos(2φ + δ))` — the routing fringe with its period locked to
/// π in the modulator phase. Parameters `[A, V, δ]`, `x` in radians.
#[derive(Debug, Clone, Copy)]
pub struct Fringe;

impl FitModel for Fringe {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (1.0 + p[1] * (2.0 * x + p[2]).cos())
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let c = (2.0 * x + p[2]).cos();
        let s = (2.0 * x + p[2]).sin();
        out[0] = 1.0 + p[1] * c;
        out[1] = p[0] * c;
        out[2] = -p[0] * p[1] * s;
    }
}

/// `A (1 + V cos(kφ + δ))` — fringe with a free angular frequency, for
/// verifying the period rather than assuming it. Parameters `[A, V, k, δ]`.
#[derive(Debug, Clone, Copy)]
pub struct FreePeriodFringe;

impl FitModel for FreePeriodFringe {
    fn n_params(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * (1.0 + p[1] * (p[2] * x + p[3]).cos())
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let arg = p[2] * x + p[3];
        let c = arg.cos();
        let s = arg.sin();
        out[0] = 1.0 + p[1] * c;
        out[1] = p[0] * c;
        out[2] = -p[0] * p[1] * s * x;
        out[3] = -p[0] * p[1] * s;
    }
}

fn fringe_seed(phis: &[f64], ys: &[f64], angular_frequency: f64) -> Vec<f64> {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let (mut c, mut s) = (0.0, 0.0);
    for (&phi, &y) in phis.iter().zip(ys) {
        c += (y - mean) * (angular_frequency * phi).cos();
        s += (y - mean) * (angular_frequency * phi).sin();
    }
    // y ≈ mean + mean·V (cos kφ cos δ − sin kφ sin δ): project out δ.
    let delta = (-s).atan2(c);
    let amplitude = (c * c + s * s).sqrt() * 2.0 / n;
    let visibility = if mean > 0.0 {
        (amplitude / mean).clamp(0.05, 1.0)
    } else {
        0.5
    };
    vec![mean.max(1e-9), visibility, delta]
}

fn check_span(phis: &[f64], period: f64, context: &'static str) -> Result<()> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in phis {
        if !p.is_finite() {
            return Err(Error::invalid("phases", "must be finite"));
        }
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let span = hi - lo;
    if span < period * (1.0 - 1e-9) {
        return Err(Error::DegenerateSpan {
            context,
            span,
            period,
        });
    }
    Ok(())
}

/// Fits the π-periodic routing fringe `A(1 + V cos(2φ + δ))`.
///
/// The phase grid must span at least one period (π). The visibility is
/// canonicalized to V ≥ 0 (shifting δ by π when needed) and additionally
/// reported clamped into [0, 1].
pub fn fit_fringe(phis: &[f64], counts: &[f64]) -> Result<FitResult> {
    if phis.len() != counts.len() {
        return Err(Error::invalid("counts", "phase and count lengths differ"));
    }
    check_span(phis, std::f64::consts::PI, "fringe fit")?;
    let weights = poisson_weights(counts);
    let seed = fringe_seed(phis, counts, 2.0);
    let mut solution = levenberg_marquardt(&Fringe, phis, counts, &weights, &seed)?;
    if solution.params[1] < 0.0 {
        flip_param(&mut solution, 1);
        solution.params[2] += std::f64::consts::PI;
    }
    solution.params[2] = wrap_angle(solution.params[2]);
    let mut result = FitResult::from_solution(
        "fringe",
        &["amplitude", "visibility", "phase_offset"],
        &[1.0, 1.0, 1.0],
        solution,
        phis.len(),
    );
    attach_visibility(&mut result, "visibility");
    Ok(result)
}

/// Fits `A(1 + V cos(kφ + δ))` with the angular frequency free, seeded at
/// `k = 2π/period_hint`. Use it to verify the fringe period.
pub fn fit_fringe_free_period(
    phis: &[f64],
    counts: &[f64],
    period_hint_rad: f64,
) -> Result<FitResult> {
    if phis.len() != counts.len() {
        return Err(Error::invalid("counts", "phase and count lengths differ"));
    }
    if !period_hint_rad.is_finite() || period_hint_rad <= 0.0 {
        return Err(Error::invalid(
            "period_hint_rad",
            format!("must be positive, got {period_hint_rad}"),
        ));
    }
    check_span(phis, period_hint_rad, "free-period fringe fit")?;
    let k0 = std::f64::consts::TAU / period_hint_rad;
    let base = fringe_seed(phis, counts, k0);
    let seed = vec![base[0], base[1], k0, base[2]];
    let weights = poisson_weights(counts);
    let mut solution = levenberg_marquardt(&FreePeriodFringe, phis, counts, &weights, &seed)?;
    if solution.params[2] < 0.0 {
        // cos(kφ + δ) = cos(−kφ − δ)
        flip_param(&mut solution, 2);
        flip_param(&mut solution, 3);
    }
    if solution.params[1] < 0.0 {
        flip_param(&mut solution, 1);
        solution.params[3] += std::f64::consts::PI;
    }
    solution.params[3] = wrap_angle(solution.params[3]);
    let mut result = FitResult::from_solution(
        "fringe_free_period",
        &["amplitude", "visibility", "angular_frequency", "phase_offset"],
        &[1.0, 1.0, 1.0, 1.0],
        solution,
        phis.len(),
    );
    attach_visibility(&mut result, "visibility");
    Ok(result)
}

fn attach_visibility(result: &mut FitResult, name: &str) {
    let p = result.param(name).expect("model has a visibility parameter");
    result.visibility = Some(VisibilityEstimate {
        value: p.value.clamp(0.0, 1.0),
        raw: p.value,
        std_err: p.std_err,
    });
}

// ---------------------------------------------------------------------------
// Beating model
// ---------------------------------------------------------------------------

/// `A (1 − V sinc(σ Δτ) cos(2π f Δτ + δ))` with the envelope parameter σ
/// held fixed. Parameters `[A, V, f, δ]`; `x` in picoseconds and `f` in
/// terahertz.
#[derive(Debug, Clone, Copy)]
pub struct Beating {
    /// Envelope parameter in rad/ps.
    pub sigma_rad_per_ps: f64,
}

impl FitModel for Beating {
    fn n_params(&self) -> usize {
        4
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let envelope = crate::beating::sinc(self.sigma_rad_per_ps * x);
        let carrier = (std::f64::consts::TAU * p[2] * x + p[3]).cos();
        p[0] * (1.0 - p[1] * envelope * carrier)
    }

    fn jacobian(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let envelope = crate::beating::sinc(self.sigma_rad_per_ps * x);
        let arg = std::f64::consts::TAU * p[2] * x + p[3];
        let c = arg.cos();
        let s = arg.sin();
        out[0] = 1.0 - p[1] * envelope * c;
        out[1] = -p[0] * envelope * c;
        out[2] = p[0] * p[1] * envelope * s * std::f64::consts::TAU * x;
        out[3] = p[0] * p[1] * envelope * s;
    }
}

/// Fits the beating pattern to a delay scan. `sigma_rad_per_s` is the
/// known envelope parameter (not fitted); `frequency_hint_hz` seeds the
/// carrier. The scan must span at least one expected beat period.
/// Frequency is reported in Hz, the offset δ in radians.
pub fn fit_beating(
    delays_s: &[f64],
    counts: &[f64],
    sigma_rad_per_s: f64,
    frequency_hint_hz: f64,
) -> Result<FitResult> {
    if delays_s.len() != counts.len() {
        return Err(Error::invalid("counts", "delay and count lengths differ"));
    }
    if !sigma_rad_per_s.is_finite() || sigma_rad_per_s <= 0.0 {
        return Err(Error::invalid(
            "sigma_rad_per_s",
            format!("must be positive, got {sigma_rad_per_s}"),
        ));
    }
    if !frequency_hint_hz.is_finite() || frequency_hint_hz <= 0.0 {
        return Err(Error::invalid(
            "frequency_hint_hz",
            format!("must be positive, got {frequency_hint_hz}"),
        ));
    }
    let period_ps = 1e12 / frequency_hint_hz;
    let xs: Vec<f64> = delays_s.iter().map(|&d| d * 1e12).collect();
    check_span(&xs, period_ps, "beating fit")?;
    let model = Beating {
        sigma_rad_per_ps: sigma_rad_per_s * 1e-12,
    };
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let min = counts.iter().cloned().fold(f64::INFINITY, f64::min);
    let v0 = if mean > 0.0 {
        (1.0 - min / mean).clamp(0.1, 1.0)
    } else {
        0.5
    };
    let seed = vec![mean.max(1e-9), v0, frequency_hint_hz * 1e-12, 0.0];
    let weights = poisson_weights(counts);
    let mut solution = levenberg_marquardt(&model, &xs, counts, &weights, &seed)?;
    if solution.params[2] < 0.0 {
        flip_param(&mut solution, 2);
        flip_param(&mut solution, 3);
    }
    if solution.params[1] < 0.0 {
        flip_param(&mut solution, 1);
        solution.params[3] += std::f64::consts::PI;
    }
    solution.params[3] = wrap_angle(solution.params[3]);
    let mut result = FitResult::from_solution(
        "beating",
        &["amplitude", "visibility", "frequency", "phase_offset"],
        &[1.0, 1.0, 1e12, 1.0],
        solution,
        xs.len(),
    );
    attach_visibility(&mut result, "visibility");
    Ok(result)
}

// ---------------------------------------------------------------------------
// On/off ratio
// ---------------------------------------------------------------------------

/// Suppression of a routed output, in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OffRatio {
    Finite {
        db: f64,
        /// Poisson propagation; zero for ratios not derived from counts.
        std_err_db: f64,
    },
    /// The off state recorded zero counts (or visibility is exactly 1).
    Infinite,
}

/// On/off suppression from measured counts: `10 log10(on/off)` with
/// Poisson error propagation. Zero off-counts give the infinite marker.
pub fn off_ratio_db(on_counts: u64, off_counts: u64) -> Result<OffRatio> {
    if on_counts == 0 {
        return Err(Error::invalid(
            "on_counts",
            "cannot form an on/off ratio from zero on-counts",
        ));
    }
    if off_counts == 0 {
        return Ok(OffRatio::Infinite);
    }
    let ratio = on_counts as f64 / off_counts as f64;
    let rel = (1.0 / on_counts as f64 + 1.0 / off_counts as f64).sqrt();
    Ok(OffRatio::Finite {
        db: 10.0 * ratio.log10(),
        std_err_db: 10.0 / std::f64::consts::LN_10 * rel,
    })
}

/// Suppression implied by a fringe visibility: `10 log10((1+V)/(1−V))`.
pub fn implied_off_ratio_db(visibility: f64) -> Result<OffRatio> {
    if !visibility.is_finite() || !(0.0..=1.0).contains(&visibility) {
        return Err(Error::invalid(
            "visibility",
            format!("must lie in [0, 1], got {visibility}"),
        ));
    }
    if visibility >= 1.0 {
        return Ok(OffRatio::Infinite);
    }
    Ok(OffRatio::Finite {
        db: 10.0 * ((1.0 + visibility) / (1.0 - visibility)).log10(),
        std_err_db: 0.0,
    })
}

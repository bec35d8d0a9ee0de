//! The scenario runners behind the CLI subcommands. Each one drives the
//! core pipeline, writes its CSV artifacts and a JSON report into the
//! output directory, and finishes with a run manifest. Identical
//! configuration and seed reproduce every output byte for byte.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use umzi_core::beating::{
    beating_period, delay_grid, envelope_first_zero_s, fidelity_from_visibility,
    simulate_beating_scan, BeatingConfig, BeatingMode, BeatingPeriod,
};
use umzi_core::coincidence::{
    correlate, estimate_car, phase_sweep, simulate_run, CarEstimate, CoincidenceHistogram,
    PortPair, SweepPlan, TimeFilter,
};
use umzi_core::fit::{
    fit_beating, fit_fringe, fit_gaussian_peaks, gaussian_fwhm, implied_off_ratio_db,
    off_ratio_db, FitResult, OffRatio, VisibilityEstimate,
};
use umzi_core::interferometer::{
    evolve_umzi, pure_state_phase, TimeSlot, TwoPhotonState, VirtualPort,
};
use umzi_core::seed::derive_seed;
use umzi_core::stats::{chi_square_flatness, gaussian_window_probability, FlatnessTest};

use crate::config::ExperimentConfig;
use crate::manifest::RunWriter;

/// CLI-side seed streams. The core derives its internal draws from streams
/// 0–5; the scenario streams stay clear of those so no scenario shares
/// random numbers with another.
const STREAM_FIG3: u64 = 101;
const STREAM_FIG4: u64 = 102;
const STREAM_SWEEP: u64 = 103;
const STREAM_SIMULATE: u64 = 104;

fn central_filter(config: &ExperimentConfig) -> TimeFilter {
    TimeFilter::central(config.acquisition.filter_width_s)
}

fn sweep_plan(config: &ExperimentConfig, phases_rad: Vec<f64>, duration_s: f64) -> SweepPlan {
    SweepPlan {
        phases_rad,
        duration_per_point_s: duration_s,
        bin_width_s: config.acquisition.bin_width_s,
        window_s: config.acquisition.window_s,
        filter: central_filter(config),
    }
}

fn uniform_phases(n: usize) -> Vec<f64> {
    let step = std::f64::consts::TAU / n.max(1) as f64;
    (0..n).map(|k| k as f64 * step).collect()
}

/// Timing spread of a coincidence peak: both detector jitters plus the two
/// timestamp quantizations, combined as variances.
fn peak_sigma_s(config: &ExperimentConfig) -> f64 {
    let setup = config.detection_setup(PortPair::EF);
    (setup.signal.jitter_sigma_s().powi(2)
        + setup.idler.jitter_sigma_s().powi(2)
        + config.acquisition.resolution_s.powi(2) / 6.0)
        .sqrt()
}

/// Fraction of true coincidences the central filter captures. The filter
/// is half-open on bin centers, so with bin width B its effective Δt span
/// is [−(F + B)/2, (F − B)/2).
fn filter_capture_fraction(config: &ExperimentConfig) -> f64 {
    let half_filter = config.acquisition.filter_width_s / 2.0;
    let half_bin = config.acquisition.bin_width_s / 2.0;
    gaussian_window_probability(
        peak_sigma_s(config),
        -(half_filter + half_bin),
        half_filter - half_bin,
    )
}

/// Expected filtered true-coincidence rate on one port pair, Hz.
fn expected_filtered_rate_hz(
    config: &ExperimentConfig,
    state: &TwoPhotonState,
    ports: PortPair,
) -> f64 {
    let setup = config.detection_setup(ports);
    let p = state.outcome_probability(ports.signal_mode(), ports.idler_mode(), TimeSlot::Zero);
    let t = setup.transmission();
    config.source.pair_rate_hz
        * p
        * setup.signal.efficiency
        * setup.idler.efficiency
        * t
        * t
        * filter_capture_fraction(config)
}

/// Expected click rate of one detection channel, Hz: transmitted pair
/// photons plus the unthinned accidental floor and dark counts.
fn singles_rate_hz(config: &ExperimentConfig, state: &TwoPhotonState, ports: PortPair) -> (f64, f64) {
    let setup = config.detection_setup(ports);
    let t = setup.transmission();
    let signal = config.source.pair_rate_hz * state.signal_marginal(ports.signal_mode())
        * setup.signal.efficiency
        * t
        + config.source.accidental_singles_rate_hz
        + setup.signal.dark_count_rate_hz;
    let idler = config.source.pair_rate_hz * state.idler_marginal(ports.idler_mode())
        * setup.idler.efficiency
        * t
        + config.source.accidental_singles_rate_hz
        + setup.idler.dark_count_rate_hz;
    (signal, idler)
}

fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI
}

fn car_display(car: &CarEstimate) -> String {
    match car {
        CarEstimate::Finite { car, std_err, .. } => format!("{car:.1} ± {std_err:.1}"),
        CarEstimate::Infinite { signal_counts } => {
            format!("infinite ({signal_counts} counts, empty background)")
        }
    }
}

fn write_histogram(
    writer: &mut RunWriter,
    name: &str,
    histogram: &CoincidenceHistogram,
) -> anyhow::Result<()> {
    let mut w = writer.create(name)?;
    histogram
        .write_csv(&mut w)
        .with_context(|| format!("writing {name}"))?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// fig3: coincidence histograms and peak analysis
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct HistogramSummary {
    phi_rad: f64,
    file: String,
    total_counts: u64,
    central_counts: u64,
    singles_signal: u64,
    singles_idler: u64,
}

#[derive(Debug, Serialize)]
struct PeakReport {
    amplitude: f64,
    amplitude_std_err: f64,
    center_s: f64,
    center_std_err_s: f64,
    sigma_s: f64,
    sigma_std_err_s: f64,
    fwhm_s: f64,
}

#[derive(Debug, Serialize)]
struct SuppressionReport {
    /// Phase at which the central peak is switched off.
    phi_rad: f64,
    central_counts: u64,
    /// Phase and counts of the reference (switched-on) run.
    reference_phi_rad: f64,
    reference_counts: u64,
    /// Reference over suppressed counts; `None` when the reference run
    /// itself recorded nothing.
    off_ratio: Option<OffRatio>,
}

#[derive(Debug, Serialize)]
struct Fig3Report {
    port_pair: PortPair,
    duration_s: f64,
    histograms: Vec<HistogramSummary>,
    /// Phase of the run the three-Gaussian fit describes.
    fit_phi_rad: f64,
    fit: FitResult,
    peaks: Vec<PeakReport>,
    /// Differences between adjacent fitted peak centers.
    peak_spacings_s: Vec<f64>,
    /// The configured interferometer delay the spacings should reproduce.
    expected_spacing_s: f64,
    central_fwhm_s: f64,
    /// Jitter-plus-quantization prediction for the peak FWHM.
    expected_fwhm_s: f64,
    car: CarEstimate,
    suppression: Option<SuppressionReport>,
}

pub fn run_fig3(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut writer = RunWriter::new(out, "fig3", config)?;
    let source = config.source_model();
    let umzi = config.umzi_config()?;
    let setup = config.detection_setup(config.fig3.port_pair);
    let acq = &config.acquisition;
    let filter = central_filter(config);

    let mut histograms = Vec::new();
    let mut summaries = Vec::new();
    for (index, &phi) in config.fig3.phases_rad.iter().enumerate() {
        let state = evolve_umzi(&umzi.with_phi(phi))?;
        let seed = derive_seed(config.seed, STREAM_FIG3, index as u64);
        let (signal, idler) =
            simulate_run(&state, &source, &setup, config.fig3.duration_s, seed)?;
        let histogram = correlate(&signal, &idler, acq.bin_width_s, acq.window_s)?;
        let file = format!("fig3_histogram_phi{phi:.4}.csv");
        write_histogram(&mut writer, &file, &histogram)?;
        summaries.push(HistogramSummary {
            phi_rad: phi,
            file,
            total_counts: histogram.total_counts(),
            central_counts: histogram.filtered_counts(&filter)?,
            singles_signal: histogram.singles_signal,
            singles_idler: histogram.singles_idler,
        });
        histograms.push(histogram);
    }

    let fit_phi_rad = config.fig3.phases_rad[0];
    let fit = fit_gaussian_peaks(&histograms[0], 3).context("three-Gaussian histogram fit")?;
    let peaks: Vec<PeakReport> = (0..3)
        .map(|k| {
            let get = |prefix: &str| {
                fit.param(&format!("{prefix}_{k}"))
                    .expect("gaussian fit reports three peaks")
            };
            let (amp, center, sigma) = (get("amp"), get("center"), get("sigma"));
            PeakReport {
                amplitude: amp.value,
                amplitude_std_err: amp.std_err,
                center_s: center.value,
                center_std_err_s: center.std_err,
                sigma_s: sigma.value,
                sigma_std_err_s: sigma.std_err,
                fwhm_s: gaussian_fwhm(sigma.value),
            }
        })
        .collect();
    let peak_spacings_s: Vec<f64> = peaks
        .windows(2)
        .map(|pair| pair[1].center_s - pair[0].center_s)
        .collect();
    let central_fwhm_s = peaks[1].fwhm_s;

    let tau = umzi.tau_s;
    let car = estimate_car(
        &histograms[0],
        &filter,
        &acq.background_offsets_s,
        &[-tau, 0.0, tau],
    )?;

    let suppression = if summaries.len() >= 2 {
        let reference = &summaries[0];
        let suppressed = summaries.last().expect("at least two summaries");
        Some(SuppressionReport {
            phi_rad: suppressed.phi_rad,
            central_counts: suppressed.central_counts,
            reference_phi_rad: reference.phi_rad,
            reference_counts: reference.central_counts,
            off_ratio: off_ratio_db(reference.central_counts, suppressed.central_counts).ok(),
        })
    } else {
        None
    };

    let report = Fig3Report {
        port_pair: config.fig3.port_pair,
        duration_s: config.fig3.duration_s,
        histograms: summaries,
        fit_phi_rad,
        fit,
        peaks,
        peak_spacings_s: peak_spacings_s.clone(),
        expected_spacing_s: tau,
        central_fwhm_s,
        expected_fwhm_s: gaussian_fwhm(peak_sigma_s(config)),
        car,
        suppression,
    };
    writer.write_json("fig3_report.json", &report)?;
    let manifest = writer.finish()?;

    println!(
        "fig3: {} histogram(s) on {:?}; peak spacings {} ps (delay {:.1} ps)",
        report.histograms.len(),
        report.port_pair,
        peak_spacings_s
            .iter()
            .map(|s| format!("{:.2}", s * 1e12))
            .collect::<Vec<_>>()
            .join(", "),
        tau * 1e12,
    );
    println!(
        "fig3: central FWHM {:.2} ps (expected {:.2} ps), CAR {}",
        report.central_fwhm_s * 1e12,
        report.expected_fwhm_s * 1e12,
        car_display(&report.car),
    );
    if let Some(s) = &report.suppression {
        match &s.off_ratio {
            Some(OffRatio::Finite { db, std_err_db }) => println!(
                "fig3: central peak at φ = {:.4} suppressed {:.1} ± {:.1} dB below φ = {:.4}",
                s.phi_rad, db, std_err_db, s.reference_phi_rad,
            ),
            Some(OffRatio::Infinite) => println!(
                "fig3: central peak at φ = {:.4} fully suppressed ({} reference counts)",
                s.phi_rad, s.reference_counts,
            ),
            None => println!("fig3: suppression undefined (empty reference run)"),
        }
    }
    println!("fig3: manifest {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fig4: routing fringes on both virtual ports
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct FringeArmReport {
    ports: PortPair,
    file: String,
    fit: FitResult,
    visibility: VisibilityEstimate,
    phase_offset_rad: f64,
    max_counts: u64,
    min_counts: u64,
    /// Chi-square tests of the singles against a constant rate; the
    /// routing must not modulate the singles.
    singles_flatness_signal: FlatnessTest,
    singles_flatness_idler: FlatnessTest,
}

#[derive(Debug, Serialize)]
struct Fig4Report {
    n_phases: usize,
    duration_per_point_s: f64,
    antibunched: FringeArmReport,
    bunched: FringeArmReport,
    /// Fitted fringe-offset difference, antibunched minus bunched, wrapped
    /// to [−π, π); ±π for ideal anti-phased fringes.
    anti_phase_offset_rad: f64,
    /// Switched-on over switched-off counts of the antibunched fringe.
    off_ratio_measured: OffRatio,
    /// Off-ratio implied by the fitted antibunched visibility.
    off_ratio_implied: OffRatio,
}

fn sweep_arm(
    config: &ExperimentConfig,
    writer: &mut RunWriter,
    ports: PortPair,
    file: &str,
    seed: u64,
) -> anyhow::Result<FringeArmReport> {
    let source = config.source_model();
    let umzi = config.umzi_config()?;
    let setup = config.detection_setup(ports);
    let plan = sweep_plan(
        config,
        uniform_phases(config.fig4.n_phases),
        config.fig4.duration_per_point_s,
    );
    let scan = phase_sweep(&umzi, &source, &setup, &plan, seed)?;
    let mut w = writer.create(file)?;
    scan.write_csv(&mut w).with_context(|| format!("writing {file}"))?;
    w.flush()?;

    let counts: Vec<f64> = scan.points.iter().map(|p| p.coincidences as f64).collect();
    let fit = fit_fringe(&scan.phases(), &counts)
        .with_context(|| format!("fringe fit on {ports:?}"))?;
    let visibility = fit.visibility.expect("fringe fits attach a visibility");
    let phase_offset_rad = fit.value("phase_offset");
    let singles_signal: Vec<u64> = scan.points.iter().map(|p| p.singles_signal).collect();
    let singles_idler: Vec<u64> = scan.points.iter().map(|p| p.singles_idler).collect();
    Ok(FringeArmReport {
        ports,
        file: file.to_owned(),
        visibility,
        phase_offset_rad,
        max_counts: scan.points.iter().map(|p| p.coincidences).max().unwrap_or(0),
        min_counts: scan.points.iter().map(|p| p.coincidences).min().unwrap_or(0),
        singles_flatness_signal: chi_square_flatness(&singles_signal)?,
        singles_flatness_idler: chi_square_flatness(&singles_idler)?,
        fit,
    })
}

pub fn run_fig4(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut writer = RunWriter::new(out, "fig4", config)?;
    let antibunched = sweep_arm(
        config,
        &mut writer,
        config.fig4.antibunched_ports,
        "fig4_antibunched.csv",
        derive_seed(config.seed, STREAM_FIG4, 0),
    )?;
    let bunched = sweep_arm(
        config,
        &mut writer,
        config.fig4.bunched_ports,
        "fig4_bunched.csv",
        derive_seed(config.seed, STREAM_FIG4, 1),
    )?;

    let report = Fig4Report {
        n_phases: config.fig4.n_phases,
        duration_per_point_s: config.fig4.duration_per_point_s,
        anti_phase_offset_rad: wrap_angle(
            antibunched.phase_offset_rad - bunched.phase_offset_rad,
        ),
        off_ratio_measured: off_ratio_db(
            antibunched.max_counts.max(1),
            antibunched.min_counts,
        )?,
        off_ratio_implied: implied_off_ratio_db(antibunched.visibility.value)?,
        antibunched,
        bunched,
    };
    writer.write_json("fig4_report.json", &report)?;
    let manifest = writer.finish()?;

    println!(
        "fig4: antibunched V = {:.4} ± {:.4} on {:?}, bunched V = {:.4} ± {:.4} on {:?}",
        report.antibunched.visibility.value,
        report.antibunched.visibility.std_err,
        report.antibunched.ports,
        report.bunched.visibility.value,
        report.bunched.visibility.std_err,
        report.bunched.ports,
    );
    println!(
        "fig4: fringes offset by {:.4} rad; off-ratio measured {}, implied {}",
        report.anti_phase_offset_rad,
        off_ratio_display(&report.off_ratio_measured),
        off_ratio_display(&report.off_ratio_implied),
    );
    println!("fig4: manifest {}", manifest.display());
    Ok(())
}

fn off_ratio_display(r: &OffRatio) -> String {
    match r {
        OffRatio::Finite { db, std_err_db } if *std_err_db > 0.0 => {
            format!("{db:.1} ± {std_err_db:.1} dB")
        }
        OffRatio::Finite { db, .. } => format!("{db:.1} dB"),
        OffRatio::Infinite => "infinite".to_owned(),
    }
}

// ---------------------------------------------------------------------------
// fig5: spatial beating of the routed state
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct Fig5Report {
    mode: BeatingMode,
    beating: BeatingConfig,
    /// Phase the router is parked at (pure antibunched output).
    phi_rad: f64,
    file: String,
    baseline_counts: f64,
    fit: FitResult,
    visibility: VisibilityEstimate,
    fitted_period_s: f64,
    fitted_period_std_err_s: f64,
    /// Closed-form period of the scanned (antibunched) pattern.
    closed_form: BeatingPeriod,
    /// Closed-form period the bunched output would beat at.
    bunched_closed_form: BeatingPeriod,
    envelope_first_zero_s: f64,
    /// Entanglement-fidelity lower bound from the fitted visibility.
    fidelity_lower_bound: f64,
}

pub fn run_fig5(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut writer = RunWriter::new(out, "fig5", config)?;
    let source = config.source_model();
    let mut umzi = config.umzi_config()?;
    umzi.phi_rad = pure_state_phase(VirtualPort::Antibunched, 0, umzi.theta0_rad);
    let state = evolve_umzi(&umzi)?;

    let beating =
        BeatingConfig::from_source(&source, BeatingMode::Antibunched, config.fig5.visibility)?;
    let delays = delay_grid(config.fig5.n_delays, config.fig5.max_delay_s)?;
    // Both antibunched pairings feed the recombined scan.
    let rate = expected_filtered_rate_hz(config, &state, PortPair::EF)
        + expected_filtered_rate_hz(config, &state, PortPair::DG);
    let baseline = rate * config.fig5.duration_per_point_s;
    let scan = simulate_beating_scan(&beating, &delays, baseline, config.seed)
        .context("beating scan (baseline is the expected counts per point; raise pair_rate, efficiencies, or duration if it vanishes)")?;
    let file = "fig5_scan.csv";
    let mut w = writer.create(file)?;
    scan.write_csv(&mut w).context("writing fig5_scan.csv")?;
    w.flush()?;

    let counts: Vec<f64> = scan.points.iter().map(|p| p.counts as f64).collect();
    let fit = fit_beating(
        &delays,
        &counts,
        beating.sigma_rad_per_s,
        beating.beat_frequency_hz,
    )
    .context("beating fit")?;
    let visibility = fit.visibility.expect("beating fits attach a visibility");
    let frequency = fit
        .param("frequency")
        .expect("beating fits report a frequency")
        .clone();
    let fitted_period_s = 1.0 / frequency.value;
    let fitted_period_std_err_s = frequency.std_err / (frequency.value * frequency.value);
    let fidelity_lower_bound = fidelity_from_visibility(visibility.value)?;
    let bunched = BeatingConfig::from_source(&source, BeatingMode::Bunched, config.fig5.visibility)?;

    let report = Fig5Report {
        mode: BeatingMode::Antibunched,
        phi_rad: umzi.phi_rad,
        file: file.to_owned(),
        baseline_counts: scan.baseline_counts,
        visibility,
        fitted_period_s,
        fitted_period_std_err_s,
        closed_form: beating_period(&beating)?,
        bunched_closed_form: beating_period(&bunched)?,
        envelope_first_zero_s: envelope_first_zero_s(&beating)?,
        fidelity_lower_bound,
        fit,
        beating,
    };
    writer.write_json("fig5_report.json", &report)?;
    let manifest = writer.finish()?;

    println!(
        "fig5: beat period fitted {:.4} ps vs closed form {:.4} ps (bunched would be {:.4} fs)",
        report.fitted_period_s * 1e12,
        report.closed_form.period_s * 1e12,
        report.bunched_closed_form.period_s * 1e15,
    );
    println!(
        "fig5: V = {:.4} ± {:.4}, envelope zero {:.3} ps, fidelity ≥ {:.4}",
        report.visibility.value,
        report.visibility.std_err,
        report.envelope_first_zero_s * 1e12,
        report.fidelity_lower_bound,
    );
    println!("fig5: manifest {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep: a fringe scan on one configurable port pair
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SweepReport {
    ports: PortPair,
    file: String,
    n_points: usize,
    duration_per_point_s: f64,
    total_coincidences: u64,
    /// Absent when the grid cannot constrain the fringe model (the scan
    /// itself is still written).
    fit: Option<FitResult>,
    fit_error: Option<String>,
    singles_flatness_signal: FlatnessTest,
    singles_flatness_idler: FlatnessTest,
}

pub fn run_sweep(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut writer = RunWriter::new(out, "sweep", config)?;
    let source = config.source_model();
    let umzi = config.umzi_config()?;
    let setup = config.detection_setup(config.sweep.port_pair);
    let phases = config
        .sweep
        .phases_rad
        .clone()
        .unwrap_or_else(|| uniform_phases(config.sweep.n_phases));
    let plan = sweep_plan(config, phases, config.sweep.duration_per_point_s);
    let scan = phase_sweep(
        &umzi,
        &source,
        &setup,
        &plan,
        derive_seed(config.seed, STREAM_SWEEP, 0),
    )?;
    let file = "sweep_scan.csv";
    let mut w = writer.create(file)?;
    scan.write_csv(&mut w).context("writing sweep_scan.csv")?;
    w.flush()?;

    let counts: Vec<f64> = scan.points.iter().map(|p| p.coincidences as f64).collect();
    let (fit, fit_error) = match fit_fringe(&scan.phases(), &counts) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let singles_signal: Vec<u64> = scan.points.iter().map(|p| p.singles_signal).collect();
    let singles_idler: Vec<u64> = scan.points.iter().map(|p| p.singles_idler).collect();
    let report = SweepReport {
        ports: config.sweep.port_pair,
        file: file.to_owned(),
        n_points: scan.points.len(),
        duration_per_point_s: config.sweep.duration_per_point_s,
        total_coincidences: scan.points.iter().map(|p| p.coincidences).sum(),
        fit,
        fit_error,
        singles_flatness_signal: chi_square_flatness(&singles_signal)?,
        singles_flatness_idler: chi_square_flatness(&singles_idler)?,
    };
    writer.write_json("sweep_report.json", &report)?;
    let manifest = writer.finish()?;

    match report.fit.as_ref().and_then(|f| f.visibility) {
        Some(v) => println!(
            "sweep: {} points on {:?}, V = {:.4} ± {:.4}",
            report.n_points, report.ports, v.value, v.std_err,
        ),
        None => println!(
            "sweep: {} points on {:?}, no fringe fit ({})",
            report.n_points,
            report.ports,
            report.fit_error.as_deref().unwrap_or("unknown"),
        ),
    }
    println!("sweep: manifest {}", manifest.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate: one histogram at the configured working point
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SimulateReport {
    ports: PortPair,
    phi_rad: f64,
    duration_s: f64,
    file: String,
    total_counts: u64,
    singles_signal: u64,
    singles_idler: u64,
    central_counts: u64,
    /// Counts in the filters at −τ and +τ.
    side_counts: [u64; 2],
    /// Analytic expectation for the central filter, true pairs plus the
    /// accidental floor.
    expected_central_counts: f64,
    car: CarEstimate,
}

pub fn run_simulate(config: &ExperimentConfig, out: &Path) -> anyhow::Result<()> {
    let mut writer = RunWriter::new(out, "simulate", config)?;
    let source = config.source_model();
    let umzi = config.umzi_config()?;
    let setup = config.detection_setup(config.simulate.port_pair);
    let acq = &config.acquisition;
    let state = evolve_umzi(&umzi)?;
    let (signal, idler) = simulate_run(
        &state,
        &source,
        &setup,
        config.simulate.duration_s,
        derive_seed(config.seed, STREAM_SIMULATE, 0),
    )?;
    let histogram = correlate(&signal, &idler, acq.bin_width_s, acq.window_s)?;
    let file = "simulate_histogram.csv";
    write_histogram(&mut writer, file, &histogram)?;

    let filter = central_filter(config);
    let tau = umzi.tau_s;
    let side_counts = [
        histogram.filtered_counts(&TimeFilter::at(-tau, acq.filter_width_s))?,
        histogram.filtered_counts(&TimeFilter::at(tau, acq.filter_width_s))?,
    ];
    let (r_s, r_i) = singles_rate_hz(config, &state, config.simulate.port_pair);
    let expected_central_counts = (expected_filtered_rate_hz(
        config,
        &state,
        config.simulate.port_pair,
    ) + r_s * r_i * acq.filter_width_s)
        * config.simulate.duration_s;
    let car = estimate_car(
        &histogram,
        &filter,
        &acq.background_offsets_s,
        &[-tau, 0.0, tau],
    )?;

    let report = SimulateReport {
        ports: config.simulate.port_pair,
        phi_rad: umzi.phi_rad,
        duration_s: config.simulate.duration_s,
        file: file.to_owned(),
        total_counts: histogram.total_counts(),
        singles_signal: histogram.singles_signal,
        singles_idler: histogram.singles_idler,
        central_counts: histogram.filtered_counts(&filter)?,
        side_counts,
        expected_central_counts,
        car,
    };
    writer.write_json("simulate_report.json", &report)?;
    let manifest = writer.finish()?;

    println!(
        "simulate: {:?} at φ = {:.4} for {} s: central {} (expected {:.1}), sides {} / {}, CAR {}",
        report.ports,
        report.phi_rad,
        report.duration_s,
        report.central_counts,
        report.expected_central_counts,
        report.side_counts[0],
        report.side_counts[1],
        car_display(&report.car),
    );
    println!("simulate: manifest {}", manifest.display());
    Ok(())
}

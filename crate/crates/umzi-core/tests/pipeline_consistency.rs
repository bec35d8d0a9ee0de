//! Runs the full measurement chain — state evolution, Monte Carlo
//! timestamp generation, correlation, time filtering — and checks the
//! resulting counts against analytic expectations within 4σ Poisson bands.

use umzi_core::coincidence::{
    correlate, simulate_run, DetectionSetup, PortPair, TimeFilter,
};
use umzi_core::interferometer::{evolve_umzi, SpatialMode, TimeSlot, UmziConfig};
use umzi_core::source::SourceModel;
use umzi_core::stats::gaussian_window_probability;

const DURATION_S: f64 = 10.0;
const BIN_S: f64 = 4e-12;
const WINDOW_S: f64 = 800e-12;
const FILTER_S: f64 = 88e-12;

struct Context {
    source: SourceModel,
    setup: DetectionSetup,
    state: umzi_core::interferometer::TwoPhotonState,
}

impl Context {
    fn new(phi_rad: f64, ports: PortPair) -> Self {
        let config = UmziConfig {
            phi_rad,
            ..UmziConfig::default()
        };
        Self {
            source: SourceModel::default(),
            setup: DetectionSetup::reference(ports),
            state: evolve_umzi(&config).unwrap(),
        }
    }

    fn transmission(&self) -> f64 {
        self.setup.transmission()
    }

    /// Detected-pair rate landing inside an 88 ps filter centered on the
    /// given slot, 1/s.
    fn filtered_pair_rate_hz(&self, slot: TimeSlot) -> f64 {
        let p_outcome = self.state.outcome_probability(
            self.setup.ports.signal_mode(),
            self.setup.ports.idler_mode(),
            slot,
        );
        let sigma = (self.setup.signal.jitter_sigma_s().powi(2)
            + self.setup.idler.jitter_sigma_s().powi(2))
        .sqrt();
        // The 22 selected bins cover Δt ∈ [−46, 42) ps around the slot
        // center (bin centers −44 … +40 ps, each bin two picoseconds to
        // either side of its center under floor quantization).
        let capture = gaussian_window_probability(
            sigma,
            -(FILTER_S / 2.0 + BIN_S / 2.0),
            FILTER_S / 2.0 - BIN_S / 2.0,
        );
        self.source.pair_rate_hz
            * p_outcome
            * self.setup.signal.efficiency
            * self.setup.idler.efficiency
            * self.transmission().powi(2)
            * capture
    }

    /// Mean click rate of one channel, 1/s.
    fn singles_hz(&self, signal_side: bool) -> f64 {
        let (mode_marginal, detector) = if signal_side {
            (
                self.state.signal_marginal(self.setup.ports.signal_mode()),
                &self.setup.signal,
            )
        } else {
            (
                self.state.idler_marginal(self.setup.ports.idler_mode()),
                &self.setup.idler,
            )
        };
        self.source.pair_rate_hz * mode_marginal * detector.efficiency * self.transmission()
            + self.source.accidental_singles_rate_hz
            + detector.dark_count_rate_hz
    }

    /// Flat accidental-coincidence rate inside one filter width, 1/s.
    fn accidental_filter_rate_hz(&self) -> f64 {
        self.singles_hz(true) * self.singles_hz(false) * FILTER_S
    }
}

fn assert_within_4_sigma(observed: u64, expected: f64, context: &str) {
    let sigma = expected.sqrt().max(1.0);
    assert!(
        (observed as f64 - expected).abs() < 4.0 * sigma,
        "{context}: observed {observed}, expected {expected:.1} ± {:.1}",
        sigma
    );
}

#[test]
fn antibunched_port_counts_match_analytic_rates() {
    // φ = π/2 (Θ = π): the central peak routes to the antibunched pairs.
    let ctx = Context::new(std::f64::consts::FRAC_PI_2, PortPair::EF);
    let (signal, idler) =
        simulate_run(&ctx.state, &ctx.source, &ctx.setup, DURATION_S, 2024).unwrap();

    assert_within_4_sigma(
        signal.len() as u64,
        ctx.singles_hz(true) * DURATION_S,
        "signal singles",
    );
    assert_within_4_sigma(
        idler.len() as u64,
        ctx.singles_hz(false) * DURATION_S,
        "idler singles",
    );

    let hist = correlate(&signal, &idler, BIN_S, WINDOW_S).unwrap();
    // Central filter: detected pairs plus the flat accidental floor.
    let central = hist.filtered_counts(&TimeFilter::central(FILTER_S)).unwrap();
    let expected_central = (ctx.filtered_pair_rate_hz(TimeSlot::Zero)
        + ctx.accidental_filter_rate_hz())
        * DURATION_S;
    assert_within_4_sigma(central, expected_central, "central filter");

    // Side filters at ±τ: the phase-independent 1/16 peaks.
    let tau = 100e-12;
    for (name, center, slot) in [
        ("minus side", -tau, TimeSlot::Minus),
        ("plus side", tau, TimeSlot::Plus),
    ] {
        let counts = hist
            .filtered_counts(&TimeFilter::at(center, FILTER_S))
            .unwrap();
        let expected = (ctx.filtered_pair_rate_hz(slot) + ctx.accidental_filter_rate_hz())
            * DURATION_S;
        assert_within_4_sigma(counts, expected, name);
    }

    // The central peak must dominate the sides by about a factor 4 here
    // (p = 1/4 vs 1/16) once accidentals are subtracted.
    let side = hist
        .filtered_counts(&TimeFilter::at(tau, FILTER_S))
        .unwrap();
    let acc = ctx.accidental_filter_rate_hz() * DURATION_S;
    let ratio = (central as f64 - acc) / (side as f64 - acc).max(1.0);
    assert!((ratio - 4.0).abs() < 1.0, "peak ratio {ratio}");
}

#[test]
fn bunched_port_central_peak_is_starved_at_theta_pi() {
    // Same phase, detectors on a bunched pair: only the incoherent floor
    // and accidentals remain in the central filter.
    let ctx = Context::new(std::f64::consts::FRAC_PI_2, PortPair::DE);
    let (signal, idler) =
        simulate_run(&ctx.state, &ctx.source, &ctx.setup, DURATION_S, 2025).unwrap();
    let hist = correlate(&signal, &idler, BIN_S, WINDOW_S).unwrap();

    let central = hist.filtered_counts(&TimeFilter::central(FILTER_S)).unwrap();
    let expected = (ctx.filtered_pair_rate_hz(TimeSlot::Zero) + ctx.accidental_filter_rate_hz())
        * DURATION_S;
    // The pair term is ~0.004 counts: the filter holds accidentals only.
    assert!(ctx.filtered_pair_rate_hz(TimeSlot::Zero) * DURATION_S < 0.1);
    assert_within_4_sigma(central, expected, "starved central filter");

    // Side peaks are unaffected by routing.
    let side = hist
        .filtered_counts(&TimeFilter::at(-100e-12, FILTER_S))
        .unwrap();
    let expected_side = (ctx.filtered_pair_rate_hz(TimeSlot::Minus)
        + ctx.accidental_filter_rate_hz())
        * DURATION_S;
    assert_within_4_sigma(side, expected_side, "side peak on bunched pair");
}

#[test]
fn quadrature_phase_splits_the_central_mass() {
    // Θ = π/2: both virtual ports receive half the central mass. Compare
    // the two port pairs drawn from the same underlying physics.
    let ctx_anti = Context::new(std::f64::consts::FRAC_PI_4, PortPair::EF);
    let ctx_bunched = Context::new(std::f64::consts::FRAC_PI_4, PortPair::DE);
    let p_anti = ctx_anti.state.outcome_probability(
        SpatialMode::D,
        SpatialMode::C,
        TimeSlot::Zero,
    );
    let p_bunched = ctx_bunched.state.outcome_probability(
        SpatialMode::C,
        SpatialMode::C,
        TimeSlot::Zero,
    );
    assert!((p_anti - p_bunched).abs() < 1e-12, "analytic split is even");

    let (s1, i1) = simulate_run(
        &ctx_anti.state,
        &ctx_anti.source,
        &ctx_anti.setup,
        DURATION_S,
        2026,
    )
    .unwrap();
    let (s2, i2) = simulate_run(
        &ctx_bunched.state,
        &ctx_bunched.source,
        &ctx_bunched.setup,
        DURATION_S,
        2027,
    )
    .unwrap();
    let central = |s, i| {
        correlate(s, i, BIN_S, WINDOW_S)
            .unwrap()
            .filtered_counts(&TimeFilter::central(FILTER_S))
            .unwrap()
    };
    let expected = (ctx_anti.filtered_pair_rate_hz(TimeSlot::Zero)
        + ctx_anti.accidental_filter_rate_hz())
        * DURATION_S;
    assert_within_4_sigma(central(&s1, &i1), expected, "antibunched at quadrature");
    assert_within_4_sigma(central(&s2, &i2), expected, "bunched at quadrature");
}

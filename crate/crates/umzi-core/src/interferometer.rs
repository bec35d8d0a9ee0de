//! Two-photon state evolution through the unbalanced Mach-Zehnder router.
//!
//! Both photons of an energy-time entangled pair enter the same input port
//! of the first coupler. Each photon either stays in the short arm or takes
//! the long arm, which adds a delay τ and a phase `θ0/2 + φ` (θ0 is the
//! static offset of the device, φ the modulator setting; the long arm is
//! traversed once per photon, so the pair picks up `θ0 + 2φ` when both
//! photons go long). After the output coupler the pair is described by a
//! joint amplitude over (signal output port, idler output port, relative
//! detection delay ∈ {−τ, 0, +τ}).
//!
//! The central slot mixes the short-short and long-long histories; their
//! interference routes the pair between the *bunched* virtual port (both
//! photons on the same output) and the *antibunched* one (photons split).
//! The side slots come from the distinguishable short-long and long-short
//! histories and carry no phase dependence in their probabilities.
//!
//! Partial coherence is handled by splitting the pair ensemble into a
//! coherent fraction γ that interferes and an incoherent remainder that
//! contributes a phase-independent central-slot probability floor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spatial output port of the final coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpatialMode {
    /// First output port (demultiplexed into detectors D and E).
    C,
    /// Second output port (demultiplexed into detectors F and G).
    D,
}

impl SpatialMode {
    pub const ALL: [SpatialMode; 2] = [SpatialMode::C, SpatialMode::D];

    fn index(self) -> usize {
        match self {
            SpatialMode::C => 0,
            SpatialMode::D => 1,
        }
    }
}

/// Relative detection delay `t_signal − t_idler` in units of the arm
/// imbalance τ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeSlot {
    /// Signal short, idler long: Δt = −τ.
    Minus,
    /// Both photons through the same arm: Δt = 0.
    Zero,
    /// Signal long, idler short: Δt = +τ.
    Plus,
}

impl TimeSlot {
    pub const ALL: [TimeSlot; 3] = [TimeSlot::Minus, TimeSlot::Zero, TimeSlot::Plus];

    fn index(self) -> usize {
        match self {
            TimeSlot::Minus => 0,
            TimeSlot::Zero => 1,
            TimeSlot::Plus => 2,
        }
    }

    /// The delay this slot represents, s.
    pub fn delta_t_s(self, tau_s: f64) -> f64 {
        match self {
            TimeSlot::Minus => -tau_s,
            TimeSlot::Zero => 0.0,
            TimeSlot::Plus => tau_s,
        }
    }
}

/// Interferometer arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Short,
    Long,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Short, Arm::Long];

    fn index(self) -> usize {
        match self {
            Arm::Short => 0,
            Arm::Long => 1,
        }
    }
}

/// Virtual output port of the router in the central time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VirtualPort {
    /// Both photons exit the same spatial port (cc or dd).
    Bunched,
    /// The photons exit different spatial ports (cd or dc).
    Antibunched,
}

/// Device settings of the unbalanced Mach-Zehnder interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmziConfig {
    /// Arm delay imbalance τ, s.
    pub tau_s: f64,
    /// Modulator phase φ applied per long-arm traversal, rad.
    pub phi_rad: f64,
    /// Static phase offset θ0 of the device, rad. Only the combination
    /// `Θ = θ0 + 2φ` is observable in the central slot.
    pub theta0_rad: f64,
    /// Power split ratio of both couplers (transmitted fraction).
    pub coupler_ratio: f64,
    /// Coherent fraction γ ∈ [0, 1] of the pair ensemble. For a source
    /// with two-photon coherence time `T_c`, use
    /// [`coherence_factor`]`(T_c, τ)`.
    pub coherence_factor: f64,
    /// Device insertion loss applied per photon in the detection chain, dB.
    pub insertion_loss_db: f64,
}

impl Default for UmziConfig {
    /// Reference device: τ = 100 ps, balanced couplers, modulator at
    /// quadrature, 4.2 dB insertion loss, and the coherent fraction implied
    /// by the default source (`T_c` = 10 μs).
    fn default() -> Self {
        Self {
            tau_s: 100e-12,
            phi_rad: std::f64::consts::FRAC_PI_2,
            theta0_rad: 0.0,
            coupler_ratio: 0.5,
            coherence_factor: coherence_factor(10e-6, 100e-12).expect("valid reference times"),
            insertion_loss_db: 4.2,
        }
    }
}

impl UmziConfig {
    /// Copy of the config with a different modulator phase.
    pub fn with_phi(&self, phi_rad: f64) -> Self {
        Self {
            phi_rad,
            ..self.clone()
        }
    }

    /// Total observable central-slot phase `Θ = θ0 + 2φ`, rad.
    pub fn total_phase(&self) -> f64 {
        self.theta0_rad + 2.0 * self.phi_rad
    }

    /// Power transmission of the device, `10^(−IL/10)`.
    pub fn transmission(&self) -> f64 {
        10f64.powf(-self.insertion_loss_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau_s.is_finite() || self.tau_s <= 0.0 {
            return Err(Error::invalid(
                "umzi.tau_s",
                format!("arm imbalance must be positive, got {}", self.tau_s),
            ));
        }
        if !self.phi_rad.is_finite() {
            return Err(Error::invalid("umzi.phi_rad", "must be finite"));
        }
        if !self.theta0_rad.is_finite() {
            return Err(Error::invalid("umzi.theta0_rad", "must be finite"));
        }
        if !self.coupler_ratio.is_finite() || !(0.0..=1.0).contains(&self.coupler_ratio) {
            return Err(Error::invalid(
                "umzi.coupler_ratio",
                format!("must lie in [0, 1], got {}", self.coupler_ratio),
            ));
        }
        if !self.coherence_factor.is_finite() || !(0.0..=1.0).contains(&self.coherence_factor) {
            return Err(Error::invalid(
                "umzi.coherence_factor",
                format!("must lie in [0, 1], got {}", self.coherence_factor),
            ));
        }
        if !self.insertion_loss_db.is_finite() || self.insertion_loss_db < 0.0 {
            return Err(Error::invalid(
                "umzi.insertion_loss_db",
                format!("must be non-negative, got {}", self.insertion_loss_db),
            ));
        }
        Ok(())
    }
}

/// Coherent fraction of the pair ensemble for a two-photon coherence time
/// `T_c` and arm imbalance τ: `γ = max(0, 1 − τ/T_c)`.
///
/// This is the first-order expansion of the pump-coherence overlap between
/// the short-short and long-long histories; it reaches zero when the delay
/// equals the coherence time and stays there beyond.
pub fn coherence_factor(two_photon_coherence_time_s: f64, tau_s: f64) -> Result<f64> {
    if !two_photon_coherence_time_s.is_finite() || two_photon_coherence_time_s <= 0.0 {
        return Err(Error::invalid(
            "two_photon_coherence_time_s",
            format!("must be positive, got {two_photon_coherence_time_s}"),
        ));
    }
    if !tau_s.is_finite() || tau_s <= 0.0 {
        return Err(Error::invalid(
            "tau_s",
            format!("must be positive, got {tau_s}"),
        ));
    }
    Ok((1.0 - tau_s / two_photon_coherence_time_s).max(0.0))
}

/// Joint amplitudes over the two arms after the input coupler, indexed by
/// (signal arm, idler arm).
#[derive(Debug, Clone, PartialEq)]
pub struct ArmState {
    amps: [[Complex64; 2]; 2],
}

impl ArmState {
    pub fn amplitude(&self, signal: Arm, idler: Arm) -> Complex64 {
        self.amps[signal.index()][idler.index()]
    }

    /// Total probability carried by the arm state.
    pub fn norm_sq(&self) -> f64 {
        self.amps
            .iter()
            .flatten()
            .map(|a| a.norm_sqr())
            .sum()
    }
}

/// State of the photon pair after both photons met the input coupler.
///
/// Each photon transmits into the short arm with amplitude `√ratio` and
/// cross-couples into the long arm with amplitude `i √(1 − ratio)`. For a
/// balanced coupler the joint state is
/// `(|ss⟩ + i|sl⟩ + i|ls⟩ − |ll⟩) / 2`.
pub fn first_coupler_state(coupler_ratio: f64) -> Result<ArmState> {
    if !coupler_ratio.is_finite() || !(0.0..=1.0).contains(&coupler_ratio) {
        return Err(Error::invalid(
            "coupler_ratio",
            format!("must lie in [0, 1], got {coupler_ratio}"),
        ));
    }
    let t = Complex64::new(coupler_ratio.sqrt(), 0.0);
    let k = Complex64::new(0.0, (1.0 - coupler_ratio).sqrt());
    let single = [t, k]; // [Short, Long]
    let mut amps = [[Complex64::default(); 2]; 2];
    for s in Arm::ALL {
        for i in Arm::ALL {
            amps[s.index()][i.index()] = single[s.index()] * single[i.index()];
        }
    }
    Ok(ArmState { amps })
}

/// Post-coupler two-photon state over (signal port, idler port, time slot).
///
/// Holds the coherent joint amplitudes plus the phase-independent
/// central-slot probability contributed by the incoherent fraction of the
/// ensemble. For a valid evolution the total probability is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPhotonState {
    /// [signal mode][idler mode][time slot] coherent amplitude.
    amps: [[[Complex64; 3]; 2]; 2],
    /// [signal mode][idler mode] incoherent central-slot probability.
    incoherent_central: [[f64; 2]; 2],
    /// Arm delay the side slots sit at, s.
    tau_s: f64,
}

impl TwoPhotonState {
    /// Builds a state from raw parts. Amplitudes may be arbitrary (not
    /// necessarily normalized); incoherent probabilities must be
    /// non-negative and finite.
    pub fn from_parts(
        amps: [[[Complex64; 3]; 2]; 2],
        incoherent_central: [[f64; 2]; 2],
        tau_s: f64,
    ) -> Result<Self> {
        for row in &amps {
            for slots in row {
                for a in slots {
                    if !a.re.is_finite() || !a.im.is_finite() {
                        return Err(Error::invalid("amplitudes", "must be finite"));
                    }
                }
            }
        }
        for row in &incoherent_central {
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::invalid(
                        "incoherent_central",
                        format!("probabilities must be non-negative, got {p}"),
                    ));
                }
            }
        }
        if !tau_s.is_finite() || tau_s <= 0.0 {
            return Err(Error::invalid(
                "tau_s",
                format!("must be positive, got {tau_s}"),
            ));
        }
        Ok(Self {
            amps,
            incoherent_central,
            tau_s,
        })
    }

    /// Arm delay separating the side slots from the central one, s.
    pub fn tau_s(&self) -> f64 {
        self.tau_s
    }

    /// Coherent amplitude of one (signal port, idler port, slot) outcome.
    pub fn amplitude(&self, signal: SpatialMode, idler: SpatialMode, slot: TimeSlot) -> Complex64 {
        self.amps[signal.index()][idler.index()][slot.index()]
    }

    /// Incoherent central-slot probability for one port pairing.
    pub fn incoherent_central(&self, signal: SpatialMode, idler: SpatialMode) -> f64 {
        self.incoherent_central[signal.index()][idler.index()]
    }

    /// Probability of one (signal port, idler port, slot) outcome,
    /// including the incoherent central-slot contribution.
    pub fn outcome_probability(
        &self,
        signal: SpatialMode,
        idler: SpatialMode,
        slot: TimeSlot,
    ) -> f64 {
        let coherent = self.amplitude(signal, idler, slot).norm_sqr();
        if slot == TimeSlot::Zero {
            coherent + self.incoherent_central(signal, idler)
        } else {
            coherent
        }
    }

    /// Sum of all outcome probabilities (1 for an evolved state).
    pub fn total_probability(&self) -> f64 {
        let mut total = 0.0;
        for s in SpatialMode::ALL {
            for i in SpatialMode::ALL {
                for slot in TimeSlot::ALL {
                    total += self.outcome_probability(s, i, slot);
                }
            }
        }
        total
    }

    /// Probability of landing in one time slot, any ports.
    pub fn slot_probability(&self, slot: TimeSlot) -> f64 {
        let mut total = 0.0;
        for s in SpatialMode::ALL {
            for i in SpatialMode::ALL {
                total += self.outcome_probability(s, i, slot);
            }
        }
        total
    }

    /// Marginal probability that the signal photon exits `mode`.
    pub fn signal_marginal(&self, mode: SpatialMode) -> f64 {
        let mut total = 0.0;
        for i in SpatialMode::ALL {
            for slot in TimeSlot::ALL {
                total += self.outcome_probability(mode, i, slot);
            }
        }
        total
    }

    /// Marginal probability that the idler photon exits `mode`.
    pub fn idler_marginal(&self, mode: SpatialMode) -> f64 {
        let mut total = 0.0;
        for s in SpatialMode::ALL {
            for slot in TimeSlot::ALL {
                total += self.outcome_probability(s, mode, slot);
            }
        }
        total
    }

    /// Total probability mass of the central slot (coherent + incoherent).
    pub fn central_probability(&self) -> f64 {
        self.slot_probability(TimeSlot::Zero)
    }

    /// State conditioned on the central time slot, renormalized to total
    /// probability 1. Side-slot amplitudes are zeroed.
    pub fn postselect_central(&self) -> Result<TwoPhotonState> {
        let mass = self.central_probability();
        if mass <= 1e-300 {
            return Err(Error::EmptyState);
        }
        let scale = 1.0 / mass.sqrt();
        let mut amps = [[[Complex64::default(); 3]; 2]; 2];
        let mut incoherent = [[0.0; 2]; 2];
        for s in SpatialMode::ALL {
            for i in SpatialMode::ALL {
                amps[s.index()][i.index()][TimeSlot::Zero.index()] =
                    self.amplitude(s, i, TimeSlot::Zero) * scale;
                incoherent[s.index()][i.index()] = self.incoherent_central(s, i) / mass;
            }
        }
        TwoPhotonState::from_parts(amps, incoherent, self.tau_s)
    }

    /// Probability of bunched vs antibunched routing, conditioned on the
    /// central time slot. Valid for any coupler ratio and coherence factor.
    pub fn central_conditional(&self) -> Result<(f64, f64)> {
        let mass = self.central_probability();
        if mass <= 1e-300 {
            return Err(Error::EmptyState);
        }
        let p = |s: SpatialMode, i: SpatialMode| self.outcome_probability(s, i, TimeSlot::Zero);
        let bunched = p(SpatialMode::C, SpatialMode::C) + p(SpatialMode::D, SpatialMode::D);
        let antibunched = p(SpatialMode::C, SpatialMode::D) + p(SpatialMode::D, SpatialMode::C);
        Ok((bunched / mass, antibunched / mass))
    }
}

/// Evolves the pair through the full interferometer.
///
/// The short-long and long-short histories land in the side slots with
/// phase-independent probabilities; the short-short and long-long
/// histories interfere in the central slot with relative phase
/// `Θ = θ0 + 2φ`. A coherent fraction γ of the ensemble interferes; the
/// remainder contributes the incoherent central-slot floor.
pub fn evolve_umzi(config: &UmziConfig) -> Result<TwoPhotonState> {
    config.validate()?;
    let arm = first_coupler_state(config.coupler_ratio)?;
    let gamma = config.coherence_factor;

    // Per-photon output-coupler amplitudes: arm -> spatial mode.
    let t = Complex64::new(config.coupler_ratio.sqrt(), 0.0);
    let k = Complex64::new(0.0, (1.0 - config.coupler_ratio).sqrt());
    let out = |a: Arm, m: SpatialMode| match (a, m) {
        (Arm::Short, SpatialMode::C) | (Arm::Long, SpatialMode::D) => t,
        (Arm::Short, SpatialMode::D) | (Arm::Long, SpatialMode::C) => k,
    };
    // Each long-arm traversal adds the modulator phase plus half the
    // static offset, so (θ0, φ) enters only through θ0 + 2φ for the
    // long-long history and the device is invariant under
    // (θ0 + 2δ, φ − δ) exactly.
    let long_phase = Complex64::from_polar(1.0, config.theta0_rad / 2.0 + config.phi_rad);
    let arm_phase = |a: Arm| match a {
        Arm::Short => Complex64::new(1.0, 0.0),
        Arm::Long => long_phase,
    };
    let slot_of = |signal: Arm, idler: Arm| match (signal, idler) {
        (Arm::Short, Arm::Short) | (Arm::Long, Arm::Long) => TimeSlot::Zero,
        (Arm::Short, Arm::Long) => TimeSlot::Minus,
        (Arm::Long, Arm::Short) => TimeSlot::Plus,
    };

    let mut amps = [[[Complex64::default(); 3]; 2]; 2];
    let mut incoherent = [[0.0; 2]; 2];
    for s_arm in Arm::ALL {
        for i_arm in Arm::ALL {
            let joint = arm.amplitude(s_arm, i_arm) * arm_phase(s_arm) * arm_phase(i_arm);
            let slot = slot_of(s_arm, i_arm);
            for s_mode in SpatialMode::ALL {
                for i_mode in SpatialMode::ALL {
                    let contribution = joint * out(s_arm, s_mode) * out(i_arm, i_mode);
                    if slot == TimeSlot::Zero {
                        // Coherent fraction interferes between the two
                        // same-arm histories; the rest adds incoherently.
                        amps[s_mode.index()][i_mode.index()][slot.index()] +=
                            contribution * gamma.sqrt();
                        incoherent[s_mode.index()][i_mode.index()] +=
                            (1.0 - gamma) * contribution.norm_sqr();
                    } else {
                        amps[s_mode.index()][i_mode.index()][slot.index()] += contribution;
                    }
                }
            }
        }
    }
    TwoPhotonState::from_parts(amps, incoherent, config.tau_s)
}

/// Analytic central-slot routing probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingProbabilities {
    /// Probability of the bunched virtual port, `(1 + γ cos Θ) / 2`.
    pub p_bunched: f64,
    /// Probability of the antibunched virtual port, `(1 − γ cos Θ) / 2`.
    pub p_antibunched: f64,
}

/// Closed-form routing probabilities for balanced couplers.
///
/// Requires `coupler_ratio = 0.5`; for unbalanced couplers evolve the state
/// and use [`TwoPhotonState::central_conditional`].
pub fn routing_probabilities(config: &UmziConfig) -> Result<RoutingProbabilities> {
    config.validate()?;
    if (config.coupler_ratio - 0.5).abs() > 1e-9 {
        return Err(Error::invalid(
            "umzi.coupler_ratio",
            format!(
                "closed-form routing probabilities assume balanced couplers, got ratio {}",
                config.coupler_ratio
            ),
        ));
    }
    let modulation = config.coherence_factor * config.total_phase().cos();
    Ok(RoutingProbabilities {
        p_bunched: (1.0 + modulation) / 2.0,
        p_antibunched: (1.0 - modulation) / 2.0,
    })
}

/// Modulator phase that routes the full central-slot population into one
/// virtual port: the k-th solution of `θ0 + 2φ ≡ 0` (bunched) or `≡ π`
/// (antibunched), i.e. `φ = (target − θ0)/2 + kπ`.
pub fn pure_state_phase(target: VirtualPort, k: i32, theta0_rad: f64) -> f64 {
    let target_phase = match target {
        VirtualPort::Bunched => 0.0,
        VirtualPort::Antibunched => std::f64::consts::PI,
    };
    (target_phase - theta0_rad) / 2.0 + f64::from(k) * std::f64::consts::PI
}

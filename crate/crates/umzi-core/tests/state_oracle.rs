//! Cross-checks the state evolution against a brute-force expansion that
//! shares no code with the library: every photon path is enumerated with
//! hand-rolled complex arithmetic on `(re, im)` tuples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use umzi_core::interferometer::{
    evolve_umzi, SpatialMode, TimeSlot, TwoPhotonState, UmziConfig,
};

type C = (f64, f64);

fn mul(a: C, b: C) -> C {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn add(a: C, b: C) -> C {
    (a.0 + b.0, a.1 + b.1)
}

fn scale(s: f64, a: C) -> C {
    (s * a.0, s * a.1)
}

fn norm_sq(a: C) -> f64 {
    a.0 * a.0 + a.1 * a.1
}

/// Independently expanded joint state: coherent amplitudes for the twelve
/// (signal port, idler port, slot) outcomes plus the incoherent central
/// probabilities.
struct Oracle {
    amps: [[[C; 3]; 2]; 2],
    incoherent: [[f64; 2]; 2],
}

fn oracle(ratio: f64, theta0: f64, phi: f64, gamma: f64) -> Oracle {
    let r = ratio.sqrt();
    let q = (1.0 - ratio).sqrt();
    // Per-photon coupler matrix, arm (short=0, long=1) -> port (c=0, d=1):
    // transmit √ratio, cross i√(1−ratio).
    let m = [[(r, 0.0), (0.0, q)], [(0.0, q), (r, 0.0)]];
    // Joint arm amplitudes out of the first coupler for (signal, idler).
    let single = [(r, 0.0), (0.0, q)];
    // One long-arm traversal.
    let p = ((theta0 / 2.0 + phi).cos(), (theta0 / 2.0 + phi).sin());

    let mut amps = [[[(0.0, 0.0); 3]; 2]; 2];
    let mut incoherent = [[0.0; 2]; 2];
    for s_out in 0..2 {
        for i_out in 0..2 {
            // Short-long: signal arrives first (Δt = −τ).
            let sl = mul(
                mul(mul(single[0], single[1]), p),
                mul(m[0][s_out], m[1][i_out]),
            );
            // Long-short: signal arrives last (Δt = +τ).
            let ls = mul(
                mul(mul(single[1], single[0]), p),
                mul(m[1][s_out], m[0][i_out]),
            );
            // Central slot: short-short interferes with long-long (two
            // long traversals) for the coherent fraction.
            let ss = mul(mul(single[0], single[0]), mul(m[0][s_out], m[0][i_out]));
            let ll = mul(
                mul(mul(mul(single[1], single[1]), p), p),
                mul(m[1][s_out], m[1][i_out]),
            );
            amps[s_out][i_out][0] = sl;
            amps[s_out][i_out][1] = scale(gamma.sqrt(), add(ss, ll));
            amps[s_out][i_out][2] = ls;
            incoherent[s_out][i_out] = (1.0 - gamma) * (norm_sq(ss) + norm_sq(ll));
        }
    }
    Oracle { amps, incoherent }
}

fn mode_index(m: SpatialMode) -> usize {
    match m {
        SpatialMode::C => 0,
        SpatialMode::D => 1,
    }
}

fn slot_index(s: TimeSlot) -> usize {
    match s {
        TimeSlot::Minus => 0,
        TimeSlot::Zero => 1,
        TimeSlot::Plus => 2,
    }
}

fn compare(state: &TwoPhotonState, oracle: &Oracle, context: &str) {
    for s in SpatialMode::ALL {
        for i in SpatialMode::ALL {
            for slot in TimeSlot::ALL {
                let got = state.amplitude(s, i, slot);
                let want = oracle.amps[mode_index(s)][mode_index(i)][slot_index(slot)];
                assert!(
                    (got.re - want.0).abs() < 1e-12 && (got.im - want.1).abs() < 1e-12,
                    "{context}: amplitude mismatch at ({s:?}, {i:?}, {slot:?}): \
                     got {got}, oracle ({}, {})",
                    want.0,
                    want.1
                );
                let p_got = state.outcome_probability(s, i, slot);
                let mut p_want = norm_sq(want);
                if slot == TimeSlot::Zero {
                    p_want += oracle.incoherent[mode_index(s)][mode_index(i)];
                }
                assert!(
                    (p_got - p_want).abs() < 1e-12,
                    "{context}: probability mismatch at ({s:?}, {i:?}, {slot:?})"
                );
            }
            let inc_got = state.incoherent_central(s, i);
            let inc_want = oracle.incoherent[mode_index(s)][mode_index(i)];
            assert!(
                (inc_got - inc_want).abs() < 1e-12,
                "{context}: incoherent floor mismatch at ({s:?}, {i:?})"
            );
        }
    }
}

#[test]
fn evolution_matches_brute_force_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..500 {
        let config = UmziConfig {
            tau_s: 100e-12,
            phi_rad: rng.gen_range(-12.0..12.0),
            theta0_rad: rng.gen_range(-12.0..12.0),
            coupler_ratio: rng.gen_range(0.0..=1.0),
            coherence_factor: rng.gen_range(0.0..=1.0),
            insertion_loss_db: 4.2,
        };
        let state = evolve_umzi(&config).unwrap();
        let reference = oracle(
            config.coupler_ratio,
            config.theta0_rad,
            config.phi_rad,
            config.coherence_factor,
        );
        compare(&state, &reference, &format!("case {case}"));
        // The oracle total must also be exactly normalized.
        let mut total = 0.0;
        for row in &reference.amps {
            for slots in row {
                for &a in slots {
                    total += norm_sq(a);
                }
            }
        }
        for row in &reference.incoherent {
            total += row[0] + row[1];
        }
        assert!((total - 1.0).abs() < 1e-12, "oracle normalization, case {case}");
        assert!((state.total_probability() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn frozen_probabilities_at_reference_phase() {
    // Θ = θ0 + 2φ = 0.3 + 1.4 = 1.7 with balanced couplers at γ = 1:
    // p_cc = p_dd = (1 + cos Θ)/8, p_cd = p_dc = (1 − cos Θ)/8, values
    // frozen from an independent evaluation of cos 1.7.
    let config = UmziConfig {
        phi_rad: 0.7,
        theta0_rad: 0.3,
        coherence_factor: 1.0,
        ..UmziConfig::default()
    };
    let state = evolve_umzi(&config).unwrap();
    let p = |s, i| state.outcome_probability(s, i, TimeSlot::Zero);
    assert!((p(SpatialMode::C, SpatialMode::C) - 0.108_894_438_213_059_41).abs() < 1e-15);
    assert!((p(SpatialMode::D, SpatialMode::D) - 0.108_894_438_213_059_41).abs() < 1e-15);
    assert!((p(SpatialMode::C, SpatialMode::D) - 0.141_105_561_786_940_6).abs() < 1e-15);
    assert!((p(SpatialMode::D, SpatialMode::C) - 0.141_105_561_786_940_6).abs() < 1e-15);
    let (_, antibunched) = state.central_conditional().unwrap();
    assert!((antibunched - 0.564_422_247_147_762_3).abs() < 1e-13);
}

#[test]
fn unbalanced_couplers_still_match_and_normalize() {
    // A strongly unbalanced device: the closed forms no longer apply but
    // the expansion must, including the reduced central-slot interference
    // contrast.
    let config = UmziConfig {
        phi_rad: 1.1,
        theta0_rad: -0.4,
        coupler_ratio: 0.8,
        coherence_factor: 0.6,
        ..UmziConfig::default()
    };
    let state = evolve_umzi(&config).unwrap();
    let reference = oracle(0.8, -0.4, 1.1, 0.6);
    compare(&state, &reference, "unbalanced");
    // Side slots keep the product form r(1−r) split by the output matrix.
    let p_minus: f64 = SpatialMode::ALL
        .iter()
        .flat_map(|&s| SpatialMode::ALL.iter().map(move |&i| (s, i)))
        .map(|(s, i)| state.outcome_probability(s, i, TimeSlot::Minus))
        .sum();
    assert!((p_minus - 0.8 * 0.2).abs() < 1e-12);
}

use std::f64::consts::PI;

use eeqkd::channel::{
    apply_noise, bb84_qber, calibrate_amplitude, combined_qber, combined_qber_for_target,
    gate_noise_qber, loss_error_rates, loss_patterns, max_bb84_qber, noise_branches, ChannelSpec,
    NoiseFamily,
};
use eeqkd::optimize::C_STAR;
use eeqkd::protocol::prepare;
use eeqkd::quantum::{
    basis_state, canonical_gate, hadamard, identity1, star_gate, Basis, ComplexMatrix, GateParams,
    StarGateSpec, C64, ZERO,
};
use proptest::prelude::*;

fn q_xyz(n: f64) -> f64 {
    2.0 * n * n / (4.0 * n * n - 2.0 * n + 1.0)
}

fn q_xz(n: f64) -> f64 {
    n * n / (3.0 * n * n - 2.0 * n + 1.0)
}

/// Inverse of `q_xyz` from the quadratic `(2 - 4q) n² + 2q n - q = 0`.
fn n_xyz(q: f64) -> f64 {
    if (q - 0.5).abs() < 1e-15 {
        return 0.5;
    }
    (-q + (2.0 * q - 3.0 * q * q).sqrt()) / (2.0 - 4.0 * q)
}

fn u2_star() -> ComplexMatrix {
    star_gate(&StarGateSpec::standard(2)).unwrap()
}

#[test]
fn bb84_qber_matches_closed_forms() {
    for k in 0..=500 {
        let n = k as f64 * 1e-3;
        assert!((bb84_qber(NoiseFamily::Xyz, n).unwrap() - q_xyz(n)).abs() < 1e-12);
        assert!((bb84_qber(NoiseFamily::Xz, n).unwrap() - q_xz(n)).abs() < 1e-12);
    }
    assert!((max_bb84_qber(NoiseFamily::Xyz).unwrap() - 0.5).abs() < 1e-12);
    assert!((max_bb84_qber(NoiseFamily::Xz).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(bb84_qber(NoiseFamily::None, 0.3).unwrap(), 0.0);
}

#[test]
fn bb84_qber_is_monotone_in_amplitude() {
    for family in [NoiseFamily::Xyz, NoiseFamily::Xz] {
        let values: Vec<f64> = (0..=500)
            .map(|k| bb84_qber(family, k as f64 * 1e-3).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]), "{family}");
    }
}

#[test]
fn amplitude_table() {
    let table = [
        (0.02, 0.0921756),
        (0.04, 0.1272968),
        (0.06, 0.1536672),
        (0.08, 0.1757341),
        (0.10, 0.1951941),
        (0.12, 0.2129089),
        (0.25, 0.3090170),
        (0.5, 0.5),
    ];
    for (q, n) in table {
        let got = calibrate_amplitude(NoiseFamily::Xyz, q).unwrap();
        assert!((got - n).abs() < 5e-8, "q = {q}: {got}");
        assert!((got - n_xyz(q)).abs() < 1e-10, "q = {q}");
    }
    assert!(calibrate_amplitude(NoiseFamily::Xz, 0.34).is_err());
    assert!(calibrate_amplitude(NoiseFamily::Xyz, -0.01).is_err());
    assert!(calibrate_amplitude(NoiseFamily::None, 0.1).is_err());
    assert_eq!(calibrate_amplitude(NoiseFamily::None, 0.0).unwrap(), 0.0);
}

#[test]
fn noise_weights() {
    let n = 0.2;
    let xyz = noise_branches(NoiseFamily::Xyz, n).unwrap();
    let norm = 0.64 + 3.0 * 0.04;
    assert!((xyz[0].probability - 0.64 / norm).abs() < 1e-15);
    assert!(xyz[1..]
        .iter()
        .all(|b| (b.probability - 0.04 / norm).abs() < 1e-15));
    assert_eq!(noise_branches(NoiseFamily::Xz, n).unwrap().len(), 3);
    assert_eq!(noise_branches(NoiseFamily::Xyz, 0.0).unwrap().len(), 1);
    let state = basis_state(1, Basis::X)
        .kron(&basis_state(0, Basis::Z))
        .unwrap();
    let spread = apply_noise(&state, &ChannelSpec::noisy(NoiseFamily::Xyz, n)).unwrap();
    assert_eq!(spread.len(), 16);
    assert!((spread.iter().map(|(p, _)| p).sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn u2_star_noise_formulas() {
    let u = u2_star();
    for k in 1..=6 {
        let q = 0.02 * k as f64;
        let xyz = gate_noise_qber(
            &u,
            NoiseFamily::Xyz,
            calibrate_amplitude(NoiseFamily::Xyz, q).unwrap(),
        )
        .unwrap();
        assert!((xyz - 2.0 * q * (1.0 - q)).abs() < 1e-6, "xyz q = {q}");
        let xz = gate_noise_qber(
            &u,
            NoiseFamily::Xz,
            calibrate_amplitude(NoiseFamily::Xz, q).unwrap(),
        )
        .unwrap();
        assert!((xz - (3.0 * q - 4.0 * q * q)).abs() < 1e-6, "xz q = {q}");
    }
}

#[test]
fn gates_never_beat_bb84_under_noise() {
    let axis: Vec<f64> = (0..9).map(|k| k as f64 * PI / 8.0).collect();
    for family in [NoiseFamily::Xyz, NoiseFamily::Xz] {
        let n = calibrate_amplitude(family, 0.06).unwrap();
        for &c1 in &axis {
            for &c2 in &axis {
                for &c3 in &axis {
                    let gate = canonical_gate(&GateParams::new(c1, c2, c3)).unwrap();
                    let delta = gate_noise_qber(&gate, family, n).unwrap() / 0.06;
                    assert!(
                        delta >= 1.0 - 1e-9,
                        "{family} c = ({c1}, {c2}, {c3}): δ = {delta}"
                    );
                }
            }
        }
        let id = ComplexMatrix::identity(4).unwrap();
        assert!((gate_noise_qber(&id, family, n).unwrap() / 0.06 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn sqrt_swap_noise() {
    let g = canonical_gate(&GateParams::new(PI / 4.0, PI / 4.0, PI / 4.0)).unwrap();
    let n = calibrate_amplitude(NoiseFamily::Xyz, 0.06).unwrap();
    assert!((gate_noise_qber(&g, NoiseFamily::Xyz, n).unwrap() - 0.0864).abs() < 1e-6);
}

#[test]
fn loss_anchors() {
    let u = u2_star();
    for (q, expected) in [(0.0, 0.25), (0.06, 0.3064), (0.10, 0.34)] {
        let r = combined_qber_for_target(&u, NoiseFamily::Xyz, q, 0.5).unwrap();
        assert!((r.q_loss - 0.5).abs() < 1e-9);
        assert!((r.q_e - expected).abs() < 1e-6, "q = {q}: {}", r.q_e);
    }
    let cstar = canonical_gate(&GateParams::new(C_STAR[0], C_STAR[1], C_STAR[2])).unwrap();
    let r = combined_qber_for_target(&cstar, NoiseFamily::Xyz, 0.0, 0.5).unwrap();
    assert!((r.q_loss - 0.42748).abs() < 1e-5);
    assert!((r.q_e - 0.21374).abs() < 1e-5);
    assert_eq!(r.delta, None);
    // the identity loses nothing to partner loss
    let id = ComplexMatrix::identity(4).unwrap();
    let r = combined_qber_for_target(&id, NoiseFamily::Xyz, 0.06, 0.5).unwrap();
    assert!(r.q_loss.abs() < 1e-12);
    assert!((r.q_e - 0.06).abs() < 1e-9);
}

#[test]
fn loss_weighting_is_by_delivered_bits() {
    // q_e = [2(1-p)² q_noise + 2p(1-p)(q + q_loss - 2 q q_loss)] / [2(1-p)² + 2p(1-p)]
    let u = canonical_gate(&GateParams::new(0.3, 1.0, 0.2)).unwrap();
    let n = calibrate_amplitude(NoiseFamily::Xyz, 0.08).unwrap();
    for p in [0.1, 0.5, 0.8] {
        let r = combined_qber(&u, &ChannelSpec::noisy(NoiseFamily::Xyz, n).with_loss(p)).unwrap();
        let partial = r.q + r.q_loss - 2.0 * r.q * r.q_loss;
        let (full_w, part_w) = (2.0 * (1.0 - p) * (1.0 - p), 2.0 * p * (1.0 - p));
        let expected = (full_w * r.q_noise + part_w * partial) / (full_w + part_w);
        assert!((r.q_e - expected).abs() < 1e-12, "p = {p}");
    }
    let none = combined_qber(&u, &ChannelSpec::noisy(NoiseFamily::Xyz, n)).unwrap();
    assert!((none.q_e - none.q_noise).abs() < 1e-15);
}

#[test]
fn loss_patterns_sum_to_one() {
    for n in 1..=3 {
        let total: f64 = loss_patterns(n, 0.3)
            .unwrap()
            .iter()
            .map(|p| p.probability)
            .sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
    assert!(loss_patterns(2, 1.2).is_err());
    assert!(loss_patterns(4, 0.2).is_err());
    assert!(combined_qber(&u2_star(), &ChannelSpec::noiseless().with_loss(-0.1)).is_err());
}

/// Survivor error rate for a two-qubit gate by partial trace on density
/// matrices.
fn loss_oracle(gate: &ComplexMatrix, lost: usize, replacement: [C64; 2]) -> f64 {
    let mut total = 0.0;
    for basis in 0..4usize {
        let bases = [Basis::from_bit(basis >> 1), Basis::from_bit(basis & 1)];
        let local = |b: Basis| {
            if b == Basis::X {
                hadamard()
            } else {
                identity1()
            }
        };
        let decoder = local(bases[0])
            .kron(&local(bases[1]))
            .unwrap()
            .matmul(&gate.dagger())
            .unwrap();
        for alice in 0..4usize {
            let bits = [(alice >> 1) as u8, (alice & 1) as u8];
            let psi = prepare(&bits, &bases, gate).unwrap();
            let amp = psi.amplitudes();
            let survivor = 1 - lost;
            // reduced state of the survivor
            let mut rho_s = [[ZERO; 2]; 2];
            for (i, row) in rho_s.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    for k in 0..2 {
                        let idx = |s: usize| if survivor == 0 { s * 2 + k } else { k * 2 + s };
                        *x += amp[idx(i)] * amp[idx(j)].conj();
                    }
                }
            }
            let mut rho = [[ZERO; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    let (si, ri, sj, rj) = if survivor == 0 {
                        (i >> 1, i & 1, j >> 1, j & 1)
                    } else {
                        (i & 1, i >> 1, j & 1, j >> 1)
                    };
                    rho[i][j] = rho_s[si][sj] * replacement[ri] * replacement[rj].conj();
                }
            }
            for b in 0..4usize {
                let mut p = ZERO;
                for i in 0..4 {
                    for j in 0..4 {
                        p += decoder.get(b, i) * rho[i][j] * decoder.get(b, j).conj();
                    }
                }
                let bob_bit = if survivor == 0 { b >> 1 } else { b & 1 };
                if bob_bit as u8 != bits[survivor] {
                    total += p.re / 16.0;
                }
            }
        }
    }
    total
}

#[test]
fn u2_star_survivor_is_random() {
    for lost in [0b10, 0b01] {
        let rates = loss_error_rates(&u2_star(), lost, &basis_state(0, Basis::Z)).unwrap();
        let survivor = if lost == 0b10 { 1 } else { 0 };
        assert!((rates[survivor] - 0.5).abs() < 1e-12);
        assert_eq!(rates[1 - survivor], 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn loss_rates_match_partial_trace(c in proptest::collection::vec(-4.0f64..4.0, 3), lost in 0usize..2,
                                      theta in 0.0f64..PI, phi in 0.0f64..6.3) {
        let gate = canonical_gate(&GateParams::new(c[0], c[1], c[2])).unwrap();
        let r = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
        let replacement = eeqkd::quantum::StateVector::new(r.to_vec()).unwrap();
        let mask = if lost == 0 { 0b10 } else { 0b01 };
        let rates = loss_error_rates(&gate, mask, &replacement).unwrap();
        let oracle = loss_oracle(&gate, lost, r);
        prop_assert!((rates[1 - lost] - oracle).abs() < 1e-12);
    }

    #[test]
    fn calibration_round_trips(q in 0.0f64..0.5, xz in any::<bool>()) {
        let (family, q) = if xz { (NoiseFamily::Xz, q * 2.0 / 3.0) } else { (NoiseFamily::Xyz, q) };
        let n = calibrate_amplitude(family, q).unwrap();
        prop_assert!((bb84_qber(family, n).unwrap() - q).abs() < 1e-10);
    }
}

use std::f64::consts::{FRAC_PI_2, PI};

use eeqkd::attacks::{ee_attack, ir_branches, AttackSpec, EEAttackSpec, IrEvaluator, QubitAttack};
use eeqkd::metrics::mutual_information;
use eeqkd::optimize::{maximize_eve, EveSearch, EveTarget};
use eeqkd::protocol::{prepare, run_round, Attack, RoundConfig};
use eeqkd::quantum::{canonical_gate, star_gate, Basis, GateParams, StarGateSpec, StateVector};
use proptest::prelude::*;

fn bits_of(value: usize, n: usize) -> Vec<u8> {
    (0..n).map(|q| ((value >> (n - 1 - q)) & 1) as u8).collect()
}

fn bases_of(value: usize, n: usize) -> Vec<Basis> {
    (0..n)
        .map(|q| {
            if (value >> (n - 1 - q)) & 1 == 1 {
                Basis::X
            } else {
                Basis::Z
            }
        })
        .collect()
}

#[test]
fn ee_attack_delivers_the_star_image_of_eves_record() {
    for n in 2..=3 {
        for star in StarGateSpec::all_variants(n) {
            let spec = EEAttackSpec::new(star.clone()).unwrap();
            let gate = spec.gate().unwrap();
            let undo = gate.dagger();
            for basis in 0..1 << n {
                let x_count = (basis as u32).count_ones();
                for alice in 0..1 << n {
                    let sent = prepare(&bits_of(alice, n), &bases_of(basis, n), &gate).unwrap();
                    let branches = ee_attack(&sent, &spec).unwrap();
                    let total: f64 = branches.iter().map(|b| b.probability).sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for b in branches.iter().filter(|b| b.probability > 1e-12) {
                        let decoded = undo.apply(&b.bob_state).unwrap();
                        let target = StateVector::basis(n, b.eve_bits).unwrap();
                        assert!(
                            decoded.approx_eq_up_to_phase(&target, 1e-10),
                            "{star:?} α={basis} a={alice}"
                        );
                        // z positions are read exactly, x positions are coin flips
                        let z_positions = !basis & ((1 << n) - 1);
                        assert_eq!(b.eve_bits & z_positions, alice & z_positions);
                        assert!((b.probability - 0.5f64.powi(x_count as i32)).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

#[test]
fn ee_attack_statistics_for_every_variant() {
    for n in 2..=3 {
        for star in StarGateSpec::all_variants(n) {
            let spec = EEAttackSpec::new(star).unwrap();
            let gate = spec.gate().unwrap();
            let dist =
                run_round(&RoundConfig::new(gate).with_attack(Attack::EntanglementEnhanced(spec)))
                    .unwrap();
            let info = mutual_information(&dist).unwrap();
            assert!((info.mutual_information - 0.5).abs() < 1e-9);
            assert!((info.qber - 0.25).abs() < 1e-9);
        }
    }
}

#[test]
fn ee_attack_rejects_other_sizes() {
    assert!(EEAttackSpec::new(StarGateSpec::standard(1)).is_err());
    let spec = EEAttackSpec::new(StarGateSpec::standard(2)).unwrap();
    let wrong = StateVector::basis(3, 0).unwrap();
    assert!(ee_attack(&wrong, &spec).is_err());
}

#[test]
fn u2_star_is_immune_to_single_qubit_interception() {
    let u2 = star_gate(&StarGateSpec::standard(2)).unwrap();
    let ev = IrEvaluator::new(&u2).unwrap();
    let axis: Vec<f64> = (0..17).map(|k| 2.0 * PI * k as f64 / 16.0).collect();
    for mask in [0b10, 0b01] {
        for &beta in &axis {
            for &gamma in &axis {
                let spec = AttackSpec::from_mask_angles(2, mask, &[beta, gamma]).unwrap();
                let info = ev.info(&spec).unwrap();
                assert!(
                    info.mutual_information < 1e-12,
                    "mask {mask:b} β={beta} γ={gamma}"
                );
            }
        }
    }
}

#[test]
fn star_variants_leak_the_same_maximum() {
    let search = EveSearch::fast();
    let values: Vec<f64> = StarGateSpec::all_variants(2)
        .iter()
        .map(|s| {
            let gate = star_gate(s).unwrap();
            maximize_eve(&gate, EveTarget::Information, &search)
                .unwrap()
                .value
        })
        .collect();
    for v in &values {
        assert!((v - values[0]).abs() < 1e-9, "{values:?}");
    }
    // three-qubit variants agree on every axis-aligned attack
    let axes = [(0.0, 0.0), (FRAC_PI_2, 0.0), (FRAC_PI_2, FRAC_PI_2)];
    let evaluators: Vec<IrEvaluator> = StarGateSpec::all_variants(3)
        .iter()
        .map(|s| IrEvaluator::new(&star_gate(s).unwrap()).unwrap())
        .collect();
    for combo in 0..27 {
        let qubits = (0..3)
            .map(|q| {
                let (b, g) = axes[(combo / 3usize.pow(q)) % 3];
                QubitAttack::measure(b, g)
            })
            .collect();
        let spec = AttackSpec::new(qubits);
        let reference = evaluators[0].info(&spec).unwrap();
        for ev in &evaluators[1..] {
            let info = ev.info(&spec).unwrap();
            assert!((info.mutual_information - reference.mutual_information).abs() < 1e-9);
            assert!((info.qber - reference.qber).abs() < 1e-9);
        }
    }
}

#[test]
fn ir_branches_cover_every_outcome() {
    let gate = canonical_gate(&GateParams::new(0.2, 1.1, 0.4)).unwrap();
    let sent = prepare(&[1, 0], &[Basis::X, Basis::Z], &gate).unwrap();
    let spec = AttackSpec::from_mask_angles(2, 0b11, &[0.3, 0.2, 2.0, 1.0]).unwrap();
    let branches = ir_branches(&sent, &spec).unwrap();
    assert_eq!(branches.len(), 4);
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let half = ir_branches(&sent, &AttackSpec::z_basis_masked(2, 0b01)).unwrap();
    assert_eq!(half.len(), 2);
}

fn arb_angles() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-7.0f64..7.0, 6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn evaluator_matches_round_enumeration(c in proptest::collection::vec(-4.0f64..4.0, 3),
                                            angles in arb_angles(), mask in 1usize..4) {
        let gate = canonical_gate(&GateParams::new(c[0], c[1], c[2])).unwrap();
        let k = 2 * mask.count_ones() as usize;
        let spec = AttackSpec::from_mask_angles(2, mask, &angles[..k]).unwrap();
        let fast = IrEvaluator::new(&gate).unwrap().distribution(&spec).unwrap();
        let slow = run_round(&RoundConfig::new(gate).with_intercept(spec)).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) < 1e-12);
    }

    #[test]
    fn three_qubit_evaluator_matches_round_enumeration(angles in arb_angles(), mask in 1usize..8) {
        let gate = star_gate(&StarGateSpec::standard(3)).unwrap();
        let k = 2 * mask.count_ones() as usize;
        let spec = AttackSpec::from_mask_angles(3, mask, &angles[..k]).unwrap();
        let fast = IrEvaluator::new(&gate).unwrap().distribution(&spec).unwrap();
        let slow = run_round(&RoundConfig::new(gate).with_intercept(spec)).unwrap();
        prop_assert!(fast.max_abs_diff(&slow) < 1e-12);
    }
}

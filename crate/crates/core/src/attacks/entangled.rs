//! Entanglement-enhanced attack against the star gates `U_2*` and `U_3*`.
//!
//! Eve substitutes qubits of her own entangled state for the ones she
//! captures, recovers Alice's product state once she holds enough of the
//! group, measures it in z and steers her substitutes so that Bob ends up
//! with `U_N* |e⟩`. Every operation goes through [`Register`], which only lets
//! Eve touch qubits she currently holds.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{
    pauli, pauli_string, star_gate, Axis, ComplexMatrix, Parity, Pauli, Sign, StarGateSpec,
    StateVector, C64, ZERO,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EEAttackSpec {
    /// The star-gate variant Alice and Bob use.
    pub star: StarGateSpec,
    frame: PauliFrame,
}

impl EEAttackSpec {
    pub fn new(star: StarGateSpec) -> Result<Self> {
        if !(2..=3).contains(&star.num_qubits) {
            return Err(Error::InvalidArgument(format!(
                "entanglement-enhanced attack supports N = 2 or 3, got {}",
                star.num_qubits
            )));
        }
        let frame = PauliFrame::relate(&star)?;
        Ok(Self { star, frame })
    }

    pub fn num_qubits(&self) -> usize {
        self.star.num_qubits
    }

    pub fn gate(&self) -> Result<ComplexMatrix> {
        star_gate(&self.star)
    }
}

/// Local Pauli factors with `U_variant ∝ L · U_reference · R`; the reference
/// variant is even parity with every sign `+`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliFrame {
    pub left: Vec<Pauli>,
    pub right: Vec<Pauli>,
}

impl PauliFrame {
    fn relate(star: &StarGateSpec) -> Result<Self> {
        let n = star.num_qubits;
        let target = star_gate(star)?;
        let reference = star_gate(&StarGateSpec::standard(n))?;
        let strings: Vec<Vec<Pauli>> = (0..4usize.pow(n as u32))
            .map(|k| {
                (0..n)
                    .map(|q| Pauli::ALL[(k >> (2 * (n - 1 - q))) & 3])
                    .collect()
            })
            .collect();
        for right in &strings {
            let ur = &reference * &pauli_string(right)?;
            for left in &strings {
                let candidate = &pauli_string(left)? * &ur;
                if candidate.approx_eq_up_to_phase(&target, 1e-10) {
                    return Ok(Self {
                        left: left.clone(),
                        right: right.clone(),
                    });
                }
            }
        }
        Err(Error::GateMismatch)
    }

    /// Bits flipped by `R` on z-basis inputs.
    fn z_flips(&self) -> usize {
        let n = self.right.len();
        self.right
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips_z())
            .map(|(q, _)| 1 << (n - 1 - q))
            .sum()
    }
}

/// One outcome of the attack on a single group.
#[derive(Debug, Clone)]
pub struct EEBranch {
    /// Eve's z results, expressed as Alice-bit guesses (qubit 0 most
    /// significant).
    pub eve_bits: usize,
    pub probability: f64,
    /// The `N`-qubit state Bob holds before decoding.
    pub bob_state: StateVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Holder {
    Alice,
    Eve,
    Bob,
}

/// Alice's flying qubits `0..N` followed by Eve's `N` substitutes, with
/// the current holder of each.
#[derive(Debug, Clone)]
struct Register {
    n: usize,
    state: StateVector,
    holders: Vec<Holder>,
}

impl Register {
    fn new(alice: &StateVector, substitutes: &StateVector) -> Result<Self> {
        let n = alice.num_qubits();
        let mut holders = vec![Holder::Alice; n];
        holders.extend(std::iter::repeat_n(Holder::Eve, n));
        Ok(Self {
            n,
            state: alice.kron(substitutes)?,
            holders,
        })
    }

    fn flying(&self, slot: usize) -> usize {
        slot
    }

    fn substitute(&self, slot: usize) -> usize {
        self.n + slot
    }

    /// Alice releases the qubit of `slot`; Eve captures it.
    fn capture(&mut self, slot: usize) {
        debug_assert_eq!(self.holders[slot], Holder::Alice);
        self.holders[slot] = Holder::Eve;
    }

    fn send_to_bob(&mut self, qubit: usize) -> Result<()> {
        self.require_eve(qubit)?;
        self.holders[qubit] = Holder::Bob;
        Ok(())
    }

    fn require_eve(&self, qubit: usize) -> Result<()> {
        if self.holders.get(qubit) != Some(&Holder::Eve) {
            return Err(Error::AccessViolation { qubit });
        }
        Ok(())
    }

    fn apply(&mut self, targets: &[usize], op: &ComplexMatrix) -> Result<()> {
        for &t in targets {
            self.require_eve(t)?;
        }
        self.state.apply_on(targets, op)
    }

    /// Projective z measurement of a held qubit; zero-probability outcomes
    /// are dropped.
    fn measure(self, qubit: usize) -> Result<Vec<(u8, f64, Register)>> {
        self.require_eve(qubit)?;
        let width = 2 * self.n;
        let mut out = Vec::with_capacity(2);
        for outcome in 0..2u8 {
            let mut reg = self.clone();
            for (idx, amp) in reg.state.amplitudes_mut().iter_mut().enumerate() {
                if (idx >> (width - 1 - qubit)) & 1 != outcome as usize {
                    *amp = ZERO;
                }
            }
            let p = reg.state.norm_sqr();
            if p < crate::quantum::DEGENERATE_PROBABILITY {
                continue;
            }
            reg.state.normalize();
            out.push((outcome, p, reg));
        }
        Ok(out)
    }

    /// The state of Bob's qubits once all of Alice's qubits have been
    /// measured (so the register factorises).
    fn bob_state(&self) -> Result<StateVector> {
        let n = self.n;
        if self.holders[n..].iter().any(|h| *h != Holder::Bob) {
            return Err(Error::InvalidArgument(
                "Bob does not hold every slot yet".into(),
            ));
        }
        let sub = 1 << n;
        let amps = self.state.amplitudes();
        let (block, _) = (0..sub)
            .map(|m| {
                (
                    m,
                    amps[m * sub..(m + 1) * sub]
                        .iter()
                        .map(|a| a.norm_sqr())
                        .sum::<f64>(),
                )
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        let mut bob = StateVector::unnormalized(amps[block * sub..(block + 1) * sub].to_vec())?;
        let weight = bob.norm_sqr();
        if (weight - 1.0).abs() > 1e-10 {
            return Err(Error::Numerical(format!(
                "register does not factorise (weight {weight})"
            )));
        }
        bob.normalize();
        Ok(bob)
    }
}

struct Path {
    measured: usize,
    probability: f64,
    reg: Register,
}

fn measure_paths(paths: Vec<Path>, qubit: usize) -> Result<Vec<Path>> {
    let mut next = Vec::with_capacity(paths.len() * 2);
    for path in paths {
        for (bit, p, reg) in path.reg.measure(qubit)? {
            next.push(Path {
                measured: (path.measured << 1) | bit as usize,
                probability: path.probability * p,
                reg,
            });
        }
    }
    Ok(next)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `(-iσy)^{p} (iσx)^{q}` style power of a phased Pauli.
fn phased_power(axis: Axis, phase: C64, power: usize) -> ComplexMatrix {
    if power == 0 {
        crate::quantum::identity1()
    } else {
        pauli(axis).scale(phase)
    }
}

/// `(|00⟩ - i|11⟩)/√2`.
fn two_qubit_resource() -> StateVector {
    let h = FRAC_1_SQRT_2;
    StateVector::new(vec![c(h, 0.0), ZERO, ZERO, c(0.0, -h)]).expect("unit norm")
}

/// `(|000⟩ - i|011⟩ - i|110⟩ + |101⟩)/2`.
fn three_qubit_resource() -> StateVector {
    let mut amps = vec![ZERO; 8];
    amps[0b000] = c(0.5, 0.0);
    amps[0b011] = c(0.0, -0.5);
    amps[0b110] = c(0.0, -0.5);
    amps[0b101] = c(0.5, 0.0);
    StateVector::new(amps).expect("unit norm")
}

fn check_input(alice_state: &StateVector, spec: &EEAttackSpec, n: usize) -> Result<()> {
    if spec.num_qubits() != n || alice_state.num_qubits() != n {
        return Err(Error::GateMismatch);
    }
    Ok(())
}

fn finish(paths: Vec<Path>, frame: &PauliFrame) -> Result<Vec<EEBranch>> {
    let flips = frame.z_flips();
    paths
        .into_iter()
        .map(|p| {
            Ok(EEBranch {
                eve_bits: p.measured ^ flips,
                probability: p.probability,
                bob_state: p.reg.bob_state()?,
            })
        })
        .collect()
}

/// Two-qubit attack on the group `alice_state = U_2* |a; α⟩`.
pub fn ee_attack_2(alice_state: &StateVector, spec: &EEAttackSpec) -> Result<Vec<EEBranch>> {
    check_input(alice_state, spec, 2)?;
    let frame = &spec.frame;
    let mut reg = Register::new(alice_state, &two_qubit_resource())?;

    // Slot 0: keep Alice's qubit, forward the left half of the resource.
    reg.capture(0);
    reg.apply(&[reg.flying(0)], &frame.left[0].matrix().dagger())?;
    let s0 = reg.substitute(0);
    reg.apply(&[s0], &frame.left[0].matrix())?;
    reg.send_to_bob(s0)?;

    // Slot 1: undo the gate on the captured pair and read it out.
    reg.capture(1);
    reg.apply(&[reg.flying(1)], &frame.left[1].matrix().dagger())?;
    let reference = star_gate(&StarGateSpec::standard(2))?;
    reg.apply(&[reg.flying(0), reg.flying(1)], &reference.dagger())?;
    let mut paths = vec![Path {
        measured: 0,
        probability: 1.0,
        reg,
    }];
    paths = measure_paths(paths, 0)?;
    paths = measure_paths(paths, 1)?;

    for path in &mut paths {
        let e1 = (path.measured >> 1) & 1;
        let e2 = path.measured & 1;
        let correction =
            &phased_power(Axis::Y, c(0.0, -1.0), e2) * &phased_power(Axis::X, c(0.0, 1.0), e1);
        let s1 = path.reg.substitute(1);
        path.reg.apply(&[s1], &correction)?;
        path.reg.apply(&[s1], &frame.left[1].matrix())?;
        path.reg.send_to_bob(s1)?;
    }
    finish(paths, frame)
}

/// Three-qubit attack on the group `alice_state = U_3* |a; α⟩`.
pub fn ee_attack_3(alice_state: &StateVector, spec: &EEAttackSpec) -> Result<Vec<EEBranch>> {
    check_input(alice_state, spec, 3)?;
    let frame = &spec.frame;
    let mut reg = Register::new(alice_state, &three_qubit_resource())?;

    // Slot 0.
    reg.capture(0);
    reg.apply(&[reg.flying(0)], &frame.left[0].matrix().dagger())?;
    let s0 = reg.substitute(0);
    reg.apply(&[s0], &frame.left[0].matrix())?;
    reg.send_to_bob(s0)?;

    // Slot 1: -(σy ⊗ I) U_2* disentangles the first qubit.
    reg.capture(1);
    reg.apply(&[reg.flying(1)], &frame.left[1].matrix().dagger())?;
    let u2_even = star_gate(&StarGateSpec::standard(2))?;
    let y_first = pauli(Axis::Y).kron(&crate::quantum::identity1())?;
    let disentangle = (&y_first * &u2_even).scale(c(-1.0, 0.0));
    reg.apply(&[reg.flying(0), reg.flying(1)], &disentangle)?;
    let mut paths = measure_paths(
        vec![Path {
            measured: 0,
            probability: 1.0,
            reg,
        }],
        0,
    )?;
    for path in &mut paths {
        let s1 = path.reg.substitute(1);
        if path.measured & 1 == 1 {
            path.reg.apply(&[s1], &pauli(Axis::Z))?;
        }
        path.reg.apply(&[s1], &frame.left[1].matrix())?;
        path.reg.send_to_bob(s1)?;
    }

    // Slot 2: the remaining pair is U_{2,odd}^{*-} |a2 a3⟩.
    let u2_odd_minus = star_gate(&StarGateSpec::new(2, Parity::Odd, vec![Sign::Minus]))?;
    for path in &mut paths {
        path.reg.capture(2);
        let f2 = path.reg.flying(2);
        path.reg.apply(&[f2], &frame.left[2].matrix().dagger())?;
        let f1 = path.reg.flying(1);
        path.reg.apply(&[f1, f2], &u2_odd_minus.dagger())?;
    }
    paths = measure_paths(paths, 1)?;
    paths = measure_paths(paths, 2)?;

    for path in &mut paths {
        let e1 = (path.measured >> 2) & 1;
        let e2 = (path.measured >> 1) & 1;
        let e3 = path.measured & 1;
        let correction = if e1 == 0 {
            &phased_power(Axis::Y, c(0.0, -1.0), e3) * &phased_power(Axis::X, c(0.0, 1.0), e2)
        } else {
            let tail =
                &phased_power(Axis::Y, c(0.0, -1.0), e3) * &phased_power(Axis::X, c(0.0, -1.0), e2);
            &pauli(Axis::Y).scale(c(0.0, 1.0)) * &tail
        };
        let s2 = path.reg.substitute(2);
        path.reg.apply(&[s2], &correction)?;
        path.reg.apply(&[s2], &frame.left[2].matrix())?;
        path.reg.send_to_bob(s2)?;
    }
    finish(paths, frame)
}

pub fn ee_attack(alice_state: &StateVector, spec: &EEAttackSpec) -> Result<Vec<EEBranch>> {
    match spec.num_qubits() {
        2 => ee_attack_2(alice_state, spec),
        3 => ee_attack_3(alice_state, spec),
        n => Err(Error::InvalidArgument(format!("unsupported N = {n}"))),
    }
}

//! Gate constructors: Pauli matrices, rotations, the canonical two-qubit
//! entangler and the recursive star gate.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::linalg::{ComplexMatrix, StateVector, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Single-qubit Pauli operator including the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => identity1(),
            Pauli::X => pauli(Axis::X),
            Pauli::Y => pauli(Axis::Y),
            Pauli::Z => pauli(Axis::Z),
        }
    }

    /// Row-major entries.
    pub(crate) fn raw(self) -> [C64; 4] {
        match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        }
    }

    /// Whether the operator flips a z-basis bit.
    pub fn flips_z(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }
}

/// Tensor product of single-qubit Paulis, qubit 0 first.
pub fn pauli_string(ops: &[Pauli]) -> Result<ComplexMatrix> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::InvalidArgument("empty Pauli string".into()))?;
    rest.iter()
        .try_fold(first.matrix(), |acc, p| acc.kron(&p.matrix()))
}

/// Measurement / preparation basis of one BB84 qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 {
            Basis::Z
        } else {
            Basis::X
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Z => 'z',
            Basis::X => 'x',
        }
    }
}

pub fn pauli(axis: Axis) -> ComplexMatrix {
    match axis {
        Axis::X => ComplexMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        Axis::Y => ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]]),
        Axis::Z => ComplexMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]]),
    }
}

pub fn identity1() -> ComplexMatrix {
    ComplexMatrix::identity(2).expect("2 is a valid dimension")
}

pub fn hadamard() -> ComplexMatrix {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_rows([[h, h], [h, -h]])
}

/// `exp(-i angle σ_axis / 2)`.
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    let (s, c) = (angle / 2.0).sin_cos();
    let cos = C64::new(c, 0.0);
    let m = pauli(axis).scale(C64::new(0.0, -s));
    identity1().scale(cos).add(&m).expect("2x2")
}

/// `R_y(beta) R_z(gamma)`, the rotation applied before a z measurement to
/// realise an arbitrary measurement basis.
pub fn basis_rotation(beta: f64, gamma: f64) -> ComplexMatrix {
    &rotation(Axis::Y, beta) * &rotation(Axis::Z, gamma)
}

/// Parameters of `C(c) (k ⊗ k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateParams {
    pub c: [f64; 3],
    /// `(beta, gamma)` of the shared single-qubit gate `k = R_y(beta) R_z(gamma)`.
    pub pre_rotation: Option<(f64, f64)>,
}

impl GateParams {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Self {
        Self {
            c: [c1, c2, c3],
            pre_rotation: None,
        }
    }

    pub fn with_pre_rotation(mut self, beta: f64, gamma: f64) -> Self {
        self.pre_rotation = Some((beta, gamma));
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pre = self.pre_rotation.map_or([0.0, 0.0], |(b, g)| [b, g]);
        if self.c.iter().chain(&pre).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("gate angles must be finite".into()));
        }
        Ok(())
    }
}

/// Bell ("magic") basis columns with the eigenvalues of `σx⊗σx`, `σy⊗σy`,
/// `σz⊗σz` on each.
const MAGIC: [([f64; 4], [f64; 3]); 4] = [
    ([FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2], [1.0, -1.0, 1.0]),
    ([FRAC_1_SQRT_2, 0.0, 0.0, -FRAC_1_SQRT_2], [-1.0, 1.0, 1.0]),
    ([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0], [1.0, 1.0, -1.0]),
    (
        [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
        [-1.0, -1.0, -1.0],
    ),
];

/// `exp[(i/2)(c1 σx⊗σx + c2 σy⊗σy + c3 σz⊗σz)]`, exponentiated in the Bell
/// basis where all three terms are diagonal.
pub fn nonlocal_part(c: [f64; 3]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4).expect("4x4");
    for (vec, eig) in MAGIC {
        let theta = 0.5 * (c[0] * eig[0] + c[1] * eig[1] + c[2] * eig[2]);
        let phase = C64::from_polar(1.0, theta);
        for r in 0..4 {
            if vec[r] == 0.0 {
                continue;
            }
            for col in 0..4 {
                if vec[col] == 0.0 {
                    continue;
                }
                let v = m.get(r, col) + phase * vec[r] * vec[col];
                m.set(r, col, v);
            }
        }
    }
    m
}

pub fn canonical_gate(params: &GateParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let core = nonlocal_part(params.c);
    match params.pre_rotation {
        None => Ok(core),
        Some((beta, gamma)) => {
            let k = basis_rotation(beta, gamma);
            Ok(&core * &k.kron(&k)?)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Which member of the star-gate family to build.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StarGateSpec {
    pub num_qubits: usize,
    pub parity: Parity,
    /// One sign per recursion step, `num_qubits - 1` in total.
    pub signs: Vec<Sign>,
}

impl StarGateSpec {
    pub fn new(num_qubits: usize, parity: Parity, signs: Vec<Sign>) -> Self {
        Self {
            num_qubits,
            parity,
            signs,
        }
    }

    /// Even parity with every sign `+`.
    pub fn standard(num_qubits: usize) -> Self {
        Self::new(
            num_qubits,
            Parity::Even,
            vec![Sign::Plus; num_qubits.saturating_sub(1)],
        )
    }

    /// Every parity/sign combination for `num_qubits`.
    pub fn all_variants(num_qubits: usize) -> Vec<Self> {
        let steps = num_qubits.saturating_sub(1);
        let mut out = Vec::new();
        for parity in [Parity::Even, Parity::Odd] {
            for bits in 0..1usize << steps {
                let signs = (0..steps)
                    .map(|k| {
                        if bits >> (steps - 1 - k) & 1 == 0 {
                            Sign::Plus
                        } else {
                            Sign::Minus
                        }
                    })
                    .collect();
                out.push(Self::new(num_qubits, parity, signs));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::InvalidArgument("star gate needs N >= 1".into()));
        }
        if self.num_qubits > 3 {
            return Err(Error::UnsupportedDimension(1 << self.num_qubits));
        }
        if self.signs.len() != self.num_qubits - 1 {
            return Err(Error::InvalidArgument(format!(
                "star gate on {} qubits needs {} signs, got {}",
                self.num_qubits,
                self.num_qubits - 1,
                self.signs.len()
            )));
        }
        Ok(())
    }
}

/// Builds `U_N*` by
/// `U_{N+1} = [I ⊗ U_N ± i σy ⊗ (P_N U_N)] / √2`, with `P_N = σy ⊗ I^{N-1}`.
pub fn star_gate(spec: &StarGateSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let mut gate = match spec.parity {
        Parity::Even => identity1(),
        Parity::Odd => pauli(Axis::Y),
    };
    let y = pauli(Axis::Y);
    for (step, sign) in spec.signs.iter().enumerate() {
        let n = step + 1;
        let mut p = y.clone();
        for _ in 1..n {
            p = p.kron(&identity1())?;
        }
        let left = identity1().kron(&gate)?;
        let right = y.kron(&(&p * &gate))?;
        let coeff = C64::new(0.0, sign.value());
        gate = left
            .add(&right.scale(coeff))?
            .scale(C64::new(FRAC_1_SQRT_2, 0.0));
    }
    Ok(gate)
}

pub fn basis_state(bit: u8, basis: Basis) -> StateVector {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match (bit & 1, basis) {
        (0, Basis::Z) => vec![ONE, ZERO],
        (_, Basis::Z) => vec![ZERO, ONE],
        (0, Basis::X) => vec![h, h],
        (_, Basis::X) => vec![h, -h],
    };
    StateVector::new(amps).expect("unit norm")
}

/// One outcome of a single-qubit projective measurement.
#[derive(Debug, Clone)]
pub struct MeasurementBranch {
    pub outcome: u8,
    pub probability: f64,
    /// `None` when the branch has (numerically) zero probability.
    pub post_state: Option<StateVector>,
}

/// Probabilities below this are treated as exactly zero.
pub const DEGENERATE_PROBABILITY: f64 = 1e-14;

/// Measures `qubit` in the basis selected by `R_y(beta) R_z(gamma)`: rotate,
/// project in z, renormalise, rotate back.
pub fn measure_qubit(
    state: &StateVector,
    qubit: usize,
    (beta, gamma): (f64, f64),
) -> Result<[MeasurementBranch; 2]> {
    if qubit >= state.num_qubits() {
        return Err(Error::InvalidArgument(format!(
            "qubit {qubit} out of range for {} qubits",
            state.num_qubits()
        )));
    }
    let rot = basis_rotation(beta, gamma);
    let mut rotated = state.clone();
    rotated.apply_single(qubit, &rot)?;
    let inverse = rot.dagger();
    let n = state.num_qubits();
    let branch = |outcome: u8| -> Result<MeasurementBranch> {
        let mut post = rotated.clone();
        for (idx, amp) in post.amplitudes_mut().iter_mut().enumerate() {
            if (idx >> (n - 1 - qubit)) & 1 != outcome as usize {
                *amp = ZERO;
            }
        }
        let p = post.norm_sqr();
        if p < DEGENERATE_PROBABILITY {
            return Ok(MeasurementBranch {
                outcome,
                probability: 0.0,
                post_state: None,
            });
        }
        post.normalize();
        post.apply_single(qubit, &inverse)?;
        Ok(MeasurementBranch {
            outcome,
            probability: p,
            post_state: Some(post),
        })
    };
    Ok([branch(0)?, branch(1)?])
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_entries() {
        let x = pauli(Axis::X);
        assert_eq!(x.entries(), &[ZERO, ONE, ONE, ZERO]);
        let y = pauli(Axis::Y);
        assert_eq!(y.entries(), &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
        let z = pauli(Axis::Z);
        assert_eq!(z.entries(), &[ONE, ZERO, ZERO, c(-1.0, 0.0)]);
        for a in [Axis::X, Axis::Y, Axis::Z] {
            let p = pauli(a);
            assert_eq!(p.dagger(), p);
            assert!(p.is_unitary(1e-15));
        }
    }

    #[test]
    fn rotation_special_angles() {
        assert!(rotation(Axis::Y, 0.0).max_abs_diff(&identity1()) < 1e-15);
        let full = rotation(Axis::Z, 2.0 * PI);
        assert!(full.max_abs_diff(&identity1().scale(-ONE)) < 1e-15);
        let plus = rotation(Axis::Y, FRAC_PI_2)
            .apply(&basis_state(0, Basis::Z))
            .unwrap();
        assert!(plus.approx_eq_up_to_phase(&basis_state(0, Basis::X), 1e-15));
        // same vector, not just same ray
        assert!((plus.amplitudes()[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn y_measurement_basis() {
        // (π/2, π/2) selects the σy eigenbasis: |0⟩+i|1⟩ is measured as 0.
        let plus_i = StateVector::new(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)]).unwrap();
        let branches = measure_qubit(&plus_i, 0, (FRAC_PI_2, FRAC_PI_2)).unwrap();
        assert!((branches[0].probability - 1.0).abs() < 1e-12);
        assert!(branches[1].post_state.is_none());
    }

    #[test]
    fn basis_states() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(basis_state(0, Basis::Z).amplitudes(), &[ONE, ZERO]);
        assert_eq!(
            basis_state(0, Basis::X).amplitudes(),
            &[c(h, 0.0), c(h, 0.0)]
        );
        assert_eq!(
            basis_state(1, Basis::X).amplitudes(),
            &[c(h, 0.0), c(-h, 0.0)]
        );
    }

    #[test]
    fn yy_kron_has_expected_antidiagonal() {
        let yy = pauli(Axis::Y).kron(&pauli(Axis::Y)).unwrap();
        let anti = [-1.0, 1.0, 1.0, -1.0];
        for r in 0..4 {
            for col in 0..4 {
                let expected = if r + col == 3 { c(anti[r], 0.0) } else { ZERO };
                assert_eq!(yy.get(r, col), expected, "entry ({r},{col})");
            }
        }
    }

    #[test]
    fn star_gate_rejects_bad_specs() {
        assert!(star_gate(&StarGateSpec::new(0, Parity::Even, vec![])).is_err());
        assert!(star_gate(&StarGateSpec::new(2, Parity::Even, vec![])).is_err());
        assert!(star_gate(&StarGateSpec::new(4, Parity::Even, vec![Sign::Plus; 3])).is_err());
    }

    #[test]
    fn star_gate_one_qubit() {
        let odd = star_gate(&StarGateSpec::new(1, Parity::Odd, vec![])).unwrap();
        assert_eq!(odd, pauli(Axis::Y));
        let even = star_gate(&StarGateSpec::new(1, Parity::Even, vec![])).unwrap();
        assert_eq!(even, identity1());
    }

    #[test]
    fn measurement_of_eigenstate_and_superposition() {
        let zero = basis_state(0, Basis::Z);
        let b = measure_qubit(&zero, 0, (0.0, 0.0)).unwrap();
        assert_eq!(b[0].probability, 1.0);
        assert_eq!(b[1].probability, 0.0);
        assert!(b[1].post_state.is_none());

        let plus = basis_state(0, Basis::X);
        let b = measure_qubit(&plus, 0, (0.0, 0.0)).unwrap();
        assert!((b[0].probability - 0.5).abs() < 1e-15);
        assert!((b[1].probability - 0.5).abs() < 1e-15);
        assert!(measure_qubit(&plus, 1, (0.0, 0.0)).is_err());
    }
}

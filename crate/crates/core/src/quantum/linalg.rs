//! Dense complex matrices and state vectors for small qubit registers.
//!
//! Qubit 0 is the left-most tensor factor, i.e. the most significant bit of
//! an amplitude index.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest register a [`StateVector`] can describe: three flying qubits plus
/// three ancillas held by the eavesdropper.
pub const MAX_QUBITS: usize = 6;

/// Largest operator dimension (three qubits).
pub const MAX_GATE_DIM: usize = 8;

/// Row-major dense square matrix of dimension 2, 4 or 8.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        check_gate_dim(dim)?;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const D: usize>(rows: [[C64; D]; D]) -> Self {
        check_gate_dim(D).expect("static gate dimension");
        Self {
            dim: D,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for k in 0..dim {
            m.data[k * dim + k] = ONE;
        }
        Ok(m)
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        check_gate_dim(dim)?;
        Ok(Self {
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_qubits(&self) -> usize {
        self.dim.trailing_zeros() as usize
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    /// Kronecker product; `self` is the left (more significant) factor.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let n = self.dim * other.dim;
        check_gate_dim(n)?;
        let mut data = vec![ZERO; n * n];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.get(r1, c1);
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        let r = r1 * other.dim + r2;
                        let c = c1 * other.dim + c2;
                        data[r * n + c] = a * other.get(r2, c2);
                    }
                }
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: state.dim(),
            });
        }
        Ok(StateVector {
            num_qubits: state.num_qubits,
            amps: self.apply_slice(&state.amps),
        })
    }

    pub(crate) fn apply_slice(&self, amps: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(amps)
                    .map(|(m, a)| m * a)
                    .sum()
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry of `|M M† - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.matmul(&self.dagger()).expect("same dimension");
        prod.max_abs_diff(&Self::identity(self.dim).expect("valid dimension"))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() < tol
    }

    /// Entrywise comparison after removing a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim {
            return false;
        }
        match relative_phase(&self.data, &other.data) {
            Some(phase) => self.max_abs_diff(&other.scale(phase)) < tol,
            None => self.max_abs_diff(other) < tol,
        }
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix dimensions must agree")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn check_gate_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 | 8 => Ok(()),
        _ => Err(Error::UnsupportedDimension(dim)),
    }
}

/// Phase `p` (unit modulus) such that `p * b` best lines up with `a`, taken
/// from the largest entry of `b`. `None` when `b` vanishes.
fn relative_phase(a: &[C64], b: &[C64]) -> Option<C64> {
    let (idx, pivot) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))?;
    if pivot.norm() < 1e-14 {
        return None;
    }
    let ratio = a[idx] / pivot;
    if ratio.norm() < 1e-14 {
        return None;
    }
    Some(ratio / ratio.norm())
}

/// Pure state of 1 to [`MAX_QUBITS`] qubits.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// Builds a state and checks the norm to within `1e-12`.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let state = Self::unnormalized(amps)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange {
                name: "squared norm",
                value: norm,
                range: "1 ± 1e-12",
            });
        }
        Ok(state)
    }

    pub(crate) fn unnormalized(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 || len > 1 << MAX_QUBITS {
            return Err(Error::UnsupportedDimension(len));
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Computational basis state `|index⟩` on `num_qubits` qubits.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS || index >= 1 << num_qubits {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} on {num_qubits} qubits"
            )));
        }
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in &mut self.amps {
                *a /= norm;
            }
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Kronecker product; `self` supplies the leading qubits.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::UnsupportedDimension(1 << n));
        }
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        Ok(Self {
            num_qubits: n,
            amps,
        })
    }

    /// Applies a 2x2 operator to one qubit in place.
    pub fn apply_single(&mut self, qubit: usize, op: &ComplexMatrix) -> Result<()> {
        if op.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                actual: op.dim(),
            });
        }
        self.check_qubit(qubit)?;
        let m = [op.get(0, 0), op.get(0, 1), op.get(1, 0), op.get(1, 1)];
        apply_single_raw(&mut self.amps, self.num_qubits, qubit, &m);
        Ok(())
    }

    /// Applies a `2^k x 2^k` operator to the listed qubits (in the operator's
    /// own qubit order) in place.
    pub fn apply_on(&mut self, targets: &[usize], op: &ComplexMatrix) -> Result<()> {
        let k = targets.len();
        if op.dim() != 1 << k {
            return Err(Error::DimensionMismatch {
                expected: 1 << k,
                actual: op.dim(),
            });
        }
        for (i, &t) in targets.iter().enumerate() {
            self.check_qubit(t)?;
            if targets[..i].contains(&t) {
                return Err(Error::InvalidArgument(format!("repeated target qubit {t}")));
            }
        }
        let n = self.num_qubits;
        let masks: Vec<usize> = targets.iter().map(|&t| 1 << (n - 1 - t)).collect();
        let all: usize = masks.iter().sum();
        let sub = 1 << k;
        let mut gathered = vec![ZERO; sub];
        let mut indices = vec![0usize; sub];
        for base in 0..self.amps.len() {
            if base & all != 0 {
                continue;
            }
            for (j, idx) in indices.iter_mut().enumerate() {
                let mut full = base;
                for (bit, &mask) in masks.iter().enumerate() {
                    if j >> (k - 1 - bit) & 1 == 1 {
                        full |= mask;
                    }
                }
                *idx = full;
                gathered[j] = self.amps[full];
            }
            let out = op.apply_slice(&gathered);
            for (j, &idx) in indices.iter().enumerate() {
                self.amps[idx] = out[j];
            }
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let phase = relative_phase(&self.amps, &other.amps).unwrap_or(ONE);
        self.amps
            .iter()
            .zip(&other.amps)
            .all(|(a, b)| (a - b * phase).norm() < tol)
    }

    /// Copy with the global phase fixed so the first non-negligible amplitude
    /// is positive real.
    pub fn canonical_phase(&self) -> Self {
        let mut out = self.clone();
        if let Some(first) = self.amps.iter().find(|a| a.norm() > 1e-12) {
            let phase = first.conj() / first.norm();
            for a in &mut out.amps {
                *a *= phase;
            }
        }
        out
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {qubit} out of range for {} qubits",
                self.num_qubits
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let amps: Vec<String> = self
            .amps
            .iter()
            .map(|z| format!("{:+.4}{:+.4}i", z.re, z.im))
            .collect();
        write!(f, "StateVector[{}]({})", self.num_qubits, amps.join(", "))
    }
}

/// Row-major `[m00, m01, m10, m11]` applied to `qubit` of an `n`-qubit slice.
#[inline]
pub(crate) fn apply_single_raw(amps: &mut [C64], n: usize, qubit: usize, m: &[C64; 4]) {
    let stride = 1 << (n - 1 - qubit);
    let len = amps.len();
    let mut block = 0;
    while block < len {
        for i in block..block + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0] * a0 + m[1] * a1;
            amps[i + stride] = m[2] * a0 + m[3] * a1;
        }
        block += 2 * stride;
    }
}

/// Kronecker product of two operators or two states.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

impl Tensor for ComplexMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Result<Self> {
        self.kron(other)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.dagger()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(ComplexMatrix::identity(3).is_err());
        assert!(ComplexMatrix::identity(16).is_err());
        assert!(StateVector::new(vec![ONE, ZERO, ZERO]).is_err());
        assert!(StateVector::new(vec![ONE, ONE]).is_err());
    }

    #[test]
    fn kron_of_basis_states_is_big_endian() {
        let zero = StateVector::basis(1, 0).unwrap();
        let one = StateVector::basis(1, 1).unwrap();
        let both = tensor(&zero, &one).unwrap();
        assert_eq!(both.amplitudes(), &[ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn apply_on_matches_full_kron() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had = ComplexMatrix::from_rows([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]);
        let y = ComplexMatrix::from_rows([[ZERO, -I], [I, ZERO]]);
        let id = ComplexMatrix::identity(2).unwrap();
        let psi = StateVector::new(vec![
            c(0.5, 0.0),
            c(0.0, 0.5),
            c(-0.5, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.5, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ])
        .unwrap();
        // operator (had ⊗ y) on qubits (2, 0): full operator is y ⊗ I ⊗ had
        let two = had.kron(&y).unwrap();
        let mut lhs = psi.clone();
        lhs.apply_on(&[2, 0], &two).unwrap();
        let full = y.kron(&id).unwrap().kron(&had).unwrap();
        let rhs = full.apply(&psi).unwrap();
        for (a, b) in lhs.amplitudes().iter().zip(rhs.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn phase_comparison_ignores_global_phase() {
        let a = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let b = StateVector::new(vec![c(0.0, 0.6), c(-0.8, 0.0)]).unwrap();
        assert!(a.approx_eq_up_to_phase(&b, 1e-12));
        let b_canon = b.canonical_phase();
        assert!((b_canon.amplitudes()[0] - c(0.6, 0.0)).norm() < 1e-15);
        let d = StateVector::new(vec![c(0.6, 0.0), c(0.0, -0.8)]).unwrap();
        assert!(!a.approx_eq_up_to_phase(&d, 1e-6));
    }
}

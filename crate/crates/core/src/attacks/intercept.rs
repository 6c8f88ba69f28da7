//! Intercept-resend: Eve measures captured qubits in bases of her choice and
//! forwards the post-measurement states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{mutual_information, InfoResult};
use crate::protocol::{
    bit_of, bob_decoder, prepare_packed, EveOutcome, EveSymbol, JointDistribution,
};
use crate::quantum::{basis_rotation, measure_qubit, ComplexMatrix, StateVector, C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitAttack {
    pub intercept: bool,
    pub beta: f64,
    pub gamma: f64,
}

impl QubitAttack {
    pub const PASS: Self = Self {
        intercept: false,
        beta: 0.0,
        gamma: 0.0,
    };

    pub fn measure(beta: f64, gamma: f64) -> Self {
        Self {
            intercept: true,
            beta,
            gamma,
        }
    }
}

/// Per-qubit measurement choices plus the fraction of groups attacked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub qubits: Vec<QubitAttack>,
    pub fraction: f64,
}

impl AttackSpec {
    pub fn new(qubits: Vec<QubitAttack>) -> Self {
        Self {
            qubits,
            fraction: 1.0,
        }
    }

    /// Every qubit intercepted and measured in z.
    pub fn z_basis(n: usize) -> Self {
        Self::new(vec![QubitAttack::measure(0.0, 0.0); n])
    }

    /// Intercepts exactly the qubits set in `mask` (qubit 0 = most significant
    /// bit), all in z.
    pub fn z_basis_masked(n: usize, mask: usize) -> Self {
        Self::new(
            (0..n)
                .map(|q| {
                    if bit_of(mask, n, q) == 1 {
                        QubitAttack::measure(0.0, 0.0)
                    } else {
                        QubitAttack::PASS
                    }
                })
                .collect(),
        )
    }

    /// Intercepts the qubits in `mask` with angles taken in order from
    /// `angles = [β, γ, β, γ, ...]`.
    pub fn from_mask_angles(n: usize, mask: usize, angles: &[f64]) -> Result<Self> {
        let needed = 2 * mask.count_ones() as usize;
        if angles.len() != needed {
            return Err(Error::InvalidArgument(format!(
                "mask {mask:b} needs {needed} angles, got {}",
                angles.len()
            )));
        }
        let mut it = angles.chunks(2);
        let qubits = (0..n)
            .map(|q| {
                if bit_of(mask, n, q) == 1 {
                    let pair = it.next().expect("counted");
                    QubitAttack::measure(pair[0], pair[1])
                } else {
                    QubitAttack::PASS
                }
            })
            .collect();
        Ok(Self::new(qubits))
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction;
        self
    }

    pub fn intercept_mask(&self) -> usize {
        let n = self.qubits.len();
        self.qubits
            .iter()
            .enumerate()
            .filter(|(_, q)| q.intercept)
            .map(|(i, _)| 1 << (n - 1 - i))
            .sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.qubits.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: self.qubits.len(),
            });
        }
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::OutOfRange {
                name: "intercepted fraction",
                value: self.fraction,
                range: "[0, 1]",
            });
        }
        if self
            .qubits
            .iter()
            .any(|q| !q.beta.is_finite() || !q.gamma.is_finite())
        {
            return Err(Error::InvalidArgument(
                "attack angles must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct IrBranch {
    pub eve: EveOutcome,
    pub probability: f64,
    pub state: StateVector,
}

/// Expands the intercept-resend branch tree. Qubits are handled one at a time
/// in transmission order; zero-probability branches are dropped.
pub fn ir_branches(state: &StateVector, spec: &AttackSpec) -> Result<Vec<IrBranch>> {
    let n = state.num_qubits();
    spec.validate(n)?;
    let mut branches = vec![IrBranch {
        eve: EveOutcome::unmeasured(n),
        probability: 1.0,
        state: state.clone(),
    }];
    for (qubit, choice) in spec.qubits.iter().enumerate() {
        if !choice.intercept {
            continue;
        }
        let mut next = Vec::with_capacity(branches.len() * 2);
        for branch in branches {
            for m in measure_qubit(&branch.state, qubit, (choice.beta, choice.gamma))? {
                if let Some(post) = m.post_state {
                    let mut eve = branch.eve.clone();
                    eve.0[qubit] = EveSymbol::from_bit(m.outcome);
                    next.push(IrBranch {
                        eve,
                        probability: branch.probability * m.probability,
                        state: post,
                    });
                }
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// `ξ·full + (1-ξ)·clean`, with the clean part's Eve record forced to
/// "unmeasured".
pub fn apply_fraction(
    full: &JointDistribution,
    clean: &JointDistribution,
    fraction: f64,
) -> Result<JointDistribution> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::OutOfRange {
            name: "intercepted fraction",
            value: fraction,
            range: "[0, 1]",
        });
    }
    full.mix(&clean.forget_eve(), fraction)
}

/// Intercept-resend statistics for one fixed gate, evaluated repeatedly for
/// different attacks.
///
/// When every qubit is intercepted the resent state is the product
/// `⊗_i [R_y(β_i) R_z(γ_i)]† |e_i⟩` whatever Alice sent, so
/// `p(a,e,b|α) = 2^-N p(e|a,α) p(b|e,α)` factorises; other masks fall back
/// to the branch tree.
#[derive(Debug, Clone)]
pub struct IrEvaluator {
    n: usize,
    gate: ComplexMatrix,
    /// `prepared[α][a]`.
    prepared: Vec<Vec<StateVector>>,
    /// `decoders[α]`.
    decoders: Vec<ComplexMatrix>,
}

impl IrEvaluator {
    pub fn new(gate: &ComplexMatrix) -> Result<Self> {
        let n = gate.num_qubits();
        let two = 1 << n;
        let prepared = (0..two)
            .map(|basis| {
                (0..two)
                    .map(|alice| prepare_packed(alice, basis, n, gate))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let decoders = (0..two)
            .map(|basis| bob_decoder(gate, basis))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            gate: gate.clone(),
            prepared,
            decoders,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn gate(&self) -> &ComplexMatrix {
        &self.gate
    }

    /// Joint table at full interception (`ξ = 1`; the attack's fraction is
    /// ignored since information and QBER scale linearly in it).
    pub fn distribution(&self, spec: &AttackSpec) -> Result<JointDistribution> {
        spec.validate(self.n)?;
        let full_mask = (1 << self.n) - 1;
        if spec.intercept_mask() == full_mask {
            self.product_distribution(spec)
        } else {
            self.tree_distribution(spec)
        }
    }

    pub fn info(&self, spec: &AttackSpec) -> Result<InfoResult> {
        mutual_information(&self.distribution(spec)?)
    }

    fn product_distribution(&self, spec: &AttackSpec) -> Result<JointDistribution> {
        let n = self.n;
        let two = 1usize << n;
        let rotations: Vec<[C64; 4]> = spec
            .qubits
            .iter()
            .map(|q| {
                let r = basis_rotation(q.beta, q.gamma);
                [r.get(0, 0), r.get(0, 1), r.get(1, 0), r.get(1, 1)]
            })
            .collect();
        // Resent product states; column e of V† with V = ⊗ R_i.
        let resent: Vec<Vec<C64>> = (0..two)
            .map(|e| {
                let mut amps = vec![ZERO; two];
                for (idx, amp) in amps.iter_mut().enumerate() {
                    let mut v = C64::new(1.0, 0.0);
                    for (q, r) in rotations.iter().enumerate() {
                        // (R†)[x][e] = conj(R[e][x])
                        let x = bit_of(idx, n, q);
                        let eq = bit_of(e, n, q);
                        v *= r[eq * 2 + x].conj();
                    }
                    *amp = v;
                }
                amps
            })
            .collect();
        let mut dist = JointDistribution::zeros(n)?;
        let prior = 1.0 / two as f64;
        for basis in 0..two {
            let decoder = &self.decoders[basis];
            let bob: Vec<Vec<f64>> = resent
                .iter()
                .map(|amps| {
                    decoder
                        .apply_slice(amps)
                        .into_iter()
                        .map(|z| z.norm_sqr())
                        .collect()
                })
                .collect();
            for alice in 0..two {
                let mut rotated = self.prepared[basis][alice].amplitudes().to_vec();
                for (q, r) in rotations.iter().enumerate() {
                    crate::quantum::apply_single_raw(&mut rotated, n, q, r);
                }
                for (e, amp) in rotated.iter().enumerate() {
                    let pe = amp.norm_sqr();
                    if pe < crate::quantum::DEGENERATE_PROBABILITY {
                        continue;
                    }
                    let eve = EveOutcome::from_bits(e, n).index();
                    for (b, pb) in bob[e].iter().enumerate() {
                        if *pb > 0.0 {
                            dist.add(basis, alice, eve, b, prior * pe * pb);
                        }
                    }
                }
            }
        }
        Ok(dist)
    }

    fn tree_distribution(&self, spec: &AttackSpec) -> Result<JointDistribution> {
        let two = 1usize << self.n;
        let prior = 1.0 / two as f64;
        let mut dist = JointDistribution::zeros(self.n)?;
        for basis in 0..two {
            for alice in 0..two {
                for branch in ir_branches(&self.prepared[basis][alice], spec)? {
                    let out = self.decoders[basis].apply(&branch.state)?;
                    let eve = branch.eve.index();
                    for (b, p) in out.probabilities().into_iter().enumerate() {
                        if p > 0.0 {
                            dist.add(basis, alice, eve, b, prior * branch.probability * p);
                        }
                    }
                }
            }
        }
        Ok(dist)
    }
}

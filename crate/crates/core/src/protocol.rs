//! Exact enumeration of one protocol round.
//!
//! For every basis string `α` and key string `a` Alice prepares
//! `U ⊗_i |a_i; α_i⟩`; the attack and the channel expand the state into
//! weighted branches; Bob undoes `U` and measures every qubit in Alice's basis
//! (only sifted positions are modelled). Bit strings are packed into `usize`
//! with qubit 0 as the most significant bit; a set bit in a basis string
//! means the x basis.

use std::fmt;

use rayon::prelude::*;

use crate::attacks::{ee_attack, ir_branches, AttackSpec, EEAttackSpec};
use crate::channel::{apply_noise, ChannelSpec};
use crate::error::{Error, Result};
use crate::quantum::{basis_state, hadamard, identity1, Basis, ComplexMatrix, StateVector};

/// Bit of `value` belonging to `qubit` in an `n`-qubit string.
#[inline]
pub fn bit_of(value: usize, n: usize, qubit: usize) -> usize {
    (value >> (n - 1 - qubit)) & 1
}

pub fn format_bits(value: usize, n: usize) -> String {
    (0..n)
        .map(|q| if bit_of(value, n, q) == 1 { '1' } else { '0' })
        .collect()
}

pub fn format_bases(value: usize, n: usize) -> String {
    (0..n)
        .map(|q| Basis::from_bit(bit_of(value, n, q)).symbol())
        .collect()
}

/// One position of Eve's record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EveSymbol {
    Zero,
    One,
    /// The qubit passed Eve untouched.
    Unmeasured,
}

impl EveSymbol {
    fn digit(self) -> usize {
        match self {
            EveSymbol::Zero => 0,
            EveSymbol::One => 1,
            EveSymbol::Unmeasured => 2,
        }
    }

    fn from_digit(d: usize) -> Self {
        match d {
            0 => EveSymbol::Zero,
            1 => EveSymbol::One,
            _ => EveSymbol::Unmeasured,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            EveSymbol::Zero
        } else {
            EveSymbol::One
        }
    }
}

/// Eve's record for one group, stored base-3 with qubit 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EveOutcome(pub Vec<EveSymbol>);

impl EveOutcome {
    pub fn unmeasured(n: usize) -> Self {
        Self(vec![EveSymbol::Unmeasured; n])
    }

    pub fn from_bits(bits: usize, n: usize) -> Self {
        Self(
            (0..n)
                .map(|q| EveSymbol::from_bit(bit_of(bits, n, q) as u8))
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, s| acc * 3 + s.digit())
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        let mut symbols = vec![EveSymbol::Unmeasured; n];
        let mut rest = index;
        for slot in symbols.iter_mut().rev() {
            *slot = EveSymbol::from_digit(rest % 3);
            rest /= 3;
        }
        Self(symbols)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for EveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            let c = match s {
                EveSymbol::Zero => '0',
                EveSymbol::One => '1',
                EveSymbol::Unmeasured => '-',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// `p(a, e, b | α)` for every basis string, Alice string, Eve record and Bob
/// string of an `N`-qubit group.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    num_qubits: usize,
    table: Vec<f64>,
}

impl JointDistribution {
    pub fn zeros(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > 3 {
            return Err(Error::InvalidArgument(format!(
                "rounds support 1 to 3 qubits, got {num_qubits}"
            )));
        }
        let two = 1 << num_qubits;
        let three = 3usize.pow(num_qubits as u32);
        Ok(Self {
            num_qubits,
            table: vec![0.0; two * two * three * two],
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// `2^N`: number of basis strings, Alice strings and Bob strings.
    pub fn num_strings(&self) -> usize {
        1 << self.num_qubits
    }

    /// `3^N`: size of Eve's alphabet.
    pub fn num_eve(&self) -> usize {
        3usize.pow(self.num_qubits as u32)
    }

    #[inline]
    fn index(&self, basis: usize, alice: usize, eve: usize, bob: usize) -> usize {
        let two = self.num_strings();
        ((basis * two + alice) * self.num_eve() + eve) * two + bob
    }

    pub fn prob(&self, basis: usize, alice: usize, eve: usize, bob: usize) -> f64 {
        self.table[self.index(basis, alice, eve, bob)]
    }

    pub(crate) fn add(&mut self, basis: usize, alice: usize, eve: usize, bob: usize, p: f64) {
        let i = self.index(basis, alice, eve, bob);
        self.table[i] += p;
    }

    pub fn entries(&self) -> &[f64] {
        &self.table
    }

    /// Total probability conditioned on one basis string.
    pub fn basis_total(&self, basis: usize) -> f64 {
        let block = self.table.len() / self.num_strings();
        self.table[basis * block..(basis + 1) * block].iter().sum()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for basis in 0..self.num_strings() {
            let total = self.basis_total(basis);
            if (total - 1.0).abs() > tol {
                return Err(Error::Unnormalized { basis, total });
            }
        }
        if let Some(&neg) = self.table.iter().find(|&&p| p < 0.0) {
            return Err(Error::OutOfRange {
                name: "probability",
                value: neg,
                range: ">= 0",
            });
        }
        Ok(())
    }

    /// `p(e | α)`.
    pub fn eve_marginal(&self, basis: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.num_eve()];
        for alice in 0..self.num_strings() {
            for (eve, slot) in out.iter_mut().enumerate() {
                for bob in 0..self.num_strings() {
                    *slot += self.prob(basis, alice, eve, bob);
                }
            }
        }
        out
    }

    /// `p(a, e | α)`, indexed `a * 3^N + e`.
    pub fn alice_eve(&self, basis: usize) -> Vec<f64> {
        let ne = self.num_eve();
        let mut out = vec![0.0; self.num_strings() * ne];
        for alice in 0..self.num_strings() {
            for eve in 0..ne {
                out[alice * ne + eve] = (0..self.num_strings())
                    .map(|bob| self.prob(basis, alice, eve, bob))
                    .sum();
            }
        }
        out
    }

    /// Copy with every Eve record collapsed onto "unmeasured".
    pub fn forget_eve(&self) -> Self {
        let mut out = Self {
            num_qubits: self.num_qubits,
            table: vec![0.0; self.table.len()],
        };
        let blind = EveOutcome::unmeasured(self.num_qubits).index();
        let two = self.num_strings();
        for basis in 0..two {
            for alice in 0..two {
                for eve in 0..self.num_eve() {
                    for bob in 0..two {
                        out.add(basis, alice, blind, bob, self.prob(basis, alice, eve, bob));
                    }
                }
            }
        }
        out
    }

    pub(crate) fn mix(&self, other: &Self, weight_self: f64) -> Result<Self> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                actual: other.num_qubits,
            });
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            table: self
                .table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| weight_self * a + (1.0 - weight_self) * b)
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.num_qubits != other.num_qubits {
            return f64::INFINITY;
        }
        self.table
            .iter()
            .zip(&other.table)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// What Eve does during the round.
#[derive(Debug, Clone)]
pub enum Attack {
    None,
    InterceptResend(AttackSpec),
    EntanglementEnhanced(EEAttackSpec),
}

#[derive(Debug, Clone)]
pub struct RoundConfig {
    pub num_qubits: usize,
    pub gate: ComplexMatrix,
    pub attack: Attack,
    pub channel: Option<ChannelSpec>,
}

impl RoundConfig {
    pub fn new(gate: ComplexMatrix) -> Self {
        Self {
            num_qubits: gate.num_qubits(),
            gate,
            attack: Attack::None,
            channel: None,
        }
    }

    pub fn with_attack(mut self, attack: Attack) -> Self {
        self.attack = attack;
        self
    }

    pub fn with_intercept(self, spec: AttackSpec) -> Self {
        self.with_attack(Attack::InterceptResend(spec))
    }

    pub fn with_channel(mut self, channel: ChannelSpec) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > 3 {
            return Err(Error::InvalidArgument(format!(
                "rounds support 1 to 3 qubits, got {}",
                self.num_qubits
            )));
        }
        if self.gate.dim() != 1 << self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1 << self.num_qubits,
                actual: self.gate.dim(),
            });
        }
        match &self.attack {
            Attack::None => {}
            Attack::InterceptResend(spec) => spec.validate(self.num_qubits)?,
            Attack::EntanglementEnhanced(spec) => {
                if spec.star.num_qubits != self.num_qubits
                    || !self.gate.approx_eq_up_to_phase(&spec.gate()?, 1e-10)
                {
                    return Err(Error::GateMismatch);
                }
            }
        }
        if let Some(ch) = &self.channel {
            ch.validate()?;
            if ch.loss_probability > 0.0 {
                return Err(Error::InvalidArgument(
                    "qubit loss is evaluated by channel::combined_qber, not inside a round".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `gate · ⊗_i |a_i; α_i⟩`.
pub fn prepare(alice: &[u8], bases: &[Basis], gate: &ComplexMatrix) -> Result<StateVector> {
    if alice.len() != bases.len() || gate.dim() != 1 << alice.len() {
        return Err(Error::InvalidArgument(format!(
            "{} bits, {} bases, gate of dimension {}",
            alice.len(),
            bases.len(),
            gate.dim()
        )));
    }
    let mut state = basis_state(alice[0], bases[0]);
    for (&bit, &basis) in alice.iter().zip(bases).skip(1) {
        state = state.kron(&basis_state(bit, basis))?;
    }
    gate.apply(&state)
}

pub(crate) fn prepare_packed(
    alice: usize,
    basis: usize,
    n: usize,
    gate: &ComplexMatrix,
) -> Result<StateVector> {
    let bits: Vec<u8> = (0..n).map(|q| bit_of(alice, n, q) as u8).collect();
    let bases: Vec<Basis> = (0..n)
        .map(|q| Basis::from_bit(bit_of(basis, n, q)))
        .collect();
    prepare(&bits, &bases, gate)
}

/// Bob's decoding for basis string `basis`: undo the gate, then rotate every
/// x-basis qubit so a z measurement reads its value.
pub(crate) fn bob_decoder(gate: &ComplexMatrix, basis: usize) -> Result<ComplexMatrix> {
    let n = gate.num_qubits();
    let pick = |q: usize| {
        if bit_of(basis, n, q) == 1 {
            hadamard()
        } else {
            identity1()
        }
    };
    let mut local = pick(0);
    for q in 1..n {
        local = local.kron(&pick(q))?;
    }
    local.matmul(&gate.dagger())
}

/// One attack branch before the channel acts.
pub(crate) struct Branch {
    pub eve: usize,
    pub probability: f64,
    pub state: StateVector,
}

fn attack_branches(config: &RoundConfig, prepared: StateVector) -> Result<Vec<Branch>> {
    let n = config.num_qubits;
    match &config.attack {
        Attack::None => Ok(vec![Branch {
            eve: EveOutcome::unmeasured(n).index(),
            probability: 1.0,
            state: prepared,
        }]),
        Attack::InterceptResend(spec) => Ok(ir_branches(&prepared, spec)?
            .into_iter()
            .map(|b| Branch {
                eve: b.eve.index(),
                probability: b.probability,
                state: b.state,
            })
            .collect()),
        Attack::EntanglementEnhanced(spec) => Ok(ee_attack(&prepared, spec)?
            .into_iter()
            .map(|b| Branch {
                eve: EveOutcome::from_bits(b.eve_bits, n).index(),
                probability: b.probability,
                state: b.bob_state,
            })
            .collect()),
    }
}

fn run_unmixed(config: &RoundConfig) -> Result<JointDistribution> {
    let n = config.num_qubits;
    let two = 1usize << n;
    let prior = 1.0 / two as f64;
    let mut dist = JointDistribution::zeros(n)?;
    for basis in 0..two {
        let decoder = bob_decoder(&config.gate, basis)?;
        for alice in 0..two {
            let prepared = prepare_packed(alice, basis, n, &config.gate)?;
            for branch in attack_branches(config, prepared)? {
                let delivered = match &config.channel {
                    Some(ch) => apply_noise(&branch.state, ch)?,
                    None => vec![(1.0, branch.state)],
                };
                for (p_noise, state) in delivered {
                    let out = decoder.apply(&state)?;
                    let weight = prior * branch.probability * p_noise;
                    for (bob, p) in out.probabilities().into_iter().enumerate() {
                        if p > 0.0 {
                            dist.add(basis, alice, branch.eve, bob, weight * p);
                        }
                    }
                }
            }
        }
    }
    Ok(dist)
}

/// Runs one round exactly and returns the full joint table.
pub fn run_round(config: &RoundConfig) -> Result<JointDistribution> {
    config.validate()?;
    match &config.attack {
        Attack::InterceptResend(spec) if spec.fraction < 1.0 => {
            let mut full_cfg = config.clone();
            full_cfg.attack = Attack::InterceptResend(spec.clone().with_fraction(1.0));
            let mut clean_cfg = config.clone();
            clean_cfg.attack = Attack::None;
            let full = run_unmixed(&full_cfg)?;
            let clean = run_unmixed(&clean_cfg)?;
            crate::attacks::apply_fraction(&full, &clean, spec.fraction)
        }
        _ => run_unmixed(config),
    }
}

/// Runs every config; output order matches input order.
pub fn sweep_rounds(configs: &[RoundConfig]) -> Result<Vec<JointDistribution>> {
    configs
        .par_iter()
        .enumerate()
        .map(|(index, cfg)| {
            run_round(cfg).map_err(|e| Error::InConfig {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

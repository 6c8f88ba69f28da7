//! Innocent channel imperfections: Pauli noise on every transmitted qubit and
//! independent qubit loss with constant-state replacement at Bob's end.
//!
//! The two noise operators are read as Pauli mixtures. For the xyz family the
//! identity carries weight `(1-n)²` and each of σx, σy, σz weight `n²`, all
//! over `4n² - 2n + 1`; the xz family drops σy and normalises by
//! `3n² - 2n + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::qber;
use crate::protocol::{bit_of, bob_decoder, prepare_packed, run_round, RoundConfig};
use crate::quantum::{
    apply_single_raw, basis_state, Basis, ComplexMatrix, Pauli, StateVector, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseFamily {
    None,
    Xyz,
    Xz,
}

impl std::str::FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(NoiseFamily::Xyz),
            "xz" => Ok(NoiseFamily::Xz),
            "none" => Ok(NoiseFamily::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown noise family {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseFamily::None => "none",
            NoiseFamily::Xyz => "xyz",
            NoiseFamily::Xz => "xz",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBranch {
    pub pauli: Pauli,
    pub probability: f64,
}

fn check_amplitude(n: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&n) {
        return Err(Error::OutOfRange {
            name: "noise amplitude",
            value: n,
            range: "[0, 0.5]",
        });
    }
    Ok(())
}

/// The per-qubit Pauli mixture for `family` at amplitude `n`; zero-weight
/// terms are omitted.
pub fn noise_branches(family: NoiseFamily, n: f64) -> Result<Vec<NoiseBranch>> {
    check_amplitude(n)?;
    let flips: &[Pauli] = match family {
        NoiseFamily::None => &[],
        NoiseFamily::Xyz => &[Pauli::X, Pauli::Y, Pauli::Z],
        NoiseFamily::Xz => &[Pauli::X, Pauli::Z],
    };
    if n == 0.0 || flips.is_empty() {
        return Ok(vec![NoiseBranch {
            pauli: Pauli::I,
            probability: 1.0,
        }]);
    }
    let keep = (1.0 - n) * (1.0 - n);
    let flip = n * n;
    let norm = keep + flip * flips.len() as f64;
    let mut out = vec![NoiseBranch {
        pauli: Pauli::I,
        probability: keep / norm,
    }];
    out.extend(flips.iter().map(|&pauli| NoiseBranch {
        pauli,
        probability: flip / norm,
    }));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub noise: NoiseFamily,
    pub amplitude: f64,
    pub loss_probability: f64,
    /// What Bob puts in place of a lost qubit.
    pub replacement: StateVector,
}

impl ChannelSpec {
    pub fn noiseless() -> Self {
        Self {
            noise: NoiseFamily::None,
            amplitude: 0.0,
            loss_probability: 0.0,
            replacement: basis_state(0, Basis::Z),
        }
    }

    pub fn noisy(family: NoiseFamily, amplitude: f64) -> Self {
        Self {
            noise: family,
            amplitude,
            ..Self::noiseless()
        }
    }

    pub fn with_loss(mut self, probability: f64) -> Self {
        self.loss_probability = probability;
        self
    }

    pub fn with_replacement(mut self, state: StateVector) -> Self {
        self.replacement = state;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_amplitude(self.amplitude)?;
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(Error::OutOfRange {
                name: "loss probability",
                value: self.loss_probability,
                range: "[0, 1]",
            });
        }
        if self.replacement.num_qubits() != 1 {
            return Err(Error::InvalidArgument(
                "replacement state must be one qubit".into(),
            ));
        }
        Ok(())
    }
}

/// Expands `state` into the weighted states produced by independent noise on
/// every qubit.
pub fn apply_noise(state: &StateVector, spec: &ChannelSpec) -> Result<Vec<(f64, StateVector)>> {
    let branches = noise_branches(spec.noise, spec.amplitude)?;
    if branches.len() == 1 {
        return Ok(vec![(1.0, state.clone())]);
    }
    let n = state.num_qubits();
    let mut out = vec![(1.0, state.clone())];
    for qubit in 0..n {
        let mut next = Vec::with_capacity(out.len() * branches.len());
        for (p, s) in &out {
            for b in &branches {
                let mut s = s.clone();
                if b.pauli != Pauli::I {
                    apply_single_raw(s.amplitudes_mut(), n, qubit, &b.pauli.raw());
                }
                next.push((p * b.probability, s));
            }
        }
        out = next;
    }
    Ok(out)
}

/// QBER of plain single-qubit BB84 under the channel noise, obtained by
/// running the protocol.
pub fn bb84_qber(family: NoiseFamily, n: f64) -> Result<f64> {
    gate_noise_qber(&ComplexMatrix::identity(2)?, family, n)
}

/// QBER of the entangled protocol under noise alone (no attack, no loss).
pub fn gate_noise_qber(gate: &ComplexMatrix, family: NoiseFamily, n: f64) -> Result<f64> {
    let cfg = RoundConfig::new(gate.clone()).with_channel(ChannelSpec::noisy(family, n));
    Ok(qber(&run_round(&cfg)?).average)
}

/// Largest BB84 QBER a family can produce on `n ∈ [0, 0.5]`.
pub fn max_bb84_qber(family: NoiseFamily) -> Result<f64> {
    bb84_qber(family, 0.5)
}

/// Amplitude `n ∈ [0, 0.5]` whose BB84 QBER equals `target`, by bisection on
/// the increasing map `n ↦ q(n)`.
pub fn calibrate_amplitude(family: NoiseFamily, target: f64) -> Result<f64> {
    if family == NoiseFamily::None {
        return if target == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::InvalidArgument(
                "noise family none only gives q = 0".into(),
            ))
        };
    }
    if !(0.0..=0.5).contains(&target) {
        return Err(Error::OutOfRange {
            name: "target QBER",
            value: target,
            range: "[0, 0.5]",
        });
    }
    let top = max_bb84_qber(family)?;
    if target > top + 1e-12 {
        return Err(Error::OutOfRange {
            name: "target QBER",
            value: target,
            range: "reachable by the xz family: [0, 1/3]",
        });
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    // the family maximum sits at the end of the amplitude range
    if target >= top - 1e-12 {
        return Ok(0.5);
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = bb84_qber(family, mid)?;
        if (q - target).abs() < 1e-13 {
            return Ok(mid);
        }
        if q < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPattern {
    /// Lost qubits, qubit 0 as the most significant bit.
    pub mask: usize,
    pub probability: f64,
}

/// All `2^N` loss masks with independent per-qubit loss probability.
pub fn loss_patterns(n: usize, probability: f64) -> Result<Vec<LossPattern>> {
    if !(0.0..=1.0).contains(&probability) {
        return Err(Error::OutOfRange {
            name: "loss probability",
            value: probability,
            range: "[0, 1]",
        });
    }
    if n == 0 || n > 3 {
        return Err(Error::InvalidArgument(format!("unsupported N = {n}")));
    }
    Ok((0..1usize << n)
        .map(|mask| {
            let lost = mask.count_ones() as i32;
            LossPattern {
                mask,
                probability: probability.powi(lost) * (1.0 - probability).powi(n as i32 - lost),
            }
        })
        .filter(|p| p.probability > 0.0)
        .collect())
}

/// Noiseless lost-qubit experiment: the qubits in `lost_mask` never reach
/// Bob, who substitutes `replacement` for each before undoing the gate and
/// measuring the survivors in Alice's bases. Returns the per-qubit error
/// probability (zero for lost qubits) averaged over all `a` and `α`.
pub fn loss_error_rates(
    gate: &ComplexMatrix,
    lost_mask: usize,
    replacement: &StateVector,
) -> Result<Vec<f64>> {
    let n = gate.num_qubits();
    let two = 1usize << n;
    if lost_mask >= two {
        return Err(Error::InvalidArgument(format!(
            "loss mask {lost_mask:b} for N = {n}"
        )));
    }
    let r = replacement.amplitudes();
    let prior = 1.0 / (two * two) as f64;
    let mut errors = vec![0.0; n];
    for basis in 0..two {
        let decoder = bob_decoder(gate, basis)?;
        for alice in 0..two {
            let sent = prepare_packed(alice, basis, n, gate)?;
            // Tracing out the lost qubits: enumerate their z values.
            let mut lost_value = 0;
            loop {
                let mut received = vec![ZERO; two];
                for (idx, amp) in received.iter_mut().enumerate() {
                    let mut source = idx & !lost_mask;
                    source |= lost_value;
                    let mut a = sent.amplitudes()[source];
                    for q in 0..n {
                        let m = 1 << (n - 1 - q);
                        if lost_mask & m != 0 {
                            a *= r[bit_of(idx, n, q)];
                        }
                    }
                    *amp = a;
                }
                let out = decoder.apply(&StateVector::unnormalized(received)?)?;
                for (b, p) in out.probabilities().into_iter().enumerate() {
                    for (q, err) in errors.iter_mut().enumerate() {
                        let m = 1 << (n - 1 - q);
                        if lost_mask & m == 0 && bit_of(b, n, q) != bit_of(alice, n, q) {
                            *err += prior * p;
                        }
                    }
                }
                // next sub-mask of lost_mask
                if lost_value == lost_mask {
                    break;
                }
                lost_value = (lost_value.wrapping_sub(lost_mask)) & lost_mask;
            }
        }
    }
    Ok(errors)
}

/// Combined noise-and-loss error rates for one gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// BB84 QBER produced by the channel noise.
    pub q: f64,
    /// Noise amplitude.
    pub n: f64,
    /// QBER of the entangled protocol from noise alone, no loss.
    pub q_noise: f64,
    /// Error rate of a surviving qubit caused by losing the others, averaged
    /// over the single-loss patterns (noiseless).
    pub q_loss: f64,
    /// Overall QBER weighted by delivered sifted bits.
    pub q_e: f64,
    /// `q_e / q`; `None` when `q = 0`.
    pub delta: Option<f64>,
}

/// Overall QBER under the channel's noise and loss. Surviving qubits of a
/// partially lost group err through noise or loss but not both:
/// `q + q_loss - 2 q q_loss`.
pub fn combined_qber(gate: &ComplexMatrix, spec: &ChannelSpec) -> Result<CalibrationResult> {
    spec.validate()?;
    let n_qubits = gate.num_qubits();
    let q = bb84_qber(spec.noise, spec.amplitude)?;
    let q_noise = gate_noise_qber(gate, spec.noise, spec.amplitude)?;

    let mut single_loss = Vec::new();
    let mut weighted = 0.0;
    let mut bits = 0.0;
    for mask in 0..1usize << n_qubits {
        let lost = mask.count_ones() as usize;
        let survivors = n_qubits - lost;
        let p_mask = spec.loss_probability.powi(lost as i32)
            * (1.0 - spec.loss_probability).powi(survivors as i32);
        let needs_loss_rate = survivors > 0 && lost > 0 && (p_mask > 0.0 || lost == 1);
        let loss_rate = if needs_loss_rate {
            let rates = loss_error_rates(gate, mask, &spec.replacement)?;
            rates.iter().sum::<f64>() / survivors as f64
        } else {
            0.0
        };
        if lost == 1 && survivors > 0 {
            single_loss.push(loss_rate);
        }
        if survivors == 0 || p_mask == 0.0 {
            continue;
        }
        let rate = if lost == 0 {
            q_noise
        } else {
            q + loss_rate - 2.0 * q * loss_rate
        };
        let w = p_mask * survivors as f64;
        weighted += w * rate;
        bits += w;
    }
    if bits == 0.0 {
        return Err(Error::Numerical("no qubits reach Bob".into()));
    }
    let q_loss = if single_loss.is_empty() {
        0.0
    } else {
        single_loss.iter().sum::<f64>() / single_loss.len() as f64
    };
    let q_e = weighted / bits;
    Ok(CalibrationResult {
        q,
        n: spec.amplitude,
        q_noise,
        q_loss,
        q_e,
        delta: (q > 0.0).then(|| q_e / q),
    })
}

/// Calibrates the amplitude for BB84 QBER `q` and evaluates `gate` under it
/// with the given loss probability.
pub fn combined_qber_for_target(
    gate: &ComplexMatrix,
    family: NoiseFamily,
    q: f64,
    loss_probability: f64,
) -> Result<CalibrationResult> {
    let n = calibrate_amplitude(family, q)?;
    combined_qber(
        gate,
        &ChannelSpec::noisy(family, n).with_loss(loss_probability),
    )
}

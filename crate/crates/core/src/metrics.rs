//! Entropies, Eve's mutual information, QBER, slope and key rates.

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackSpec, IrEvaluator};
use crate::error::{Error, Result};
use crate::protocol::{bit_of, JointDistribution};
use crate::quantum::ComplexMatrix;

/// Probabilities below this are dropped from entropy sums.
pub const ENTROPY_CUTOFF: f64 = 1e-14;

/// QBER below this counts as error-free when forming a slope.
pub const NO_ERROR_QBER: f64 = 1e-12;

/// Information per error, `I / q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Slope {
    Ratio(f64),
    /// The attack causes no errors, so the ratio is undefined.
    NoError,
}

impl Slope {
    pub fn from_parts(information: f64, qber: f64) -> Self {
        if qber < NO_ERROR_QBER {
            Slope::NoError
        } else {
            Slope::Ratio(information / qber)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Slope::Ratio(s) => Some(s),
            Slope::NoError => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberResult {
    pub per_qubit: Vec<f64>,
    pub average: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoResult {
    /// Bits per key bit.
    pub mutual_information: f64,
    pub per_qubit_qber: Vec<f64>,
    pub qber: f64,
    pub slope: Slope,
}

fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p >= ENTROPY_CUTOFF)
        .map(|p| -p * p.log2())
        .sum()
}

pub fn binary_entropy(q: f64) -> f64 {
    entropy([q, 1.0 - q])
}

/// Per-bit mutual information between Alice's string and Eve's record,
/// `I = (H(A) + H(E) - H(A,E)) / N` with `H(A) = N` and the other two
/// entropies averaged over basis strings.
pub fn mutual_information(dist: &JointDistribution) -> Result<InfoResult> {
    dist.check_normalized(1e-9)?;
    let n = dist.num_qubits();
    let two = dist.num_strings();
    let mut h_e = 0.0;
    let mut h_ae = 0.0;
    for basis in 0..two {
        h_e += entropy(dist.eve_marginal(basis));
        h_ae += entropy(dist.alice_eve(basis));
    }
    h_e /= two as f64;
    h_ae /= two as f64;
    let information = ((n as f64 + h_e - h_ae) / n as f64).max(0.0);
    let q = qber(dist);
    Ok(InfoResult {
        mutual_information: information,
        slope: Slope::from_parts(information, q.average),
        per_qubit_qber: q.per_qubit,
        qber: q.average,
    })
}

/// Probability that Bob's bit differs from Alice's, per qubit and on
/// average, over uniform basis strings.
pub fn qber(dist: &JointDistribution) -> QberResult {
    let n = dist.num_qubits();
    let two = dist.num_strings();
    let ne = dist.num_eve();
    let mut per_qubit = vec![0.0; n];
    for basis in 0..two {
        for alice in 0..two {
            for eve in 0..ne {
                for bob in 0..two {
                    let p = dist.prob(basis, alice, eve, bob);
                    if p == 0.0 {
                        continue;
                    }
                    let diff = alice ^ bob;
                    for (q, slot) in per_qubit.iter_mut().enumerate() {
                        if bit_of(diff, n, q) == 1 {
                            *slot += p;
                        }
                    }
                }
            }
        }
    }
    for slot in &mut per_qubit {
        *slot /= two as f64;
    }
    let average = per_qubit.iter().sum::<f64>() / n as f64;
    QberResult { per_qubit, average }
}

/// `I / q` of an intercept-resend attack on `gate`.
pub fn slope(gate: &ComplexMatrix, attack: &AttackSpec) -> Result<Slope> {
    Ok(IrEvaluator::new(gate)?.info(attack)?.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub r: f64,
    pub s: f64,
    pub q_e: f64,
    pub correlated: bool,
}

/// `1 - s q_E - H(q_E)`, or with half the error-correction cost when the
/// errors within a group are fully correlated.
pub fn key_rate(s: f64, q_e: f64, correlated: bool) -> Result<KeyRateResult> {
    if !(0.0..=0.5 + 1e-12).contains(&q_e) {
        return Err(Error::OutOfRange {
            name: "q_E",
            value: q_e,
            range: "[0, 0.5]",
        });
    }
    if !s.is_finite() || s < 0.0 {
        return Err(Error::OutOfRange {
            name: "slope",
            value: s,
            range: "finite, >= 0",
        });
    }
    let ec = if correlated { 0.5 } else { 1.0 };
    Ok(KeyRateResult {
        r: 1.0 - s * q_e - ec * binary_entropy(q_e),
        s,
        q_e,
        correlated,
    })
}

/// Plain BB84 against intercept-resend: `1 - 2q - H(q)`.
pub fn bb84_key_rate(q: f64) -> Result<f64> {
    Ok(key_rate(2.0, q, false)?.r)
}

/// Root of `f` on `[lo, hi]` by bisection; `f(lo)` and `f(hi)` must differ
/// in sign.
pub fn bisect(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Numerical(format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < tol {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The error-inflation factor `δ` at which a protocol with slope `s` and
/// `q_E = δ q_ref` has the same key rate as BB84 at `q_ref`.
pub fn break_even_delta(s: f64, q_ref: f64) -> Result<f64> {
    let target = bb84_key_rate(q_ref)?;
    let hi = 0.5 / q_ref;
    bisect(
        |d| Ok(key_rate(s, d * q_ref, false)?.r - target),
        1.0,
        hi,
        1e-12,
    )
}

/// Largest `q` on `[lo, hi]` with a positive rate, given `rate(q)`
/// decreasing across the root.
pub fn zero_crossing(rate: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    bisect(rate, lo, hi, 1e-10)
}

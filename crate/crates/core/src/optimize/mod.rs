//! Eve's slope maximisation, the min-max gate search and key-rate
//! maximisation over gates.
//!
//! All searches are deterministic: starts are evaluated in parallel but
//! merged in start order, and random starts come from seeded ChaCha streams.

mod nelder_mead;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use nelder_mead::{minimize, Bound, LocalResult, Tolerance};

use crate::attacks::{AttackSpec, IrEvaluator};
use crate::channel::{calibrate_amplitude, combined_qber, ChannelSpec, NoiseFamily};
use crate::error::{Error, Result};
use crate::metrics::{bb84_key_rate, key_rate, InfoResult, KeyRateResult, Slope};
use crate::quantum::{canonical_gate, ComplexMatrix, GateParams};

/// `c* = (π/32, 3π/8, π/32)`.
pub const C_STAR: [f64; 3] = [PI / 32.0, 3.0 * FRAC_PI_8, PI / 32.0];

/// `U_2*` as a canonical gate, `C(0, π/2, 0)`.
pub const C_U2_STAR: [f64; 3] = [0.0, FRAC_PI_2, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    SlopeMaxEve,
    InformationMaxEve,
    SlopeMinimax,
    KeyRateMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    pub objective: Objective,
    pub sense: Sense,
    pub bounds: Vec<Bound>,
    /// Initial simplex edge per coordinate.
    pub step: Vec<f64>,
    pub seeds: Vec<Vec<f64>>,
    /// Random starts drawn per RNG seed.
    pub random_starts: usize,
    pub rng_seeds: Vec<u64>,
    pub tolerance: Tolerance,
}

impl OptimizationProblem {
    pub fn new(objective: Objective, sense: Sense, bounds: Vec<Bound>) -> Self {
        let step = bounds.iter().map(|b| b.width() / 16.0).collect();
        Self {
            objective,
            sense,
            bounds,
            step,
            seeds: Vec::new(),
            random_starts: 0,
            rng_seeds: Vec::new(),
            tolerance: Tolerance::default(),
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<Vec<f64>>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn with_random_starts(mut self, per_seed: usize, rng_seeds: Vec<u64>) -> Self {
        self.random_starts = per_seed;
        self.rng_seeds = rng_seeds;
        self
    }

    /// Seed points followed by the random draws, in a fixed order.
    pub fn starts(&self) -> Vec<Vec<f64>> {
        let mut out = self.seeds.clone();
        for &seed in &self.rng_seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..self.random_starts {
                out.push(
                    self.bounds
                        .iter()
                        .map(|b| b.lo + rng.random::<f64>() * b.width())
                        .collect(),
                );
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.step.len() != self.bounds.len() {
            return Err(Error::InvalidArgument(
                "problem needs one bound and step per variable".into(),
            ));
        }
        for b in &self.bounds {
            b.validate()?;
        }
        if let Some(s) = self.seeds.iter().find(|s| s.len() != self.bounds.len()) {
            return Err(Error::InvalidArgument(format!(
                "seed has {} coordinates, expected {}",
                s.len(),
                self.bounds.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub start: Vec<f64>,
    pub result: LocalResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub objective: Objective,
    pub best_value: f64,
    pub best_params: Vec<f64>,
    /// One entry per start, in start order.
    pub starts: Vec<StartRecord>,
    pub converged: bool,
}

/// Objective values carry the problem's sense; internally everything is
/// minimised.
pub type ObjectiveFn<'a> = dyn Fn(&[f64]) -> Result<f64> + Sync + 'a;

/// Local search from every start; the best start wins, ties going to the
/// earlier start.
pub fn run(problem: &OptimizationProblem, f: &ObjectiveFn) -> Result<OptimizationReport> {
    problem.validate()?;
    let starts = problem.starts();
    if starts.is_empty() {
        return Err(Error::InvalidArgument("no starting points".into()));
    }
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let records = starts
        .into_par_iter()
        .map(|start| {
            let mut g = |x: &[f64]| f(x).map(|v| sign * v);
            let mut result = minimize(
                &mut g,
                &start,
                &problem.bounds,
                &problem.step,
                &problem.tolerance,
            )?;
            result.value *= sign;
            for v in &mut result.trajectory {
                *v *= sign;
            }
            Ok(StartRecord { start, result })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.result.value.is_finite())
        .min_by(|a, b| {
            (sign * a.1.result.value)
                .total_cmp(&(sign * b.1.result.value))
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Numerical("no start reached a finite objective".into()))?;
    Ok(OptimizationReport {
        objective: problem.objective,
        best_value: records[best].result.value,
        best_params: records[best].result.params.clone(),
        converged: records[best].result.converged,
        starts: records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub value: f64,
    pub params: Vec<f64>,
    pub evaluated: usize,
}

/// Grid coordinates along one bound: periodic bounds get `resolution`
/// points spaced by `width / (resolution - 1)` starting at `lo` (so the
/// seam is visited once), clamped bounds an inclusive linspace.
pub fn grid_axis(bound: &Bound, resolution: usize) -> Vec<f64> {
    if resolution == 1 {
        return vec![bound.lo];
    }
    let step = bound.width() / (resolution - 1) as f64;
    let count = if bound.periodic {
        resolution - 1
    } else {
        resolution
    };
    (0..count).map(|k| bound.lo + k as f64 * step).collect()
}

/// Exhaustive evaluation on the product grid; errors and non-finite values
/// are skipped.
pub fn grid_oracle(
    f: &ObjectiveFn,
    bounds: &[Bound],
    resolution: usize,
    sense: Sense,
) -> Result<GridResult> {
    if resolution < 2 || bounds.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 points per axis and one axis, got {resolution}"
        )));
    }
    let axes: Vec<Vec<f64>> = bounds.iter().map(|b| grid_axis(b, resolution)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let sign = match sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let point = |mut k: usize| -> Vec<f64> {
        let mut x = vec![0.0; axes.len()];
        for (d, axis) in axes.iter().enumerate().rev() {
            x[d] = axis[k % axis.len()];
            k /= axis.len();
        }
        x
    };
    let best = (0..total)
        .into_par_iter()
        .filter_map(|k| {
            let x = point(k);
            match f(&x) {
                Ok(v) if v.is_finite() => Some((k, sign * v)),
                _ => None,
            }
        })
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .ok_or_else(|| Error::Numerical("objective undefined on the whole grid".into()))?;
    Ok(GridResult {
        value: sign * best.1,
        params: point(best.0),
        evaluated: total,
    })
}

/// How Eve's measurement angles are searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveSearch {
    /// Points per angle of the coarse grid: `β` on `[0, π]`, `γ` on
    /// `[0, 2π)`. At the poles only `γ = 0` is kept.
    pub grid_points: usize,
    /// Best grid points per mask refined by local search.
    pub refine: usize,
    pub tolerance: Tolerance,
    /// Only these masks are searched; all non-empty masks when `None`.
    pub masks: Option<Vec<usize>>,
}

impl Default for EveSearch {
    fn default() -> Self {
        Self {
            grid_points: 9,
            refine: 4,
            tolerance: Tolerance::default(),
            masks: None,
        }
    }
}

impl EveSearch {
    /// Coarser grid for use inside outer optimisations.
    pub fn fast() -> Self {
        Self {
            grid_points: 5,
            refine: 3,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveTarget {
    /// `I / q`; error-free attacks are excluded.
    Slope,
    /// `I` at full interception.
    Information,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EveOptimum {
    pub value: f64,
    pub mask: usize,
    /// `(β, γ)` for every intercepted qubit in qubit order.
    pub angles: Vec<f64>,
    pub info: InfoResult,
    /// Best value per searched mask.
    pub per_mask: Vec<(usize, f64)>,
    pub report: OptimizationReport,
}

fn eve_grid_per_qubit(points: usize) -> Vec<[f64; 2]> {
    let points = points.max(3);
    let betas = grid_axis(&Bound::clamped(0.0, PI), points);
    let gammas = grid_axis(&Bound::periodic(0.0, TAU), points);
    let mut out = Vec::new();
    for (i, &b) in betas.iter().enumerate() {
        if i == 0 || i == betas.len() - 1 {
            out.push([b, 0.0]);
        } else {
            out.extend(gammas.iter().map(|&g| [b, g]));
        }
    }
    out
}

/// Measurement bases worth trying first: z, x, y and the tilted basis of
/// the known two-qubit optimum.
fn eve_seed_bases() -> [[f64; 2]; 4] {
    [
        [0.0, 0.0],
        [FRAC_PI_2, 0.0],
        [FRAC_PI_2, FRAC_PI_2],
        [FRAC_PI_8, 0.0],
    ]
}

fn eve_value(ev: &IrEvaluator, mask: usize, angles: &[f64], target: EveTarget) -> Result<f64> {
    let spec = AttackSpec::from_mask_angles(ev.num_qubits(), mask, angles)?;
    let info = ev.info(&spec)?;
    match target {
        EveTarget::Information => Ok(info.mutual_information),
        EveTarget::Slope => match info.slope {
            Slope::Ratio(s) => Ok(s),
            Slope::NoError => Err(Error::Numerical("attack causes no errors".into())),
        },
    }
}

/// Eve's best intercept-resend attack on `gate`.
pub fn maximize_eve(
    gate: &ComplexMatrix,
    target: EveTarget,
    search: &EveSearch,
) -> Result<EveOptimum> {
    let ev = IrEvaluator::new(gate)?;
    maximize_eve_with(&ev, target, search)
}

pub fn maximize_eve_with(
    ev: &IrEvaluator,
    target: EveTarget,
    search: &EveSearch,
) -> Result<EveOptimum> {
    let n = ev.num_qubits();
    let masks: Vec<usize> = match &search.masks {
        Some(m) => m.clone(),
        None => (1..1usize << n).collect(),
    };
    if masks.is_empty() || masks.iter().any(|&m| m == 0 || m >= 1 << n) {
        return Err(Error::InvalidArgument(format!(
            "bad intercept masks {masks:?} for N = {n}"
        )));
    }
    let per_qubit = eve_grid_per_qubit(search.grid_points);
    let objective = match target {
        EveTarget::Slope => Objective::SlopeMaxEve,
        EveTarget::Information => Objective::InformationMaxEve,
    };

    let mut best: Option<(f64, usize, OptimizationReport)> = None;
    let mut per_mask = Vec::with_capacity(masks.len());
    for &mask in &masks {
        let k = mask.count_ones() as usize;
        let f = |x: &[f64]| eve_value(ev, mask, x, target);

        // Coarse grid over all intercepted qubits.
        let total = per_qubit.len().pow(k as u32);
        let grid_point = |mut idx: usize| -> Vec<f64> {
            let mut x = vec![0.0; 2 * k];
            for q in (0..k).rev() {
                let p = per_qubit[idx % per_qubit.len()];
                x[2 * q] = p[0];
                x[2 * q + 1] = p[1];
                idx /= per_qubit.len();
            }
            x
        };
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        let bases = eve_seed_bases();
        let mut combo = vec![0usize; k];
        loop {
            candidates.push(combo.iter().flat_map(|&i| bases[i]).collect());
            let mut d = 0;
            while d < k {
                combo[d] += 1;
                if combo[d] < bases.len() {
                    break;
                }
                combo[d] = 0;
                d += 1;
            }
            if d == k {
                break;
            }
        }
        candidates.extend((0..total).map(grid_point));

        // Seeds and grid points compete on value; only the best few are
        // refined, ties going to the earlier candidate.
        let mut scored: Vec<(usize, f64)> = candidates
            .par_iter()
            .enumerate()
            .filter_map(|(i, x)| f(x).ok().filter(|v| v.is_finite()).map(|v| (i, v)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut seeds: Vec<Vec<f64>> = Vec::new();
        for &(i, _) in &scored {
            if seeds.len() == search.refine.max(1) {
                break;
            }
            if !seeds.contains(&candidates[i]) {
                seeds.push(candidates[i].clone());
            }
        }
        if seeds.is_empty() {
            continue;
        }

        let mut problem = OptimizationProblem::new(
            objective,
            Sense::Maximize,
            vec![Bound::periodic(0.0, TAU); 2 * k],
        )
        .with_seeds(seeds);
        problem.step = vec![PI / 16.0; 2 * k];
        problem.tolerance = search.tolerance;
        let report = match run(&problem, &f) {
            Ok(r) => r,
            Err(Error::Numerical(_)) => continue,
            Err(e) => return Err(e),
        };
        per_mask.push((mask, report.best_value));
        let better = match &best {
            None => true,
            // Near-ties go to the attack intercepting more qubits, which
            // reaches the larger QBER range.
            Some((v, m, _)) => {
                report.best_value > *v + 1e-9
                    || ((report.best_value - *v).abs() <= 1e-9
                        && mask.count_ones() > m.count_ones())
            }
        };
        if better {
            best = Some((report.best_value, mask, report));
        }
    }
    let (value, mask, report) =
        best.ok_or_else(|| Error::Numerical("every attack on this gate is error-free".into()))?;
    let angles = report.best_params.clone();
    let info = ev.info(&AttackSpec::from_mask_angles(n, mask, &angles)?)?;
    Ok(EveOptimum {
        value,
        mask,
        angles,
        info,
        per_mask,
        report,
    })
}

/// Gate from optimisation variables: `c`, optionally followed by a shared
/// pre-rotation `(β, γ)`.
pub fn gate_from_params(x: &[f64]) -> Result<ComplexMatrix> {
    let params = match x.len() {
        3 => GateParams::new(x[0], x[1], x[2]),
        5 => GateParams::new(x[0], x[1], x[2]).with_pre_rotation(x[3], x[4]),
        n => {
            return Err(Error::InvalidArgument(format!(
                "gate needs 3 or 5 parameters, got {n}"
            )))
        }
    };
    canonical_gate(&params)
}

/// Representative of `c` under the symmetries that leave every protocol
/// quantity unchanged: `c_k → c_k + π`, `c_k → -c_k`, and swapping `c_1`
/// with `c_3`. Each component ends up in `[0, π/2]` with `c_1 ≤ c_3`.
pub fn canonical_c(c: [f64; 3]) -> [f64; 3] {
    let fold = |x: f64| {
        let y = x.rem_euclid(PI);
        if y > FRAC_PI_2 {
            PI - y
        } else {
            y
        }
    };
    let mut out = c.map(fold);
    if out[0] > out[2] {
        out.swap(0, 2);
    }
    out
}

/// Largest component difference between canonical representatives.
pub fn c_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (canonical_c(a), canonical_c(b));
    (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSearch {
    pub seeds: Vec<Vec<f64>>,
    pub random_starts: usize,
    pub rng_seeds: Vec<u64>,
    /// Run local search from the seeds; when false the seeds are only
    /// evaluated.
    pub refine: bool,
    /// Search the shared pre-rotation as well as `c`.
    pub pre_rotation: bool,
    pub inner: EveSearch,
    pub tolerance: Tolerance,
}

impl Default for GateSearch {
    fn default() -> Self {
        Self {
            seeds: vec![vec![0.0; 3], C_U2_STAR.to_vec(), C_STAR.to_vec()],
            random_starts: 0,
            rng_seeds: Vec::new(),
            refine: true,
            pre_rotation: false,
            inner: EveSearch::fast(),
            tolerance: Tolerance::default(),
        }
    }
}

impl GateSearch {
    fn problem(&self, objective: Objective, sense: Sense) -> OptimizationProblem {
        let dims = if self.pre_rotation { 5 } else { 3 };
        let seeds = self
            .seeds
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.resize(dims, 0.0);
                s
            })
            .collect();
        let mut p =
            OptimizationProblem::new(objective, sense, vec![Bound::periodic(0.0, TAU); dims])
                .with_seeds(seeds)
                .with_random_starts(self.random_starts, self.rng_seeds.clone());
        p.step = vec![PI / 16.0; dims];
        p.tolerance = self.tolerance;
        if !self.refine {
            p.tolerance.max_evaluations = 1;
        }
        p
    }
}

/// Eve's maximal slope for the gate built from `x`.
pub fn gate_slope(x: &[f64], inner: &EveSearch) -> Result<f64> {
    Ok(maximize_eve(&gate_from_params(x)?, EveTarget::Slope, inner)?.value)
}

/// `min_c max_Eve I/q` over two-qubit canonical gates.
pub fn minimax_gate(search: &GateSearch) -> Result<OptimizationReport> {
    let problem = search.problem(Objective::SlopeMinimax, Sense::Minimize);
    run(&problem, &|x: &[f64]| gate_slope(x, &search.inner))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelOptions {
    pub family: NoiseFamily,
    pub loss: f64,
    pub correlated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEvaluation {
    pub rate: KeyRateResult,
    pub slope: f64,
    pub q_e: f64,
}

/// Key rate of the gate built from `x` at calibrated amplitude `n`.
pub fn gate_key_rate(
    x: &[f64],
    n: f64,
    channel: &ChannelOptions,
    inner: &EveSearch,
) -> Result<RateEvaluation> {
    let gate = gate_from_params(x)?;
    let spec = ChannelSpec::noisy(channel.family, n).with_loss(channel.loss);
    let q_e = combined_qber(&gate, &spec)?.q_e;
    let slope = maximize_eve(&gate, EveTarget::Slope, inner)?.value;
    Ok(RateEvaluation {
        rate: key_rate(slope, q_e, channel.correlated)?,
        slope,
        q_e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateOptimum {
    pub q: f64,
    pub amplitude: f64,
    pub channel: ChannelOptions,
    pub best: RateEvaluation,
    /// `canonical_c` of the best `c`.
    pub canonical: [f64; 3],
    pub bb84_rate: f64,
    pub report: OptimizationReport,
}

/// Maximises the relative key rate over gates at BB84 QBER `q`.
pub fn maximize_key_rate(
    q: f64,
    channel: &ChannelOptions,
    search: &GateSearch,
) -> Result<KeyRateOptimum> {
    let n = calibrate_amplitude(channel.family, q)?;
    let problem = search.problem(Objective::KeyRateMax, Sense::Maximize);
    let report = run(&problem, &|x: &[f64]| {
        Ok(gate_key_rate(x, n, channel, &search.inner)?.rate.r)
    })?;
    let best = gate_key_rate(&report.best_params, n, channel, &search.inner)?;
    let c = [
        report.best_params[0],
        report.best_params[1],
        report.best_params[2],
    ];
    Ok(KeyRateOptimum {
        q,
        amplitude: n,
        channel: *channel,
        best,
        canonical: canonical_c(c),
        bb84_rate: bb84_key_rate(q)?,
        report,
    })
}

//! Bounded Nelder–Mead minimiser with periodic coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
    /// Periodic coordinates wrap into `[lo, hi)`; others are clamped.
    pub periodic: bool,
}

impl Bound {
    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn clamped(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn project(&self, x: f64) -> f64 {
        if self.periodic {
            let w = self.width();
            let y = self.lo + (x - self.lo).rem_euclid(w);
            // rem_euclid can round up to exactly w
            if y >= self.hi {
                self.lo
            } else {
                y
            }
        } else {
            x.clamp(self.lo, self.hi)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        if self.periodic {
            x >= self.lo && x < self.hi
        } else {
            x >= self.lo && x <= self.hi
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) {
            return Err(Error::InvalidArgument(format!(
                "empty or infinite bound [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Spread of simplex values.
    pub value: f64,
    /// Largest vertex distance from the best vertex.
    pub params: f64,
    pub max_evaluations: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            value: 1e-7,
            params: 1e-6,
            max_evaluations: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration.
    pub trajectory: Vec<f64>,
}

/// Minimises `f` from `start`. Non-finite values and errors from `f` count
/// as `+∞`, so infeasible points are never accepted as best. Every point
/// handed to `f` lies inside `bounds`.
pub fn minimize(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    start: &[f64],
    bounds: &[Bound],
    step: &[f64],
    tol: &Tolerance,
) -> Result<LocalResult> {
    let dim = start.len();
    if dim == 0 || bounds.len() != dim || step.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "start has {dim} coordinates, {} bounds, {} steps",
            bounds.len(),
            step.len()
        )));
    }
    for b in bounds {
        b.validate()?;
    }
    let project = |x: &mut Vec<f64>| {
        for (xi, b) in x.iter_mut().zip(bounds) {
            *xi = b.project(*xi);
        }
    };
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> f64 {
        *evaluations += 1;
        match f(x) {
            Ok(v) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    project(&mut x0);
    // A budget of one evaluation only scores the start.
    if tol.max_evaluations <= 1 {
        let value = eval(&x0, &mut evaluations);
        return Ok(LocalResult {
            params: x0,
            value,
            evaluations,
            converged: false,
            trajectory: vec![value],
        });
    }
    simplex.push(x0.clone());
    for i in 0..dim {
        let mut x = x0.clone();
        x[i] += step[i];
        if !bounds[i].periodic && x[i] > bounds[i].hi {
            x[i] = x0[i] - step[i];
        }
        project(&mut x);
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evaluations)).collect();

    // Periodic coordinates: differences are taken on the circle so the
    // simplex never straddles the seam incorrectly.
    let delta = |a: f64, b: f64, bound: &Bound| -> f64 {
        let d = a - b;
        if bound.periodic {
            let w = bound.width();
            d - w * (d / w).round()
        } else {
            d
        }
    };

    let mut trajectory = Vec::new();
    let mut converged = false;
    while evaluations < tol.max_evaluations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        trajectory.push(values[0]);

        let spread = values[dim] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|x| {
                x.iter()
                    .zip(&simplex[0])
                    .zip(bounds)
                    .map(|((a, b), bd)| delta(*a, *b, bd).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= tol.value && size <= tol.params * 10.0)
            || size <= tol.params
        {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex, unwrapped around the best.
        let best = &simplex[0];
        let centroid: Vec<f64> = (0..dim)
            .map(|j| {
                let s: f64 = simplex[..dim]
                    .iter()
                    .map(|x| delta(x[j], best[j], &bounds[j]))
                    .sum();
                best[j] + s / dim as f64
            })
            .collect();
        let worst_rel: Vec<f64> = (0..dim)
            .map(|j| centroid[j] + delta(simplex[dim][j], centroid[j], &bounds[j]))
            .collect();
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + t * (worst_rel[j] - centroid[j]))
                .collect();
            project(&mut x);
            x
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evaluations);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[dim] {
            let x = along(-0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = xc;
            values[dim] = fc;
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].clone();
        for i in 1..=dim {
            let mut x: Vec<f64> = (0..dim)
                .map(|j| best[j] + 0.5 * delta(simplex[i][j], best[j], &bounds[j]))
                .collect();
            project(&mut x);
            values[i] = eval(&x, &mut evaluations);
            simplex[i] = x;
        }
    }

    let (best_i, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .expect("simplex is never empty");
    Ok(LocalResult {
        params: simplex[best_i].clone(),
        value: values[best_i],
        evaluations,
        converged,
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_minimum() {
        let mut f = |x: &[f64]| Ok((x[0] - 1.0).powi(2) + 3.0 * (x[1] + 0.5).powi(2));
        let r = minimize(
            &mut f,
            &[0.0, 0.0],
            &[Bound::clamped(-5.0, 5.0); 2],
            &[0.5, 0.5],
            &Tolerance::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert!((r.params[0] - 1.0).abs() < 1e-3);
        assert!((r.params[1] + 0.5).abs() < 1e-3);
    }

    #[test]
    fn periodic_minimum_across_the_seam() {
        // minimum of -cos(x - 0.05) sits just past the seam at 0 / 2π
        let two_pi = std::f64::consts::TAU;
        let mut seen_outside = false;
        let mut f = |x: &[f64]| {
            if !(0.0..two_pi).contains(&x[0]) {
                seen_outside = true;
            }
            Ok(-(x[0] - 0.05).cos())
        };
        let r = minimize(
            &mut f,
            &[6.0],
            &[Bound::periodic(0.0, two_pi)],
            &[0.3],
            &Tolerance::default(),
        )
        .unwrap();
        assert!(!seen_outside);
        assert!((r.params[0] - 0.05).abs() < 1e-3, "{:?}", r.params);
    }

    #[test]
    fn clamped_bound_is_respected() {
        let mut f = |x: &[f64]| {
            assert!((0.0..=1.0).contains(&x[0]));
            Ok(-x[0])
        };
        let r = minimize(
            &mut f,
            &[0.5],
            &[Bound::clamped(0.0, 1.0)],
            &[0.2],
            &Tolerance::default(),
        )
        .unwrap();
        assert!((r.params[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn errors_count_as_infinite() {
        let mut f = |x: &[f64]| {
            if x[0] < 0.0 {
                Err(Error::Numerical("bad".into()))
            } else {
                Ok(x[0] * x[0])
            }
        };
        let r = minimize(
            &mut f,
            &[1.0],
            &[Bound::clamped(-2.0, 2.0)],
            &[0.5],
            &Tolerance::default(),
        )
        .unwrap();
        assert!(r.value.is_finite());
        assert!(r.params[0] >= 0.0);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let mut f = |_: &[f64]| Ok(0.0);
        assert!(minimize(&mut f, &[0.0], &[], &[0.1], &Tolerance::default()).is_err());
        assert!(minimize(
            &mut f,
            &[0.0],
            &[Bound::clamped(1.0, 0.0)],
            &[0.1],
            &Tolerance::default()
        )
        .is_err());
    }
}

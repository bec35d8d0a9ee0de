//! Damped least-squares engine used by every fit in the crate.
//!
//! Classic Levenberg-Marquardt with Marquardt's diagonal scaling: the
//! damping term is `λ · diag(JᵀWJ)`, which makes the step invariant under
//! per-parameter rescaling — important here, where parameter magnitudes
//! range from picosecond peak widths to terahertz beat frequencies.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// A scalar model `f(x; p)` with analytic first derivatives.
pub trait FitModel {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, params: &[f64]) -> f64;
    /// Writes `∂f/∂p_j` at `(x, params)` into `out`.
    fn jacobian(&self, x: f64, params: &[f64], out: &mut [f64]);
}

#[derive(Debug)]
pub(crate) struct Solution {
    pub params: Vec<f64>,
    /// Parameter covariance `(JᵀWJ)⁻¹` at the solution.
    pub covariance: DMatrix<f64>,
    /// Weighted residual sum of squares.
    pub weighted_rss: f64,
    pub iterations: usize,
    pub converged: bool,
}

const MAX_ITERATIONS: usize = 200;
const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MIN: f64 = 1e-12;
const LAMBDA_MAX: f64 = 1e14;
/// Relative cost decrease below which an accepted step counts as converged.
const COST_TOL: f64 = 1e-12;
/// Relative parameter step below which an accepted step counts as converged.
const STEP_TOL: f64 = 1e-10;

fn weighted_cost(model: &dyn FitModel, xs: &[f64], ys: &[f64], ws: &[f64], p: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(ws)
        .map(|((&x, &y), &w)| {
            let r = y - model.value(x, p);
            w * r * r
        })
        .sum()
}

/// Builds the normal-equation pieces `A = JᵀWJ` and `g = JᵀW r`.
fn normal_equations(
    model: &dyn FitModel,
    xs: &[f64],
    ys: &[f64],
    ws: &[f64],
    p: &[f64],
) -> (DMatrix<f64>, DVector<f64>) {
    let m = model.n_params();
    let mut a = DMatrix::zeros(m, m);
    let mut g = DVector::zeros(m);
    let mut row = vec![0.0; m];
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        model.jacobian(x, p, &mut row);
        let r = y - model.value(x, p);
        for j in 0..m {
            g[j] += w * r * row[j];
            for l in j..m {
                a[(j, l)] += w * row[j] * row[l];
            }
        }
    }
    for j in 0..m {
        for l in 0..j {
            a[(j, l)] = a[(l, j)];
        }
    }
    (a, g)
}

pub(crate) fn levenberg_marquardt(
    model: &dyn FitModel,
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    initial: &[f64],
) -> Result<Solution> {
    let m = model.n_params();
    assert_eq!(initial.len(), m, "seed length must match model");
    assert_eq!(xs.len(), ys.len());
    assert_eq!(xs.len(), weights.len());
    if xs.len() <= m {
        return Err(Error::NotEnoughData {
            context: "least-squares fit",
            needed: m + 1,
            got: xs.len(),
        });
    }

    let mut p = initial.to_vec();
    let mut cost = weighted_cost(model, xs, ys, weights, &p);
    if !cost.is_finite() {
        return Err(Error::invalid(
            "initial parameters",
            "model is not finite at the seed point",
        ));
    }
    let mut lambda = LAMBDA_INIT;
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let (a, g) = normal_equations(model, xs, ys, weights, &p);
        let mut stepped = false;
        let mut every_solve_failed = true;
        while lambda <= LAMBDA_MAX {
            let mut damped = a.clone();
            for j in 0..m {
                damped[(j, j)] += lambda * a[(j, j)];
            }
            let Some(delta) = damped.lu().solve(&g) else {
                lambda *= 10.0;
                continue;
            };
            every_solve_failed = false;
            let trial: Vec<f64> = p.iter().zip(delta.iter()).map(|(&pj, &dj)| pj + dj).collect();
            let trial_cost = weighted_cost(model, xs, ys, weights, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel_step = p
                    .iter()
                    .zip(delta.iter())
                    .map(|(&pj, &dj)| dj.abs() / (pj.abs() + 1e-300))
                    .fold(0.0f64, f64::max);
                let decrease = cost - trial_cost;
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(LAMBDA_MIN);
                stepped = true;
                if decrease <= COST_TOL * (cost + 1e-300) || rel_step <= STEP_TOL {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            if every_solve_failed {
                return Err(Error::SingularNormalMatrix);
            }
            // No downhill step exists at any damping: the parameters are at
            // a numerical minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }

    if !converged {
        return Err(Error::NoConvergence { iterations });
    }

    let (a, _) = normal_equations(model, xs, ys, weights, &p);
    let covariance = a
        .clone()
        .try_inverse()
        .ok_or(Error::SingularNormalMatrix)?;
    Ok(Solution {
        params: p,
        covariance,
        weighted_rss: cost,
        iterations,
        converged,
    })
}

//! Damped Newton on a convex Massieu dual `D(ξ) = Ψ(ξ) + ξ·m`.
//!
//! Shared by the classical and quantum max-entropy fits. The gradient of `D`
//! is `m − η(ξ)` and its Hessian is the (classical or BKM) covariance of the
//! features, so a converged point matches the target means.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, max_abs, norm2, Matrix};

pub(crate) const ARMIJO_SLOPE: f64 = 1e-4;
pub(crate) const BACKTRACK: f64 = 0.5;
pub(crate) const DIVERGENCE_NORM: f64 = 1e3;

pub(crate) struct DualEval {
    pub psi: f64,
    pub means: Vec<f64>,
    pub hessian: Matrix,
    /// Smallest probability (or eigenvalue) of the current state.
    pub min_weight: f64,
}

pub(crate) trait Dual {
    fn eval(&self, xi: &[f64]) -> Result<DualEval>;
    fn psi(&self, xi: &[f64]) -> Result<f64>;
}

pub(crate) struct NewtonOutcome {
    pub xi: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub objective_history: Vec<f64>,
}

pub(crate) fn solve(
    dual: &impl Dual,
    target: &[f64],
    start: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome> {
    let mut xi = start;
    let mut history = Vec::new();
    let infeasible = |xi: &[f64], residual: f64| {
        let norm = norm2(xi);
        let direction = if norm > 0.0 { xi.iter().map(|x| x / norm).collect() } else { xi.to_vec() };
        Error::Infeasible { direction, residual }
    };

    let mut current = dual.eval(&xi)?;
    let mut objective = current.psi + dot(&xi, target);
    history.push(objective);
    for iteration in 0..=max_iter {
        let excess: Vec<f64> = current.means.iter().zip(target).map(|(e, m)| e - m).collect();
        let residual = max_abs(&excess);
        if residual < tol {
            // one full polishing step; kept only if it helps
            if let Ok(chol) = current.hessian.cholesky() {
                let step = chol.solve(&excess);
                let cand: Vec<f64> = xi.iter().zip(&step).map(|(x, s)| x + s).collect();
                if let Ok(next) = dual.eval(&cand) {
                    let r: f64 = next.means.iter().zip(target).fold(0.0, |m, (e, t)| m.max((e - t).abs()));
                    let obj = next.psi + dot(&cand, target);
                    if r < residual && obj <= objective {
                        history.push(obj);
                        return Ok(NewtonOutcome {
                            xi: cand,
                            iterations: iteration,
                            residual: r,
                            objective_history: history,
                        });
                    }
                }
            }
            return Ok(NewtonOutcome { xi, iterations: iteration, residual, objective_history: history });
        }
        if iteration == max_iter {
            return Err(Error::NonConvergence { iterations: max_iter, residual });
        }
        if max_abs(&xi) > DIVERGENCE_NORM || current.min_weight < crate::classical::FAITHFUL_FLOOR {
            return Err(infeasible(&xi, residual));
        }
        let chol = match current.hessian.cholesky() {
            Ok(c) => c,
            Err(_) => return Err(infeasible(&xi, residual)),
        };
        // Newton direction Δ = V⁻¹(η − m); slope ∇D·Δ = −(η−m)ᵀV⁻¹(η−m) < 0
        let step = chol.solve(&excess);
        let slope = -dot(&excess, &step);
        // Full step first: near the optimum the objective is flat to rounding,
        // so a step that halves the mean residual is accepted on that basis.
        let full: Vec<f64> = xi.iter().zip(&step).map(|(x, d)| x + d).collect();
        let mut accepted = None;
        if let Ok(next) = dual.eval(&full) {
            let obj = next.psi + dot(&full, target);
            let r = next.means.iter().zip(target).fold(0.0, |m: f64, (e, t)| m.max((e - t).abs()));
            if obj.is_finite() && (obj <= objective + ARMIJO_SLOPE * slope || r < 0.5 * residual) {
                accepted = Some((full, obj, next));
            }
        }
        if accepted.is_none() {
            let mut s = BACKTRACK;
            for _ in 0..60 {
                let cand: Vec<f64> = xi.iter().zip(&step).map(|(x, d)| x + s * d).collect();
                if let Ok(psi) = dual.psi(&cand) {
                    let obj = psi + dot(&cand, target);
                    if obj.is_finite() && obj <= objective + ARMIJO_SLOPE * s * slope {
                        if let Ok(next) = dual.eval(&cand) {
                            accepted = Some((cand, obj, next));
                        }
                        break;
                    }
                }
                s *= BACKTRACK;
            }
        }
        let Some((cand, obj, next)) = accepted else {
            // no descent possible at double precision
            if max_abs(&xi) > 0.1 * DIVERGENCE_NORM {
                return Err(infeasible(&xi, residual));
            }
            return Err(Error::NonConvergence { iterations: iteration, residual });
        };
        xi = cand;
        objective = obj;
        history.push(objective);
        current = next;
    }
    unreachable!("loop returns on its last iteration")
}

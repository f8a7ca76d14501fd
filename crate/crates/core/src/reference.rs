//! Centralized oracle for `f*` and `x*`.
//!
//! Projected gradient descent on `Σ_v f_v` over `∩_v S_v`, with each
//! projection computed by Dykstra. Its output is certified separately by a
//! KKT residual: the distance from `-Σ_v ∇f_v(x)` to the normal cone of the
//! intersection, spanned by the active constraint normals.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::nnls;
use crate::problems::{dykstra_project, ConvexSet, ProblemInstance};

/// Constraints within this distance of `x` count as active.
pub const ACTIVITY_TOL: f64 = 1e-7;
/// Points farther than this from some set are rejected by [`kkt_residual`].
pub const FEASIBILITY_TOL: f64 = 1e-6;

const PROJECTION_SWEEPS: usize = 20_000;
const PROJECTION_TOL: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("point is {distance:e} from constraint set {node}")]
    Infeasible { node: usize, distance: f64 },
    #[error("step must be positive and finite, got {0}")]
    Step(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub kkt_residual: f64,
    pub iterations_used: usize,
    /// Whether the step-length test was met within the budget.
    pub converged: bool,
    pub step: f64,
    /// Whether the objective never increased by more than rounding.
    pub monotone: bool,
}

fn project_all(instance: &ProblemInstance, x: &[f64]) -> Vec<f64> {
    if instance.is_unconstrained() {
        return x.to_vec();
    }
    dykstra_project(instance.constraints(), x, PROJECTION_SWEEPS, PROJECTION_TOL).point
}

/// Projected gradient descent from the feasibility witness (or the origin).
///
/// `step` defaults to `1 / Σ_v L_v`. Stops when an update moves by at most
/// `tol` or after `iters` updates.
pub fn centralized_solve(
    instance: &ProblemInstance,
    step: Option<f64>,
    iters: usize,
    tol: f64,
) -> Result<ReferenceSolution, ReferenceError> {
    let step = step.unwrap_or_else(|| 1.0 / instance.total_smoothness());
    if !(step.is_finite() && step > 0.0) {
        return Err(ReferenceError::Step(step));
    }
    let start = instance
        .feasibility_witness()
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| vec![0.0; instance.dim()]);
    let mut x = project_all(instance, &start);
    let mut value = instance.total_value(&x);
    let mut monotone = true;
    let mut converged = false;
    let mut used = 0;
    for k in 1..=iters {
        let grad = instance.total_gradient(&x);
        let moved: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        let next = project_all(instance, &moved);
        let change = next.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let next_value = instance.total_value(&next);
        if next_value > value + 1e-12 * (1.0 + value.abs()) {
            monotone = false;
        }
        x = next;
        value = next_value;
        used = k;
        if change <= tol {
            converged = true;
            break;
        }
    }
    let kkt = kkt_residual(instance, &x).unwrap_or(f64::INFINITY);
    Ok(ReferenceSolution {
        f_star: value,
        x_star: x,
        kkt_residual: kkt,
        iterations_used: used,
        converged,
        step,
        monotone,
    })
}

/// `min_{λ ≥ 0} ‖Σ_v ∇f_v(x) + Σ_k λ_k n_k‖` over active constraint normals.
pub fn kkt_residual(instance: &ProblemInstance, x: &[f64]) -> Result<f64, ReferenceError> {
    let mut generators = Vec::new();
    for (node, set) in instance.constraints().iter().enumerate() {
        let distance = set.distance(x);
        if distance > FEASIBILITY_TOL {
            return Err(ReferenceError::Infeasible { node, distance });
        }
        generators.extend(set.normal_cone_generators(x, ACTIVITY_TOL));
    }
    let grad = DVector::from_vec(instance.total_gradient(x));
    if generators.is_empty() {
        return Ok(grad.norm());
    }
    let a = DMatrix::from_fn(x.len(), generators.len(), |i, k| generators[k][i]);
    let b = -&grad;
    let lambda = nnls(&a, &b, 50 * generators.len().max(10));
    Ok((a * lambda - b).norm())
}

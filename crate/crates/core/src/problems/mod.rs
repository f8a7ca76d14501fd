//! Local objectives, local constraint sets and problem instances.
//!
//! Every node `v` owns a smooth convex `f_v` and a closed convex `S_v`; the
//! network solves `min Σ_v f_v(x)` subject to `x ∈ ∩_v S_v`. Objectives and
//! sets are plain data (serializable, `Send + Sync`) that implement
//! [`SmoothConvexFunction`] and [`ConvexSet`].

mod dykstra;
mod functions;
mod generate;
mod sets;

pub use dykstra::{dykstra_project, DykstraOutcome};
pub use functions::{log_cosh, sigmoid, softplus, LogCosh, LogisticLoss, Quadratic};
pub use generate::{generate_logistic_instance, generate_synthetic_instance};
pub use sets::{Ball, BoxSet, Halfspace, WholeSpace};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A convex, differentiable, `L`-smooth function on `ℝ^m`.
pub trait SmoothConvexFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    /// Lipschitz constant of the gradient.
    fn smoothness_bound(&self) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.gradient_into(x, &mut out);
        out
    }
}

/// A nonempty closed convex set with a Euclidean projection.
pub trait ConvexSet {
    fn dim(&self) -> usize;
    fn project_into(&self, x: &[f64], out: &mut [f64]);

    fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.project_into(x, &mut out);
        out
    }

    fn distance(&self, x: &[f64]) -> f64 {
        dist(x, &self.project(x))
    }

    fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.distance(x) <= tol
    }
}

/// The objective families used by the experiments and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Objective {
    LogCosh(LogCosh),
    Logistic(LogisticLoss),
    Quadratic(Quadratic),
}

impl SmoothConvexFunction for Objective {
    fn dim(&self) -> usize {
        match self {
            Objective::LogCosh(f) => f.dim(),
            Objective::Logistic(f) => f.dim(),
            Objective::Quadratic(f) => f.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::LogCosh(f) => f.value(x),
            Objective::Logistic(f) => f.value(x),
            Objective::Quadratic(f) => f.value(x),
        }
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Objective::LogCosh(f) => f.gradient_into(x, out),
            Objective::Logistic(f) => f.gradient_into(x, out),
            Objective::Quadratic(f) => f.gradient_into(x, out),
        }
    }

    fn smoothness_bound(&self) -> f64 {
        match self {
            Objective::LogCosh(f) => f.smoothness_bound(),
            Objective::Logistic(f) => f.smoothness_bound(),
            Objective::Quadratic(f) => f.smoothness_bound(),
        }
    }
}

/// The constraint families with closed-form projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Constraint {
    WholeSpace(WholeSpace),
    Halfspace(Halfspace),
    Box(BoxSet),
    Ball(Ball),
}

impl Constraint {
    pub fn is_whole_space(&self) -> bool {
        matches!(self, Constraint::WholeSpace(_))
    }

    /// Outward normals of the set at `x` whose nonnegative combinations span
    /// the normal cone there. A boundary point is one within `active_tol`.
    pub fn normal_cone_generators(&self, x: &[f64], active_tol: f64) -> Vec<Vec<f64>> {
        match self {
            Constraint::WholeSpace(_) => Vec::new(),
            Constraint::Halfspace(h) => {
                if h.violation(x) >= -active_tol * dot(&h.c, &h.c).sqrt() {
                    vec![h.c.clone()]
                } else {
                    Vec::new()
                }
            }
            Constraint::Box(b) => {
                let mut gens = Vec::new();
                for k in 0..x.len() {
                    let mut e = vec![0.0; x.len()];
                    if x[k] >= b.hi[k] - active_tol {
                        e[k] = 1.0;
                        gens.push(e.clone());
                        e[k] = 0.0;
                    }
                    if x[k] <= b.lo[k] + active_tol {
                        e[k] = -1.0;
                        gens.push(e);
                    }
                }
                gens
            }
            Constraint::Ball(b) => {
                let r = dist(x, &b.center);
                if r >= b.radius - active_tol && r > 0.0 {
                    vec![x.iter().zip(&b.center).map(|(a, c)| (a - c) / r).collect()]
                } else {
                    Vec::new()
                }
            }
        }
    }
}

impl ConvexSet for Constraint {
    fn dim(&self) -> usize {
        match self {
            Constraint::WholeSpace(s) => s.dim(),
            Constraint::Halfspace(s) => s.dim(),
            Constraint::Box(s) => s.dim(),
            Constraint::Ball(s) => s.dim(),
        }
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Constraint::WholeSpace(s) => s.project_into(x, out),
            Constraint::Halfspace(s) => s.project_into(x, out),
            Constraint::Box(s) => s.project_into(x, out),
            Constraint::Ball(s) => s.project_into(x, out),
        }
    }

    fn distance(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::WholeSpace(s) => s.distance(x),
            Constraint::Halfspace(s) => s.distance(x),
            Constraint::Box(s) => s.distance(x),
            Constraint::Ball(s) => s.distance(x),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("expected {expected} per-node entries, found {found}")]
    NodeCount { expected: usize, found: usize },
    #[error("node {node}: dimension {found} does not match instance dimension {expected}")]
    Dimension { node: usize, expected: usize, found: usize },
    #[error("instance must have at least one node and one dimension")]
    Empty,
    #[error("instance file: {0}")]
    Format(String),
}

/// What generated an instance; carried for replay and reporting.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub kind: String,
    pub seed: Option<u64>,
    /// Global regularization weight of a logistic instance (`1/N_s`).
    pub regularization: Option<f64>,
}

/// `M` nodes, each with an objective and a constraint on `ℝ^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    dim: usize,
    objectives: Vec<Objective>,
    constraints: Vec<Constraint>,
    /// A point known to lie in every `S_v`. Kept for tests and diagnostics;
    /// algorithms never read it.
    witness: Option<Vec<f64>>,
    meta: InstanceMeta,
}

impl ProblemInstance {
    pub fn new(
        dim: usize,
        objectives: Vec<Objective>,
        constraints: Vec<Constraint>,
        witness: Option<Vec<f64>>,
        meta: InstanceMeta,
    ) -> Result<Self, ProblemError> {
        if dim == 0 || objectives.is_empty() {
            return Err(ProblemError::Empty);
        }
        if constraints.len() != objectives.len() {
            return Err(ProblemError::NodeCount {
                expected: objectives.len(),
                found: constraints.len(),
            });
        }
        for (node, (f, s)) in objectives.iter().zip(&constraints).enumerate() {
            for found in [f.dim(), s.dim()] {
                if found != dim {
                    return Err(ProblemError::Dimension {
                        node,
                        expected: dim,
                        found,
                    });
                }
            }
        }
        if let Some(w) = &witness {
            if w.len() != dim {
                return Err(ProblemError::Dimension {
                    node: 0,
                    expected: dim,
                    found: w.len(),
                });
            }
        }
        Ok(Self {
            dim,
            objectives,
            constraints,
            witness,
            meta,
        })
    }

    /// Unconstrained instance from objectives alone.
    pub fn unconstrained(dim: usize, objectives: Vec<Objective>) -> Result<Self, ProblemError> {
        let constraints = vec![Constraint::WholeSpace(WholeSpace { dim }); objectives.len()];
        Self::new(
            dim,
            objectives,
            constraints,
            Some(vec![0.0; dim]),
            InstanceMeta {
                kind: "custom".into(),
                seed: None,
                regularization: None,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.objectives.len()
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self, v: usize) -> &Objective {
        &self.objectives[v]
    }

    pub fn constraint(&self, v: usize) -> &Constraint {
        &self.constraints[v]
    }

    pub fn feasibility_witness(&self) -> Option<&[f64]> {
        self.witness.as_deref()
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub fn is_unconstrained(&self) -> bool {
        self.constraints.iter().all(Constraint::is_whole_space)
    }

    /// `Σ_v f_v(x)`.
    pub fn total_value(&self, x: &[f64]) -> f64 {
        self.objectives.iter().map(|f| f.value(x)).sum()
    }

    /// `Σ_v ∇f_v(x)`.
    pub fn total_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.dim];
        let mut g = vec![0.0; self.dim];
        for f in &self.objectives {
            f.gradient_into(x, &mut g);
            for (t, gi) in total.iter_mut().zip(&g) {
                *t += gi;
            }
        }
        total
    }

    /// Largest per-node smoothness bound.
    pub fn max_smoothness(&self) -> f64 {
        self.objectives.iter().map(|f| f.smoothness_bound()).fold(0.0, f64::max)
    }

    /// Sum of per-node smoothness bounds (a bound for `Σ_v f_v`).
    pub fn total_smoothness(&self) -> f64 {
        self.objectives.iter().map(|f| f.smoothness_bound()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ProblemError> {
        let raw: ProblemInstance = serde_json::from_str(text).map_err(|e| ProblemError::Format(e.to_string()))?;
        Self::new(raw.dim, raw.objectives, raw.constraints, raw.witness, raw.meta)
    }
}

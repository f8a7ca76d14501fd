//! Smooth convex local objectives.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{dot, SmoothConvexFunction};

/// `f(x) = log cosh(aᵀx - b)`: smooth and convex but not strongly convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogCosh {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LogCosh {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    fn residual(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) - self.b
    }
}

/// `log cosh t` without overflow: `|t| + log1p(e^{-2|t|}) - log 2`.
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl SmoothConvexFunction for LogCosh {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        log_cosh(self.residual(x))
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let s = self.residual(x).tanh();
        for (o, a) in out.iter_mut().zip(&self.a) {
            *o = s * a;
        }
    }

    /// `(log cosh)'' = sech² ≤ 1`, so `L = ‖a‖²`.
    fn smoothness_bound(&self) -> f64 {
        dot(&self.a, &self.a)
    }
}

/// `log(1 + e^s)` computed stably.
pub fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// Logistic sigmoid computed stably.
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Regularized logistic loss over a node's samples:
/// `Σᵢ log(1 + exp(-yᵢ xᵢᵀw)) + (λ/2)‖w‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticLoss {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub lambda: f64,
    smoothness: f64,
}

impl LogisticLoss {
    /// Labels must be ±1. The smoothness bound is `λ_max(XᵀX)/4 + λ`.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<f64>, lambda: f64) -> Self {
        assert_eq!(features.len(), labels.len(), "one label per sample");
        assert!(labels.iter().all(|&y| y == 1.0 || y == -1.0), "labels must be ±1");
        assert!(lambda >= 0.0, "regularization must be nonnegative");
        let dim = features.first().map_or(0, Vec::len);
        let smoothness = if features.is_empty() {
            lambda
        } else {
            let x = DMatrix::from_fn(features.len(), dim, |i, j| features[i][j]);
            let gram = x.transpose() * x;
            gram.symmetric_eigenvalues().max() / 4.0 + lambda
        };
        Self {
            features,
            labels,
            lambda,
            smoothness,
        }
    }

    pub fn sample_count(&self) -> usize {
        self.labels.len()
    }

    fn margins<'a>(&'a self, w: &'a [f64]) -> impl Iterator<Item = (&'a Vec<f64>, f64, f64)> + 'a {
        self.features
            .iter()
            .zip(&self.labels)
            .map(move |(x, &y)| (x, y, y * dot(x, w)))
    }
}

impl SmoothConvexFunction for LogisticLoss {
    fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn value(&self, w: &[f64]) -> f64 {
        let loss: f64 = self.margins(w).map(|(_, _, m)| softplus(-m)).sum();
        loss + 0.5 * self.lambda * dot(w, w)
    }

    fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        for (o, wi) in out.iter_mut().zip(w) {
            *o = self.lambda * wi;
        }
        for (x, y, m) in self.margins(w) {
            let coeff = -y * sigmoid(-m);
            for (o, xi) in out.iter_mut().zip(x) {
                *o += coeff * xi;
            }
        }
    }

    fn smoothness_bound(&self) -> f64 {
        self.smoothness
    }
}

/// `f(x) = (weight/2)‖x - center‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub weight: f64,
}

impl Quadratic {
    pub fn new(center: Vec<f64>, weight: f64) -> Self {
        Self { center, weight }
    }
}

impl SmoothConvexFunction for Quadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        0.5 * self.weight * sq
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = self.weight * (a - c);
        }
    }

    fn smoothness_bound(&self) -> f64 {
        self.weight
    }
}

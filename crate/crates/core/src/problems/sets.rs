//! Closed convex sets with closed-form projections.

use serde::{Deserialize, Serialize};

use super::{dot, ConvexSet};

/// `ℝ^m`; projection is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WholeSpace {
    pub dim: usize,
}

impl ConvexSet for WholeSpace {
    fn dim(&self) -> usize {
        self.dim
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn distance(&self, _x: &[f64]) -> f64 {
        0.0
    }
}

/// `{x : cᵀx ≤ d}` with `c ≠ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub c: Vec<f64>,
    pub d: f64,
}

impl Halfspace {
    pub fn new(c: Vec<f64>, d: f64) -> Self {
        assert!(dot(&c, &c) > 0.0, "halfspace normal must be nonzero");
        Self { c, d }
    }

    /// `cᵀx - d`; positive outside the set.
    pub fn violation(&self, x: &[f64]) -> f64 {
        dot(&self.c, x) - self.d
    }
}

impl ConvexSet for Halfspace {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
        let excess = self.violation(x);
        if excess > 0.0 {
            let scale = excess / dot(&self.c, &self.c);
            for (o, c) in out.iter_mut().zip(&self.c) {
                *o -= scale * c;
            }
        }
    }

    fn distance(&self, x: &[f64]) -> f64 {
        self.violation(x).max(0.0) / dot(&self.c, &self.c).sqrt()
    }
}

/// Axis-aligned box `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(l, h)| l <= h), "empty box");
        Self { lo, hi }
    }
}

impl ConvexSet for BoxSet {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = x[k].clamp(self.lo[k], self.hi[k]);
        }
    }
}

/// Euclidean ball `‖x - center‖ ≤ radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius >= 0.0);
        Self { center, radius }
    }
}

impl ConvexSet for Ball {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        let dist = x
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum::<f64>()
            .sqrt();
        if dist <= self.radius {
            out.copy_from_slice(x);
        } else {
            let scale = self.radius / dist;
            for ((o, a), c) in out.iter_mut().zip(x).zip(&self.center) {
                *o = c + scale * (a - c);
            }
        }
    }
}

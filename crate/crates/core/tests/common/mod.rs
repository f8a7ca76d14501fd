//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central finite-difference gradient with step `h·max(1, |xᵢ|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            xp[i] = x[i] + step;
            let up = f(&xp);
            xp[i] = x[i] - step;
            let down = f(&xp);
            xp[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `‖a - b‖ / max(‖b‖, 1)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    norm(&sub(a, b)) / norm(b).max(1.0)
}

/// Exact Euclidean projection onto `{y : Cy ≤ d}` by enumerating active sets.
///
/// For each subset `A` with linearly independent rows, solves the equality
/// KKT system `y = x - C_Aᵀλ`, `C_A y = d_A`; the unique point with `λ ≥ 0`
/// that is also feasible is the projection. Exponential in the number of
/// constraints, so only for small instances.
pub fn qp_projection(normals: &[Vec<f64>], offsets: &[f64], x: &[f64]) -> Vec<f64> {
    let k = normals.len();
    let m = x.len();
    let xv = DVector::from_column_slice(x);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << k) {
        let active: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > m {
            continue;
        }
        let y = if active.is_empty() {
            xv.clone()
        } else {
            let c = DMatrix::from_fn(active.len(), m, |r, j| normals[active[r]][j]);
            let rhs = DVector::from_fn(active.len(), |r, _| inner(&normals[active[r]], x) - offsets[active[r]]);
            let gram = &c * c.transpose();
            let Some(lambda) = gram.clone().lu().solve(&rhs) else {
                continue;
            };
            if (&gram * &lambda - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
                continue;
            }
            if lambda.iter().any(|&l| l < -1e-12) {
                continue;
            }
            &xv - c.transpose() * lambda
        };
        let feasible = (0..k).all(|i| inner(&normals[i], y.as_slice()) - offsets[i] <= 1e-10);
        if feasible {
            let d = (&y - &xv).norm();
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, y.as_slice().to_vec()));
            }
        }
    }
    best.expect("feasible set is nonempty").1
}

/// Random halfspaces `cᵢᵀy ≤ dᵢ` all strictly satisfied by a hidden point.
pub fn random_halfspaces(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let witness = normal_vec(rng, dim);
    let mut normals = Vec::new();
    let mut offsets = Vec::new();
    for _ in 0..count {
        let c = normal_vec(rng, dim);
        let slack: f64 = StandardNormal.sample(rng);
        offsets.push(inner(&c, &witness) + 0.1 * slack.abs());
        normals.push(c);
    }
    (normals, offsets)
}

//! Projection onto an intersection of convex sets by Dykstra's algorithm.

use super::{dist, ConvexSet};

#[derive(Debug, Clone, PartialEq)]
pub struct DykstraOutcome {
    pub point: Vec<f64>,
    /// Stopping test met before `iters` sweeps ran out.
    pub converged: bool,
    pub sweeps: usize,
    /// `max_i distance(point, S_i)` at return.
    pub max_distance: f64,
}

/// Approximates `P_{∩ S_i}(x)`.
///
/// Each sweep visits the sets in order, carrying one correction vector per
/// set. Stops once the iterate lies within `tol` of every set and moved by at
/// most `tol` over the last sweep; otherwise returns the last iterate after
/// `iters` sweeps with `converged = false`.
pub fn dykstra_project<S: ConvexSet>(sets: &[S], x: &[f64], iters: usize, tol: f64) -> DykstraOutcome {
    assert!(!sets.is_empty(), "dykstra_project needs at least one set");
    let m = x.len();
    let mut y = x.to_vec();
    let mut corrections = vec![vec![0.0; m]; sets.len()];
    let mut z = vec![0.0; m];
    let mut next = vec![0.0; m];
    let max_distance = |y: &[f64]| sets.iter().map(|s| s.distance(y)).fold(0.0, f64::max);

    for sweep in 1..=iters {
        let start = y.clone();
        for (set, p) in sets.iter().zip(corrections.iter_mut()) {
            for k in 0..m {
                z[k] = y[k] + p[k];
            }
            set.project_into(&z, &mut next);
            for k in 0..m {
                p[k] = z[k] - next[k];
            }
            std::mem::swap(&mut y, &mut next);
        }
        let moved = dist(&start, &y);
        if moved <= tol {
            let worst = max_distance(&y);
            if worst <= tol {
                return DykstraOutcome {
                    point: y,
                    converged: true,
                    sweeps: sweep,
                    max_distance: worst,
                };
            }
        }
    }
    let worst = max_distance(&y);
    DykstraOutcome {
        point: y,
        converged: false,
        sweeps: iters,
        max_distance: worst,
    }
}

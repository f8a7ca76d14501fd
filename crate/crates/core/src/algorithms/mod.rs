//! Decentralized methods behind a synchronous-round stepper interface.
//!
//! Each algorithm owns its per-node state as `M × m` matrices (row `v` is
//! node `v`). One call to [`Stepper::step`] is one synchronous round: every
//! node reads only round-`n` values of itself and its in-neighbors. Per-node
//! work (gradients, projections) runs on the rayon pool; mixing products and
//! all cross-node reductions run in a fixed order, so results are bitwise
//! identical for any worker count.

mod baselines;
mod dagp;
mod message_passing;
mod runner;

pub use baselines::{AddOpt, Ddps, DiminishingStep, ProjDgd, PushPull};
pub use dagp::{
    broadcast_message, check_stopping_point, dagp_init, dagp_step, Dagp, DagpHyperParams, DagpState, OptimalityReport,
};
pub use message_passing::MessagePassingDagp;
pub use runner::{run, RunError, RunOptions};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::mixing::GossipPair;
use crate::problems::{ConvexSet, ProblemInstance, SmoothConvexFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgorithmError {
    #[error("{algorithm}: non-finite value produced in round {round}")]
    NonFinite { algorithm: &'static str, round: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid hyperparameter {name} = {value}")]
    HyperParam { name: &'static str, value: f64 },
}

/// One synchronous round of a decentralized method.
pub trait Stepper: Send {
    fn name(&self) -> &'static str;

    /// Completed rounds.
    fn round(&self) -> usize;

    /// Current local estimates, one row per node.
    fn iterates(&self) -> &DMatrix<f64>;

    /// Advances every node by one round.
    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError>;

    /// `‖Σ_v gᵛ‖` for methods with a tracker, otherwise the norm of the summed
    /// local gradients at the current estimates.
    fn grad_sum_norm(&self, instance: &ProblemInstance) -> f64;

    /// `(‖Σ_v hᵛ‖, ‖H‖_F)` for methods with a sum-preserving tracker.
    fn conservation(&self) -> Option<(f64, f64)> {
        None
    }

    /// Hyperparameters for trace metadata.
    fn hyperparameters(&self) -> Vec<(&'static str, f64)>;
}

/// Initial local iterates: row `v` drawn i.i.d. `N(0, 1)` in node order.
pub fn initial_iterates(nodes: usize, dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(nodes, dim);
    for v in 0..nodes {
        for j in 0..dim {
            x[(v, j)] = StandardNormal.sample(&mut rng);
        }
    }
    x
}

pub(crate) fn check_shapes(
    instance: &ProblemInstance,
    gossip: &GossipPair,
    x: &DMatrix<f64>,
) -> Result<(), AlgorithmError> {
    let (nodes, dim) = (instance.node_count(), instance.dim());
    if gossip.node_count() != nodes {
        return Err(AlgorithmError::Dimension(format!(
            "gossip pair has {} nodes, instance has {nodes}",
            gossip.node_count()
        )));
    }
    if x.shape() != (nodes, dim) {
        return Err(AlgorithmError::Dimension(format!(
            "iterates are {:?}, expected ({nodes}, {dim})",
            x.shape()
        )));
    }
    Ok(())
}

/// Applies `f(v, row_v)` to every node in parallel and stacks the results.
pub(crate) fn map_rows<F>(x: &DMatrix<f64>, f: F) -> DMatrix<f64>
where
    F: Fn(usize, &[f64]) -> Vec<f64> + Sync,
{
    let (nodes, dim) = x.shape();
    let rows: Vec<Vec<f64>> = (0..nodes)
        .into_par_iter()
        .map(|v| {
            let row: Vec<f64> = x.row(v).iter().copied().collect();
            f(v, &row)
        })
        .collect();
    DMatrix::from_fn(nodes, dim, |v, j| rows[v][j])
}

/// Row `v` is `∇f_v(x_v)`.
pub(crate) fn local_gradients(instance: &ProblemInstance, x: &DMatrix<f64>) -> DMatrix<f64> {
    map_rows(x, |v, row| instance.objective(v).gradient(row))
}

/// Row `v` is `P_{S_v}(z_v)`.
pub(crate) fn local_projections(instance: &ProblemInstance, z: &DMatrix<f64>) -> DMatrix<f64> {
    map_rows(z, |v, row| instance.constraint(v).project(row))
}

pub(crate) fn all_finite(mats: &[&DMatrix<f64>]) -> bool {
    mats.iter().all(|m| m.iter().all(|v| v.is_finite()))
}

/// Column sums in node order, as a plain vector.
pub(crate) fn node_sum(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; m.ncols()];
    for v in 0..m.nrows() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += m[(v, j)];
        }
    }
    out
}

pub(crate) fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

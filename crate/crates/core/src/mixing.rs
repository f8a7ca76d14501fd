//! Gossip matrices for directed graphs.
//!
//! DAGP averages twice per round: once with a zero row-sum matrix `W`
//! (consensus on `x`) and once with a zero column-sum matrix `Q` (the tracker
//! `h` keeps its network-wide sum). Both are scaled Laplacians:
//!
//! ```text
//! W = L_in  / (2 · d_max_in)        Q = L_out / (2 · d_max_out)
//! ```
//!
//! `I - W` is then row stochastic and `I - Q` column stochastic, which is what
//! the Push-Pull, ADD-OPT and DDPS baselines consume.
//!
//! The analysis additionally needs `ker(W) = span{1}` and `ker(Q) = ker(Wᵀ)`.
//! The first always holds for a strongly connected graph; the second is not
//! guaranteed by the Laplacian recipe on unbalanced digraphs, so
//! [`verify_kernel_conditions`] measures it instead of assuming it.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DirectedGraph;
use crate::linalg::{max_principal_angle, null_space};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MixingError {
    #[error("graph with {0} nodes has no incoming or outgoing edges")]
    Degenerate(usize),
    #[error("graph is not strongly connected")]
    NotStronglyConnected,
}

/// Zero row-sum `W` and zero column-sum `Q` built on one graph.
#[derive(Debug, Clone)]
pub struct GossipPair {
    pub w: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub graph: DirectedGraph,
}

impl GossipPair {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// `I - W`: nonnegative, rows sum to one.
    pub fn row_stochastic(&self) -> DMatrix<f64> {
        row_stochastic(&self.w)
    }

    /// `I - Q`: nonnegative, columns sum to one.
    pub fn column_stochastic(&self) -> DMatrix<f64> {
        column_stochastic(&self.q)
    }
}

/// Scales the two Laplacians of `graph` into the gossip pair.
pub fn build_gossip_pair(graph: &DirectedGraph) -> Result<GossipPair, MixingError> {
    let m = graph.node_count();
    if m == 1 {
        return Ok(GossipPair {
            w: DMatrix::zeros(1, 1),
            q: DMatrix::zeros(1, 1),
            graph: graph.clone(),
        });
    }
    let d_max_in = (0..m).map(|v| graph.in_degree(v)).max().unwrap_or(0);
    let d_max_out = (0..m).map(|v| graph.out_degree(v)).max().unwrap_or(0);
    if d_max_in == 0 || d_max_out == 0 {
        return Err(MixingError::Degenerate(m));
    }
    if !graph.is_strongly_connected() {
        return Err(MixingError::NotStronglyConnected);
    }
    let (l_in, l_out) = graph.laplacians();
    Ok(GossipPair {
        w: l_in / (2.0 * d_max_in as f64),
        q: l_out / (2.0 * d_max_out as f64),
        graph: graph.clone(),
    })
}

pub fn row_stochastic(w: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(w.nrows(), w.ncols()) - w
}

pub fn column_stochastic(q: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(q.nrows(), q.ncols()) - q
}

/// Outcome of the kernel checks on a gossip pair. Never aborts; every check
/// carries its own flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub node_count: usize,
    /// `‖W·1‖_∞`
    pub w_row_sum_residual: f64,
    /// `‖1ᵀ·Q‖_∞`
    pub q_column_sum_residual: f64,
    pub dim_ker_w: usize,
    /// `ker(W) = span{1}`
    pub ker_w_is_consensus: bool,
    pub dim_ker_q: usize,
    pub dim_ker_w_transpose: usize,
    /// Largest principal angle between `ker(Q)` and `ker(Wᵀ)` (radians).
    pub kernel_angle: f64,
    /// `ker(Q) = ker(Wᵀ)` within the angle tolerance.
    pub ker_q_matches_ker_w_transpose: bool,
    /// Smallest `‖QWx‖ / ‖x‖` over the random probes with `x ⊥ 1`.
    pub min_qwx_ratio: f64,
    /// Every probe had `QWx ≠ 0`.
    pub qw_injective_off_consensus: bool,
    pub tolerance: f64,
}

impl KernelReport {
    pub fn all_pass(&self) -> bool {
        self.ker_w_is_consensus && self.ker_q_matches_ker_w_transpose && self.qw_injective_off_consensus
    }
}

/// Default principal-angle tolerance for kernel comparisons.
pub const KERNEL_TOL: f64 = 1e-8;
const RANK_REL_TOL: f64 = 1e-10;
const QWX_FLOOR: f64 = 1e-10;
const PROBES: usize = 16;

/// Checks the kernel assumptions on `(W, Q)` numerically.
///
/// Null spaces come from singular vectors with `σ ≤ 1e-10·σ_max`; subspaces
/// are compared by their largest principal angle against `tol`. The
/// `QWx ≠ 0` spot check uses a fixed probe seed so reports are reproducible.
pub fn verify_kernel_conditions(pair: &GossipPair, tol: f64) -> KernelReport {
    let m = pair.node_count();
    let ones = DVector::from_element(m, 1.0);
    let w_row = (&pair.w * &ones).amax();
    let q_col = (ones.transpose() * &pair.q).amax();

    let ker_w = null_space(&pair.w, RANK_REL_TOL);
    let ker_q = null_space(&pair.q, RANK_REL_TOL);
    let ker_wt = null_space(&pair.w.transpose(), RANK_REL_TOL);
    let unit_ones = DMatrix::from_element(m, 1, 1.0 / (m as f64).sqrt());
    let ker_w_is_consensus = ker_w.ncols() == 1 && max_principal_angle(&ker_w, &unit_ones) <= tol;
    let kernel_angle = max_principal_angle(&ker_q, &ker_wt);

    let qw = &pair.q * &pair.w;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut min_ratio = f64::INFINITY;
    if m > 1 {
        for _ in 0..PROBES {
            let mut x: DVector<f64> = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
            let mean = x.mean();
            x.add_scalar_mut(-mean);
            let ratio = (&qw * &x).norm() / x.norm();
            min_ratio = min_ratio.min(ratio);
        }
    }

    KernelReport {
        node_count: m,
        w_row_sum_residual: w_row,
        q_column_sum_residual: q_col,
        dim_ker_w: ker_w.ncols(),
        ker_w_is_consensus,
        dim_ker_q: ker_q.ncols(),
        dim_ker_w_transpose: ker_wt.ncols(),
        kernel_angle,
        ker_q_matches_ker_w_transpose: kernel_angle <= tol,
        min_qwx_ratio: min_ratio,
        qw_injective_off_consensus: m == 1 || min_ratio > QWX_FLOOR,
        tolerance: tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_cycle() -> GossipPair {
        build_gossip_pair(&DirectedGraph::cycle(3).unwrap()).unwrap()
    }

    #[test]
    fn three_cycle_weights() {
        let pair = three_cycle();
        for v in 0..3 {
            assert_eq!(pair.w[(v, v)], 0.5);
            assert_eq!(pair.w[((v + 1) % 3, v)], -0.5);
            assert_eq!(pair.w[(v, (v + 1) % 3)], 0.0);
        }
        assert_eq!(pair.w, pair.q);
        let r = pair.row_stochastic();
        assert_eq!(r[(0, 0)], 0.5);
        assert_eq!(r[(1, 0)], 0.5);
    }

    #[test]
    fn single_node_is_zero() {
        let g = DirectedGraph::new(1, []).unwrap();
        let pair = build_gossip_pair(&g).unwrap();
        assert_eq!(pair.w, DMatrix::zeros(1, 1));
        assert_eq!(pair.q, DMatrix::zeros(1, 1));
        assert!(verify_kernel_conditions(&pair, KERNEL_TOL).all_pass());
    }

    #[test]
    fn degenerate_and_disconnected_graphs_rejected() {
        let g = DirectedGraph::new(3, []).unwrap();
        assert_eq!(build_gossip_pair(&g).unwrap_err(), MixingError::Degenerate(3));
        let g = DirectedGraph::new(3, [(1, 0), (2, 1)]).unwrap();
        assert_eq!(build_gossip_pair(&g).unwrap_err(), MixingError::NotStronglyConnected);
    }

    #[test]
    fn random_graph_has_rank_deficiency_one() {
        let g = DirectedGraph::random_strongly_connected(10, 0.3, 7).unwrap();
        let pair = build_gossip_pair(&g).unwrap();
        let sv = pair.w.clone().svd(false, false).singular_values;
        let sigma_max = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sigma_max).count();
        assert_eq!(rank, 9);
        let cs = pair.column_stochastic();
        for j in 0..10 {
            assert!((cs.column(j).sum() - 1.0).abs() <= 1e-12);
        }
        let rs = pair.row_stochastic();
        assert!(rs.iter().chain(cs.iter()).all(|&v| v >= 0.0));
        for i in 0..10 {
            assert!((rs.row(i).sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sparsity_and_magnitude() {
        let g = DirectedGraph::random_strongly_connected(9, 0.2, 21).unwrap();
        let pair = build_gossip_pair(&g).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                if i != j && !g.has_edge(i, j) {
                    assert_eq!(pair.w[(i, j)], 0.0);
                    assert_eq!(pair.q[(i, j)], 0.0);
                }
                assert!(pair.w[(i, j)].abs() <= 1.0 && pair.q[(i, j)].abs() <= 1.0);
            }
        }
    }

    #[test]
    fn balanced_graphs_pass_all_kernel_checks() {
        let report = verify_kernel_conditions(&three_cycle(), KERNEL_TOL);
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.dim_ker_w, 1);

        let complete = build_gossip_pair(&DirectedGraph::complete(4).unwrap()).unwrap();
        let report = verify_kernel_conditions(&complete, KERNEL_TOL);
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn kernel_report_on_unbalanced_graphs_is_consistent() {
        // If ker(Q) = ker(Wᵀ) then QWx ≠ 0 for x ⊥ 1. Check only the
        // conditional form; the hypothesis itself may fail on unbalanced graphs.
        for seed in 0..100 {
            let g = DirectedGraph::random_strongly_connected(6, 0.3, seed).unwrap();
            let pair = build_gossip_pair(&g).unwrap();
            let report = verify_kernel_conditions(&pair, KERNEL_TOL);
            assert_eq!(report.dim_ker_w, 1);
            assert!(report.ker_w_is_consensus);
            if report.ker_q_matches_ker_w_transpose {
                assert!(report.qw_injective_off_consensus, "seed {seed}: {report:?}");
            }
            let ones = DVector::from_element(6, 1.0);
            assert!((&pair.q * &pair.w * ones).amax() <= 1e-12);
        }
    }
}

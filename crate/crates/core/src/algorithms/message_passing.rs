//! DAGP written node by node. Each node keeps its own `(x, g, h)` and, per
//! round, reads only its local weights and the `(x_u, h_u - g_u)` messages
//! of its in-neighbors.

use super::dagp::{DagpHyperParams, DagpState};
use super::AlgorithmError;
use crate::mixing::GossipPair;
use crate::problems::{ConvexSet, ProblemInstance, SmoothConvexFunction};
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
struct Node {
    x: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    /// `(u, w_vu, q_vu)` for `u` in the in-neighborhood.
    incoming: Vec<(usize, f64, f64)>,
    w_self: f64,
    q_self: f64,
}

#[derive(Debug, Clone)]
pub struct MessagePassingDagp {
    nodes: Vec<Node>,
    params: DagpHyperParams,
    n: usize,
}

impl MessagePassingDagp {
    /// Splits a matrix-form state into per-node copies.
    pub fn from_state(state: &DagpState, gossip: &GossipPair, params: DagpHyperParams) -> Self {
        let row = |m: &DMatrix<f64>, v: usize| m.row(v).iter().copied().collect::<Vec<_>>();
        let nodes = (0..state.x.nrows())
            .map(|v| Node {
                x: row(&state.x, v),
                g: row(&state.g, v),
                h: row(&state.h, v),
                incoming: gossip
                    .graph
                    .in_neighbors(v)
                    .iter()
                    .map(|&u| (u, gossip.w[(v, u)], gossip.q[(v, u)]))
                    .collect(),
                w_self: gossip.w[(v, v)],
                q_self: gossip.q[(v, v)],
            })
            .collect();
        Self {
            nodes,
            params,
            n: state.n,
        }
    }

    pub fn round(&self) -> usize {
        self.n
    }

    /// One synchronous round: all messages are formed before any node updates.
    pub fn step(&mut self, instance: &ProblemInstance) -> Result<(), AlgorithmError> {
        let DagpHyperParams {
            step: mu,
            tracking_gain: rho,
            mixing_gain: alpha,
        } = self.params;
        let inbox: Vec<(Vec<f64>, Vec<f64>)> = self
            .nodes
            .iter()
            .map(|node| {
                let delta = node.h.iter().zip(&node.g).map(|(h, g)| h - g).collect();
                (node.x.clone(), delta)
            })
            .collect();

        let mut next = self.nodes.clone();
        for (v, node) in self.nodes.iter().enumerate() {
            let m = node.x.len();
            let grad = instance.objective(v).gradient(&node.x);
            let own_delta = &inbox[v].1;
            let mut z = vec![0.0; m];
            let mut h = vec![0.0; m];
            for j in 0..m {
                let mut wx = node.w_self * node.x[j];
                let mut qd = node.q_self * own_delta[j];
                for &(u, w, q) in &node.incoming {
                    wx += w * inbox[u].0[j];
                    qd += q * inbox[u].1[j];
                }
                z[j] = node.x[j] - wx - mu * (grad[j] - node.g[j]);
                h[j] = node.h[j] - qd;
            }
            let x = instance.constraint(v).project(&z);
            let g: Vec<f64> = (0..m)
                .map(|j| node.g[j] + rho * (grad[j] - node.g[j] + (z[j] - x[j]) / mu) + alpha * own_delta[j])
                .collect();
            if x.iter().chain(&g).chain(&h).any(|value| !value.is_finite()) {
                return Err(AlgorithmError::NonFinite {
                    algorithm: "dagp_message_passing",
                    round: self.n,
                });
            }
            next[v].x = x;
            next[v].g = g;
            next[v].h = h;
        }
        self.nodes = next;
        self.n += 1;
        Ok(())
    }

    /// Stacks node iterates into `(X, G, H)`.
    pub fn matrices(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let rows = self.nodes.len();
        let cols = self.nodes.first().map_or(0, |n| n.x.len());
        let stack = |f: &dyn Fn(&Node) -> &Vec<f64>| DMatrix::from_fn(rows, cols, |v, j| f(&self.nodes[v])[j]);
        (stack(&|n| &n.x), stack(&|n| &n.g), stack(&|n| &n.h))
    }
}

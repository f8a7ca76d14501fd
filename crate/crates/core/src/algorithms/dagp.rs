//! Double averaging and gradient projection.
//!
//! For every node `v`, one round reads `(x_u, h_u - g_u)` from in-neighbors
//! and performs
//!
//! ```text
//! z_v      = x_v - Σ_u w_vu x_u - μ (∇f_v(x_v) - g_v)
//! x_v⁺     = P_{S_v}(z_v)
//! g_v⁺     = g_v + ρ [∇f_v(x_v) - g_v + (z_v - x_v⁺)/μ] + α (h_v - g_v)
//! h_v⁺     = h_v - Σ_u q_vu (h_u - g_u)
//! ```
//!
//! where the sums include the diagonal weights, i.e. in matrix form
//! `Z = X - WX - μ(∇F - G)` and `H⁺ = H - Q(H - G)`. Because `1ᵀQ = 0`, the
//! network sum `Σ_v h_v` never changes; starting from `H = 0` it stays zero.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    all_finite, check_shapes, euclidean, initial_iterates, local_gradients, local_projections, node_sum,
    AlgorithmError, Stepper,
};
use crate::metrics::{consensus_spread, mean_iterate, DYKSTRA_ITERS, DYKSTRA_TOL};
use crate::mixing::GossipPair;
use crate::problems::{dykstra_project, ProblemInstance};

/// Step size `μ`, tracking gain `ρ`, mixing gain `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DagpHyperParams {
    pub step: f64,
    pub tracking_gain: f64,
    pub mixing_gain: f64,
}

impl Default for DagpHyperParams {
    fn default() -> Self {
        Self {
            step: 0.1,
            tracking_gain: 0.1,
            mixing_gain: 0.1,
        }
    }
}

impl DagpHyperParams {
    pub fn new(step: f64, tracking_gain: f64, mixing_gain: f64) -> Result<Self, AlgorithmError> {
        let params = Self {
            step,
            tracking_gain,
            mixing_gain,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), AlgorithmError> {
        for (name, value) in [
            ("step", self.step),
            ("tracking_gain", self.tracking_gain),
            ("mixing_gain", self.mixing_gain),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(AlgorithmError::HyperParam { name, value });
            }
        }
        Ok(())
    }
}

/// Per-node iterates `X`, trackers `G` and `H`, and the last pre-projection
/// point `Z`, all `M × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DagpState {
    pub x: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub n: usize,
}

impl DagpState {
    /// Starts from given iterates with `G = H = 0`.
    pub fn from_iterates(x: DMatrix<f64>) -> Self {
        let (nodes, dim) = x.shape();
        Self {
            z: x.clone(),
            x,
            g: DMatrix::zeros(nodes, dim),
            h: DMatrix::zeros(nodes, dim),
            n: 0,
        }
    }
}

/// `H = G = 0` and `X` drawn from `N(0, I)` with `x_init_seed`.
pub fn dagp_init(
    instance: &ProblemInstance,
    gossip: &GossipPair,
    params: &DagpHyperParams,
    x_init_seed: u64,
) -> Result<DagpState, AlgorithmError> {
    params.validate()?;
    let x = initial_iterates(instance.node_count(), instance.dim(), x_init_seed);
    check_shapes(instance, gossip, &x)?;
    Ok(DagpState::from_iterates(x))
}

/// One synchronous DAGP round in matrix form.
pub fn dagp_step(
    state: &DagpState,
    instance: &ProblemInstance,
    gossip: &GossipPair,
    params: &DagpHyperParams,
) -> Result<DagpState, AlgorithmError> {
    check_shapes(instance, gossip, &state.x)?;
    let DagpHyperParams {
        step: mu,
        tracking_gain: rho,
        mixing_gain: alpha,
    } = *params;

    let grad = local_gradients(instance, &state.x);
    let z = &state.x - &gossip.w * &state.x - (&grad - &state.g) * mu;
    let x_next = local_projections(instance, &z);
    let delta = &state.h - &state.g;
    let g_next = &state.g + (&grad - &state.g + (&z - &x_next) / mu) * rho + &delta * alpha;
    let h_next = &state.h - &gossip.q * &delta;

    if !all_finite(&[&z, &x_next, &g_next, &h_next]) {
        return Err(AlgorithmError::NonFinite {
            algorithm: "dagp",
            round: state.n,
        });
    }
    Ok(DagpState {
        x: x_next,
        g: g_next,
        h: h_next,
        z,
        n: state.n + 1,
    })
}

/// What node `v` broadcasts to its out-neighbors: `(x_v, h_v - g_v)`.
pub fn broadcast_message(state: &DagpState, v: usize) -> (Vec<f64>, Vec<f64>) {
    let x = state.x.row(v).iter().copied().collect();
    let delta = state
        .h
        .row(v)
        .iter()
        .zip(state.g.row(v).iter())
        .map(|(h, g)| h - g)
        .collect();
    (x, delta)
}

/// Residuals of the stationarity system a DAGP fixed point must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    /// `‖Z - (X - WX - μ(∇F - G))‖_F`
    pub z_residual: f64,
    /// `‖X - P_S(Z)‖_F`
    pub projection_residual: f64,
    /// `‖ρ[∇F - G + (Z - X)/μ] + α(H - G)‖_F`
    pub tracking_residual: f64,
    /// `‖Q(H - G)‖_F`
    pub mixing_residual: f64,
    /// `max_v ‖x_v - x̄‖`
    pub consensus_spread: f64,
    /// `‖1ᵀG‖`
    pub tracker_sum: f64,
    /// Distance from `x̄` to `∩ S_v`.
    pub feasibility_distance: f64,
    /// `Σ_v f_v(x̄)`
    pub objective: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluates how far `state` is from a DAGP stopping point.
///
/// At an exact stopping point all residuals vanish, the local iterates agree,
/// and their common value is optimal; the report is diagnostic only.
pub fn check_stopping_point(
    state: &DagpState,
    instance: &ProblemInstance,
    gossip: &GossipPair,
    params: &DagpHyperParams,
    tol: f64,
) -> OptimalityReport {
    let DagpHyperParams {
        step: mu,
        tracking_gain: rho,
        mixing_gain: alpha,
    } = *params;
    let grad = local_gradients(instance, &state.x);
    let z_model = &state.x - &gossip.w * &state.x - (&grad - &state.g) * mu;
    let z_residual = (&state.z - z_model).norm();
    let projection_residual = (&state.x - local_projections(instance, &state.z)).norm();
    let delta = &state.h - &state.g;
    let tracking_residual = ((&grad - &state.g + (&state.z - &state.x) / mu) * rho + &delta * alpha).norm();
    let mixing_residual = (&gossip.q * &delta).norm();
    let mean = mean_iterate(&state.x);
    let consensus = consensus_spread(&state.x);
    let tracker_sum = euclidean(&node_sum(&state.g));
    let feasibility_distance = if instance.is_unconstrained() {
        0.0
    } else {
        let out = dykstra_project(instance.constraints(), &mean, DYKSTRA_ITERS, DYKSTRA_TOL);
        euclidean(&mean.iter().zip(&out.point).map(|(a, b)| a - b).collect::<Vec<_>>())
    };
    let pass = [
        z_residual,
        projection_residual,
        tracking_residual,
        mixing_residual,
        consensus,
        tracker_sum,
        feasibility_distance,
    ]
    .iter()
    .all(|&r| r <= tol);
    OptimalityReport {
        z_residual,
        projection_residual,
        tracking_residual,
        mixing_residual,
        consensus_spread: consensus,
        tracker_sum,
        feasibility_distance,
        objective: instance.total_value(&mean),
        tol,
        pass,
    }
}

/// DAGP as a [`Stepper`].
#[derive(Debug, Clone)]
pub struct Dagp {
    pub state: DagpState,
    pub params: DagpHyperParams,
    last_increment: f64,
}

impl Dagp {
    pub fn new(state: DagpState, params: DagpHyperParams) -> Result<Self, AlgorithmError> {
        params.validate()?;
        Ok(Self {
            state,
            params,
            last_increment: f64::INFINITY,
        })
    }

    /// Frobenius norm of the change in `(X, G, H)` over the last round.
    pub fn last_increment(&self) -> f64 {
        self.last_increment
    }

    /// Steps until the increment drops below `tol` or `max_rounds` rounds
    /// have run. Returns whether the increment test was met.
    pub fn run_to_increment(
        &mut self,
        instance: &ProblemInstance,
        gossip: &GossipPair,
        tol: f64,
        max_rounds: usize,
    ) -> Result<bool, AlgorithmError> {
        for _ in 0..max_rounds {
            self.step(instance, gossip)?;
            if self.last_increment < tol {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

impl Stepper for Dagp {
    fn name(&self) -> &'static str {
        "dagp"
    }

    fn round(&self) -> usize {
        self.state.n
    }

    fn iterates(&self) -> &DMatrix<f64> {
        &self.state.x
    }

    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError> {
        let next = dagp_step(&self.state, instance, gossip, &self.params)?;
        let dx = (&next.x - &self.state.x).norm_squared();
        let dg = (&next.g - &self.state.g).norm_squared();
        let dh = (&next.h - &self.state.h).norm_squared();
        self.last_increment = (dx + dg + dh).sqrt();
        self.state = next;
        Ok(())
    }

    fn grad_sum_norm(&self, _instance: &ProblemInstance) -> f64 {
        euclidean(&node_sum(&self.state.g))
    }

    fn conservation(&self) -> Option<(f64, f64)> {
        Some((euclidean(&node_sum(&self.state.h)), self.state.h.norm()))
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("step", self.params.step),
            ("tracking_gain", self.params.tracking_gain),
            ("mixing_gain", self.params.mixing_gain),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::mixing::build_gossip_pair;
    use crate::problems::{generate_synthetic_instance, Objective, Quadratic};

    fn single_node_quadratic() -> (ProblemInstance, GossipPair) {
        let inst =
            ProblemInstance::unconstrained(3, vec![Objective::Quadratic(Quadratic::new(vec![0.0; 3], 1.0))]).unwrap();
        let gossip = build_gossip_pair(&DirectedGraph::new(1, []).unwrap()).unwrap();
        (inst, gossip)
    }

    #[test]
    fn init_shapes_and_zero_trackers() {
        let inst = generate_synthetic_instance(20, 10, 4);
        let g = DirectedGraph::random_strongly_connected(10, 0.3, 1).unwrap();
        let gossip = build_gossip_pair(&g).unwrap();
        let params = DagpHyperParams::default();
        let s = dagp_init(&inst, &gossip, &params, 9).unwrap();
        assert_eq!(s.x.shape(), (10, 20));
        assert_eq!(s.g.shape(), (10, 20));
        assert_eq!(s.h, DMatrix::zeros(10, 20));
        assert_eq!(s, dagp_init(&inst, &gossip, &params, 9).unwrap());
        assert_ne!(s.x, dagp_init(&inst, &gossip, &params, 10).unwrap().x);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let inst = generate_synthetic_instance(3, 4, 0);
        let gossip = build_gossip_pair(&DirectedGraph::cycle(5).unwrap()).unwrap();
        let err = dagp_init(&inst, &gossip, &DagpHyperParams::default(), 0).unwrap_err();
        assert!(matches!(err, AlgorithmError::Dimension(_)));
    }

    #[test]
    fn bad_hyperparameters_rejected() {
        assert!(DagpHyperParams::new(0.1, 0.0, 0.1).is_err());
        assert!(DagpHyperParams::new(f64::NAN, 0.1, 0.1).is_err());
        assert!(DagpHyperParams::new(0.1, 0.1, 0.1).is_ok());
    }

    #[test]
    fn consensus_with_flat_objectives_is_a_fixed_point() {
        let nodes = 4;
        let inst = ProblemInstance::unconstrained(
            2,
            (0..nodes)
                .map(|_| Objective::Quadratic(Quadratic::new(vec![0.0; 2], 0.0)))
                .collect(),
        )
        .unwrap();
        let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(nodes, 0.5, 3).unwrap()).unwrap();
        let x = DMatrix::from_fn(nodes, 2, |_, j| [1.5, -0.25][j]);
        let s = DagpState::from_iterates(x.clone());
        let next = dagp_step(&s, &inst, &gossip, &DagpHyperParams::default()).unwrap();
        assert!((&next.x - &x).amax() < 1e-15);
        assert_eq!(next.g, s.g);
        assert_eq!(next.h, s.h);
    }

    /// Scalar recursion for one node with f = ½x², W = Q = 0, no constraint:
    /// x⁺ = x - μ(x - g), g⁺ = g + ρ(x - g + (x⁺ - x⁺)/μ... ) simplified
    /// below, h stays 0.
    fn scalar_oracle(mut x: f64, mu: f64, rho: f64, alpha: f64, rounds: usize) -> f64 {
        let mut g = 0.0;
        for _ in 0..rounds {
            let z = x - mu * (x - g);
            // projection is the identity, so z - x⁺ = 0
            let g_next = g + rho * (x - g) + alpha * (0.0 - g);
            x = z;
            g = g_next;
        }
        x
    }

    #[test]
    fn single_node_quadratic_converges_like_scalar_recursion() {
        let (inst, gossip) = single_node_quadratic();
        let params = DagpHyperParams::new(0.1, 0.1, 0.1).unwrap();
        let mut s = dagp_init(&inst, &gossip, &params, 1).unwrap();
        let x0: Vec<f64> = s.x.iter().copied().collect();
        for _ in 0..2000 {
            s = dagp_step(&s, &inst, &gossip, &params).unwrap();
        }
        for j in 0..3 {
            let oracle = scalar_oracle(x0[j], 0.1, 0.1, 0.1, 2000);
            assert!((s.x[(0, j)] - oracle).abs() < 1e-14);
            assert!(s.x[(0, j)].abs() < 1e-8);
        }
        let report = check_stopping_point(&s, &inst, &gossip, &params, 1e-8);
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn generic_state_is_not_stationary() {
        let inst = generate_synthetic_instance(4, 5, 2);
        let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(5, 0.4, 2).unwrap()).unwrap();
        let params = DagpHyperParams::default();
        let s = dagp_init(&inst, &gossip, &params, 3).unwrap();
        let report = check_stopping_point(&s, &inst, &gossip, &params, 1e-6);
        assert!(!report.pass);
    }

    #[test]
    fn broadcast_of_synced_trackers_is_zero() {
        let mut s = DagpState::from_iterates(DMatrix::from_element(3, 2, 1.0));
        s.g = DMatrix::from_element(3, 2, 0.5);
        s.h = s.g.clone();
        let (x, delta) = broadcast_message(&s, 1);
        assert_eq!(x, vec![1.0, 1.0]);
        assert_eq!(delta, vec![0.0, 0.0]);
    }

    #[test]
    fn divergence_is_reported_with_round() {
        let (inst, gossip) = single_node_quadratic();
        let params = DagpHyperParams::new(1e200, 1e200, 0.1).unwrap();
        let mut dagp = Dagp::new(dagp_init(&inst, &gossip, &params, 0).unwrap(), params).unwrap();
        let mut failure = None;
        for _ in 0..50 {
            if let Err(e) = dagp.step(&inst, &gossip) {
                failure = Some(e);
                break;
            }
        }
        assert!(matches!(
            failure,
            Some(AlgorithmError::NonFinite { algorithm: "dagp", .. })
        ));
    }
}

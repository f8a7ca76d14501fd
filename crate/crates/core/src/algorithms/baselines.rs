//! Baseline methods for comparison.
//!
//! `R = I - W` is row stochastic and `C = I - Q` is column stochastic; both
//! are formed once per stepper. ADD-OPT and Push-Pull are unconstrained
//! methods and ignore the local sets.

use nalgebra::DMatrix;

use super::{
    all_finite, check_shapes, euclidean, initial_iterates, local_gradients, local_projections, map_rows, node_sum,
    AlgorithmError, Stepper,
};
use crate::mixing::GossipPair;
use crate::problems::{ConvexSet, ProblemInstance, SmoothConvexFunction};

/// `a_n = c / √(n + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiminishingStep {
    pub c: f64,
}

impl DiminishingStep {
    pub fn new(c: f64) -> Result<Self, AlgorithmError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(AlgorithmError::HyperParam {
                name: "step_scale",
                value: c,
            });
        }
        Ok(Self { c })
    }

    pub fn at(&self, n: usize) -> f64 {
        self.c / ((n + 1) as f64).sqrt()
    }
}

fn positive(name: &'static str, value: f64) -> Result<f64, AlgorithmError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(AlgorithmError::HyperParam { name, value })
    }
}

fn sum_of_local_gradients(instance: &ProblemInstance, x: &DMatrix<f64>) -> f64 {
    euclidean(&node_sum(&local_gradients(instance, x)))
}

fn non_finite(algorithm: &'static str, round: usize) -> AlgorithmError {
    AlgorithmError::NonFinite { algorithm, round }
}

/// Projected distributed gradient descent:
/// `x_v⁺ = P_{S_v}(Σ_u r_vu x_u - a_n ∇f_v(x_v))`.
#[derive(Debug, Clone)]
pub struct ProjDgd {
    pub x: DMatrix<f64>,
    pub schedule: DiminishingStep,
    row: DMatrix<f64>,
    n: usize,
}

impl ProjDgd {
    pub fn new(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        schedule: DiminishingStep,
        x_init_seed: u64,
    ) -> Result<Self, AlgorithmError> {
        let x = initial_iterates(instance.node_count(), instance.dim(), x_init_seed);
        Self::from_iterates(instance, gossip, schedule, x)
    }

    pub fn from_iterates(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        schedule: DiminishingStep,
        x: DMatrix<f64>,
    ) -> Result<Self, AlgorithmError> {
        check_shapes(instance, gossip, &x)?;
        Ok(Self {
            x,
            schedule,
            row: gossip.row_stochastic(),
            n: 0,
        })
    }
}

impl Stepper for ProjDgd {
    fn name(&self) -> &'static str {
        "proj_dgd"
    }

    fn round(&self) -> usize {
        self.n
    }

    fn iterates(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError> {
        check_shapes(instance, gossip, &self.x)?;
        let a = self.schedule.at(self.n);
        let pre = &self.row * &self.x - local_gradients(instance, &self.x) * a;
        let next = local_projections(instance, &pre);
        if !all_finite(&[&next]) {
            return Err(non_finite(self.name(), self.n));
        }
        self.x = next;
        self.n += 1;
        Ok(())
    }

    fn grad_sum_norm(&self, instance: &ProblemInstance) -> f64 {
        sum_of_local_gradients(instance, &self.x)
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![("step_scale", self.schedule.c)]
    }
}

/// Surplus-based distributed projected subgradient method with row
/// stochastic `A = R` and column stochastic `B = C`:
///
/// ```text
/// v   = A x + ε y
/// x⁺  = P_S(v - a_n ∇f(v))
/// y⁺  = x - A x + B y - ε y
/// ```
#[derive(Debug, Clone)]
pub struct Ddps {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub schedule: DiminishingStep,
    pub surplus_weight: f64,
    row: DMatrix<f64>,
    col: DMatrix<f64>,
    n: usize,
}

impl Ddps {
    pub fn new(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        schedule: DiminishingStep,
        surplus_weight: f64,
        x_init_seed: u64,
    ) -> Result<Self, AlgorithmError> {
        let x = initial_iterates(instance.node_count(), instance.dim(), x_init_seed);
        Self::from_iterates(instance, gossip, schedule, surplus_weight, x)
    }

    pub fn from_iterates(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        schedule: DiminishingStep,
        surplus_weight: f64,
        x: DMatrix<f64>,
    ) -> Result<Self, AlgorithmError> {
        check_shapes(instance, gossip, &x)?;
        let surplus_weight = positive("surplus_weight", surplus_weight)?;
        let y = DMatrix::zeros(x.nrows(), x.ncols());
        Ok(Self {
            x,
            y,
            schedule,
            surplus_weight,
            row: gossip.row_stochastic(),
            col: gossip.column_stochastic(),
            n: 0,
        })
    }
}

impl Stepper for Ddps {
    fn name(&self) -> &'static str {
        "ddps"
    }

    fn round(&self) -> usize {
        self.n
    }

    fn iterates(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError> {
        check_shapes(instance, gossip, &self.x)?;
        let a = self.schedule.at(self.n);
        let eps = self.surplus_weight;
        let ax = &self.row * &self.x;
        let v = &ax + &self.y * eps;
        let x_next = map_rows(&v, |node, row| {
            let grad = instance.objective(node).gradient(row);
            let moved: Vec<f64> = row.iter().zip(&grad).map(|(r, g)| r - a * g).collect();
            instance.constraint(node).project(&moved)
        });
        let y_next = &self.x - &ax + &self.col * &self.y - &self.y * eps;
        if !all_finite(&[&x_next, &y_next]) {
            return Err(non_finite(self.name(), self.n));
        }
        self.x = x_next;
        self.y = y_next;
        self.n += 1;
        Ok(())
    }

    fn grad_sum_norm(&self, instance: &ProblemInstance) -> f64 {
        sum_of_local_gradients(instance, &self.x)
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![("step_scale", self.schedule.c), ("surplus_weight", self.surplus_weight)]
    }
}

/// ADD-OPT over column stochastic `C`:
///
/// ```text
/// x⁺ = C x - a y
/// v⁺ = C v
/// z⁺ = x⁺ / v⁺          (row-wise)
/// y⁺ = C y + ∇F(z⁺) - ∇F(z)
/// ```
///
/// with `v₀ = 1`, `z₀ = x₀`, `y₀ = ∇F(z₀)`. Node estimates are `z`.
#[derive(Debug, Clone)]
pub struct AddOpt {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub weights: Vec<f64>,
    pub step: f64,
    col: DMatrix<f64>,
    grad: DMatrix<f64>,
    n: usize,
}

impl AddOpt {
    pub fn new(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        step: f64,
        x_init_seed: u64,
    ) -> Result<Self, AlgorithmError> {
        let x = initial_iterates(instance.node_count(), instance.dim(), x_init_seed);
        Self::from_iterates(instance, gossip, step, x)
    }

    pub fn from_iterates(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        step: f64,
        x: DMatrix<f64>,
    ) -> Result<Self, AlgorithmError> {
        check_shapes(instance, gossip, &x)?;
        let step = positive("step", step)?;
        let grad = local_gradients(instance, &x);
        Ok(Self {
            y: grad.clone(),
            z: x.clone(),
            weights: vec![1.0; x.nrows()],
            x,
            step,
            col: gossip.column_stochastic(),
            grad,
            n: 0,
        })
    }
}

impl Stepper for AddOpt {
    fn name(&self) -> &'static str {
        "add_opt"
    }

    fn round(&self) -> usize {
        self.n
    }

    fn iterates(&self) -> &DMatrix<f64> {
        &self.z
    }

    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError> {
        check_shapes(instance, gossip, &self.x)?;
        let x_next = &self.col * &self.x - &self.y * self.step;
        let nodes = self.weights.len();
        let weights: Vec<f64> = (0..nodes)
            .map(|v| (0..nodes).fold(0.0, |acc, u| acc + self.col[(v, u)] * self.weights[u]))
            .collect();
        let z_next = DMatrix::from_fn(x_next.nrows(), x_next.ncols(), |v, j| x_next[(v, j)] / weights[v]);
        let grad_next = local_gradients(instance, &z_next);
        let y_next = &self.col * &self.y + &grad_next - &self.grad;
        if !all_finite(&[&x_next, &z_next, &y_next]) {
            return Err(non_finite(self.name(), self.n));
        }
        self.x = x_next;
        self.weights = weights;
        self.z = z_next;
        self.y = y_next;
        self.grad = grad_next;
        self.n += 1;
        Ok(())
    }

    fn grad_sum_norm(&self, _instance: &ProblemInstance) -> f64 {
        euclidean(&node_sum(&self.y))
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![("step", self.step)]
    }
}

/// Push-Pull with row stochastic `R` and column stochastic `C`:
///
/// ```text
/// x⁺ = R (x - a y)
/// y⁺ = C y + ∇F(x⁺) - ∇F(x)
/// ```
///
/// with `y₀ = ∇F(x₀)`.
#[derive(Debug, Clone)]
pub struct PushPull {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub step: f64,
    row: DMatrix<f64>,
    col: DMatrix<f64>,
    grad: DMatrix<f64>,
    n: usize,
}

impl PushPull {
    pub fn new(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        step: f64,
        x_init_seed: u64,
    ) -> Result<Self, AlgorithmError> {
        let x = initial_iterates(instance.node_count(), instance.dim(), x_init_seed);
        Self::from_iterates(instance, gossip, step, x)
    }

    pub fn from_iterates(
        instance: &ProblemInstance,
        gossip: &GossipPair,
        step: f64,
        x: DMatrix<f64>,
    ) -> Result<Self, AlgorithmError> {
        check_shapes(instance, gossip, &x)?;
        let step = positive("step", step)?;
        let grad = local_gradients(instance, &x);
        Ok(Self {
            y: grad.clone(),
            x,
            step,
            row: gossip.row_stochastic(),
            col: gossip.column_stochastic(),
            grad,
            n: 0,
        })
    }
}

impl Stepper for PushPull {
    fn name(&self) -> &'static str {
        "push_pull"
    }

    fn round(&self) -> usize {
        self.n
    }

    fn iterates(&self) -> &DMatrix<f64> {
        &self.x
    }

    fn step(&mut self, instance: &ProblemInstance, gossip: &GossipPair) -> Result<(), AlgorithmError> {
        check_shapes(instance, gossip, &self.x)?;
        let x_next = &self.row * (&self.x - &self.y * self.step);
        let grad_next = local_gradients(instance, &x_next);
        let y_next = &self.col * &self.y + &grad_next - &self.grad;
        if !all_finite(&[&x_next, &y_next]) {
            return Err(non_finite(self.name(), self.n));
        }
        self.x = x_next;
        self.y = y_next;
        self.grad = grad_next;
        self.n += 1;
        Ok(())
    }

    fn grad_sum_norm(&self, _instance: &ProblemInstance) -> f64 {
        euclidean(&node_sum(&self.y))
    }

    fn hyperparameters(&self) -> Vec<(&'static str, f64)> {
        vec![("step", self.step)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;
    use crate::mixing::build_gossip_pair;
    use crate::problems::{Objective, Quadratic};

    fn one_node() -> (ProblemInstance, GossipPair) {
        let inst =
            ProblemInstance::unconstrained(2, vec![Objective::Quadratic(Quadratic::new(vec![0.0; 2], 1.0))]).unwrap();
        (inst, build_gossip_pair(&DirectedGraph::new(1, []).unwrap()).unwrap())
    }

    #[test]
    fn proj_dgd_scalar_recursion() {
        let (inst, gossip) = one_node();
        let x0 = DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let schedule = DiminishingStep::new(0.5).unwrap();
        let mut dgd = ProjDgd::from_iterates(&inst, &gossip, schedule, x0).unwrap();
        let mut oracle = [2.0f64, -1.0];
        for n in 0..3000 {
            dgd.step(&inst, &gossip).unwrap();
            let a = 0.5 / ((n + 1) as f64).sqrt();
            for o in oracle.iter_mut() {
                *o *= 1.0 - a;
            }
        }
        for j in 0..2 {
            assert!((dgd.x[(0, j)] - oracle[j]).abs() < 1e-15);
            assert!(dgd.x[(0, j)].abs() < 1e-10);
        }
    }

    #[test]
    fn trackers_preserve_gradient_sum() {
        let nodes = 6;
        let inst = ProblemInstance::unconstrained(
            3,
            (0..nodes)
                .map(|v| Objective::Quadratic(Quadratic::new(vec![v as f64, 1.0, -2.0], 1.0 + v as f64 * 0.1)))
                .collect(),
        )
        .unwrap();
        let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(nodes, 0.3, 8).unwrap()).unwrap();
        let mut pp = PushPull::new(&inst, &gossip, 0.05, 1).unwrap();
        let mut ao = AddOpt::new(&inst, &gossip, 0.05, 1).unwrap();
        for _ in 0..50 {
            pp.step(&inst, &gossip).unwrap();
            ao.step(&inst, &gossip).unwrap();
            let pp_sum = node_sum(&local_gradients(&inst, &pp.x));
            let ao_sum = node_sum(&local_gradients(&inst, &ao.z));
            for (a, b) in node_sum(&pp.y).iter().zip(&pp_sum) {
                assert!((a - b).abs() < 1e-9);
            }
            for (a, b) in node_sum(&ao.y).iter().zip(&ao_sum) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_steps() {
        let (inst, gossip) = one_node();
        assert!(DiminishingStep::new(0.0).is_err());
        assert!(PushPull::new(&inst, &gossip, -1.0, 0).is_err());
        assert!(AddOpt::new(&inst, &gossip, f64::INFINITY, 0).is_err());
        assert!(Ddps::new(&inst, &gossip, DiminishingStep::new(1.0).unwrap(), 0.0, 0).is_err());
    }
}

//! Seeded instance generators for the experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, Constraint, Halfspace, InstanceMeta, LogCosh, LogisticLoss, Objective, ProblemInstance, WholeSpace};

fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Log-cosh objectives with halfspace constraints.
///
/// `a_v`, `b_v`, `c_v` are i.i.d. standard normal. A witness `x₀ ~ N(0, I)` is
/// drawn and `d_v = c_vᵀx₀ + |u_v|` with `u_v ~ N(0, 1)`, so `x₀` is strictly
/// feasible for every node. Draw order is fixed, so a seed reproduces the
/// instance bit for bit.
pub fn generate_synthetic_instance(dim: usize, nodes: usize, seed: u64) -> ProblemInstance {
    assert!(dim >= 1 && nodes >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objectives = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let a = normal_vec(&mut rng, dim);
        let b = StandardNormal.sample(&mut rng);
        objectives.push(Objective::LogCosh(LogCosh::new(a, b)));
    }
    let normals: Vec<Vec<f64>> = (0..nodes).map(|_| normal_vec(&mut rng, dim)).collect();
    let witness = normal_vec(&mut rng, dim);
    let constraints = normals
        .into_iter()
        .map(|c| {
            let slack: f64 = StandardNormal.sample(&mut rng);
            let d = dot(&c, &witness) + slack.abs();
            Constraint::Halfspace(Halfspace::new(c, d))
        })
        .collect();
    ProblemInstance::new(
        dim,
        objectives,
        constraints,
        Some(witness),
        InstanceMeta {
            kind: "synthetic_constrained".into(),
            seed: Some(seed),
            regularization: None,
        },
    )
    .expect("generator produces consistent dimensions")
}

/// Global regularization `1/N_s` for `N_s = nodes · samples_per_node`.
pub fn logistic_regularization(nodes: usize, samples_per_node: usize) -> f64 {
    1.0 / (nodes * samples_per_node) as f64
}

/// Unconstrained binary logistic regression on two overlapping Gaussian blobs.
///
/// A unit class direction `c` is drawn once; sample `i` has label
/// `yᵢ = ±1` (alternating, so every node is balanced) and features
/// `xᵢ = yᵢ·c + N(0, I)`. Node `v` receives samples
/// `v·samples_per_node .. (v+1)·samples_per_node`. The global objective is
/// `Σᵢ log(1 + e^{-yᵢxᵢᵀw}) + (λ/2)‖w‖²` with `λ = 1/N_s`; each node carries
/// `λ/M` of the regularizer so the node objectives sum to exactly that.
pub fn generate_logistic_instance(nodes: usize, dim: usize, samples_per_node: usize, seed: u64) -> ProblemInstance {
    assert!(nodes >= 1 && dim >= 1 && samples_per_node >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut direction = normal_vec(&mut rng, dim);
    let norm = dot(&direction, &direction).sqrt();
    direction.iter_mut().for_each(|c| *c /= norm);

    let lambda = logistic_regularization(nodes, samples_per_node);
    let mut objectives = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let mut features = Vec::with_capacity(samples_per_node);
        let mut labels = Vec::with_capacity(samples_per_node);
        // Random phase per node keeps odd sample counts unbiased overall.
        let phase = rng.random::<bool>();
        for i in 0..samples_per_node {
            let y = if (i % 2 == 0) ^ phase { 1.0 } else { -1.0 };
            let noise = normal_vec(&mut rng, dim);
            features.push(direction.iter().zip(noise).map(|(c, e)| y * c + e).collect());
            labels.push(y);
        }
        objectives.push(Objective::Logistic(LogisticLoss::new(
            features,
            labels,
            lambda / nodes as f64,
        )));
    }
    let constraints = vec![Constraint::WholeSpace(WholeSpace { dim }); nodes];
    ProblemInstance::new(
        dim,
        objectives,
        constraints,
        Some(vec![0.0; dim]),
        InstanceMeta {
            kind: "logistic".into(),
            seed: Some(seed),
            regularization: Some(lambda),
        },
    )
    .expect("generator produces consistent dimensions")
}

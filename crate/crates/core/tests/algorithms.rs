mod common;

use dagp::algorithms::{
    dagp_init, dagp_step, initial_iterates, run, AddOpt, Dagp, DagpHyperParams, DagpState, Ddps, DiminishingStep,
    MessagePassingDagp, ProjDgd, PushPull, RunOptions, Stepper,
};
use dagp::graph::DirectedGraph;
use dagp::metrics::{fit_series, RateModel};
use dagp::mixing::{build_gossip_pair, GossipPair};
use dagp::problems::{
    generate_logistic_instance, generate_synthetic_instance, Objective, ProblemInstance, Quadratic,
    SmoothConvexFunction,
};
use dagp::reference::centralized_solve;
use nalgebra::DMatrix;

fn setup(dim: usize, nodes: usize, seed: u64) -> (ProblemInstance, GossipPair) {
    let instance = generate_synthetic_instance(dim, nodes, seed);
    let graph = DirectedGraph::random_strongly_connected(nodes, 0.3, seed).unwrap();
    (instance, build_gossip_pair(&graph).unwrap())
}

fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

#[test]
fn init_shapes_match_setup_one() {
    let (instance, gossip) = setup(20, 10, 0);
    let state = dagp_init(&instance, &gossip, &DagpHyperParams::default(), 3).unwrap();
    for m in [&state.x, &state.g, &state.h] {
        assert_eq!(m.shape(), (10, 20));
    }
    let again = dagp_init(&instance, &gossip, &DagpHyperParams::default(), 3).unwrap();
    assert_eq!(state.x, again.x);
    for j in 0..20 {
        assert_eq!((0..10).map(|v| state.h[(v, j)]).sum::<f64>(), 0.0);
    }
}

#[test]
fn shadow_message_passing_matches_matrix_form() {
    let (instance, gossip) = setup(4, 5, 2);
    let params = DagpHyperParams::default();
    let mut state = dagp_init(&instance, &gossip, &params, 9).unwrap();
    let mut shadow = MessagePassingDagp::from_state(&state, &gossip, params);
    for _ in 0..100 {
        state = dagp_step(&state, &instance, &gossip, &params).unwrap();
        shadow.step(&instance).unwrap();
        let (x, g, h) = shadow.matrices();
        assert!(max_abs_diff(&x, &state.x) <= 1e-12);
        assert!(max_abs_diff(&g, &state.g) <= 1e-12);
        assert!(max_abs_diff(&h, &state.h) <= 1e-12);
    }
    assert_eq!(shadow.round(), state.n);
}

#[test]
fn mixing_tracker_sum_stays_zero() {
    let (instance, gossip) = setup(6, 12, 4);
    let params = DagpHyperParams::new(0.05, 0.1, 0.3).unwrap();
    let mut state = dagp_init(&instance, &gossip, &params, 1).unwrap();
    for _ in 0..2000 {
        state = dagp_step(&state, &instance, &gossip, &params).unwrap();
        let scale = 1.0 + state.h.norm();
        for j in 0..6 {
            let s: f64 = (0..12).map(|v| state.h[(v, j)]).sum();
            assert!(s.abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn tracker_sum_decreases_on_setup_one() {
    let (instance, gossip) = setup(20, 10, 1);
    let params = DagpHyperParams::new(0.04, 0.02, 0.5).unwrap();
    let mut dagp = Dagp::new(dagp_init(&instance, &gossip, &params, 1).unwrap(), params).unwrap();
    let trace = run(&mut dagp, &instance, &gossip, &RunOptions::new(5000, 100)).unwrap();
    let early = trace.at(100).unwrap().grad_sum_norm;
    let late = trace.at(5000).unwrap().grad_sum_norm;
    assert!(late < early, "{early} -> {late}");
}

#[test]
fn traces_are_bitwise_identical_across_thread_counts() {
    let (instance, gossip) = setup(10, 20, 5);
    let params = DagpHyperParams::new(0.06, 0.1, 0.3).unwrap();
    let csv = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut dagp = Dagp::new(dagp_init(&instance, &gossip, &params, 5).unwrap(), params).unwrap();
            run(&mut dagp, &instance, &gossip, &RunOptions::new(300, 10))
                .unwrap()
                .to_csv()
        })
    };
    assert_eq!(csv(1), csv(4));
}

/// Scalar simulation of the projected DGD recursion on `½x²` with `M = 1`:
/// `x⁺ = x - c/√(n+1) · x`.
#[test]
fn proj_dgd_single_node_quadratic_tracks_scalar_recursion() {
    let instance =
        ProblemInstance::unconstrained(1, vec![Objective::Quadratic(Quadratic::new(vec![0.0], 1.0))]).unwrap();
    let gossip = build_gossip_pair(&DirectedGraph::new(1, Vec::<(usize, usize)>::new()).unwrap()).unwrap();
    let x0 = initial_iterates(1, 1, 0)[(0, 0)];
    let mut alg = ProjDgd::new(&instance, &gossip, DiminishingStep::new(0.5).unwrap(), 0).unwrap();
    let mut x = x0;
    for n in 0..2000 {
        alg.step(&instance, &gossip).unwrap();
        x -= 0.5 / ((n + 1) as f64).sqrt() * x;
        assert!((alg.iterates()[(0, 0)] - x).abs() <= 1e-14 * (1.0 + x0.abs()));
    }
    assert!(x.abs() <= 1e-8);
}

#[test]
fn push_pull_decays_linearly_on_logistic_instance() {
    let instance = generate_logistic_instance(5, 10, 40, 0);
    let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(5, 0.3, 0).unwrap()).unwrap();
    let reference = centralized_solve(&instance, None, 200_000, 1e-14).unwrap();
    let mut alg = PushPull::new(&instance, &gossip, 0.01, 0).unwrap();
    let trace = run(
        &mut alg,
        &instance,
        &gossip,
        &RunOptions::new(1500, 5).with_f_star(reference.f_star),
    )
    .unwrap();
    let floor = 1e-11 * reference.f_star.abs().max(1.0);
    let (ns, ys): (Vec<f64>, Vec<f64>) = trace
        .records
        .iter()
        .take_while(|r| r.optimality_gap > floor)
        .map(|r| (r.n as f64, r.optimality_gap))
        .unzip();
    let fit = fit_series(&ns, &ys, RateModel::LinearLog).unwrap();
    assert!(fit.coefficient < 0.0 && fit.r_squared > 0.99, "{fit:?}");
}

fn summed_local_gradients(instance: &ProblemInstance, x: &DMatrix<f64>) -> Vec<f64> {
    let (m, d) = x.shape();
    let mut total = vec![0.0; d];
    for v in (0..m).rev() {
        let row: Vec<f64> = (0..d).map(|k| x[(v, k)]).collect();
        for (t, g) in total.iter_mut().zip(instance.objective(v).gradient(&row)) {
            *t += g;
        }
    }
    total
}

fn column_sums(y: &DMatrix<f64>) -> Vec<f64> {
    (0..y.ncols())
        .map(|j| (0..y.nrows()).map(|v| y[(v, j)]).sum())
        .collect()
}

#[test]
fn trackers_preserve_gradient_sum() {
    let instance = generate_logistic_instance(6, 3, 10, 2);
    let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(6, 0.4, 2).unwrap()).unwrap();
    let mut pp = PushPull::new(&instance, &gossip, 0.02, 1).unwrap();
    let mut ao = AddOpt::new(&instance, &gossip, 0.02, 1).unwrap();
    for _ in 0..50 {
        pp.step(&instance, &gossip).unwrap();
        ao.step(&instance, &gossip).unwrap();
        let want = summed_local_gradients(&instance, &pp.x);
        assert!(common::norm(&common::sub(&column_sums(&pp.y), &want)) <= 1e-10);
        let want = summed_local_gradients(&instance, &ao.z);
        assert!(common::norm(&common::sub(&column_sums(&ao.y), &want)) <= 1e-10);
    }
}

#[test]
fn ddps_feasibility_stays_above_dagp_on_setup_two() {
    let (instance, gossip) = setup(10, 20, 0);
    let params = DagpHyperParams::new(0.06, 0.1, 0.3).unwrap();
    let options = RunOptions::new(2000, 100);
    let mut dagp = Dagp::new(dagp_init(&instance, &gossip, &params, 0).unwrap(), params).unwrap();
    let mut ddps = Ddps::new(&instance, &gossip, DiminishingStep::new(0.02).unwrap(), 0.1, 0).unwrap();
    let a = run(&mut dagp, &instance, &gossip, &options).unwrap();
    let b = run(&mut ddps, &instance, &gossip, &options).unwrap();
    let (fa, fb) = (a.last().unwrap().feasibility_gap, b.last().unwrap().feasibility_gap);
    assert!(fb > 10.0 * fa, "dagp {fa:e}, ddps {fb:e}");
}

#[test]
fn stepper_states_are_independent_of_shared_init() {
    let (instance, gossip) = setup(3, 4, 8);
    let x = initial_iterates(4, 3, 8);
    let state = DagpState::from_iterates(x.clone());
    let mut dagp = Dagp::new(state, DagpHyperParams::default()).unwrap();
    let mut dgd = ProjDgd::from_iterates(&instance, &gossip, DiminishingStep::new(0.1).unwrap(), x).unwrap();
    assert_eq!(dagp.iterates(), dgd.iterates());
    dagp.step(&instance, &gossip).unwrap();
    dgd.step(&instance, &gossip).unwrap();
    assert_eq!(dagp.round(), 1);
    assert_eq!(dgd.round(), 1);
}

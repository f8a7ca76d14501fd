mod common;

use common::*;
use dagp::algorithms::{dagp_init, run, Dagp, DagpHyperParams, RunOptions};
use dagp::graph::DirectedGraph;
use dagp::metrics::{
    consensus_error, feasibility_gap, fit_series, grad_sum_norm, mean_iterate, node_deviations, rate_fit, RateModel,
    TraceField, CSV_HEADER,
};
use dagp::mixing::build_gossip_pair;
use dagp::problems::{generate_synthetic_instance, Halfspace};
use dagp::reference::centralized_solve;
use nalgebra::DMatrix;

fn random_matrix(seed: u64, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut r = rng(seed);
    let data = normal_vec(&mut r, rows * cols);
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Column sums accumulated last row first, pairwise.
fn reordered_column_sums(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| {
            let mut col: Vec<f64> = (0..x.nrows()).rev().map(|v| x[(v, j)]).collect();
            while col.len() > 1 {
                col = col.chunks(2).map(|c| c.iter().sum()).collect();
            }
            col[0]
        })
        .collect()
}

#[test]
fn mean_iterate_matches_reordered_sum() {
    let x = random_matrix(1, 5, 3);
    let mean = mean_iterate(&x);
    for (a, s) in mean.iter().zip(reordered_column_sums(&x)) {
        assert!((a - s / 5.0).abs() <= 1e-14);
    }
}

#[test]
fn grad_sum_norm_matches_reordered_sum() {
    let g = random_matrix(2, 4, 3);
    assert!((grad_sum_norm(&g) - norm(&reordered_column_sums(&g))).abs() <= 1e-14);
    let mut paired = DMatrix::zeros(2, 3);
    for j in 0..3 {
        paired[(0, j)] = g[(0, j)];
        paired[(1, j)] = -g[(0, j)];
    }
    assert_eq!(grad_sum_norm(&paired), 0.0);
}

#[test]
fn consensus_error_is_largest_squared_deviation() {
    let x = random_matrix(3, 6, 4);
    let mean: Vec<f64> = reordered_column_sums(&x).iter().map(|s| s / 6.0).collect();
    let want = (0..6)
        .map(|v| {
            let row: Vec<f64> = (0..4).map(|j| x[(v, j)]).collect();
            norm(&sub(&row, &mean)).powi(2)
        })
        .fold(0.0, f64::max);
    assert!((consensus_error(&x) - want).abs() <= 1e-13);
    let same = DMatrix::from_fn(4, 3, |_, j| j as f64);
    assert_eq!(consensus_error(&same), 0.0);
}

#[test]
fn node_deviation_against_reference_row() {
    let x = random_matrix(4, 5, 2);
    let dev = node_deviations(&x, &[1, 3], 0);
    for (k, &v) in [1usize, 3].iter().enumerate() {
        let d = sub(&[x[(v, 0)], x[(v, 1)]], &[x[(0, 0)], x[(0, 1)]]);
        assert!((dev[k] - norm(&d).powi(2)).abs() <= 1e-14);
    }
}

#[test]
fn feasibility_gap_matches_qp_oracle() {
    let mut r = rng(8);
    for _ in 0..20 {
        let (normals, offsets) = random_halfspaces(&mut r, 5, 4);
        let sets: Vec<Halfspace> = normals
            .iter()
            .zip(&offsets)
            .map(|(c, &d)| Halfspace::new(c.clone(), d))
            .collect();
        let x: Vec<f64> = normal_vec(&mut r, 4).iter().map(|v| 3.0 * v).collect();
        let gap = feasibility_gap(&x, &sets, 20_000, 1e-13).unwrap();
        let want = norm(&sub(&x, &qp_projection(&normals, &offsets, &x)));
        assert!((gap.value - want).abs() <= 1e-6, "{} vs {want}", gap.value);
    }
}

#[test]
fn feasibility_gap_of_single_violated_halfspace_is_margin() {
    let c = vec![0.6, 0.8];
    let set = Halfspace::new(c.clone(), 1.0);
    let x = [0.6 * 1.25, 0.8 * 1.25];
    let gap = feasibility_gap(&x, &[set], 100, 1e-12).unwrap();
    assert!((gap.value - 0.25).abs() <= 1e-12);
}

#[test]
fn fitted_rates_recover_fabricated_sequences() {
    let ns: Vec<f64> = (1..=200).map(|k| 10.0 * k as f64).collect();
    let inv_sqrt: Vec<f64> = ns.iter().map(|n| 3.0 / n.sqrt()).collect();
    let fit = fit_series(&ns, &inv_sqrt, RateModel::InvSqrtN).unwrap();
    assert!((fit.coefficient - 3.0).abs() <= 0.03 && fit.r_squared > 0.999);
    let geometric: Vec<f64> = (0..200).map(|k| 2.0 * 0.9f64.powi(k)).collect();
    let steps: Vec<f64> = (0..200).map(|k| k as f64).collect();
    let fit = fit_series(&steps, &geometric, RateModel::LinearLog).unwrap();
    assert!((fit.coefficient - 0.9f64.ln()).abs() <= 0.01 * 0.9f64.ln().abs());
}

#[test]
fn averaged_objective_gap_stays_bounded_on_setup_two() {
    let instance = generate_synthetic_instance(10, 20, 0);
    let gossip = build_gossip_pair(&DirectedGraph::random_strongly_connected(20, 0.3, 0).unwrap()).unwrap();
    let reference = centralized_solve(&instance, None, 200_000, 1e-13).unwrap();
    let params = DagpHyperParams::new(0.06, 0.1, 0.3).unwrap();
    let mut dagp = Dagp::new(dagp_init(&instance, &gossip, &params, 0).unwrap(), params).unwrap();
    let trace = run(
        &mut dagp,
        &instance,
        &gossip,
        &RunOptions::new(2000, 20).with_f_star(reference.f_star),
    )
    .unwrap();
    let fit = rate_fit(&trace, TraceField::AvgObjectiveGap, RateModel::InvSqrtN).unwrap();
    assert!(fit.boundedness.is_finite());
    let head = trace.at(100).unwrap().avg_objective_gap * 10.0;
    let tail = trace.at(2000).unwrap().avg_objective_gap * 2000f64.sqrt();
    assert!(tail <= head, "{head} {tail}");
    assert!(trace.to_csv().starts_with(CSV_HEADER));
}

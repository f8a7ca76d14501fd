mod common;

use dagp::graph::DirectedGraph;
use dagp::mixing::{build_gossip_pair, verify_kernel_conditions, KERNEL_TOL};
use nalgebra::DMatrix;

/// Rank from singular values, computed here rather than through the
/// library's null-space helper.
fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|&&s| s > 1e-10 * top).count()
}

#[test]
fn random_ten_node_gossip_has_consensus_kernel() {
    let g = DirectedGraph::random_strongly_connected(10, 0.3, 7).unwrap();
    let pair = build_gossip_pair(&g).unwrap();
    assert_eq!(numerical_rank(&pair.w), 9);
    let ones = DMatrix::from_element(10, 1, 1.0);
    assert!((&pair.w * &ones).amax() <= 1e-12);
}

#[test]
fn stochastic_complements_sum_to_one() {
    let g = DirectedGraph::random_strongly_connected(10, 0.3, 11).unwrap();
    let pair = build_gossip_pair(&g).unwrap();
    let r = pair.row_stochastic();
    let c = pair.column_stochastic();
    for v in 0..10 {
        let row: f64 = (0..10).map(|u| r[(v, u)]).sum();
        let col: f64 = (0..10).map(|u| c[(u, v)]).sum();
        assert!((row - 1.0).abs() <= 1e-12);
        assert!((col - 1.0).abs() <= 1e-12);
    }
    assert!(r.iter().chain(c.iter()).all(|&x| x >= 0.0));
}

#[test]
fn gossip_entries_follow_graph_sparsity() {
    for seed in 0..20 {
        let g = DirectedGraph::random_strongly_connected(8, 0.25, seed).unwrap();
        let pair = build_gossip_pair(&g).unwrap();
        for v in 0..8 {
            for u in 0..8 {
                if u != v && !g.has_edge(v, u) {
                    assert_eq!(pair.w[(v, u)], 0.0);
                    assert_eq!(pair.q[(v, u)], 0.0);
                }
            }
        }
    }
}

#[test]
fn complete_digraph_passes_every_kernel_check() {
    let pair = build_gossip_pair(&DirectedGraph::complete(4).unwrap()).unwrap();
    assert!(verify_kernel_conditions(&pair, KERNEL_TOL).all_pass());
}

#[test]
fn kernel_failure_rate_on_unbalanced_graphs() {
    let mut failures = 0;
    for seed in 0..100 {
        let g = DirectedGraph::random_strongly_connected(8, 0.3, seed).unwrap();
        let report = verify_kernel_conditions(&build_gossip_pair(&g).unwrap(), KERNEL_TOL);
        assert!(report.ker_w_is_consensus);
        assert_eq!(report.dim_ker_q, report.dim_ker_w_transpose);
        if !report.ker_q_matches_ker_w_transpose {
            failures += 1;
        }
    }
    println!("ker(Q) != ker(W^T) on {failures}/100 random digraphs");
}

#[test]
fn edge_list_round_trip() {
    let g = DirectedGraph::random_strongly_connected(12, 0.2, 3).unwrap();
    let back = DirectedGraph::from_edge_list(&g.to_edge_list()).unwrap();
    assert_eq!(g.edges().collect::<Vec<_>>(), back.edges().collect::<Vec<_>>());
}

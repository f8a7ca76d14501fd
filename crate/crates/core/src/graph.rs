//! Directed communication graphs.
//!
//! An edge `(i, j)` means node `i` *receives from* node `j`, so row `i` of the
//! adjacency matrix lists the nodes `i` listens to. With that convention the
//! in-Laplacian has zero row sums, the out-Laplacian has zero column sums, and
//! the sparsity of the gossip matrices built from them matches `A` directly.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    OutOfRange(usize, usize, usize),
    #[error("edge probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("edge list line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A simple digraph on nodes `0..node_count`.
///
/// Immutable after construction. Neighbor lists are cached and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph from `(receiver, sender)` pairs. Duplicates are merged.
    pub fn new<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(GraphError::OutOfRange(i, j, node_count));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            set.insert((i, j));
        }
        let mut in_adj = vec![Vec::new(); node_count];
        let mut out_adj = vec![Vec::new(); node_count];
        for &(i, j) in &set {
            in_adj[i].push(j);
            out_adj[j].push(i);
        }
        for list in in_adj.iter_mut().chain(out_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            node_count,
            edges: set,
            in_adj,
            out_adj,
        })
    }

    /// Directed cycle `0 -> 1 -> ... -> M-1 -> 0`.
    pub fn cycle(node_count: usize) -> Result<Self, GraphError> {
        let edges = (0..node_count)
            .filter(|_| node_count > 1)
            .map(|k| ((k + 1) % node_count, k));
        Self::new(node_count, edges)
    }

    /// Every ordered pair of distinct nodes is an edge.
    pub fn complete(node_count: usize) -> Result<Self, GraphError> {
        let edges = (0..node_count).flat_map(|i| (0..node_count).filter(move |&j| j != i).map(move |j| (i, j)));
        Self::new(node_count, edges)
    }

    /// Random strongly connected digraph.
    ///
    /// A Hamiltonian cycle over a seeded random permutation is laid down first,
    /// then every remaining ordered pair is added independently with
    /// probability `edge_prob`. Deterministic in `seed`.
    pub fn random_strongly_connected(node_count: usize, edge_prob: f64, seed: u64) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        if !(0.0..=1.0).contains(&edge_prob) {
            return Err(GraphError::BadProbability(edge_prob));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..node_count).collect();
        order.shuffle(&mut rng);

        let mut edges = BTreeSet::new();
        if node_count > 1 {
            for k in 0..node_count {
                let sender = order[k];
                let receiver = order[(k + 1) % node_count];
                edges.insert((receiver, sender));
            }
        }
        for i in 0..node_count {
            for j in 0..node_count {
                if i == j || edges.contains(&(i, j)) {
                    continue;
                }
                if rng.random::<f64>() < edge_prob {
                    edges.insert((i, j));
                }
            }
        }
        Self::new(node_count, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(receiver, sender)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, receiver: usize, sender: usize) -> bool {
        self.edges.contains(&(receiver, sender))
    }

    /// Nodes `v` receives from: `{u : (v, u) ∈ E}`.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    /// Nodes `v` sends to: `{u : (u, v) ∈ E}`.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    /// 0/1 adjacency with `a_ij = 1` iff `(i, j) ∈ E`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.node_count, self.node_count);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
        }
        a
    }

    /// `(L_in, L_out) = (D_in - A, D_out - A)`.
    pub fn laplacians(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let a = self.adjacency();
        let mut l_in = -a.clone();
        let mut l_out = -a;
        for v in 0..self.node_count {
            l_in[(v, v)] = self.in_degree(v) as f64;
            l_out[(v, v)] = self.out_degree(v) as f64;
        }
        (l_in, l_out)
    }

    /// True iff every node reaches every other node along directed edges.
    ///
    /// Runs an iterative Tarjan SCC pass and checks for a single component.
    pub fn is_strongly_connected(&self) -> bool {
        strongly_connected_components(&self.out_adj).len() == 1
    }

    /// Serializes as an edge list: first line `M`, then one `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.node_count);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    /// Parses the edge-list format written by [`DirectedGraph::to_edge_list`].
    /// Blank lines and `#` comments are ignored.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (first, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            msg: "missing node count".into(),
        })?;
        let node_count: usize = header.parse().map_err(|_| GraphError::Parse {
            line: first,
            msg: format!("expected node count, found `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad node index `{s}`"),
                })
            };
            match parts.as_slice() {
                [i, j] => edges.push((parse(i)?, parse(j)?)),
                _ => {
                    return Err(GraphError::Parse {
                        line,
                        msg: "expected `i j`".into(),
                    })
                }
            }
        }
        Self::new(node_count, edges)
    }
}

/// Strongly connected components of an adjacency list (`adj[v]` = successors).
///
/// Iterative Tarjan, so deep graphs cannot overflow the call stack.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0;
    // (node, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut component = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                components.push(component);
            }
        }
    }
    components
}

use nalgebra::DMatrix;
use thiserror::Error;

use super::{AlgorithmError, Stepper};
use crate::metrics::{
    consensus_error, feasibility_gap, mean_iterate, node_deviations, AbortRecord, Trace, TraceMetadata, TraceRecord,
    DYKSTRA_ITERS, DYKSTRA_TOL,
};
use crate::mixing::GossipPair;
use crate::problems::{ProblemInstance, SmoothConvexFunction};

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub iters: usize,
    pub trace_every: usize,
    /// Optimal value used for the gap columns.
    pub f_star: Option<f64>,
    pub dykstra_iters: usize,
    pub dykstra_tol: f64,
    /// Nodes whose deviation from `reference_node` is recorded.
    pub tracked_nodes: Vec<usize>,
    pub reference_node: Option<usize>,
}

impl RunOptions {
    pub fn new(iters: usize, trace_every: usize) -> Self {
        Self {
            iters,
            trace_every,
            f_star: None,
            dykstra_iters: DYKSTRA_ITERS,
            dykstra_tol: DYKSTRA_TOL,
            tracked_nodes: Vec::new(),
            reference_node: None,
        }
    }

    pub fn with_f_star(mut self, f_star: f64) -> Self {
        self.f_star = Some(f_star);
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("iters must be at least 1")]
    ZeroIters,
    #[error("trace_every must be at least 1")]
    ZeroTraceEvery,
    #[error("tracked node {0} out of range")]
    TrackedNode(usize),
    #[error("{source}")]
    Aborted {
        /// Records taken before the failure, with the abort noted in metadata.
        trace: Box<Trace>,
        source: AlgorithmError,
    },
}

/// Steps `stepper` `iters` times, recording every `trace_every` rounds and
/// at round 0.
pub fn run(
    stepper: &mut dyn Stepper,
    instance: &ProblemInstance,
    gossip: &GossipPair,
    options: &RunOptions,
) -> Result<Trace, RunError> {
    if options.iters == 0 {
        return Err(RunError::ZeroIters);
    }
    if options.trace_every == 0 {
        return Err(RunError::ZeroTraceEvery);
    }
    let nodes = instance.node_count();
    if let Some(&bad) = options
        .tracked_nodes
        .iter()
        .chain(options.reference_node.iter())
        .find(|&&v| v >= nodes)
    {
        return Err(RunError::TrackedNode(bad));
    }

    let mut trace = Trace {
        records: Vec::with_capacity(options.iters / options.trace_every + 1),
        metadata: TraceMetadata {
            algorithm: stepper.name().to_string(),
            hyperparameters: stepper
                .hyperparameters()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
            f_star: options.f_star,
            tracked_nodes: options.tracked_nodes.clone(),
            reference_node: options.reference_node,
            ..TraceMetadata::default()
        },
    };
    let mut running_sum = DMatrix::<f64>::zeros(nodes, instance.dim());
    let mut conservation = Conservation::default();
    conservation.observe(stepper.conservation());

    let start = stepper.round();
    for k in 0..=options.iters {
        if k % options.trace_every == 0 {
            let record = measure(&*stepper, instance, &running_sum, k, options, &mut trace.metadata);
            trace.records.push(record);
        }
        if k == options.iters {
            break;
        }
        running_sum += stepper.iterates();
        if let Err(source) = stepper.step(instance, gossip) {
            trace.metadata.abort = Some(AbortRecord {
                round: start + k,
                message: source.to_string(),
            });
            trace.metadata.max_conservation_ratio = conservation.ratio();
            return Err(RunError::Aborted {
                trace: Box::new(trace),
                source,
            });
        }
        conservation.observe(stepper.conservation());
    }
    trace.metadata.max_conservation_ratio = conservation.ratio();
    Ok(trace)
}

#[derive(Default)]
struct Conservation {
    seen: bool,
    worst: f64,
}

impl Conservation {
    fn observe(&mut self, sample: Option<(f64, f64)>) {
        if let Some((sum, h)) = sample {
            self.seen = true;
            self.worst = self.worst.max(sum / (1.0 + h));
        }
    }

    fn ratio(&self) -> Option<f64> {
        self.seen.then_some(self.worst)
    }
}

fn measure(
    stepper: &dyn Stepper,
    instance: &ProblemInstance,
    running_sum: &DMatrix<f64>,
    k: usize,
    options: &RunOptions,
    metadata: &mut TraceMetadata,
) -> TraceRecord {
    let x = stepper.iterates();
    let mean = mean_iterate(x);
    let objective = instance.total_value(&mean);
    let mut gap = |p: &[f64]| {
        let g = feasibility_gap(p, instance.constraints(), options.dykstra_iters, options.dykstra_tol)
            .expect("instances have one set per node");
        if !g.converged {
            metadata.dykstra_unconverged += 1;
        }
        g.value
    };
    let feasibility = gap(&mean);

    let averages = if k == 0 { x.clone() } else { running_sum / k as f64 };
    let avg_mean = mean_iterate(&averages);
    let avg_feasibility = gap(&avg_mean);
    let avg_consensus = consensus_error(&averages);
    let avg_objective: f64 = (0..averages.nrows())
        .map(|v| {
            let row: Vec<f64> = averages.row(v).iter().copied().collect();
            instance.objective(v).value(&row)
        })
        .sum();

    let (optimality_gap, avg_objective_gap) = match options.f_star {
        Some(f) => (objective - f, (avg_objective - f).abs()),
        None => (f64::NAN, f64::NAN),
    };
    let node_deviations = match options.reference_node {
        Some(r) => node_deviations(x, &options.tracked_nodes, r),
        None => Vec::new(),
    };
    TraceRecord {
        n: k,
        objective,
        feasibility_gap: feasibility,
        consensus_error: consensus_error(x),
        grad_sum_norm: stepper.grad_sum_norm(instance),
        optimality_gap,
        avg_objective_gap,
        avg_consensus_error: avg_consensus,
        avg_feasibility_gap: avg_feasibility,
        node_deviations,
    }
}

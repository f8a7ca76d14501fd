use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{AlgorithmConfig, ExperimentConfig, ExperimentKind};
use super::HarnessError;
use crate::algorithms::{
    dagp_init, run, AddOpt, Dagp, Ddps, DiminishingStep, ProjDgd, PushPull, RunError, RunOptions, Stepper,
};
use crate::certificates::{assumption5_scan, build_certificates, z_grid, Assumption5Report};
use crate::graph::DirectedGraph;
use crate::metrics::Trace;
use crate::mixing::{build_gossip_pair, verify_kernel_conditions, GossipPair, KernelReport, KERNEL_TOL};
use crate::problems::{generate_logistic_instance, generate_synthetic_instance, ProblemInstance};
use crate::reference::{centralized_solve, ReferenceSolution};

/// Everything an experiment needs before any algorithm runs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub graph: DirectedGraph,
    pub gossip: GossipPair,
    pub kernel_report: KernelReport,
    pub instance: ProblemInstance,
}

/// Builds the graph, gossip pair and instance named by `config`.
pub fn build_setup(config: &ExperimentConfig) -> Result<Setup, HarnessError> {
    let graph = DirectedGraph::random_strongly_connected(config.nodes, config.edge_prob, config.graph_seed)?;
    let gossip = build_gossip_pair(&graph)?;
    let kernel_report = verify_kernel_conditions(&gossip, KERNEL_TOL);
    let instance = match config.kind {
        ExperimentKind::SyntheticConstrained => {
            generate_synthetic_instance(config.dim, config.nodes, config.instance_seed)
        }
        ExperimentKind::Logistic => {
            generate_logistic_instance(config.nodes, config.dim, config.samples_per_node, config.instance_seed)
        }
    };
    Ok(Setup {
        graph,
        gossip,
        kernel_report,
        instance,
    })
}

pub fn solve_reference(
    config: &ExperimentConfig,
    instance: &ProblemInstance,
) -> Result<ReferenceSolution, HarnessError> {
    Ok(centralized_solve(
        instance,
        None,
        config.reference_iters,
        config.reference_tol,
    )?)
}

/// Instantiates one configured method from the shared initial iterates.
pub fn make_stepper(
    algorithm: &AlgorithmConfig,
    instance: &ProblemInstance,
    gossip: &GossipPair,
    x_init_seed: u64,
) -> Result<Box<dyn Stepper>, HarnessError> {
    Ok(match *algorithm {
        AlgorithmConfig::Dagp(params) => {
            let state = dagp_init(instance, gossip, &params, x_init_seed)?;
            Box::new(Dagp::new(state, params)?)
        }
        AlgorithmConfig::Ddps {
            step_scale,
            surplus_weight,
        } => Box::new(Ddps::new(
            instance,
            gossip,
            DiminishingStep::new(step_scale)?,
            surplus_weight,
            x_init_seed,
        )?),
        AlgorithmConfig::ProjDgd { step_scale } => Box::new(ProjDgd::new(
            instance,
            gossip,
            DiminishingStep::new(step_scale)?,
            x_init_seed,
        )?),
        AlgorithmConfig::AddOpt { step } => Box::new(AddOpt::new(instance, gossip, step, x_init_seed)?),
        AlgorithmConfig::PushPull { step } => Box::new(PushPull::new(instance, gossip, step, x_init_seed)?),
    })
}

/// Random nodes (other than the reference) whose deviation is tracked.
pub fn tracked_nodes(config: &ExperimentConfig) -> Vec<usize> {
    let others = config.nodes - 1;
    let count = config.tracked_nodes.min(others);
    if count == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.graph_seed ^ 0x7472_6163_6b65_6400);
    let mut picked: Vec<usize> = sample(&mut rng, others, count)
        .into_iter()
        .map(|i| if i >= config.reference_node { i + 1 } else { i })
        .collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub setup: Setup,
    pub reference: ReferenceSolution,
    pub traces: Vec<(String, Trace)>,
    /// Methods that produced a non-finite value; their traces are partial.
    pub aborted: Vec<String>,
}

/// Runs every configured method in memory. Deterministic per seeds.
pub fn execute_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    let setup = build_setup(config)?;
    let reference = solve_reference(config, &setup.instance)?;
    let tracked = tracked_nodes(config);
    let options = RunOptions {
        f_star: Some(reference.f_star),
        tracked_nodes: tracked.clone(),
        reference_node: (!tracked.is_empty()).then_some(config.reference_node),
        ..RunOptions::new(config.iterations, config.trace_every)
    };
    let mut warnings = Vec::new();
    if !setup.kernel_report.all_pass() {
        warnings.push("gossip pair fails the kernel conditions; see kernel_report".to_string());
    }
    if !reference.converged {
        warnings.push("reference solver hit its iteration budget".to_string());
    }

    let mut traces = Vec::new();
    let mut aborted = Vec::new();
    for algorithm in &config.algorithms {
        let mut stepper = make_stepper(algorithm, &setup.instance, &setup.gossip, config.x_init_seed)?;
        let mut trace = match run(stepper.as_mut(), &setup.instance, &setup.gossip, &options) {
            Ok(trace) => trace,
            Err(RunError::Aborted { trace, .. }) => {
                aborted.push(algorithm.name().to_string());
                *trace
            }
            Err(e) => return Err(e.into()),
        };
        let meta = &mut trace.metadata;
        meta.instance_seed = Some(config.instance_seed);
        meta.x_init_seed = Some(config.x_init_seed);
        meta.kernel_report = Some(setup.kernel_report.clone());
        meta.warnings.extend(warnings.iter().cloned());
        if setup.instance.constraints().iter().any(|c| !c.is_whole_space())
            && matches!(
                algorithm,
                AlgorithmConfig::AddOpt { .. } | AlgorithmConfig::PushPull { .. }
            )
        {
            meta.warnings
                .push(format!("{} ignores the local constraint sets", algorithm.name()));
        }
        traces.push((algorithm.name().to_string(), trace));
    }
    Ok(ExperimentOutcome {
        setup,
        reference,
        traces,
        aborted,
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: String,
    kernel_report: &'a KernelReport,
    reference: &'a ReferenceSolution,
    graph_edges: Vec<(usize, usize)>,
    traces: Vec<&'a crate::metrics::TraceMetadata>,
    aborted: &'a [String],
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, HarnessError> {
    fs::write(&path, contents).map_err(|source| HarnessError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `<name>.csv`, `<name>_averages.csv`, `metadata.json`,
/// `instance.json` and `graph.txt` into `dir`.
pub fn write_outputs(
    config: &ExperimentConfig,
    outcome: &ExperimentOutcome,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for (name, trace) in &outcome.traces {
        written.push(write(dir.join(format!("{name}.csv")), &trace.to_csv())?);
        written.push(write(
            dir.join(format!("{name}_averages.csv")),
            &trace.to_averages_csv(),
        )?);
    }
    let metadata = Metadata {
        config: config.to_text(),
        kernel_report: &outcome.setup.kernel_report,
        reference: &outcome.reference,
        graph_edges: outcome.setup.graph.edges().collect(),
        traces: outcome.traces.iter().map(|(_, t)| &t.metadata).collect(),
        aborted: &outcome.aborted,
    };
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    written.push(write(dir.join("metadata.json"), &json)?);
    written.push(write(dir.join("instance.json"), &outcome.setup.instance.to_json())?);
    written.push(write(dir.join("graph.txt"), &outcome.setup.graph.to_edge_list())?);
    Ok(written)
}

/// Runs the experiment and writes its CSVs and metadata into
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    let outcome = execute_experiment(config)?;
    write_outputs(config, &outcome, &config.output_dir)?;
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutcome {
    pub kernel_report: KernelReport,
    pub smoothness: f64,
    pub params: crate::algorithms::DagpHyperParams,
    /// One report per configured `C`.
    pub scans: Vec<(f64, Assumption5Report)>,
}

/// Kernel checks plus the eigenvalue-condition scan for the DAGP settings of
/// `config` (library defaults when no `[algorithm.dagp]` section is given).
pub fn certify(config: &ExperimentConfig) -> Result<CertifyOutcome, HarnessError> {
    config.validate()?;
    let setup = build_setup(config)?;
    let params = match config.algorithm("dagp") {
        Some(AlgorithmConfig::Dagp(p)) => *p,
        _ => Default::default(),
    };
    let smoothness = setup.instance.max_smoothness();
    let c = &config.certify;
    let cert = build_certificates(
        &setup.gossip,
        params.step,
        params.tracking_gain,
        params.mixing_gain,
        smoothness,
        c.eta,
    )?;
    let zs = z_grid(&c.radii, c.phases);
    let scans = c
        .c_values
        .iter()
        .map(|&value| Ok((value, assumption5_scan(&cert, value, &c.betas, &zs, c.margin)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(CertifyOutcome {
        kernel_report: setup.kernel_report,
        smoothness,
        params,
        scans,
    })
}

//! Experiment configuration, orchestration and output.
//!
//! An experiment builds a random strongly connected digraph, its gossip pair
//! (with the kernel report attached), a problem instance and a centralized
//! reference solution, then runs each configured method from the same initial
//! iterates. Outputs are one contract CSV per method, an averages CSV,
//! `metadata.json`, `instance.json`, `graph.txt` and five SVG charts.

mod config;
mod experiment;
mod plots;

pub use config::{
    parse_config, AlgorithmConfig, CertifyConfig, ConfigError, ExperimentConfig, ExperimentKind, ALGORITHM_NAMES,
};
pub use experiment::{
    build_setup, certify, execute_experiment, make_stepper, run_experiment, solve_reference, tracked_nodes,
    write_outputs, CertifyOutcome, ExperimentOutcome, Setup,
};
pub use plots::{emit_plots, render_chart, CHARTS};

use std::path::PathBuf;

use thiserror::Error;

use crate::algorithms::{AlgorithmError, RunError};
use crate::certificates::CertificateError;
use crate::graph::GraphError;
use crate::mixing::MixingError;
use crate::reference::ReferenceError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("mixing: {0}")]
    Mixing(#[from] MixingError),
    #[error("algorithm: {0}")]
    Algorithm(#[from] AlgorithmError),
    #[error("run: {0}")]
    Run(#[from] RunError),
    #[error("reference: {0}")]
    Reference(#[from] ReferenceError),
    #[error("certificates: {0}")]
    Certificate(#[from] CertificateError),
    #[error("no traces to plot")]
    NoTraces,
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

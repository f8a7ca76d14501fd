//! Flat `key = value` experiment files.
//!
//! ```text
//! # setup 2
//! kind = synthetic_constrained
//! dim = 10
//! nodes = 20
//! iterations = 2000
//!
//! [algorithm.dagp]
//! step = 0.06
//!
//! [algorithm.ddps]
//! step_scale = 0.05
//!
//! [certify]
//! c_values = 0, 1, 10
//! ```
//!
//! Top-level keys come first; `[algorithm.<name>]` sections list one method
//! each, in run order; the optional `[certify]` section tunes the eigenvalue
//! scan. `#` starts a comment. Omitted optional keys take the defaults below.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::algorithms::DagpHyperParams;
use crate::certificates::{DEFAULT_BETA_GRID, DEFAULT_C_GRID, DEFAULT_ETA, DEFAULT_PHASES, DEFAULT_RADII};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: unknown section `{section}`")]
    UnknownSection { line: usize, section: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SyntheticConstrained,
    Logistic,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SyntheticConstrained => "synthetic_constrained",
            ExperimentKind::Logistic => "logistic",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "synthetic_constrained" => Ok(Self::SyntheticConstrained),
            "logistic" => Ok(Self::Logistic),
            other => Err(format!("expected synthetic_constrained or logistic, got `{other}`")),
        }
    }
}

/// One configured method and its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgorithmConfig {
    Dagp(DagpHyperParams),
    Ddps { step_scale: f64, surplus_weight: f64 },
    ProjDgd { step_scale: f64 },
    AddOpt { step: f64 },
    PushPull { step: f64 },
}

pub const ALGORITHM_NAMES: [&str; 5] = ["dagp", "ddps", "proj_dgd", "add_opt", "push_pull"];

impl AlgorithmConfig {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmConfig::Dagp(_) => "dagp",
            AlgorithmConfig::Ddps { .. } => "ddps",
            AlgorithmConfig::ProjDgd { .. } => "proj_dgd",
            AlgorithmConfig::AddOpt { .. } => "add_opt",
            AlgorithmConfig::PushPull { .. } => "push_pull",
        }
    }

    fn defaults(name: &str) -> Option<Self> {
        Some(match name {
            "dagp" => AlgorithmConfig::Dagp(DagpHyperParams::default()),
            "ddps" => AlgorithmConfig::Ddps {
                step_scale: 0.05,
                surplus_weight: 0.1,
            },
            "proj_dgd" => AlgorithmConfig::ProjDgd { step_scale: 0.05 },
            "add_opt" => AlgorithmConfig::AddOpt { step: 0.1 },
            "push_pull" => AlgorithmConfig::PushPull { step: 0.1 },
            _ => return None,
        })
    }

    /// `(key, value)` pairs in file order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            AlgorithmConfig::Dagp(p) => vec![
                ("step", p.step),
                ("tracking_gain", p.tracking_gain),
                ("mixing_gain", p.mixing_gain),
            ],
            AlgorithmConfig::Ddps {
                step_scale,
                surplus_weight,
            } => vec![("step_scale", step_scale), ("surplus_weight", surplus_weight)],
            AlgorithmConfig::ProjDgd { step_scale } => vec![("step_scale", step_scale)],
            AlgorithmConfig::AddOpt { step } | AlgorithmConfig::PushPull { step } => {
                vec![("step", step)]
            }
        }
    }

    fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match (self, key) {
            (AlgorithmConfig::Dagp(p), "step") => &mut p.step,
            (AlgorithmConfig::Dagp(p), "tracking_gain") => &mut p.tracking_gain,
            (AlgorithmConfig::Dagp(p), "mixing_gain") => &mut p.mixing_gain,
            (AlgorithmConfig::Ddps { step_scale, .. }, "step_scale") => step_scale,
            (AlgorithmConfig::Ddps { surplus_weight, .. }, "surplus_weight") => surplus_weight,
            (AlgorithmConfig::ProjDgd { step_scale }, "step_scale") => step_scale,
            (AlgorithmConfig::AddOpt { step }, "step") => step,
            (AlgorithmConfig::PushPull { step }, "step") => step,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Settings of the eigenvalue-condition scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifyConfig {
    pub eta: f64,
    pub c_values: Vec<f64>,
    pub betas: Vec<f64>,
    pub radii: Vec<f64>,
    pub phases: usize,
    pub margin: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            eta: DEFAULT_ETA,
            c_values: DEFAULT_C_GRID.to_vec(),
            betas: DEFAULT_BETA_GRID.to_vec(),
            radii: DEFAULT_RADII.to_vec(),
            phases: DEFAULT_PHASES,
            margin: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Variable dimension `m`.
    pub dim: usize,
    /// Node count `M`.
    pub nodes: usize,
    /// Logistic experiments only.
    pub samples_per_node: usize,
    pub edge_prob: f64,
    pub graph_seed: u64,
    pub instance_seed: u64,
    pub x_init_seed: u64,
    pub iterations: usize,
    pub trace_every: usize,
    pub output_dir: PathBuf,
    pub reference_iters: usize,
    pub reference_tol: f64,
    /// How many random nodes to track against `reference_node`; 0 disables.
    pub tracked_nodes: usize,
    pub reference_node: usize,
    pub algorithms: Vec<AlgorithmConfig>,
    pub certify: CertifyConfig,
}

impl ExperimentConfig {
    /// Defaults for everything but the required keys.
    pub fn new(kind: ExperimentKind, dim: usize, nodes: usize) -> Self {
        Self {
            kind,
            dim,
            nodes,
            samples_per_node: 40,
            edge_prob: 0.3,
            graph_seed: 0,
            instance_seed: 0,
            x_init_seed: 0,
            iterations: 1000,
            trace_every: 10,
            output_dir: PathBuf::from("out"),
            reference_iters: 200_000,
            reference_tol: 1e-13,
            tracked_nodes: 5,
            reference_node: 0,
            algorithms: Vec::new(),
            certify: CertifyConfig::default(),
        }
    }

    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmConfig> {
        self.algorithms.iter().find(|a| a.name() == name)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, message: &str| {
            Err(ConfigError::Invalid {
                field: field.to_string(),
                message: message.to_string(),
            })
        };
        for (field, value) in [
            ("dim", self.dim),
            ("nodes", self.nodes),
            ("iterations", self.iterations),
            ("trace_every", self.trace_every),
            ("reference_iters", self.reference_iters),
            ("phases", self.certify.phases),
        ] {
            if value == 0 {
                return invalid(field, "must be positive");
            }
        }
        if self.kind == ExperimentKind::Logistic && self.samples_per_node == 0 {
            return invalid("samples_per_node", "must be positive");
        }
        if !(self.edge_prob >= 0.0 && self.edge_prob <= 1.0) {
            return invalid("edge_prob", "must lie in [0, 1]");
        }
        if !(self.reference_tol.is_finite() && self.reference_tol > 0.0) {
            return invalid("reference_tol", "must be positive");
        }
        if self.reference_node >= self.nodes {
            return invalid("reference_node", "must be a node index");
        }
        if self.algorithms.is_empty() {
            return invalid("algorithm", "at least one [algorithm.<name>] section is required");
        }
        for a in &self.algorithms {
            for (key, value) in a.params() {
                let positive = value.is_finite() && value > 0.0;
                if !positive {
                    return invalid(&format!("algorithm.{}.{key}", a.name()), "must be positive");
                }
            }
        }
        let c = &self.certify;
        if !(c.eta > 0.0 && c.eta.is_finite()) {
            return invalid("eta", "must be positive");
        }
        if c.c_values.is_empty() || c.c_values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("c_values", "must be a nonempty list of nonnegative numbers");
        }
        for (field, list) in [("betas", &c.betas), ("radii", &c.radii)] {
            if list.is_empty() || list.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return invalid(field, "must be a nonempty list of positive numbers");
            }
        }
        if !(c.margin.is_finite() && c.margin >= 0.0) {
            return invalid("margin", "must be nonnegative");
        }
        Ok(())
    }

    /// Writes every field explicitly; `parse_config` of the result is equal
    /// to `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.kind.as_str());
        let _ = writeln!(out, "dim = {}", self.dim);
        let _ = writeln!(out, "nodes = {}", self.nodes);
        let _ = writeln!(out, "samples_per_node = {}", self.samples_per_node);
        let _ = writeln!(out, "edge_prob = {:?}", self.edge_prob);
        let _ = writeln!(out, "graph_seed = {}", self.graph_seed);
        let _ = writeln!(out, "instance_seed = {}", self.instance_seed);
        let _ = writeln!(out, "x_init_seed = {}", self.x_init_seed);
        let _ = writeln!(out, "iterations = {}", self.iterations);
        let _ = writeln!(out, "trace_every = {}", self.trace_every);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "reference_iters = {}", self.reference_iters);
        let _ = writeln!(out, "reference_tol = {:?}", self.reference_tol);
        let _ = writeln!(out, "tracked_nodes = {}", self.tracked_nodes);
        let _ = writeln!(out, "reference_node = {}", self.reference_node);
        for a in &self.algorithms {
            let _ = writeln!(out, "\n[algorithm.{}]", a.name());
            for (key, value) in a.params() {
                let _ = writeln!(out, "{key} = {value:?}");
            }
        }
        let c = &self.certify;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "\n[certify]");
        let _ = writeln!(out, "eta = {:?}", c.eta);
        let _ = writeln!(out, "c_values = {}", list(&c.c_values));
        let _ = writeln!(out, "betas = {}", list(&c.betas));
        let _ = writeln!(out, "radii = {}", list(&c.radii));
        let _ = writeln!(out, "phases = {}", c.phases);
        let _ = writeln!(out, "margin = {:?}", c.margin);
        out
    }
}

enum Section {
    Top,
    Algorithm(usize),
    Certify,
}

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.parse().map_err(|e: T::Err| ConfigError::Syntax {
        line,
        message: format!("`{key}`: cannot parse `{raw}`: {e}"),
    })
}

fn parse_list(line: usize, key: &str, raw: &str) -> Result<Vec<f64>, ConfigError> {
    raw.split(',').map(|item| parse_value(line, key, item.trim())).collect()
}

/// Parses and validates an experiment file.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut kind: Option<ExperimentKind> = None;
    let mut dim: Option<usize> = None;
    let mut nodes: Option<usize> = None;
    let mut cfg = ExperimentConfig::new(ExperimentKind::SyntheticConstrained, 0, 0);
    let mut section = Section::Top;
    let mut seen: Vec<String> = Vec::new();

    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let name = inner.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            section = if name == "certify" {
                Section::Certify
            } else if let Some(algo) = name.strip_prefix("algorithm.") {
                let Some(defaults) = AlgorithmConfig::defaults(algo) else {
                    return Err(ConfigError::UnknownSection {
                        line,
                        section: name.to_string(),
                    });
                };
                if cfg.algorithms.iter().any(|a| a.name() == algo) {
                    return Err(ConfigError::Duplicate {
                        line,
                        key: name.to_string(),
                    });
                }
                cfg.algorithms.push(defaults);
                Section::Algorithm(cfg.algorithms.len() - 1)
            } else {
                return Err(ConfigError::UnknownSection {
                    line,
                    section: name.to_string(),
                });
            };
            if seen.iter().any(|s| s == name) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: name.to_string(),
                });
            }
            seen.push(name.to_string());
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let qualified = match section {
            Section::Top => key.to_string(),
            Section::Algorithm(i) => format!("algorithm.{}.{key}", cfg.algorithms[i].name()),
            Section::Certify => format!("certify.{key}"),
        };
        if seen.contains(&qualified) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
            });
        }
        seen.push(qualified);
        let unknown = || ConfigError::UnknownKey {
            line,
            key: key.to_string(),
        };
        match section {
            Section::Top => match key {
                "kind" => kind = Some(value.parse().map_err(|message| ConfigError::Syntax { line, message })?),
                "dim" => dim = Some(parse_value(line, key, value)?),
                "nodes" => nodes = Some(parse_value(line, key, value)?),
                "samples_per_node" => cfg.samples_per_node = parse_value(line, key, value)?,
                "edge_prob" => cfg.edge_prob = parse_value(line, key, value)?,
                "graph_seed" => cfg.graph_seed = parse_value(line, key, value)?,
                "instance_seed" => cfg.instance_seed = parse_value(line, key, value)?,
                "x_init_seed" => cfg.x_init_seed = parse_value(line, key, value)?,
                "iterations" => cfg.iterations = parse_value(line, key, value)?,
                "trace_every" => cfg.trace_every = parse_value(line, key, value)?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "reference_iters" => cfg.reference_iters = parse_value(line, key, value)?,
                "reference_tol" => cfg.reference_tol = parse_value(line, key, value)?,
                "tracked_nodes" => cfg.tracked_nodes = parse_value(line, key, value)?,
                "reference_node" => cfg.reference_node = parse_value(line, key, value)?,
                _ => return Err(unknown()),
            },
            Section::Algorithm(i) => {
                let v: f64 = parse_value(line, key, value)?;
                if !cfg.algorithms[i].set(key, v) {
                    return Err(unknown());
                }
            }
            Section::Certify => match key {
                "eta" => cfg.certify.eta = parse_value(line, key, value)?,
                "c_values" => cfg.certify.c_values = parse_list(line, key, value)?,
                "betas" => cfg.certify.betas = parse_list(line, key, value)?,
                "radii" => cfg.certify.radii = parse_list(line, key, value)?,
                "phases" => cfg.certify.phases = parse_value(line, key, value)?,
                "margin" => cfg.certify.margin = parse_value(line, key, value)?,
                _ => return Err(unknown()),
            },
        }
    }
    cfg.kind = kind.ok_or(ConfigError::Missing("kind"))?;
    cfg.dim = dim.ok_or(ConfigError::Missing("dim"))?;
    cfg.nodes = nodes.ok_or(ConfigError::Missing("nodes"))?;
    cfg.validate()?;
    Ok(cfg)
}

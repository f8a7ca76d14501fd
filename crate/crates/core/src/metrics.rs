//! Per-round measurements, running-average diagnostics, traces and rate fits.
//!
//! `x̄` is always the node mean `(1/M) Σ_v x_v`. Running averages are
//! `x̄ᵛ_N = (1/N) Σ_{n<N} x_vⁿ` and `x̄_N = (1/M) Σ_v x̄ᵛ_N`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::fmt_g17;
use crate::mixing::KernelReport;
use crate::problems::{dykstra_project, ConvexSet};

pub const DYKSTRA_ITERS: usize = 500;
pub const DYKSTRA_TOL: f64 = 1e-9;

pub const CSV_HEADER: &str =
    "n,objective,feasibility_gap,consensus_error,grad_sum_norm,optimality_gap,avg_objective_gap";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("feasibility gap needs at least one set")]
    NoSets,
    #[error("rate fit needs at least {needed} records, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

/// Column means of `X`.
pub fn mean_iterate(x: &DMatrix<f64>) -> Vec<f64> {
    let nodes = x.nrows() as f64;
    let mut sum = vec![0.0; x.ncols()];
    for v in 0..x.nrows() {
        for (j, s) in sum.iter_mut().enumerate() {
            *s += x[(v, j)];
        }
    }
    sum.iter().map(|s| s / nodes).collect()
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn row_vec(x: &DMatrix<f64>, v: usize) -> Vec<f64> {
    x.row(v).iter().copied().collect()
}

/// `max_v ‖x_v - x̄‖²`.
pub fn consensus_error(x: &DMatrix<f64>) -> f64 {
    let mean = mean_iterate(x);
    (0..x.nrows())
        .map(|v| squared_distance(&row_vec(x, v), &mean))
        .fold(0.0, f64::max)
}

/// `max_v ‖x_v - x̄‖`.
pub fn consensus_spread(x: &DMatrix<f64>) -> f64 {
    consensus_error(x).sqrt()
}

/// `‖x_v - x_ref‖²` for each tracked node `v`.
pub fn node_deviations(x: &DMatrix<f64>, tracked: &[usize], reference: usize) -> Vec<f64> {
    let r = row_vec(x, reference);
    tracked.iter().map(|&v| squared_distance(&row_vec(x, v), &r)).collect()
}

/// `‖Σ_v g_v‖₂`.
pub fn grad_sum_norm(g: &DMatrix<f64>) -> f64 {
    let mut sum = vec![0.0; g.ncols()];
    for v in 0..g.nrows() {
        for (j, s) in sum.iter_mut().enumerate() {
            *s += g[(v, j)];
        }
    }
    sum.iter().map(|s| s * s).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityGap {
    pub value: f64,
    /// Whether Dykstra met its stopping test.
    pub converged: bool,
}

/// `‖x̄ - P_{∩ S}(x̄)‖` with the projection computed by Dykstra.
pub fn feasibility_gap<S: ConvexSet>(
    point: &[f64],
    sets: &[S],
    dykstra_iters: usize,
    tol: f64,
) -> Result<FeasibilityGap, MetricsError> {
    if sets.is_empty() {
        return Err(MetricsError::NoSets);
    }
    if sets.iter().all(|s| s.contains(point, 0.0)) {
        return Ok(FeasibilityGap {
            value: 0.0,
            converged: true,
        });
    }
    let out = dykstra_project(sets, point, dykstra_iters, tol);
    Ok(FeasibilityGap {
        value: squared_distance(point, &out.point).sqrt(),
        converged: out.converged,
    })
}

/// One row of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    /// `Σ_v f_v(x̄)`
    pub objective: f64,
    /// Distance from `x̄` to `∩ S_v`.
    pub feasibility_gap: f64,
    /// `max_v ‖x_v - x̄‖²`
    pub consensus_error: f64,
    pub grad_sum_norm: f64,
    /// `Σ_v f_v(x̄) - f*`, NaN when `f*` is unknown.
    pub optimality_gap: f64,
    /// `|Σ_v f_v(x̄ᵛ_N) - f*|`, NaN when `f*` is unknown.
    pub avg_objective_gap: f64,
    /// `max_v ‖x̄_N - x̄ᵛ_N‖²`
    pub avg_consensus_error: f64,
    /// Distance from `x̄_N` to `∩ S_v`.
    pub avg_feasibility_gap: f64,
    /// `‖x_v - x_ref‖²` for the tracked nodes, if configured.
    pub node_deviations: Vec<f64>,
}

impl TraceRecord {
    pub fn field(&self, field: TraceField) -> f64 {
        match field {
            TraceField::Objective => self.objective,
            TraceField::FeasibilityGap => self.feasibility_gap,
            TraceField::ConsensusError => self.consensus_error,
            TraceField::GradSumNorm => self.grad_sum_norm,
            TraceField::OptimalityGap => self.optimality_gap,
            TraceField::AvgObjectiveGap => self.avg_objective_gap,
            TraceField::AvgConsensusError => self.avg_consensus_error,
            TraceField::AvgFeasibilityGap => self.avg_feasibility_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceField {
    Objective,
    FeasibilityGap,
    ConsensusError,
    GradSumNorm,
    OptimalityGap,
    AvgObjectiveGap,
    AvgConsensusError,
    AvgFeasibilityGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortRecord {
    pub round: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub algorithm: String,
    pub instance_seed: Option<u64>,
    pub x_init_seed: Option<u64>,
    pub hyperparameters: BTreeMap<String, f64>,
    pub kernel_report: Option<KernelReport>,
    pub f_star: Option<f64>,
    /// `max_n ‖Σ_v h_vⁿ‖ / (1 + ‖H_n‖)` over every round.
    pub max_conservation_ratio: Option<f64>,
    /// Records whose Dykstra projection hit its sweep budget.
    pub dykstra_unconverged: usize,
    pub tracked_nodes: Vec<usize>,
    pub reference_node: Option<usize>,
    pub warnings: Vec<String>,
    pub abort: Option<AbortRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub metadata: TraceMetadata,
}

impl Trace {
    /// The record at round `n`, if one was taken.
    pub fn at(&self, n: usize) -> Option<&TraceRecord> {
        self.records
            .binary_search_by_key(&n, |r| r.n)
            .ok()
            .map(|i| &self.records[i])
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// The contract CSV: seven columns, `%.17g` numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                fmt_g17(r.objective),
                fmt_g17(r.feasibility_gap),
                fmt_g17(r.consensus_error),
                fmt_g17(r.grad_sum_norm),
                fmt_g17(r.optimality_gap),
                fmt_g17(r.avg_objective_gap),
            );
        }
        out
    }

    /// Running-average statistics and tracked-node deviations.
    pub fn to_averages_csv(&self) -> String {
        let tracked = self.metadata.tracked_nodes.len();
        let mut out = String::from("n,avg_consensus_error,avg_feasibility_gap");
        for v in &self.metadata.tracked_nodes {
            let _ = write!(out, ",node_deviation_{v}");
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{}",
                r.n,
                fmt_g17(r.avg_consensus_error),
                fmt_g17(r.avg_feasibility_gap)
            );
            for k in 0..tracked {
                let value = r.node_deviations.get(k).copied().unwrap_or(f64::NAN);
                let _ = write!(out, ",{}", fmt_g17(value));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `y ≈ C / √n`
    InvSqrtN,
    /// `y ≈ C / n`
    InvN,
    /// `log y ≈ a + b n`
    LinearLog,
}

impl RateModel {
    fn power(self) -> Option<f64> {
        match self {
            RateModel::InvSqrtN => Some(0.5),
            RateModel::InvN => Some(1.0),
            RateModel::LinearLog => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: RateModel,
    /// `C` for the power models, slope `b` for `LinearLog`.
    pub coefficient: f64,
    /// `a` for `LinearLog`.
    pub intercept: Option<f64>,
    pub r_squared: f64,
    /// `sup_n y(n)·n^p` over the whole series for the power models;
    /// `sup_n y(n)·e^{-b n}` for `LinearLog`.
    pub boundedness: f64,
    pub points_used: usize,
    /// Tail points dropped because `log y` was undefined.
    pub skipped_nonpositive: usize,
}

pub const MIN_FIT_RECORDS: usize = 10;

/// Fits `model` to `field` over the tail half of the trace.
pub fn rate_fit(trace: &Trace, field: TraceField, model: RateModel) -> Result<FitReport, MetricsError> {
    let ns: Vec<f64> = trace.records.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = trace.records.iter().map(|r| r.field(field)).collect();
    fit_series(&ns, &ys, model)
}

/// [`rate_fit`] on a bare `(n, y)` series.
pub fn fit_series(ns: &[f64], ys: &[f64], model: RateModel) -> Result<FitReport, MetricsError> {
    assert_eq!(ns.len(), ys.len());
    if ns.len() < MIN_FIT_RECORDS {
        return Err(MetricsError::InsufficientData {
            needed: MIN_FIT_RECORDS,
            got: ns.len(),
        });
    }
    let tail = ns.len() / 2;
    let (tn, ty) = (&ns[tail..], &ys[tail..]);
    match model.power() {
        Some(p) => {
            let pts: Vec<(f64, f64)> = tn
                .iter()
                .zip(ty)
                .filter(|(n, _)| **n > 0.0)
                .map(|(&n, &y)| (n.powf(-p), y))
                .collect();
            let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
            let c = sxy / sxx;
            let r_squared = r_squared(pts.iter().map(|&(x, y)| (y, c * x)));
            let boundedness = ns
                .iter()
                .zip(ys)
                .filter(|(n, _)| **n > 0.0)
                .map(|(n, y)| y * n.powf(p))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(FitReport {
                model,
                coefficient: c,
                intercept: None,
                r_squared,
                boundedness,
                points_used: pts.len(),
                skipped_nonpositive: 0,
            })
        }
        None => {
            let pts: Vec<(f64, f64)> = tn
                .iter()
                .zip(ty)
                .filter(|(_, y)| **y > 0.0)
                .map(|(&n, &y)| (n, y.ln()))
                .collect();
            let skipped = tn.len() - pts.len();
            if pts.len() < 2 {
                return Err(MetricsError::InsufficientData {
                    needed: 2,
                    got: pts.len(),
                });
            }
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let r_squared = r_squared(pts.iter().map(|&(x, y)| (y, intercept + slope * x)));
            let boundedness = ns
                .iter()
                .zip(ys)
                .filter(|(_, y)| y.is_finite())
                .map(|(n, y)| y * (-slope * n).exp())
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(FitReport {
                model,
                coefficient: slope,
                intercept: Some(intercept),
                r_squared,
                boundedness,
                points_used: pts.len(),
                skipped_nonpositive: skipped,
            })
        }
    }
}

/// `1 - SS_res / SS_tot` over `(observed, fitted)` pairs.
fn r_squared(pairs: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let k = pairs.clone().count() as f64;
    let mean = pairs.clone().map(|p| p.0).sum::<f64>() / k;
    let ss_res: f64 = pairs.clone().map(|(y, f)| (y - f) * (y - f)).sum();
    let ss_tot: f64 = pairs.map(|(y, _)| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Halfspace;

    #[test]
    fn mean_of_opposite_rows_is_zero() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        assert_eq!(mean_iterate(&x), vec![0.0, 0.0]);
        assert_eq!(consensus_error(&DMatrix::from_element(3, 2, 4.0)), 0.0);
    }

    #[test]
    fn halfspace_gap_is_violation_margin() {
        let h = Halfspace::new(vec![0.6, 0.8], 1.0);
        // 1 + δ along the unit normal
        let p = [0.6 * 1.25, 0.8 * 1.25];
        let gap = feasibility_gap(&p, &[h], DYKSTRA_ITERS, DYKSTRA_TOL).unwrap();
        assert!((gap.value - 0.25).abs() < 1e-12);
        assert!(gap.converged);
        let none: [Halfspace; 0] = [];
        assert_eq!(feasibility_gap(&p, &none, 10, 1e-9), Err(MetricsError::NoSets));
    }

    fn fabricated(ys: impl Fn(f64) -> f64, count: usize) -> Trace {
        Trace {
            records: (1..=count)
                .map(|n| TraceRecord {
                    n,
                    objective: ys(n as f64),
                    feasibility_gap: 0.0,
                    consensus_error: 0.0,
                    grad_sum_norm: 0.0,
                    optimality_gap: 0.0,
                    avg_objective_gap: 0.0,
                    avg_consensus_error: 0.0,
                    avg_feasibility_gap: 0.0,
                    node_deviations: vec![],
                })
                .collect(),
            metadata: TraceMetadata::default(),
        }
    }

    #[test]
    fn recovers_inverse_sqrt_constant() {
        let t = fabricated(|n| 3.0 / n.sqrt(), 200);
        let fit = rate_fit(&t, TraceField::Objective, RateModel::InvSqrtN).unwrap();
        assert!((fit.coefficient - 3.0).abs() < 0.03);
        assert!(fit.r_squared > 0.999);
        assert!((fit.boundedness - 3.0).abs() < 1e-12);
    }

    #[test]
    fn recovers_geometric_slope() {
        let t = fabricated(|n| 2.0 * 0.9f64.powf(n), 100);
        let fit = rate_fit(&t, TraceField::Objective, RateModel::LinearLog).unwrap();
        let expected = 0.9f64.ln();
        assert!(((fit.coefficient - expected) / expected).abs() < 0.01);
        assert!(fit.r_squared > 0.999);
    }

    #[test]
    fn short_traces_rejected() {
        let t = fabricated(|n| n, 9);
        assert_eq!(
            rate_fit(&t, TraceField::Objective, RateModel::InvN),
            Err(MetricsError::InsufficientData { needed: 10, got: 9 })
        );
    }

    #[test]
    fn csv_header_and_row_count() {
        let t = fabricated(|n| n, 4);
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.count(), 4);
    }
}

//! Analysis matrices of the rate proof and a numerical scan of its
//! eigenvalue condition.
//!
//! With `M` nodes, the stacked proof state has block order
//! `[X̃_{n+1}; X̃_n; G̃; Δ]` (four `M`-row blocks). `R` and `P` describe how
//! that state evolves, `S` is the quadratic form whose running sum is
//! bounded, and `F(z, β)` is the `9M × 9M` matrix pencil of the z-domain
//! argument. The scan evaluates
//!
//! ```text
//! T(z, β) = [I O O] F(z, β)⁻¹ [-(C + β) I; I; O]
//! ```
//!
//! on a finite grid near `z = 0` and reports how close any eigenvalue of `T`
//! comes to 1. It is a diagnostic, not a proof.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::fmt_g17;
use crate::mixing::GossipPair;

pub type C64 = Complex<f64>;

/// `F` is flagged singular when `σ_min < SINGULAR_RATIO · σ_max`.
pub const SINGULAR_RATIO: f64 = 1e-10;
pub const DEFAULT_ETA: f64 = 0.5;
pub const DEFAULT_C_GRID: [f64; 3] = [0.0, 1.0, 10.0];
pub const DEFAULT_BETA_GRID: [f64; 3] = [0.1, 1.0, 10.0];
pub const DEFAULT_RADII: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const DEFAULT_PHASES: usize = 8;

pub const REPORT_CSV_HEADER: &str = "re_z,im_z,beta,C,min_eig_dist,singular_flag";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertificateError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    Parameter { name: &'static str, value: f64 },
    #[error("gossip matrices are {w:?} and {q:?}, expected square and equal")]
    Dimension { w: (usize, usize), q: (usize, usize) },
    #[error("z must be nonzero")]
    ZeroZ,
    #[error("every grid point has a singular F")]
    AllSingular,
    #[error("empty scan grid")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateMatrices {
    pub r: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub mu: f64,
    pub rho: f64,
    pub alpha: f64,
    pub smoothness: f64,
    pub eta: f64,
    pub nodes: usize,
}

fn check_positive(name: &'static str, value: f64) -> Result<(), CertificateError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(CertificateError::Parameter { name, value })
    }
}

fn set_block(target: &mut DMatrix<f64>, bi: usize, bj: usize, block: &DMatrix<f64>) {
    let (h, w) = block.shape();
    target.view_mut((bi * h, bj * w), (h, w)).copy_from(block);
}

/// Assembles `R`, `P` and `S` for the gossip pair and step parameters.
/// `smoothness` is the largest per-node `L_v`.
pub fn build_certificates(
    gossip: &GossipPair,
    mu: f64,
    rho: f64,
    alpha: f64,
    smoothness: f64,
    eta: f64,
) -> Result<CertificateMatrices, CertificateError> {
    for (name, value) in [
        ("mu", mu),
        ("rho", rho),
        ("alpha", alpha),
        ("smoothness", smoothness),
        ("eta", eta),
    ] {
        check_positive(name, value)?;
    }
    let (w, q) = (&gossip.w, &gossip.q);
    if !w.is_square() || w.shape() != q.shape() {
        return Err(CertificateError::Dimension {
            w: w.shape(),
            q: q.shape(),
        });
    }
    let m = w.nrows();
    let eye = DMatrix::<f64>::identity(m, m);
    let r_w = &eye - w;
    let k = rho / mu;

    let mut r = DMatrix::zeros(4 * m, 4 * m);
    set_block(&mut r, 1, 0, &eye);
    set_block(&mut r, 2, 0, &(&eye * -k));
    set_block(&mut r, 2, 1, &(&r_w * k));
    set_block(&mut r, 2, 2, &eye);
    set_block(&mut r, 2, 3, &(&eye * alpha));
    set_block(&mut r, 3, 0, &(&eye * k));
    set_block(&mut r, 3, 1, &(&r_w * -k));
    set_block(&mut r, 3, 3, &(&eye * (1.0 - alpha) - q));

    let mut p = DMatrix::zeros(4 * m, m);
    set_block(&mut p, 0, 0, &eye);

    let lm = smoothness * mu / 2.0;
    let centering = &eye - DMatrix::from_element(m, m, 1.0 / m as f64);
    let mut s = DMatrix::zeros(4 * m, 4 * m);
    set_block(&mut s, 0, 0, &(&eye * (1.0 - lm) - centering * (m as f64 * eta)));
    set_block(&mut s, 0, 1, &(&r_w * -0.5 + &eye * lm));
    set_block(&mut s, 1, 0, &(r_w.transpose() * -0.5 + &eye * lm));
    set_block(&mut s, 0, 2, &(&eye * (-mu / 2.0)));
    set_block(&mut s, 2, 0, &(&eye * (-mu / 2.0)));
    set_block(&mut s, 1, 1, &(&eye * -lm));

    Ok(CertificateMatrices {
        r,
        p,
        s,
        mu,
        rho,
        alpha,
        smoothness,
        eta,
        nodes: m,
    })
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|v| C64::new(v, 0.0))
}

/// `F(z, β) = [[S, z⁻¹I - Rᵀ, O], [zI - R, O, -P], [O, -Pᵀ, -βI]]`.
pub fn build_f(cert: &CertificateMatrices, z: C64, beta: f64) -> Result<DMatrix<C64>, CertificateError> {
    if z == C64::new(0.0, 0.0) {
        return Err(CertificateError::ZeroZ);
    }
    check_positive("beta", beta)?;
    let n4 = 4 * cert.nodes;
    let m = cert.nodes;
    let eye = DMatrix::<C64>::identity(n4, n4);
    let r = complexify(&cert.r);
    let p = complexify(&cert.p);
    let mut f = DMatrix::<C64>::zeros(2 * n4 + m, 2 * n4 + m);
    f.view_mut((0, 0), (n4, n4)).copy_from(&complexify(&cert.s));
    f.view_mut((0, n4), (n4, n4))
        .copy_from(&(&eye * z.inv() - r.transpose()));
    f.view_mut((n4, 0), (n4, n4)).copy_from(&(&eye * z - &r));
    f.view_mut((n4, 2 * n4), (n4, m)).copy_from(&(-&p));
    f.view_mut((2 * n4, n4), (m, n4)).copy_from(&(-p.transpose()));
    f.view_mut((2 * n4, 2 * n4), (m, m))
        .copy_from(&(DMatrix::<C64>::identity(m, m) * C64::new(-beta, 0.0)));
    Ok(f)
}

/// `σ_max / σ_min` of `F(z, β)`.
pub fn condition_number(f: &DMatrix<C64>) -> f64 {
    let sv = f.clone().svd(false, false).singular_values;
    sv.max() / sv.min()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub re_z: f64,
    pub im_z: f64,
    pub beta: f64,
    pub c: f64,
    /// `min_k |λ_k(T) - 1|`; NaN when `F` was singular.
    pub min_eig_dist: f64,
    pub singular: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption5Report {
    pub points: Vec<ScanPoint>,
    pub margin: f64,
    pub singular_count: usize,
    /// Smallest distance over non-singular points.
    pub min_distance: f64,
    pub pass: bool,
}

impl Assumption5Report {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_g17(p.re_z),
                fmt_g17(p.im_z),
                fmt_g17(p.beta),
                fmt_g17(p.c),
                fmt_g17(p.min_eig_dist),
                u8::from(p.singular)
            );
        }
        out
    }
}

/// `r · e^{2πik/phases}` for every radius and phase.
pub fn z_grid(radii: &[f64], phases: usize) -> Vec<C64> {
    radii
        .iter()
        .flat_map(|&r| (0..phases).map(move |k| C64::from_polar(r, 2.0 * PI * k as f64 / phases as f64)))
        .collect()
}

pub fn default_z_grid() -> Vec<C64> {
    z_grid(&DEFAULT_RADII, DEFAULT_PHASES)
}

fn scan_point(cert: &CertificateMatrices, c: f64, beta: f64, z: C64) -> Result<ScanPoint, CertificateError> {
    let f = build_f(cert, z, beta)?;
    let sv = f.clone().svd(false, false).singular_values;
    let singular = !(sv.min() >= SINGULAR_RATIO * sv.max());
    let mut point = ScanPoint {
        re_z: z.re,
        im_z: z.im,
        beta,
        c,
        min_eig_dist: f64::NAN,
        singular,
    };
    if singular {
        return Ok(point);
    }
    let n4 = 4 * cert.nodes;
    let mut rhs = DMatrix::<C64>::zeros(f.nrows(), n4);
    for i in 0..n4 {
        rhs[(i, i)] = C64::new(-(c + beta), 0.0);
        rhs[(n4 + i, i)] = C64::new(1.0, 0.0);
    }
    let Some(solution) = f.lu().solve(&rhs) else {
        point.singular = true;
        return Ok(point);
    };
    let t = solution.rows(0, n4).into_owned();
    let one = C64::new(1.0, 0.0);
    point.min_eig_dist = match t.schur().eigenvalues() {
        Some(eigs) => eigs.iter().map(|&l| (l - one).norm()).fold(f64::INFINITY, f64::min),
        None => f64::NAN,
    };
    Ok(point)
}

/// Evaluates `min_k |λ_k(T(z, β)) - 1|` over the grid for one `C`.
///
/// Points are independent and run in parallel; the report keeps grid order
/// (β outer, z inner). Passes iff every non-singular point is at least
/// `margin` away from 1.
pub fn assumption5_scan(
    cert: &CertificateMatrices,
    c: f64,
    betas: &[f64],
    zs: &[C64],
    margin: f64,
) -> Result<Assumption5Report, CertificateError> {
    if betas.is_empty() || zs.is_empty() {
        return Err(CertificateError::EmptyGrid);
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(CertificateError::Parameter { name: "C", value: c });
    }
    let grid: Vec<(f64, C64)> = betas.iter().flat_map(|&b| zs.iter().map(move |&z| (b, z))).collect();
    let points = grid
        .par_iter()
        .map(|&(beta, z)| scan_point(cert, c, beta, z))
        .collect::<Result<Vec<_>, _>>()?;
    let singular_count = points.iter().filter(|p| p.singular).count();
    if singular_count == points.len() {
        return Err(CertificateError::AllSingular);
    }
    let min_distance = points
        .iter()
        .filter(|p| !p.singular)
        .map(|p| p.min_eig_dist)
        .fold(f64::INFINITY, |acc, d| if d.is_nan() { f64::NAN } else { acc.min(d) });
    Ok(Assumption5Report {
        points,
        margin,
        singular_count,
        min_distance,
        pass: min_distance >= margin,
    })
}

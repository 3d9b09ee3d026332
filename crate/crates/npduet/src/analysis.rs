//! Gap-field measurements, ε-sweeps and blow-up exponent fits.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::harmonic_data::source::SourceSpec;
use crate::np_spectrum::{lambda_from_k, Conductivity};
use crate::spectral_solver::{solve_field, FieldSolution, SolveOptions};

pub const GAP_SEGMENT_POINTS: usize = 101;
pub const GAP_CIRCLE_POINTS: usize = 64;

/// Which pair of estimates applies, from the sign of `(k₁ − 1)(k₂ − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    SameSign,
    OppositeSign,
}

impl Regime {
    pub fn detect(k1: Conductivity, k2: Conductivity) -> Result<Regime> {
        let (l1, l2) = (lambda_from_k(k1)?, lambda_from_k(k2)?);
        Ok(Self::from_lambdas(l1, l2))
    }

    /// `λ_j > 0` exactly when `k_j > 1`.
    pub fn from_lambdas(l1: f64, l2: f64) -> Regime {
        if l1 * l2 > 0.0 {
            Regime::SameSign
        } else {
            Regime::OppositeSign
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::SameSign => "same-sign",
            Regime::OppositeSign => "opposite-sign",
        }
    }
}

/// Gap probe set: 101 points across the gap, inset by `1e-3·ε` at both
/// ends, followed by 64 pullbacks of the unit circle.
pub fn gap_probes(g: &DiskPair) -> Vec<C64> {
    let (a, b) = g.gap_endpoints();
    let inset = 1e-3 * g.eps;
    let (a, b) = (a.re + inset, b.re - inset);
    let mut pts: Vec<C64> = (0..GAP_SEGMENT_POINTS)
        .map(|i| {
            C64::new(
                a + (b - a) * i as f64 / (GAP_SEGMENT_POINTS - 1) as f64,
                0.0,
            )
        })
        .collect();
    for k in 0..GAP_CIRCLE_POINTS {
        let theta = (k as f64 + 0.5) * 2.0 * PI / GAP_CIRCLE_POINTS as f64;
        // The half-step offset keeps ζ = 1, the image of infinity, off the set.
        pts.push(g.beta / (C64::from_polar(1.0, theta) - 1.0));
    }
    pts
}

/// Largest derivative norm of order 1 (`|∇u|`) or 2 (Frobenius `|∇²u|`)
/// over the gap probe set.
pub fn gap_scan(sol: &FieldSolution, order: u32) -> Result<f64> {
    let norm = derivative_norm(order)?;
    gap_probes(&sol.geometry)
        .par_iter()
        .map(|&x| sol.evaluate(x).map(|e| norm(&e.jet)))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.into_iter().fold(0.0, f64::max))
}

fn derivative_norm(order: u32) -> Result<fn(&crate::layer::Jet) -> f64> {
    match order {
        1 => Ok(|j| j.grad_norm()),
        2 => Ok(|j| j.hess_frobenius()),
        _ => Err(Error::Domain(format!(
            "derivative order must be 1 or 2, got {order}"
        ))),
    }
}

/// Right-hand side of the field estimate for derivative order `n`.
pub fn bound_value(g: &DiskPair, l1: f64, l2: f64, n: u32) -> f64 {
    bound_from_parts(g.r_star, g.eps, l1, l2, n)
}

fn bound_from_parts(r_star: f64, eps: f64, l1: f64, l2: f64, n: u32) -> f64 {
    let base = 4.0 * (l1 * l2).abs() - 1.0 + r_star * eps.sqrt();
    match Regime::from_lambdas(l1, l2) {
        Regime::SameSign => base.powi(-(n as i32)),
        Regime::OppositeSign => base.powi(1 - n as i32),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub rho: f64,
    pub r_star: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub order: u32,
    pub gap_max: f64,
    pub bound_value: f64,
    /// Gap maxima of `|∇u|` and `|∇²u|`.
    pub norms: [f64; 2],
    pub n_modes: usize,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Fixed part of a sweep: radii, conductivities, data and derivative order.
#[derive(Debug, Clone)]
pub struct SweepTemplate {
    pub r1: f64,
    pub r2: f64,
    pub k1: Conductivity,
    pub k2: Conductivity,
    pub source: SourceSpec,
    pub order: u32,
    pub options: SolveOptions,
}

fn sweep_one(t: &SweepTemplate, eps: f64) -> SweepRecord {
    let mut rec = SweepRecord {
        eps,
        rho: f64::NAN,
        r_star: f64::NAN,
        lambda1: f64::NAN,
        lambda2: f64::NAN,
        order: t.order,
        gap_max: f64::NAN,
        bound_value: f64::NAN,
        norms: [f64::NAN; 2],
        n_modes: 0,
        error: None,
    };
    let run = |rec: &mut SweepRecord| -> Result<()> {
        derivative_norm(t.order)?;
        let g = DiskPair::new(t.r1, t.r2, eps)?;
        rec.rho = g.rho;
        rec.r_star = g.r_star;
        let sol = solve_field(&g, t.k1, t.k2, &t.source, &t.options)?;
        rec.lambda1 = sol.lambda1;
        rec.lambda2 = sol.lambda2;
        rec.n_modes = sol.n_modes();
        rec.norms = [gap_scan(&sol, 1)?, gap_scan(&sol, 2)?];
        rec.gap_max = rec.norms[t.order as usize - 1];
        rec.bound_value = bound_value(&g, sol.lambda1, sol.lambda2, t.order);
        Ok(())
    };
    if let Err(e) = run(&mut rec) {
        rec.error = Some(e.to_string());
    }
    rec
}

/// One record per ε, in input order; failures are recorded per entry.
pub fn sweep(t: &SweepTemplate, eps_list: &[f64]) -> Vec<SweepRecord> {
    eps_list.par_iter().map(|&eps| sweep_one(t, eps)).collect()
}

/// Least-squares slope of `ln y` against `ln ε`, with `r²`.
pub fn fit_exponent(records: &[SweepRecord]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.eps, r.gap_max))
        .collect();
    fit_loglog(&pts)
}

pub fn fit_loglog(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    if pts.len() < 3 {
        return Err(Error::Domain(format!(
            "need at least 3 points to fit an exponent, got {}",
            pts.len()
        )));
    }
    if pts.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain("exponent fit needs positive values".into()));
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain(
            "exponent fit needs distinct eps values".into(),
        ));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((slope, r2))
}

/// `gap_max(order n) / bound_value` per successful record.
pub fn bound_ratio(records: &[SweepRecord], n: u32) -> Result<Vec<f64>> {
    derivative_norm(n)?;
    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let Some(first) = ok.first() else {
        return Ok(Vec::new());
    };
    let regime = Regime::from_lambdas(first.lambda1, first.lambda2);
    ok.iter()
        .map(|r| {
            if Regime::from_lambdas(r.lambda1, r.lambda2) != regime {
                return Err(Error::Config(
                    "sweep records mix same-sign and opposite-sign regimes".into(),
                ));
            }
            Ok(
                r.norms[n as usize - 1]
                    / bound_from_parts(r.r_star, r.eps, r.lambda1, r.lambda2, n),
            )
        })
        .collect()
}

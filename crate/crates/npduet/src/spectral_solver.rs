//! Spectral solution of the transmission problem: per-zone series for the
//! layer potential on the concentric circles, pulled back through `T`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiskPair, Zone};
use crate::harmonic_data::source::{HarmonicPoly, SourceModel, SourceSpec};
use crate::harmonic_data::{
    circle_fourier, mode_data, neumann_disk_solve, pullback_adaptive, DiskHarmonic, HarmonicPair,
    ResidualPotential, TruncationOptions, FLUX_SAMPLES,
};
use crate::layer::Jet;
use crate::np_spectrum::{
    lambda_from_k, solve_modes, Conductivity, ModeCoefficients, RESONANCE_GUARD,
};
use crate::series::{InverseSeries, KahanSum, PowerSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub truncation: TruncationOptions,
    /// Tolerance for the zero-mean check on Neumann data.
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            truncation: TruncationOptions::default(),
            tol: 1e-10,
        }
    }
}

/// What `F` is in `u = F + v`.
#[derive(Debug, Clone)]
pub enum Background {
    Harmonic(HarmonicPoly),
    /// `F₀ + Σ w_j V_j` for a decomposed divergence source.
    Source(Box<ResidualPotential>),
}

impl Background {
    pub fn jet(&self, x: C64) -> Result<Jet> {
        match self {
            Background::Harmonic(p) => Ok(p.jet(x)),
            Background::Source(r) => Ok(r.jet(x)?.add(r.corrector_jet(x))),
        }
    }
}

/// Per-zone series of `W` with `v = Re W` on the concentric picture.
///
/// Anti-analytic terms `Q(ζ̄)` are stored through `Re Q(ζ̄) = Re conj(Q)(ζ)`,
/// so every zone is a single analytic function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneSeries {
    pub inner: PowerSeries,
    pub middle_analytic: PowerSeries,
    pub middle_conjugate: InverseSeries,
    pub outer: InverseSeries,
}

impl ZoneSeries {
    pub fn from_modes(g: &DiskPair, m: &ModeCoefficients) -> Self {
        let n = m.n_modes;
        let mut inner = Vec::with_capacity(n);
        let mut mid_p = Vec::with_capacity(n);
        let mut mid_q = Vec::with_capacity(n);
        let mut outer = Vec::with_capacity(n);
        let mut rn = 1.0;
        for i in 0..n {
            rn *= g.rho;
            let nf = (i + 1) as f64;
            let sp = m.a_plus[i] + m.a_minus[i];
            let dm = m.a_plus[i] - m.a_minus[i];
            inner.push(-(sp + dm * rn) / nf);
            mid_p.push(-dm / nf);
            mid_q.push(-(sp / nf).conj());
            outer.push(-((sp * rn + dm) / nf).conj());
        }
        ZoneSeries {
            inner: PowerSeries::new(inner, g.conc_r1),
            middle_analytic: PowerSeries::new(mid_p, g.conc_r2),
            middle_conjugate: InverseSeries::new(mid_q, g.conc_r1),
            outer: InverseSeries::new(outer, g.conc_r2),
        }
    }

    /// `W` and its ζ-derivatives in the given zone.
    pub fn eval(&self, zone: Zone, zeta: C64) -> [C64; 3] {
        let (p, q) = self.parts(zone, zeta);
        [p[0] + q[0], p[1] + q[1], p[2] + q[2]]
    }

    /// Analytic part `P(ζ)` and the conjugated anti-analytic part `conj(Q)(ζ)`.
    pub fn parts(&self, zone: Zone, zeta: C64) -> ([C64; 3], [C64; 3]) {
        let zero = [C64::default(); 3];
        match zone {
            Zone::Inclusion1 => (self.inner.eval(zeta), zero),
            Zone::Annulus => (
                self.middle_analytic.eval(zeta),
                self.middle_conjugate.eval(zeta),
            ),
            Zone::Inclusion2 => (zero, self.outer.eval(zeta)),
        }
    }
}

/// Field value with its zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub zone: Zone,
    pub jet: Jet,
}

#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub geometry: DiskPair,
    pub k: [Conductivity; 2],
    pub lambda1: f64,
    pub lambda2: f64,
    pub harmonic: HarmonicPair,
    pub modes: ModeCoefficients,
    pub background: Background,
    pub zones: ZoneSeries,
    /// `Re W(1)`: the value at infinity, subtracted so that `u − F → 0`.
    pub anchor: f64,
}

/// Solves `∇·σ∇u = f` (or `u − H → 0`) spectrally.
pub fn solve_field(
    g: &DiskPair,
    k1: Conductivity,
    k2: Conductivity,
    src: &SourceSpec,
    opts: &SolveOptions,
) -> Result<FieldSolution> {
    let lambda1 = lambda_from_k(k1)?;
    let lambda2 = lambda_from_k(k2)?;
    let (harmonic, background) = match src {
        SourceSpec::HarmonicBackground(p) => {
            let chi = |z: C64| p.analytic(z)[0];
            (
                pullback_adaptive(g, &chi, &chi, &opts.truncation)?,
                Background::Harmonic(p.clone()),
            )
        }
        SourceSpec::DivergenceSource(s) => {
            let rp = ResidualPotential::new(g, [k1, k2], Arc::clone(s))?;
            let d1 = neumann_data(g, &rp, 1, opts.tol)?;
            let d2 = neumann_data(g, &rp, 2, opts.tol)?;
            let chi1 = |z: C64| d1.analytic(z);
            let chi2 = |z: C64| d2.analytic(z);
            (
                pullback_adaptive(g, &chi1, &chi2, &opts.truncation)?,
                Background::Source(Box::new(rp)),
            )
        }
    };
    let (mut cp, mut cm) = mode_data(g, &harmonic);
    for (i, (p, m)) in cp.iter_mut().zip(cm.iter_mut()).enumerate() {
        let s = (i + 1) as f64 / (8.0 * PI);
        *p *= s;
        *m *= s;
    }
    let modes = solve_modes(lambda1, lambda2, g.rho, &cp, &cm)?;
    let zones = ZoneSeries::from_modes(g, &modes);
    let anchor = zones.eval(Zone::Annulus, C64::new(1.0, 0.0))[0].re;
    Ok(FieldSolution {
        geometry: *g,
        k: [k1, k2],
        lambda1,
        lambda2,
        harmonic,
        modes,
        background,
        zones,
        anchor,
    })
}

/// Harmonic function in `D_side` with the same normal derivative as `F₀`.
fn neumann_data(
    g: &DiskPair,
    rp: &ResidualPotential,
    side: usize,
    tol: f64,
) -> Result<DiskHarmonic> {
    let m = FLUX_SAMPLES;
    let samples = (0..m)
        .into_par_iter()
        .map(|i| rp.normal_flux(side, 2.0 * PI * i as f64 / m as f64))
        .collect::<Result<Vec<_>>>()?;
    neumann_disk_solve(
        g.center(side),
        g.radius(side),
        &circle_fourier(&samples),
        tol,
    )
}

impl FieldSolution {
    /// `u` with gradient and Hessian at a physical point.
    pub fn evaluate(&self, x: C64) -> Result<Evaluation> {
        let v = self.perturbation(x)?;
        let f = self.background.jet(x)?;
        Ok(Evaluation {
            zone: v.zone,
            jet: f.add(v.jet),
        })
    }

    /// `v = u − F` (the layer-potential part) at a physical point.
    pub fn perturbation(&self, x: C64) -> Result<Evaluation> {
        let g = &self.geometry;
        if x.norm() < 1e-12 * g.beta {
            // At the pole of T the outer series is a power series in
            // s = 1/ζ = x/(β + x), with s' = 1/β and s'' = −2/β² at x = 0.
            let (c, r) = (&self.zones.outer.coeffs, self.zones.outer.scale);
            let c1 = c.first().copied().unwrap_or_default() * r;
            let c2 = c.get(1).copied().unwrap_or_default() * r * r;
            let b = g.beta;
            let jet = Jet::from_analytic([
                C64::new(-self.anchor, 0.0),
                c1 / b,
                2.0 * (c2 - c1) / (b * b),
            ]);
            return Ok(Evaluation {
                zone: Zone::Inclusion2,
                jet,
            });
        }
        let zeta = g.forward_map(x)?;
        let zone = g.classify_zone(zeta);
        let [w, w1, w2] = self.zones.eval(zone, zeta);
        let t1 = g.dzeta_dz(x, 1);
        let t2 = g.dzeta_dz(x, 2);
        let jet = Jet::from_analytic([w - self.anchor, w1 * t1, w2 * t1 * t1 + w1 * t2]);
        Ok(Evaluation { zone, jet })
    }

    /// Value and first two ζ-derivatives of the analytic part of `V` and of
    /// the conjugated anti-analytic part, at a point of the ζ-plane.
    pub fn zone_parts(&self, zeta: C64) -> ([C64; 3], [C64; 3]) {
        self.zones.parts(self.geometry.classify_zone(zeta), zeta)
    }

    pub fn source(&self) -> Option<&Arc<dyn SourceModel>> {
        match &self.background {
            Background::Source(r) => Some(&r.source),
            Background::Harmonic(_) => None,
        }
    }

    /// Maximum truncation order kept.
    pub fn n_modes(&self) -> usize {
        self.modes.n_modes
    }
}

/// `w₁(ζ) = Σ a₁[n] ζⁿ / (L − ρ^{2n})` (side 1, `|ζ| ≤ R₁`) or
/// `w₂(ζ) = Σ conj(a₂[n]) ζ^{−n} / (L − ρ^{2n})` (side 2, `|ζ| ≥ R₂`).
pub fn series_w(
    g: &DiskPair,
    hp: &HarmonicPair,
    lambda_product: f64,
    zeta: C64,
    side: usize,
) -> Result<C64> {
    let slack = 1.0 + 1e-12;
    match side {
        1 if zeta.norm() > g.conc_r1 * slack => {
            return Err(Error::Domain(format!(
                "w1 evaluated outside |ζ| ≤ R₁ at {zeta}"
            )))
        }
        2 if zeta.norm() < g.conc_r2 / slack => {
            return Err(Error::Domain(format!(
                "w2 evaluated inside |ζ| ≥ R₂ at {zeta}"
            )))
        }
        1 | 2 => {}
        _ => return Err(Error::Domain(format!("side must be 1 or 2, got {side}"))),
    }
    let rho2 = g.rho * g.rho;
    let y = if side == 1 { zeta } else { 1.0 / zeta };
    let mut acc = KahanSum::new();
    let (mut rn, mut yn) = (1.0, C64::new(1.0, 0.0));
    for i in 0..hp.n {
        rn *= rho2;
        yn *= y;
        let d = lambda_product - rn;
        if d.abs() < RESONANCE_GUARD {
            return Err(Error::Resonance {
                n: i + 1,
                value: d.abs(),
            });
        }
        let a = if side == 1 { hp.a1[i] } else { hp.a2[i].conj() };
        acc.add(a * yn / d);
    }
    Ok(acc.value())
}

/// Functional form `w(ζ) = Σ_l h(ρ^{2l}ζ) / L^{l+1}` (side 1) or
/// `Σ_l h(ρ^{−2l}ζ) / L^{l+1}` (side 2), for `h` without its constant term.
pub fn series_w_functional(
    rho: f64,
    lambda_product: f64,
    h: &dyn Fn(C64) -> C64,
    zeta: C64,
    side: usize,
    max_terms: usize,
) -> Result<C64> {
    if lambda_product.abs() < 1.0 {
        return Err(Error::Domain(format!(
            "|4λ₁λ₂| must be at least 1, got {lambda_product}"
        )));
    }
    let q = if side == 1 {
        rho * rho
    } else {
        1.0 / (rho * rho)
    };
    let mut acc = KahanSum::new();
    let mut arg = zeta;
    let mut lp = lambda_product;
    for _ in 0..max_terms {
        let term = h(arg) / lp;
        acc.add(term);
        if term.norm() < 1e-18 * acc.value().norm().max(1e-300) {
            break;
        }
        arg *= q;
        lp *= lambda_product;
    }
    Ok(acc.value())
}

/// `A₁(ζ) + A₂(ζ)` split into the analytic part and the anti-analytic part
/// (the latter returned as its value at ζ, i.e. a function of ζ̄), from the
/// functions `w₁` and `w₂`.
pub fn potential_a(
    g: &DiskPair,
    lambda1: f64,
    lambda2: f64,
    hp: &HarmonicPair,
    zeta: C64,
) -> Result<(C64, C64)> {
    let lp = 4.0 * lambda1 * lambda2;
    let (r1, r2, rho2) = (g.conc_r1, g.conc_r2, g.rho * g.rho);
    let w1 = |z: C64| series_w(g, hp, lp, z, 1);
    let w2 = |z: C64| series_w(g, hp, lp, z, 2);
    let zb = zeta.conj();
    Ok(match g.classify_zone(zeta) {
        Zone::Inclusion1 => {
            let analytic = -(2.0 * lambda2 * w1(zeta)? - w1(rho2 * zeta)?)
                - (2.0 * lambda1 - 1.0) * w2(r2 * r2 / zeta)?;
            (analytic, C64::default())
        }
        Zone::Annulus => {
            let analytic = w1(rho2 * zeta)? - 2.0 * lambda1 * w2(r2 * r2 / zeta)?;
            let anti = -2.0 * lambda2 * w1(r1 * r1 / zb)? + w2(zb / rho2)?;
            (analytic, anti)
        }
        Zone::Inclusion2 => {
            let anti = -(2.0 * lambda2 - 1.0) * w1(r1 * r1 / zb)?
                - (2.0 * lambda1 * w2(zb)? - w2(zb / rho2)?);
            (C64::default(), anti)
        }
    })
}

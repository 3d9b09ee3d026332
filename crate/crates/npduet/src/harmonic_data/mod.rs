//! Analytic data of the transmission problem: Taylor/Laurent coefficients of
//! the pulled-back boundary data, per-mode coefficients, and the corrector
//! decomposition of divergence sources.

pub mod corrector;
pub mod newtonian;
pub mod source;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::layer::{dft_normalized, Jet};
use crate::np_spectrum::Conductivity;
use crate::series::PowerSeries;

use corrector::Corrector;
use newtonian::NewtonianQuadrature;
use source::SourceModel;

/// Coefficients below this fraction of the largest one are treated as round-off.
pub const COEFF_FLOOR: f64 = 1e-15;

/// Largest truncation order tried by [`pullback_adaptive`].
pub const MAX_TRUNCATION: usize = 1 << 17;

/// Samples per circle used to expand Neumann data in Fourier modes.
pub const FLUX_SAMPLES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPair {
    /// Number of stored coefficients; `a1[m − 1]` belongs to `ζ^m`.
    pub n: usize,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    /// Radii at which the coefficients were sampled.
    pub sample_radius1: f64,
    pub sample_radius2: f64,
    /// Discarded constant terms `h₁(0)` and `h₂(∞)`.
    pub h1_const: C64,
    pub h2_const: C64,
    /// Largest normalised coefficient in the upper half of the sampled range.
    pub tail: f64,
}

impl HarmonicPair {
    pub fn zero(n: usize) -> Self {
        HarmonicPair {
            n,
            a1: vec![C64::default(); n],
            a2: vec![C64::default(); n],
            sample_radius1: 0.0,
            sample_radius2: 0.0,
            h1_const: C64::default(),
            h2_const: C64::default(),
            tail: 0.0,
        }
    }

    /// `a₁[m] R₁^m` and `a₂[m] R₂^{−m}` for `m = 1..n`.
    pub fn normalized(&self, g: &DiskPair) -> (Vec<C64>, Vec<C64>) {
        let mut b1 = Vec::with_capacity(self.n);
        let mut b2 = Vec::with_capacity(self.n);
        let (mut p1, mut p2) = (1.0, 1.0);
        for m in 0..self.n {
            p1 *= g.conc_r1;
            p2 /= g.conc_r2;
            b1.push(self.a1[m] * p1);
            b2.push(self.a2[m] * p2);
        }
        (b1, b2)
    }

    pub fn add(&self, other: &HarmonicPair) -> HarmonicPair {
        let n = self.n.max(other.n);
        let get = |v: &Vec<C64>, i: usize| v.get(i).copied().unwrap_or_default();
        HarmonicPair {
            n,
            a1: (0..n)
                .map(|i| get(&self.a1, i) + get(&other.a1, i))
                .collect(),
            a2: (0..n)
                .map(|i| get(&self.a2, i) + get(&other.a2, i))
                .collect(),
            sample_radius1: self.sample_radius1,
            sample_radius2: self.sample_radius2,
            h1_const: self.h1_const + other.h1_const,
            h2_const: self.h2_const + other.h2_const,
            tail: self.tail.max(other.tail),
        }
    }

    pub fn truncate(&mut self, n: usize) {
        self.n = n.min(self.n);
        self.a1.truncate(self.n);
        self.a2.truncate(self.n);
    }
}

/// Options for coefficient extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationOptions {
    pub n_start: usize,
    pub n_cap: usize,
    /// Sampling radii are `frac·R₁` and `R₂/frac`.
    pub radius_frac: f64,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        TruncationOptions {
            n_start: 256,
            n_cap: MAX_TRUNCATION,
            radius_frac: 1.0,
        }
    }
}

/// Taylor coefficients of `h₁ = χ₁∘T⁻¹` at 0 and Laurent coefficients of
/// `h₂ = χ₂∘T⁻¹` at ∞, from `4n` samples on one circle each.
pub fn pullback_coefficients(
    g: &DiskPair,
    chi1: &(dyn Fn(C64) -> C64 + Sync),
    chi2: &(dyn Fn(C64) -> C64 + Sync),
    n: usize,
    radius_frac: f64,
) -> Result<HarmonicPair> {
    if n == 0 {
        return Err(Error::Domain("truncation order must be positive".into()));
    }
    if !(radius_frac > 0.0 && radius_frac <= 1.0) {
        return Err(Error::Domain(format!(
            "radius fraction must lie in (0, 1], got {radius_frac}"
        )));
    }
    let m = 4 * n;
    let r1 = radius_frac * g.conc_r1;
    let r2 = g.conc_r2 / radius_frac;
    let sample = |r: f64, chi: &(dyn Fn(C64) -> C64 + Sync)| -> Result<Vec<C64>> {
        (0..m)
            .map(|k| {
                let zeta = C64::from_polar(r, 2.0 * PI * k as f64 / m as f64);
                Ok(chi(g.inverse_map(zeta)?))
            })
            .collect()
    };
    let x1 = dft_normalized(&sample(r1, chi1)?);
    let x2 = dft_normalized(&sample(r2, chi2)?);
    // Normalised coefficients come straight from the samples; the raw ones
    // overflow once R^{∓k} does, and those are far below round-off anyway.
    let finite = |c: C64| if c.is_finite() { c } else { C64::default() };
    let (s1, s2) = ((g.conc_r1 / r1).ln(), (r2 / g.conc_r2).ln());
    let (l1, l2) = (g.conc_r1.ln(), g.conc_r2.ln());
    let mut a1 = Vec::with_capacity(n);
    let mut a2 = Vec::with_capacity(n);
    let mut b1 = Vec::with_capacity(n);
    let mut b2 = Vec::with_capacity(n);
    for k in 1..=n {
        let kf = k as f64;
        let (u1, u2) = (x1[k] * (kf * s1).exp(), x2[m - k] * (kf * s2).exp());
        a1.push(finite(u1 * (-kf * l1).exp()));
        a2.push(finite(u2 * (kf * l2).exp()));
        b1.push(u1);
        b2.push(u2);
    }
    let mut hp = HarmonicPair {
        n,
        a1,
        a2,
        sample_radius1: r1,
        sample_radius2: r2,
        h1_const: x1[0],
        h2_const: x2[0],
        tail: 0.0,
    };
    let big = b1.iter().chain(&b2).map(|b| b.norm()).fold(0.0, f64::max);
    let upper = b1[n / 2..]
        .iter()
        .chain(&b2[n / 2..])
        .map(|b| b.norm())
        .fold(0.0, f64::max);
    hp.tail = if big > 0.0 { upper / big } else { 0.0 };
    Ok(hp)
}

/// Doubles the truncation order until the upper half of the sampled
/// coefficients has decayed to round-off, then drops the round-off tail.
pub fn pullback_adaptive(
    g: &DiskPair,
    chi1: &(dyn Fn(C64) -> C64 + Sync),
    chi2: &(dyn Fn(C64) -> C64 + Sync),
    opts: &TruncationOptions,
) -> Result<HarmonicPair> {
    let mut n = opts.n_start.max(8);
    loop {
        let mut hp = pullback_coefficients(g, chi1, chi2, n, opts.radius_frac)?;
        // FFT round-off grows like log₂ of the sample count.
        if hp.tail <= COEFF_FLOOR * ((4 * n) as f64).log2() {
            let (b1, b2) = hp.normalized(g);
            let big = b1.iter().chain(&b2).map(|b| b.norm()).fold(0.0, f64::max);
            let keep = (0..n)
                .rev()
                .find(|&i| b1[i].norm().max(b2[i].norm()) > COEFF_FLOOR * big)
                .map_or(1, |i| i + 1);
            hp.truncate(keep);
            return Ok(hp);
        }
        if 2 * n > opts.n_cap {
            return Err(Error::TruncationInsufficient {
                n,
                tail: hp.tail,
                suggested: 2 * n,
            });
        }
        n *= 2;
    }
}

/// `C_{n,±} = 2π(a₁[n]R₁ⁿ ± conj(a₂[n])R₂^{−n})`, `n = 1..N`.
pub fn mode_data(g: &DiskPair, hp: &HarmonicPair) -> (Vec<C64>, Vec<C64>) {
    let (b1, b2) = hp.normalized(g);
    let plus = b1
        .iter()
        .zip(&b2)
        .map(|(x, y)| 2.0 * PI * (x + y.conj()))
        .collect();
    let minus = b1
        .iter()
        .zip(&b2)
        .map(|(x, y)| 2.0 * PI * (x - y.conj()))
        .collect();
    (plus, minus)
}

/// A harmonic function on a disk, `H = Re Σ_{m≥1} 2h_m ((z − c)/r)^m`, whose
/// boundary trace has Fourier coefficients `h_m` (and `conj(h_m)` for −m).
#[derive(Debug, Clone, PartialEq)]
pub struct DiskHarmonic {
    pub center: C64,
    pub radius: f64,
    pub trace: Vec<C64>,
    series: PowerSeries,
}

impl DiskHarmonic {
    pub fn new(center: C64, radius: f64, trace: Vec<C64>) -> Self {
        let series = PowerSeries::new(trace.iter().map(|h| 2.0 * h).collect(), radius);
        DiskHarmonic {
            center,
            radius,
            trace,
            series,
        }
    }

    /// Analytic completion χ with `H = Re χ`.
    pub fn analytic(&self, z: C64) -> C64 {
        self.series.eval(z - self.center)[0]
    }

    pub fn jet(&self, z: C64) -> Jet {
        Jet::from_analytic(self.series.eval(z - self.center))
    }
}

/// Solves `ΔH = 0` in the disk with `∂_ν H = flux`, where `flux[m]` is the
/// `e^{imθ}` coefficient (`m ≥ 0`) of a real flux. The constant mode of `H`
/// is set to zero.
pub fn neumann_disk_solve(
    center: C64,
    radius: f64,
    flux: &[C64],
    tol: f64,
) -> Result<DiskHarmonic> {
    let scale = flux.iter().map(|f| f.norm()).fold(1.0, f64::max);
    if let Some(f0) = flux.first() {
        if f0.norm() > tol * scale {
            return Err(Error::Compatibility(format!(
                "Neumann data has nonzero mean {:e} on the circle about {center}",
                f0.re
            )));
        }
    }
    let mut trace: Vec<C64> = flux
        .iter()
        .enumerate()
        .skip(1)
        .map(|(m, f)| radius * f / m as f64)
        .collect();
    let big = trace.iter().map(|h| h.norm()).fold(0.0, f64::max);
    while trace.last().is_some_and(|h| h.norm() <= 1e-17 * big) {
        trace.pop();
    }
    Ok(DiskHarmonic::new(center, radius, trace))
}

/// Fourier coefficients `m = 0..M/2−1` of a real function sampled at `M`
/// equispaced angles on a circle.
pub fn circle_fourier(samples: &[f64]) -> Vec<C64> {
    let hat = dft_normalized(
        &samples
            .iter()
            .map(|&v| C64::new(v, 0.0))
            .collect::<Vec<_>>(),
    );
    hat[..samples.len() / 2].to_vec()
}

/// Result of removing the inclusion integrals from a divergence source.
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// `w_j = ∫_{D_j} f`.
    pub weights: [f64; 2],
    pub correctors: [Option<Corrector>; 2],
    /// `∫_{D_j} f₀` of the residual source, by quadrature.
    pub residual_integrals: [f64; 2],
}

/// Splits `f = w₁∇·v₁ + w₂∇·v₂ + f₀` with `∫_{D_j} f₀ = 0`.
pub fn source_decompose(
    g: &DiskPair,
    k: [Conductivity; 2],
    src: &dyn SourceModel,
) -> Result<Decomposition> {
    let inv_k = inverse_conductivities(k)?;
    let quad = NewtonianQuadrature::new(g, inv_k, 1e-12);
    let mut weights = [0.0; 2];
    let mut correctors = [None, None];
    let mut residual_integrals = [0.0; 2];
    for side in 1..=2 {
        let w = match src.closed_form_inclusion_integral(g, side) {
            Some(v) => v,
            None => quad.inclusion_integral(src, side)?,
        };
        weights[side - 1] = w;
        if w == 0.0 {
            continue;
        }
        if k[side - 1] == Conductivity::Finite(0.0) {
            return Err(Error::Domain(format!(
                "inclusion {side} is insulating but the source has nonzero integral {w} on it"
            )));
        }
        let c = Corrector::new(g, side, k[side - 1])?;
        let unit = corrector_integral(&c);
        residual_integrals[side - 1] = w - w * unit;
        correctors[side - 1] = Some(c);
    }
    Ok(Decomposition {
        weights,
        correctors,
        residual_integrals,
    })
}

/// `∫_{D_j} ∇·v_j` by polar Gauss quadrature.
pub fn corrector_integral(c: &Corrector) -> f64 {
    let q = crate::quadrature::Adaptive2d::new(12, 1e-13, 1e-13, 200_000);
    let f = |s: f64, t: f64| c.divergence(c.center + C64::from_polar(s, t)) * s;
    q.integrate(&f, &[[0.0, c.radius, -PI, PI]])
        .map(|v| v.0)
        .unwrap_or(f64::NAN)
}

/// `1/k_j`, with perfect conductors mapped to 0. Insulators map to ∞.
pub fn inverse_conductivities(k: [Conductivity; 2]) -> Result<[f64; 2]> {
    let f = |c: Conductivity| match c {
        Conductivity::Infinite => Ok(0.0),
        Conductivity::Finite(v) if v == 1.0 => Err(Error::DegenerateContrast),
        Conductivity::Finite(v) if v == 0.0 => Ok(f64::INFINITY),
        Conductivity::Finite(v) if v > 0.0 && v.is_finite() => Ok(1.0 / v),
        Conductivity::Finite(v) => Err(Error::Domain(format!("invalid conductivity {v}"))),
    };
    Ok([f(k[0])?, f(k[1])?])
}

/// Weighted potential `F₀ = F − Σ w_j N[∇·v_j]` of the residual source.
#[derive(Debug, Clone)]
pub struct ResidualPotential {
    pub source: Arc<dyn SourceModel>,
    pub inv_k: [f64; 2],
    pub decomposition: Decomposition,
    geometry: DiskPair,
}

impl ResidualPotential {
    pub fn new(g: &DiskPair, k: [Conductivity; 2], source: Arc<dyn SourceModel>) -> Result<Self> {
        let decomposition = source_decompose(g, k, source.as_ref())?;
        let mut inv_k = inverse_conductivities(k)?;
        for j in 0..2 {
            if inv_k[j].is_infinite() {
                // The source vanishes on an insulating inclusion, so its weight is irrelevant.
                inv_k[j] = 0.0;
            }
        }
        Ok(ResidualPotential {
            source,
            inv_k,
            decomposition,
            geometry: *g,
        })
    }

    /// Jet of the weighted potential `F` of the original source.
    pub fn full_potential(&self, x: C64) -> Result<Jet> {
        let g = &self.geometry;
        if let Some(j) = self.source.closed_form_potential(g, self.inv_k, x) {
            return Ok(j);
        }
        let q = NewtonianQuadrature::new(g, self.inv_k, 1e-10);
        let value = q.value(self.source.as_ref(), x)?;
        let grad = q.gradient(self.source.as_ref(), x)?;
        let h = 1e-4 * g.eps.min(g.r1).min(g.r2);
        let gx = q.gradient(self.source.as_ref(), x + h)?;
        let gx_ = q.gradient(self.source.as_ref(), x - h)?;
        let gy = q.gradient(self.source.as_ref(), x + C64::new(0.0, h))?;
        let gy_ = q.gradient(self.source.as_ref(), x - C64::new(0.0, h))?;
        let hxx = (gx[0] - gx_[0]) / (2.0 * h);
        let hxy = 0.5 * ((gx[1] - gx_[1]) + (gy[0] - gy_[0])) / (2.0 * h);
        let hyy = (gy[1] - gy_[1]) / (2.0 * h);
        Ok(Jet {
            value,
            grad,
            hess: [hxx, hxy, hyy],
        })
    }

    /// Jet of `F₀`.
    pub fn jet(&self, x: C64) -> Result<Jet> {
        let mut j = self.full_potential(x)?;
        for (w, c) in self
            .decomposition
            .weights
            .iter()
            .zip(&self.decomposition.correctors)
        {
            if let Some(c) = c {
                j = j.add_scaled(c.newtonian(x), -w);
            }
        }
        Ok(j)
    }

    /// Jet of `Σ w_j V_j`.
    pub fn corrector_jet(&self, x: C64) -> Jet {
        let mut j = Jet::default();
        for (w, c) in self
            .decomposition
            .weights
            .iter()
            .zip(&self.decomposition.correctors)
        {
            if let Some(c) = c {
                j = j.add_scaled(c.potential(x), *w);
            }
        }
        j
    }

    /// Exterior normal derivative of `F₀` on `∂D_side` at angle θ.
    pub fn normal_flux(&self, side: usize, theta: f64) -> Result<f64> {
        let g = &self.geometry;
        let nu = C64::from_polar(1.0, theta);
        let x = g.center(side) + g.radius(side) * nu;
        let grad = match self.source.closed_form_potential(g, self.inv_k, x) {
            Some(j) => j.grad,
            None => {
                NewtonianQuadrature::new(g, self.inv_k, 1e-10).gradient(self.source.as_ref(), x)?
            }
        };
        let mut flux = grad[0] * nu.re + grad[1] * nu.im;
        for (w, c) in self
            .decomposition
            .weights
            .iter()
            .zip(&self.decomposition.correctors)
        {
            if let Some(c) = c {
                let d = if c.side == side {
                    c.newtonian_flux_own(theta)
                } else {
                    let j = c.newtonian(x);
                    j.grad[0] * nu.re + j.grad[1] * nu.im
                };
                flux -= w * d;
            }
        }
        Ok(flux)
    }
}

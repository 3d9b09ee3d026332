//! Source descriptions: harmonic polynomial backgrounds and divergence sources.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::layer::Jet;

/// Default cap on the degree of a harmonic polynomial background.
pub const MAX_DEGREE: usize = 32;

/// `H(z) = Re Σ_{m=0}^{d} b_m z^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPoly {
    pub coeffs: Vec<C64>,
}

impl HarmonicPoly {
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Domain(format!(
                "harmonic polynomial degree {} exceeds the cap {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        Ok(HarmonicPoly { coeffs })
    }

    /// `H = x₁`.
    pub fn x() -> Self {
        HarmonicPoly {
            coeffs: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        }
    }

    pub fn constant(c: f64) -> Self {
        HarmonicPoly {
            coeffs: vec![C64::new(c, 0.0)],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Analytic completion `χ(z) = Σ b_m z^m` with `H = Re χ`.
    pub fn analytic(&self, z: C64) -> [C64; 3] {
        let mut f = C64::new(0.0, 0.0);
        let mut d1 = C64::new(0.0, 0.0);
        let mut d2 = C64::new(0.0, 0.0);
        for &b in self.coeffs.iter().rev() {
            d2 = d2 * z + 2.0 * d1;
            d1 = d1 * z + f;
            f = f * z + b;
        }
        [f, d1, d2]
    }

    pub fn jet(&self, z: C64) -> Jet {
        Jet::from_analytic(self.analytic(z))
    }

    pub fn add(&self, other: &HarmonicPoly) -> HarmonicPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &Vec<C64>, i: usize| v.get(i).copied().unwrap_or_default();
        HarmonicPoly {
            coeffs: (0..n)
                .map(|i| get(&self.coeffs, i) + get(&other.coeffs, i))
                .collect(),
        }
    }
}

/// Divergence-form source `f = ∇·g` with an explicit interior density.
pub trait SourceModel: Send + Sync + fmt::Debug {
    /// Pointwise density `f(y)`.
    fn density(&self, y: C64) -> f64;

    /// Axis-aligned support box `(x_min, x_max, y_min, y_max)`.
    fn support_box(&self) -> [f64; 4];

    /// Support as a disk, when the source is radially organised about a point.
    fn support_disk(&self) -> Option<(C64, f64)> {
        None
    }

    /// Closed-form weighted Newtonian potential with its derivatives, if known.
    fn closed_form_potential(&self, _g: &DiskPair, _inv_k: [f64; 2], _x: C64) -> Option<Jet> {
        None
    }

    /// Closed-form `∫_{D_j} f`, if known.
    fn closed_form_inclusion_integral(&self, _g: &DiskPair, _side: usize) -> Option<f64> {
        None
    }
}

/// `f = amplitude · χ_{B(center, radius)}`, realised as `∇·g` with
/// `g = (y − x₀)/2` inside the ball and `(a²/2)(y − x₀)/|y − x₀|²` outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDisk {
    pub center: C64,
    pub radius: f64,
    pub amplitude: f64,
}

/// Where a ball sits relative to the two inclusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    Inclusion(usize),
    Exterior,
    Straddling,
}

impl UniformDisk {
    pub fn new(center: C64, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!(
                "source radius must be positive, got {radius}"
            )));
        }
        Ok(UniformDisk {
            center,
            radius,
            amplitude,
        })
    }

    pub fn placement(&self, g: &DiskPair) -> Placement {
        for side in 1..=2 {
            let d = (self.center - g.center(side)).norm();
            if d + self.radius <= g.radius(side) {
                return Placement::Inclusion(side);
            }
        }
        let clear = (1..=2)
            .all(|side| (self.center - g.center(side)).norm() >= g.radius(side) + self.radius);
        if clear {
            Placement::Exterior
        } else {
            Placement::Straddling
        }
    }

    /// Unweighted logarithmic potential `(1/2π)∫_B ln|x − y| dy` per unit amplitude.
    pub fn log_potential(&self, x: C64) -> Jet {
        let a = self.radius;
        let z = x - self.center;
        let s2 = z.norm_sqr();
        if s2 >= a * a {
            // (a²/2) ln|z| = Re((a²/2) log z)
            let c = 0.5 * a * a;
            Jet::from_analytic([C64::new(c * 0.5 * s2.ln(), 0.0), c / z, -c / (z * z)])
        } else {
            Jet {
                value: (s2 - a * a) / 4.0 + 0.5 * a * a * a.ln(),
                grad: [z.re / 2.0, z.im / 2.0],
                hess: [0.5, 0.0, 0.5],
            }
        }
    }

    pub fn g_field(&self, y: C64) -> C64 {
        let z = y - self.center;
        let a = self.radius;
        if z.norm() <= a {
            z / 2.0 * self.amplitude
        } else {
            0.5 * a * a * z / z.norm_sqr() * self.amplitude
        }
    }
}

impl SourceModel for UniformDisk {
    fn density(&self, y: C64) -> f64 {
        if (y - self.center).norm() <= self.radius {
            self.amplitude
        } else {
            0.0
        }
    }

    fn support_box(&self) -> [f64; 4] {
        let (c, a) = (self.center, self.radius);
        [c.re - a, c.re + a, c.im - a, c.im + a]
    }

    fn support_disk(&self) -> Option<(C64, f64)> {
        Some((self.center, self.radius))
    }

    fn closed_form_potential(&self, g: &DiskPair, inv_k: [f64; 2], x: C64) -> Option<Jet> {
        let w = match self.placement(g) {
            Placement::Inclusion(side) => inv_k[side - 1],
            Placement::Exterior => 1.0,
            Placement::Straddling => return None,
        };
        Some(self.log_potential(x).scale(w * self.amplitude))
    }

    fn closed_form_inclusion_integral(&self, g: &DiskPair, side: usize) -> Option<f64> {
        let mass = self.amplitude * PI * self.radius * self.radius;
        match self.placement(g) {
            Placement::Inclusion(s) if s == side => Some(mass),
            Placement::Inclusion(_) | Placement::Exterior => Some(0.0),
            Placement::Straddling => None,
        }
    }
}

/// A source given only through a density closure and a support box.
#[derive(Clone)]
pub struct FunctionSource {
    pub density: Arc<dyn Fn(C64) -> f64 + Send + Sync>,
    pub support: [f64; 4],
}

impl fmt::Debug for FunctionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSource")
            .field("support", &self.support)
            .finish()
    }
}

impl SourceModel for FunctionSource {
    fn density(&self, y: C64) -> f64 {
        (self.density)(y)
    }

    fn support_box(&self) -> [f64; 4] {
        self.support
    }
}

/// What drives the field: a harmonic background `H` or a divergence source.
#[derive(Debug, Clone)]
pub enum SourceSpec {
    HarmonicBackground(HarmonicPoly),
    DivergenceSource(Arc<dyn SourceModel>),
}

//! Bipolar geometry of two disjoint disks and the Möbius map `T(z) = β/z + 1`
//! that sends both boundaries to concentric circles.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack used when deciding whether a point lies in a closed disk.
const DISK_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPair {
    pub r1: f64,
    pub r2: f64,
    pub eps: f64,
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    /// Radius of the image circle `T(∂D₁)`.
    pub conc_r1: f64,
    /// Radius of the image circle `T(∂D₂)`.
    pub conc_r2: f64,
    pub rho: f64,
    pub r_star: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Inclusion1,
    Annulus,
    Inclusion2,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Inclusion1 => "inclusion1",
            Zone::Annulus => "annulus",
            Zone::Inclusion2 => "inclusion2",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiemannPoint {
    Finite(C64),
    Infinity,
}

impl DiskPair {
    pub fn new(r1: f64, r2: f64, eps: f64) -> Result<Self> {
        for (name, v) in [("r1", r1), ("r2", r2), ("eps", eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        let d = r1 + r2 + eps;
        let beta = eps.sqrt()
            * ((2.0 * r1 + eps) * (2.0 * r2 + eps) * (2.0 * r1 + 2.0 * r2 + eps)).sqrt()
            / d;
        let c1 = (r2 * r2 - r1 * r1 - d * d) / (2.0 * d) - beta / 2.0;
        let c2 = c1 + d;
        let conc_r1 = (1.0 + beta / c1).sqrt();
        let conc_r2 = (1.0 + beta / c2).sqrt();
        let g = DiskPair {
            r1,
            r2,
            eps,
            c1,
            c2,
            beta,
            conc_r1,
            conc_r2,
            rho: conc_r1 / conc_r2,
            r_star: (2.0 * (r1 + r2) / (r1 * r2)).sqrt(),
            p1: -beta,
            p2: 0.0,
        };
        if !(g.conc_r1 > 0.0 && g.conc_r1 < 1.0 && g.conc_r2 > 1.0) {
            return Err(Error::Geometry(format!(
                "degenerate bipolar radii R1 = {}, R2 = {}",
                g.conc_r1, g.conc_r2
            )));
        }
        Ok(g)
    }

    pub fn center(&self, side: usize) -> C64 {
        match side {
            1 => C64::new(self.c1, 0.0),
            _ => C64::new(self.c2, 0.0),
        }
    }

    pub fn radius(&self, side: usize) -> f64 {
        match side {
            1 => self.r1,
            _ => self.r2,
        }
    }

    pub fn conc_radius(&self, side: usize) -> f64 {
        match side {
            1 => self.conc_r1,
            _ => self.conc_r2,
        }
    }

    pub fn forward_map(&self, z: C64) -> Result<C64> {
        if z == C64::new(0.0, 0.0) {
            return Err(Error::Pole("T has a pole at z = 0".into()));
        }
        Ok(self.beta / z + 1.0)
    }

    pub fn inverse_map(&self, zeta: C64) -> Result<C64> {
        let d = zeta - 1.0;
        if d == C64::new(0.0, 0.0) {
            return Err(Error::Pole("T^-1 has a pole at ζ = 1".into()));
        }
        Ok(self.beta / d)
    }

    pub fn forward_ext(&self, p: RiemannPoint) -> RiemannPoint {
        match p {
            RiemannPoint::Infinity => RiemannPoint::Finite(C64::new(1.0, 0.0)),
            RiemannPoint::Finite(z) => match self.forward_map(z) {
                Ok(w) => RiemannPoint::Finite(w),
                Err(_) => RiemannPoint::Infinity,
            },
        }
    }

    pub fn inverse_ext(&self, p: RiemannPoint) -> RiemannPoint {
        match p {
            RiemannPoint::Infinity => RiemannPoint::Finite(C64::new(0.0, 0.0)),
            RiemannPoint::Finite(w) => match self.inverse_map(w) {
                Ok(z) => RiemannPoint::Finite(z),
                Err(_) => RiemannPoint::Infinity,
            },
        }
    }

    /// `k`-th derivative of `ζ = T(z)`.
    pub fn dzeta_dz(&self, z: C64, k: u32) -> C64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * fact * self.beta / z.powi(k as i32 + 1)
    }

    pub fn classify_zone(&self, zeta: C64) -> Zone {
        let r = zeta.norm();
        if r <= self.conc_r1 {
            Zone::Inclusion1
        } else if r <= self.conc_r2 {
            Zone::Annulus
        } else {
            Zone::Inclusion2
        }
    }

    /// Zone of a physical point; `z = 0` is the preimage of ∞ and lies in D₂.
    pub fn zone_at(&self, z: C64) -> Zone {
        match self.forward_map(z) {
            Ok(zeta) => self.classify_zone(zeta),
            Err(_) => Zone::Inclusion2,
        }
    }

    pub fn in_closed_disk(&self, side: usize, z: C64) -> bool {
        (z - self.center(side)).norm() <= self.radius(side) * (1.0 + DISK_SLACK)
    }

    pub fn in_open_disk(&self, side: usize, z: C64) -> bool {
        (z - self.center(side)).norm() < self.radius(side) * (1.0 - DISK_SLACK)
    }

    pub fn singular_function_q1(&self, z: C64) -> Result<f64> {
        let a = (z - self.p1).norm();
        let b = (z - self.p2).norm();
        if a == 0.0 || b == 0.0 {
            return Err(Error::Pole("q1 is singular at its fixed points".into()));
        }
        Ok((a.ln() - b.ln()) / (2.0 * PI))
    }

    /// Gradient of q¹ as a complex number `∂₁q¹ + i∂₂q¹`.
    pub fn q1_gradient(&self, z: C64) -> Result<C64> {
        if z == C64::new(self.p1, 0.0) || z == C64::new(self.p2, 0.0) {
            return Err(Error::Pole("q1 is singular at its fixed points".into()));
        }
        let dlog = -self.beta / (z * (z + self.beta));
        Ok(dlog.conj() / (2.0 * PI))
    }

    /// Closest boundary points of the two disks.
    pub fn gap_endpoints(&self) -> (C64, C64) {
        (
            C64::new(self.c1 + self.r1, 0.0),
            C64::new(self.c2 - self.r2, 0.0),
        )
    }

    /// `Φ_{l,t}` (side 1) and its mirror `Ψ_{l,t}` (side 2), contracting the
    /// image plane by `tρ^{2l}` towards the respective inclusion.
    pub fn contraction_map(&self, side: usize, l: u32, t: f64, z: C64) -> Result<C64> {
        let rho2 = self.rho * self.rho;
        if !(t >= rho2 * (1.0 - 1e-15) && t <= 1.0) {
            return Err(Error::Domain(format!("t = {t} outside [ρ², 1]")));
        }
        if side != 1 && side != 2 {
            return Err(Error::Domain(format!("side must be 1 or 2, got {side}")));
        }
        if !self.in_closed_disk(side, z) {
            return Err(Error::Domain(format!(
                "{z} is not in the closed disk D{side}"
            )));
        }
        let s = t * self.rho.powi(2 * l as i32);
        if side == 1 {
            let zeta = self.forward_map(z)?;
            self.inverse_map(s * zeta)
        } else {
            if z == C64::new(0.0, 0.0) {
                return Ok(z);
            }
            let zeta = self.forward_map(z)?;
            let w = zeta / s;
            if w == C64::new(1.0, 0.0) {
                return Err(Error::Pole("contraction image at ζ = 1".into()));
            }
            self.inverse_map(w)
        }
    }

    /// Antiholomorphic reflection `G(z) = T^{-1}(R₁²/conj(T(z)))` of the
    /// exterior of D₁ into D₁.
    pub fn reflection_map_g(&self, z: C64) -> Result<C64> {
        if self.in_open_disk(1, z) {
            return Err(Error::Domain(format!("{z} lies inside D1")));
        }
        if z == C64::new(0.0, 0.0) {
            return Ok(C64::new(self.p1, 0.0));
        }
        let zeta = self.forward_map(z)?;
        if zeta.norm() == 0.0 {
            return Err(Error::Pole("reflection of the fixed point p1".into()));
        }
        let w = self.conc_r1 * self.conc_r1 / zeta.conj();
        if (w - 1.0).norm() == 0.0 {
            return Err(Error::Pole("reflection image at infinity".into()));
        }
        self.inverse_map(w)
    }
}

/// Rigid motion between a user frame (arbitrary centers) and the solver frame
/// of [`DiskPair`], where the centers sit on the real axis at `c₁ < c₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidFrame {
    rotation: C64,
    user_c1: C64,
    solver_c1: C64,
}

impl RigidFrame {
    pub fn identity(g: &DiskPair) -> Self {
        RigidFrame {
            rotation: C64::new(1.0, 0.0),
            user_c1: g.center(1),
            solver_c1: g.center(1),
        }
    }

    pub fn from_centers(g: &DiskPair, user_c1: C64, user_c2: C64) -> Result<Self> {
        let d = user_c2 - user_c1;
        let expected = g.r1 + g.r2 + g.eps;
        if (d.norm() - expected).abs() > 1e-12 * expected {
            return Err(Error::Geometry(format!(
                "center distance {} does not equal r1 + r2 + eps = {}",
                d.norm(),
                expected
            )));
        }
        Ok(RigidFrame {
            rotation: d.conj() / d.norm(),
            user_c1,
            solver_c1: g.center(1),
        })
    }

    pub fn to_solver(&self, x: C64) -> C64 {
        self.rotation * (x - self.user_c1) + self.solver_c1
    }

    pub fn to_user(&self, z: C64) -> C64 {
        (z - self.solver_c1) / self.rotation + self.user_c1
    }

    /// Maps a solver-frame vector (e.g. a gradient) to the user frame.
    pub fn vector_to_user(&self, v: C64) -> C64 {
        v / self.rotation
    }

    /// Maps a solver-frame Hessian `[hxx, hxy, hyy]` to the user frame.
    pub fn hessian_to_user(&self, h: [f64; 3]) -> [f64; 3] {
        let (c, s) = (self.rotation.re, self.rotation.im);
        // z = R x with R = [[c, -s], [s, c]]; H_user = Rᵀ H R.
        let (a, b, d) = (h[0], h[1], h[2]);
        let hxx = c * c * a + 2.0 * c * s * b + s * s * d;
        let hxy = -c * s * a + (c * c - s * s) * b + c * s * d;
        let hyy = s * s * a - 2.0 * c * s * b + c * c * d;
        [hxx, hxy, hyy]
    }
}

//! Corrector functions `V_j` with `∫_{D_j} ∇·v_j = 1`, used to remove the
//! inclusion integrals of a divergence source.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::layer::{CircleLayer, Jet};
use crate::np_spectrum::Conductivity;
use crate::quadrature::integrate_1d;

/// Angular margin between the bump support and the vertical diameter.
pub const BUMP_MARGIN: f64 = 0.05;

/// Samples used to represent the interface density of `N[∇·v_j]`.
const LAYER_SAMPLES: usize = 4096;

/// `exp(−1/(1−s²))` on `(−1, 1)` with first and second derivatives.
pub fn bump(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0; 3];
    }
    let d = 1.0 - s * s;
    let b = (-1.0 / d).exp();
    let q1 = -2.0 * s / (d * d);
    let q2 = -2.0 / (d * d) - 8.0 * s * s / (d * d * d);
    [b, b * q1, b * (q1 * q1 + q2)]
}

/// Quintic smoothstep cutoff: 1 for `t ≤ 0`, 0 for `t ≥ 1`, C² in between.
pub fn smooth_cutoff(t: f64) -> [f64; 3] {
    if t <= 0.0 {
        [1.0, 0.0, 0.0]
    } else if t >= 1.0 {
        [0.0; 3]
    } else {
        let (t2, t3) = (t * t, t * t * t);
        [
            1.0 - (10.0 * t3 - 15.0 * t2 * t2 + 6.0 * t3 * t2),
            -(30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2),
            -(60.0 * t - 180.0 * t2 + 120.0 * t3),
        ]
    }
}

fn wrap_angle(t: f64) -> f64 {
    let mut a = (t + PI).rem_euclid(2.0 * PI) - PI;
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone)]
pub struct Corrector {
    pub side: usize,
    pub center: C64,
    pub radius: f64,
    /// `1/k`, zero for a perfect conductor.
    pub inv_k: f64,
    /// Direction (angle about the center) of the bump's peak.
    pub theta0: f64,
    pub half_width: f64,
    /// Normalisation constant of Θ.
    pub norm: f64,
    /// Width of the radial cutoff collar.
    pub collar: f64,
    layer: CircleLayer,
}

impl Corrector {
    pub fn new(g: &DiskPair, side: usize, k: Conductivity) -> Result<Self> {
        if side != 1 && side != 2 {
            return Err(Error::Domain(format!("side must be 1 or 2, got {side}")));
        }
        let inv_k = match k {
            Conductivity::Infinite => 0.0,
            Conductivity::Finite(v) if v > 0.0 && v.is_finite() => 1.0 / v,
            Conductivity::Finite(v) => {
                return Err(Error::Domain(format!(
                    "corrector needs a positive conductivity, got {v}"
                )))
            }
        };
        let radius = g.radius(side);
        let center = g.center(side);
        let theta0 = if side == 1 { PI } else { 0.0 };
        let half_width = FRAC_PI_2 - BUMP_MARGIN;
        let collar = 0.5 * g.eps.min(radius);
        let other = 3 - side;
        let clearance = (g.center(other) - center).norm() - g.radius(other);
        if radius + collar >= clearance {
            return Err(Error::Geometry(
                "corrector support reaches the other inclusion".into(),
            ));
        }
        let integral = integrate_1d(
            |t| bump(t / half_width)[0] * (theta0 + t).cos(),
            -half_width,
            half_width,
            64,
            16,
        );
        let norm = 1.0 / (radius * integral);
        let mut c = Corrector {
            side,
            center,
            radius,
            inv_k,
            theta0,
            half_width,
            norm,
            collar,
            layer: CircleLayer::from_coefficients(center, radius, 0.0, &[]),
        };
        let samples: Vec<f64> = (0..LAYER_SAMPLES)
            .map(|i| c.interface_density(2.0 * PI * i as f64 / LAYER_SAMPLES as f64))
            .collect();
        c.layer = CircleLayer::from_samples(center, radius, &samples);
        Ok(c)
    }

    /// Θ(θ) and its first two derivatives.
    pub fn theta_profile(&self, theta: f64) -> [f64; 3] {
        let t = wrap_angle(theta - self.theta0);
        let w = self.half_width;
        let [b, b1, b2] = bump(t / w);
        [self.norm * b, self.norm * b1 / w, self.norm * b2 / (w * w)]
    }

    /// `G(θ) = Θ(θ) cos θ` and derivatives.
    fn angular(&self, theta: f64) -> [f64; 3] {
        let [t0, t1, t2] = self.theta_profile(theta);
        let (s, c) = theta.sin_cos();
        [t0 * c, t1 * c - t0 * s, t2 * c - 2.0 * t1 * s - t0 * c]
    }

    /// Radial factor `R(s)·A(s)` of `V` outside the disk.
    fn radial_outside(&self, s: f64) -> [f64; 3] {
        let r = self.radius;
        let alpha = 0.5 * (1.0 + self.inv_k);
        let gamma = -0.5 * (1.0 - self.inv_k) * r * r;
        let a = [
            alpha * s + gamma / s,
            alpha - gamma / (s * s),
            2.0 * gamma / (s * s * s),
        ];
        let [c0, c1, c2] = smooth_cutoff((s - r) / self.collar);
        let h = self.collar;
        let (c1, c2) = (c1 / h, c2 / (h * h));
        [
            c0 * a[0],
            c1 * a[0] + c0 * a[1],
            c2 * a[0] + 2.0 * c1 * a[1] + c0 * a[2],
        ]
    }

    fn polar(&self, x: C64) -> (f64, f64) {
        let z = x - self.center;
        (z.norm(), z.arg())
    }

    pub fn inside(&self, x: C64) -> bool {
        (x - self.center).norm() <= self.radius
    }

    /// Jet of a separable polar function `P(s) G(θ)`.
    fn separable_jet(p: [f64; 3], g: [f64; 3], s: f64, theta: f64) -> Jet {
        let (vs, vt) = (p[1] * g[0], p[0] * g[1]);
        let (vss, vst, vtt) = (p[2] * g[0], p[1] * g[1], p[0] * g[2]);
        let (sn, c) = theta.sin_cos();
        let (s2, cs, cc, ss) = (s * s, c * sn, c * c, sn * sn);
        Jet {
            value: p[0] * g[0],
            grad: [c * vs - sn / s * vt, sn * vs + c / s * vt],
            hess: [
                cc * vss - 2.0 * cs / s * vst + ss / s2 * vtt + ss / s * vs + 2.0 * cs / s2 * vt,
                cs * vss + (cc - ss) / s * vst - cs / s2 * vtt - cs / s * vs - (cc - ss) / s2 * vt,
                ss * vss + 2.0 * cs / s * vst + cc / s2 * vtt + cc / s * vs - 2.0 * cs / s2 * vt,
            ],
        }
    }

    /// `V_j` with gradient and Hessian (one-sided by the closed disk).
    pub fn potential(&self, x: C64) -> Jet {
        let (s, theta) = self.polar(x);
        let g = self.angular(theta);
        if g == [0.0; 3] || s >= self.radius + self.collar {
            return Jet::default();
        }
        if s <= self.radius {
            Self::separable_jet([s, 1.0, 0.0], g, s, theta).scale(self.inv_k)
        } else {
            Self::separable_jet(self.radial_outside(s), g, s, theta)
        }
    }

    /// The flux field `v_j = σ∇V_j` as a complex number `v_x + i v_y`.
    pub fn flux_field(&self, x: C64) -> C64 {
        let (s, theta) = self.polar(x);
        if s <= self.radius {
            let j = Self::separable_jet([s, 1.0, 0.0], self.angular(theta), s, theta);
            C64::new(j.grad[0], j.grad[1])
        } else {
            let j = self.potential(x);
            C64::new(j.grad[0], j.grad[1])
        }
    }

    /// `∇·v_j` at a point off the interface.
    pub fn divergence(&self, x: C64) -> f64 {
        let (s, theta) = self.polar(x);
        let g = self.angular(theta);
        if s <= self.radius {
            (g[0] + g[2]) / s
        } else if s < self.radius + self.collar {
            let p = self.radial_outside(s);
            (p[2] + p[1] / s) * g[0] + p[0] * g[2] / (s * s)
        } else {
            0.0
        }
    }

    /// Density `(1 − k)/k · Θ cos θ` carried by the interface in `N[∇·v_j]`.
    pub fn interface_density(&self, theta: f64) -> f64 {
        (self.inv_k - 1.0) * self.angular(theta)[0]
    }

    /// Weighted Newtonian potential `N[∇·v_j] = V_j + S_j[(1 − k)/k Θ cos θ]`.
    pub fn newtonian(&self, x: C64) -> Jet {
        self.potential(x).add(self.layer.eval(x))
    }

    /// Exterior normal derivative of `N[∇·v_j]` on the own circle.
    pub fn newtonian_flux_own(&self, theta: f64) -> f64 {
        self.angular(theta)[0] + self.layer.normal_derivative_outside(theta)
    }

    pub fn layer(&self) -> &CircleLayer {
        &self.layer
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Adaptive2d;
    use approx::assert_relative_eq;

    fn geometry() -> DiskPair {
        DiskPair::new(1.2, 0.8, 0.05).unwrap()
    }

    #[test]
    fn normalisation_and_sign() {
        let g = geometry();
        let c = Corrector::new(&g, 1, Conductivity::Finite(5.0)).unwrap();
        assert!(c.norm < 0.0);
        let v = integrate_1d(|t| c.theta_profile(t)[0] * t.cos(), 0.0, 2.0 * PI, 256, 16);
        assert_relative_eq!(c.radius * v, 1.0, epsilon = 1e-12);
        let c2 = Corrector::new(&g, 2, Conductivity::Finite(5.0)).unwrap();
        assert!(c2.norm > 0.0);
    }

    #[test]
    fn divergence_integrates_to_one_inside() {
        let g = geometry();
        for side in 1..=2 {
            let c = Corrector::new(&g, side, Conductivity::Finite(7.0)).unwrap();
            let q = Adaptive2d::new(12, 1e-12, 1e-12, 100_000);
            let f = |s: f64, t: f64| c.divergence(c.center + C64::from_polar(s, t)) * s;
            let (v, _) = q.integrate(&f, &[[0.0, c.radius, -PI, PI]]).unwrap();
            assert_relative_eq!(v, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn support_lies_left_of_the_center_line() {
        let g = geometry();
        let c = Corrector::new(&g, 1, Conductivity::Finite(3.0)).unwrap();
        for i in 0..400 {
            let x = C64::new(g.c1 + 0.01 * (i % 20) as f64, -1.5 + 0.15 * (i / 20) as f64);
            assert_eq!(c.potential(x).value, 0.0);
        }
        let x = g.center(1) + C64::from_polar(0.5, PI - 0.1);
        assert!(c.potential(x).value.abs() > 0.0);
    }

    #[test]
    fn potential_derivatives_match_finite_differences() {
        let g = geometry();
        let c = Corrector::new(&g, 1, Conductivity::Finite(4.0)).unwrap();
        let h = 1e-6;
        for x in [
            g.center(1) + C64::from_polar(0.7, 2.8),
            g.center(1) + C64::from_polar(1.2 + 0.01, 3.3),
        ] {
            let j = c.potential(x);
            let fx = (c.potential(x + h).value - c.potential(x - h).value) / (2.0 * h);
            let fy = (c.potential(x + C64::new(0.0, h)).value
                - c.potential(x - C64::new(0.0, h)).value)
                / (2.0 * h);
            assert!((j.grad[0] - fx).abs() < 1e-6 * (1.0 + fx.abs()));
            assert!((j.grad[1] - fy).abs() < 1e-6 * (1.0 + fy.abs()));
            let gxx = (c.potential(x + h).grad[0] - c.potential(x - h).grad[0]) / (2.0 * h);
            let gxy = (c.potential(x + C64::new(0.0, h)).grad[0]
                - c.potential(x - C64::new(0.0, h)).grad[0])
                / (2.0 * h);
            let gyy = (c.potential(x + C64::new(0.0, h)).grad[1]
                - c.potential(x - C64::new(0.0, h)).grad[1])
                / (2.0 * h);
            assert!(
                (j.hess[0] - gxx).abs() < 1e-4 * (1.0 + gxx.abs()),
                "{} {}",
                j.hess[0],
                gxx
            );
            assert!((j.hess[1] - gxy).abs() < 1e-4 * (1.0 + gxy.abs()));
            assert!((j.hess[2] - gyy).abs() < 1e-4 * (1.0 + gyy.abs()));
            let lap = j.hess[0] + j.hess[2];
            let div = c.divergence(x) * if c.inside(x) { c.inv_k } else { 1.0 };
            assert!((lap - div).abs() < 1e-9 * (1.0 + lap.abs()));
        }
    }

    #[test]
    fn flux_is_continuous_across_the_interface() {
        let g = geometry();
        let c = Corrector::new(&g, 1, Conductivity::Finite(9.0)).unwrap();
        for t in [2.0, 3.0, 3.5, 4.1] {
            let nu = C64::from_polar(1.0, t);
            let a = c.flux_field(c.center + nu * (c.radius * (1.0 - 1e-12)));
            let b = c.flux_field(c.center + nu * (c.radius * (1.0 + 1e-12)));
            let (fa, fb) = ((a * nu.conj()).re, (b * nu.conj()).re);
            assert!((fa - fb).abs() < 1e-9, "{fa} vs {fb}");
        }
    }

    #[test]
    fn sup_norm_scales_like_inverse_conductivity() {
        let g = geometry();
        let mut ratios = Vec::new();
        for k in [1e2, 1e4, 1e6] {
            let c = Corrector::new(&g, 1, Conductivity::Finite(k)).unwrap();
            let mut m: f64 = 0.0;
            for i in 0..200 {
                let x = c.center
                    + C64::from_polar(c.radius * (i % 10) as f64 / 10.0, 0.0314 * i as f64);
                m = m.max(c.potential(x).value.abs());
            }
            ratios.push(m * k);
        }
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 1.01);
    }

    #[test]
    fn newtonian_closed_form_matches_quadrature() {
        let g = geometry();
        let k = 3.0;
        let c = Corrector::new(&g, 1, Conductivity::Finite(k)).unwrap();
        let q = Adaptive2d::new(10, 1e-11, 1e-11, 400_000);
        let x = C64::new(1.5, 1.7);
        let f = |s: f64, t: f64| {
            let y = c.center + C64::from_polar(s, t);
            let w = if s <= c.radius { 1.0 / k } else { 1.0 };
            (x - y).norm().ln() * c.divergence(y) * w * s / (2.0 * PI)
        };
        let (a, _) = q.integrate(&f, &[[0.0, c.radius, -PI, PI]]).unwrap();
        let (b, _) = q
            .integrate(&f, &[[c.radius, c.radius + c.collar, -PI, PI]])
            .unwrap();
        let n = c.newtonian(x).value;
        assert!((a + b - n).abs() < 1e-8, "{} vs {}", a + b, n);
    }
}

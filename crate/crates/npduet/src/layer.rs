//! Exact single-layer potentials of trigonometric densities on a circle.
//!
//! A density `ψ(θ) = Σ ψ_m e^{imθ}` on the circle `|x − c| = r` (per unit arc
//! length) produces `(1/2π)∮ ln|x − y| ψ(y) ds_y`, which is evaluated here
//! from its Fourier coefficients without quadrature.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::series::{InverseSeries, PowerSeries};

/// Value, gradient `[∂x, ∂y]` and Hessian `[xx, xy, yy]` of a real field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl Jet {
    /// Jet of `Re W(z)` given `W, W', W''` at the point.
    pub fn from_analytic(w: [C64; 3]) -> Jet {
        Jet {
            value: w[0].re,
            grad: [w[1].re, -w[1].im],
            hess: [w[2].re, -w[2].im, -w[2].re],
        }
    }

    pub fn add(self, o: Jet) -> Jet {
        self.add_scaled(o, 1.0)
    }

    pub fn add_scaled(self, o: Jet, s: f64) -> Jet {
        Jet {
            value: self.value + s * o.value,
            grad: [self.grad[0] + s * o.grad[0], self.grad[1] + s * o.grad[1]],
            hess: [
                self.hess[0] + s * o.hess[0],
                self.hess[1] + s * o.hess[1],
                self.hess[2] + s * o.hess[2],
            ],
        }
    }

    pub fn scale(self, s: f64) -> Jet {
        Jet::default().add_scaled(self, s)
    }

    pub fn grad_norm(&self) -> f64 {
        self.grad[0].hypot(self.grad[1])
    }

    pub fn hess_frobenius(&self) -> f64 {
        (self.hess[0].powi(2) + 2.0 * self.hess[1].powi(2) + self.hess[2].powi(2)).sqrt()
    }
}

/// Forward DFT `X_m / M` of real or complex samples.
pub fn dft_normalized(samples: &[C64]) -> Vec<C64> {
    let m = samples.len();
    let mut buf = samples.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut buf);
    let inv = 1.0 / m as f64;
    buf.iter_mut().for_each(|x| *x *= inv);
    buf
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleLayer {
    pub center: C64,
    pub radius: f64,
    /// Mean density ψ₀.
    pub mean: f64,
    inside: PowerSeries,
    outside: InverseSeries,
}

impl CircleLayer {
    /// Builds the layer from the Fourier coefficients `ψ_m`, `m ≥ 1`, of a
    /// real density (the coefficients for `−m` are the conjugates).
    pub fn from_coefficients(center: C64, radius: f64, mean: f64, coeffs: &[C64]) -> Self {
        let r = radius;
        let inside = coeffs
            .iter()
            .enumerate()
            .map(|(i, &p)| -(r / (i + 1) as f64) * p)
            .collect();
        let outside = coeffs
            .iter()
            .enumerate()
            .map(|(i, &p)| -(r / (i + 1) as f64) * p.conj())
            .collect();
        CircleLayer {
            center,
            radius,
            mean,
            inside: PowerSeries::new(inside, r),
            outside: InverseSeries::new(outside, r),
        }
    }

    /// Builds the layer from `M` equispaced samples `ψ(2πk/M)`.
    pub fn from_samples(center: C64, radius: f64, samples: &[f64]) -> Self {
        let m = samples.len();
        let hat = dft_normalized(
            &samples
                .iter()
                .map(|&v| C64::new(v, 0.0))
                .collect::<Vec<_>>(),
        );
        let top = (m - 1) / 2;
        Self::from_coefficients(center, radius, hat[0].re, &hat[1..=top])
    }

    pub fn eval(&self, x: C64) -> Jet {
        let z = x - self.center;
        let s = z.norm();
        let r = self.radius;
        if s >= r {
            let [f, d1, d2] = self.outside.eval(z);
            let m = r * self.mean;
            Jet::from_analytic([f + m * s.ln(), d1 + m / z, d2 - m / (z * z)])
        } else {
            let [f, d1, d2] = self.inside.eval(z);
            let mut j = Jet::from_analytic([f, d1, d2]);
            j.value += r * self.mean * r.ln();
            j
        }
    }

    /// Exterior normal derivative on the circle at angle θ.
    pub fn normal_derivative_outside(&self, theta: f64) -> f64 {
        let z = C64::from_polar(self.radius, theta);
        let [_, d1, _] = self.outside.eval(z);
        let m = self.radius * self.mean;
        let w1 = d1 + m / z;
        let nu = C64::from_polar(1.0, theta);
        w1.re * nu.re - w1.im * nu.im
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct(center: C64, r: f64, psi: &dyn Fn(f64) -> f64, x: C64) -> f64 {
        let m = 4000;
        let mut acc = 0.0;
        for k in 0..m {
            let th = 2.0 * PI * k as f64 / m as f64;
            let y = center + C64::from_polar(r, th);
            acc += (x - y).norm().ln() * psi(th);
        }
        acc * r * (2.0 * PI / m as f64) / (2.0 * PI)
    }

    #[test]
    fn matches_trapezoid_away_from_circle() {
        let psi = |t: f64| 0.3 + (2.0 * t).cos() - 0.4 * (3.0 * t).sin() + (t.cos()).exp();
        let samples: Vec<f64> = (0..64).map(|k| psi(2.0 * PI * k as f64 / 64.0)).collect();
        let c = C64::new(0.5, -0.2);
        let layer = CircleLayer::from_samples(c, 1.3, &samples);
        for x in [
            C64::new(0.6, 0.1),
            C64::new(3.0, 1.0),
            C64::new(-2.0, -2.0),
            c,
        ] {
            let a = layer.eval(x).value;
            let b = direct(c, 1.3, &psi, x);
            assert!((a - b).abs() < 1e-11, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn constant_density_far_field() {
        let layer = CircleLayer::from_coefficients(C64::new(0.0, 0.0), 2.0, 1.0, &[]);
        let x = C64::new(30.0, 40.0);
        let mass = 2.0 * PI * 2.0;
        assert!((layer.eval(x).value - mass / (2.0 * PI) * 50f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let samples: Vec<f64> = (0..32).map(|k| (0.2 * k as f64).sin() + 0.1).collect();
        let layer = CircleLayer::from_samples(C64::new(0.0, 0.0), 1.0, &samples);
        for x in [C64::new(0.3, 0.2), C64::new(1.7, -0.9)] {
            let j = layer.eval(x);
            let h = 1e-5;
            let fx = (layer.eval(x + h).value - layer.eval(x - h).value) / (2.0 * h);
            let fy = (layer.eval(x + C64::new(0.0, h)).value
                - layer.eval(x - C64::new(0.0, h)).value)
                / (2.0 * h);
            assert!((j.grad[0] - fx).abs() < 1e-8);
            assert!((j.grad[1] - fy).abs() < 1e-8);
            let gxx = (layer.eval(x + h).grad[0] - layer.eval(x - h).grad[0]) / (2.0 * h);
            let gxy = (layer.eval(x + C64::new(0.0, h)).grad[0]
                - layer.eval(x - C64::new(0.0, h)).grad[0])
                / (2.0 * h);
            assert!((j.hess[0] - gxx).abs() < 1e-7);
            assert!((j.hess[1] - gxy).abs() < 1e-7);
            assert!((j.hess[0] + j.hess[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_relation_of_normal_derivative() {
        // ∂ν S⁺ = ψ/2 + ψ₀/2 on the circle.
        let psi = |t: f64| 0.7 + t.cos() + 0.25 * (4.0 * t).sin();
        let samples: Vec<f64> = (0..64).map(|k| psi(2.0 * PI * k as f64 / 64.0)).collect();
        let layer = CircleLayer::from_samples(C64::new(1.0, 1.0), 0.8, &samples);
        for th in [0.0, 1.0, 2.5] {
            let d = layer.normal_derivative_outside(th);
            assert!((d - (0.5 * psi(th) + 0.35)).abs() < 1e-12, "{d}");
        }
    }
}

//! Gauss–Legendre rules and an adaptive tensor-product integrator on rectangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// `∫_a^b f` by composite Gauss–Legendre.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * f(mid + 0.5 * h * xi);
        }
    }
    acc * 0.5 * h
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    rect: [f64; 4],
    value: f64,
    error: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive 2D integrator: a cell's error is the difference between its
/// tensor Gauss rule and the sum over its four children.
pub struct Adaptive2d {
    x: Vec<f64>,
    w: Vec<f64>,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_cells: usize,
}

impl Adaptive2d {
    pub fn new(order: usize, abs_tol: f64, rel_tol: f64, max_cells: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        Adaptive2d {
            x,
            w,
            abs_tol,
            rel_tol,
            max_cells,
        }
    }

    fn rule(&self, f: &dyn Fn(f64, f64) -> f64, r: [f64; 4]) -> f64 {
        let (hx, hy) = (0.5 * (r[1] - r[0]), 0.5 * (r[3] - r[2]));
        let (mx, my) = (0.5 * (r[0] + r[1]), 0.5 * (r[2] + r[3]));
        let mut acc = 0.0;
        for (xi, wi) in self.x.iter().zip(&self.w) {
            let mut row = 0.0;
            for (yj, wj) in self.x.iter().zip(&self.w) {
                row += wj * f(mx + hx * xi, my + hy * yj);
            }
            acc += wi * row;
        }
        acc * hx * hy
    }

    fn children(r: [f64; 4]) -> [[f64; 4]; 4] {
        let mx = 0.5 * (r[0] + r[1]);
        let my = 0.5 * (r[2] + r[3]);
        [
            [r[0], mx, r[2], my],
            [mx, r[1], r[2], my],
            [r[0], mx, my, r[3]],
            [mx, r[1], my, r[3]],
        ]
    }

    /// Integrates `f(u, v)` over the given rectangles `[u0, u1, v0, v1]`.
    pub fn integrate(&self, f: &dyn Fn(f64, f64) -> f64, rects: &[[f64; 4]]) -> Result<(f64, f64)> {
        let refine = |r: [f64; 4], coarse: f64| -> [Cell; 4] {
            let kids = Self::children(r).map(|c| Cell {
                rect: c,
                value: self.rule(f, c),
                error: 0.0,
            });
            let fine: f64 = kids.iter().map(|c| c.value).sum();
            let err = (fine - coarse).abs() / 4.0;
            kids.map(|mut c| {
                c.error = err;
                c
            })
        };
        let mut heap = BinaryHeap::new();
        let (mut total, mut err) = (0.0, 0.0);
        for &r in rects {
            for c in refine(r, self.rule(f, r)) {
                total += c.value;
                err += c.error;
                heap.push(c);
            }
        }
        loop {
            if err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                let total: f64 = heap.iter().map(|c| c.value).sum();
                return Ok((total, err));
            }
            if heap.len() + 3 > self.max_cells {
                return Err(Error::Accuracy(format!(
                    "quadrature budget of {} cells exhausted (error estimate {err:e})",
                    self.max_cells
                )));
            }
            let worst = heap.pop().expect("nonempty heap");
            total -= worst.value;
            err -= worst.error;
            for c in refine(worst.rect, worst.value) {
                total += c.value;
                err += c.error;
                heap.push(c);
            }
            err = err.max(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_are_exact_for_polynomials() {
        for n in [1, 2, 5, 8, 16, 33] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for p in 0..(2 * n) {
                let q: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(xi, wi)| wi * xi.powi(p as i32))
                    .sum();
                let exact = if p % 2 == 1 {
                    0.0
                } else {
                    2.0 / (p as f64 + 1.0)
                };
                assert!((q - exact).abs() < 1e-13, "n {n} p {p}");
            }
        }
    }

    #[test]
    fn one_dimensional_panels() {
        let v = integrate_1d(|x| x.sin(), 0.0, PI, 4, 10);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_log_singularity() {
        let q = Adaptive2d::new(6, 1e-11, 1e-11, 200_000);
        let f = |x: f64, y: f64| (x * x + y * y).sqrt().ln();
        let (v, _) = q.integrate(&f, &[[-1.0, 1.0, -1.0, 1.0]]).unwrap();
        // ∫∫ over [-1,1]² of ln r equals 2 ln 2 − 6 + π.
        let exact = 2.0 * 2f64.ln() - 6.0 + PI;
        assert!((v - exact).abs() < 1e-9, "{v} vs {exact}");
    }

    #[test]
    fn adaptive_budget_error() {
        let q = Adaptive2d::new(2, 0.0, 0.0, 50);
        let f = |x: f64, _y: f64| if x > 0.1234 { 1.0 } else { 0.0 };
        assert!(matches!(
            q.integrate(&f, &[[0.0, 1.0, 0.0, 1.0]]),
            Err(Error::Accuracy(_))
        ));
    }
}

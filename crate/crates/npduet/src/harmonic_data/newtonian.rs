//! Weighted logarithmic potential `F(x) = (1/2π)∫ ln|x − y| f(y)/σ(y) dy` of a
//! divergence source, by closed form when available and adaptive quadrature
//! otherwise.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::corrector::smooth_cutoff;
use super::source::SourceModel;
use crate::error::Result;
use crate::geometry::DiskPair;
use crate::quadrature::Adaptive2d;

/// Integration piece: polar rectangle about a center, optionally clipped to
/// the support box along each ray, or a Cartesian box.
#[derive(Debug, Clone, Copy)]
enum Piece {
    Polar {
        center: C64,
        s0: f64,
        s1: f64,
        weight: Weight,
        clip: Option<[f64; 4]>,
    },
    Cartesian {
        rect: [f64; 4],
    },
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    Constant(f64),
    /// Exterior collar of inclusion `j` carrying the partition function φ_j.
    Collar(usize),
}

pub struct NewtonianQuadrature<'a> {
    g: &'a DiskPair,
    inv_k: [f64; 2],
    collar: [f64; 2],
    rule: Adaptive2d,
}

impl<'a> NewtonianQuadrature<'a> {
    pub fn new(g: &'a DiskPair, inv_k: [f64; 2], rel_tol: f64) -> Self {
        let collar = [0.5 * g.eps.min(g.r1), 0.5 * g.eps.min(g.r2)];
        NewtonianQuadrature {
            g,
            inv_k,
            collar,
            rule: Adaptive2d::new(8, rel_tol * 1e-3, rel_tol, 400_000),
        }
    }

    fn partition(&self, y: C64, j: usize) -> f64 {
        let s = (y - self.g.center(j + 1)).norm();
        smooth_cutoff((s - self.g.radius(j + 1)) / self.collar[j])[0]
    }

    fn region_weight(&self, y: C64) -> f64 {
        for j in 0..2 {
            if (y - self.g.center(j + 1)).norm() < self.g.radius(j + 1) {
                return self.inv_k[j];
            }
        }
        1.0
    }

    fn pieces(&self, src: &dyn SourceModel) -> Vec<Piece> {
        let g = self.g;
        if let Some((c, a)) = src.support_disk() {
            let inside = (1..=2).find(|&j| (c - g.center(j)).norm() + a <= g.radius(j));
            let clear = (1..=2).all(|j| (c - g.center(j)).norm() >= g.radius(j) + a);
            if let Some(j) = inside {
                return vec![Piece::Polar {
                    center: c,
                    s0: 0.0,
                    s1: a,
                    weight: Weight::Constant(self.inv_k[j - 1]),
                    clip: None,
                }];
            }
            if clear {
                return vec![Piece::Polar {
                    center: c,
                    s0: 0.0,
                    s1: a,
                    weight: Weight::Constant(1.0),
                    clip: None,
                }];
            }
        }
        let b = src.support_box();
        let mut out = Vec::new();
        for j in 1..=2 {
            let (c, r) = (g.center(j), g.radius(j) + self.collar[j - 1]);
            let hits = c.re + r > b[0] && c.re - r < b[1] && c.im + r > b[2] && c.im - r < b[3];
            if hits {
                let w = Weight::Constant(self.inv_k[j - 1]);
                out.push(Piece::Polar {
                    center: c,
                    s0: 0.0,
                    s1: g.radius(j),
                    weight: w,
                    clip: Some(b),
                });
                out.push(Piece::Polar {
                    center: c,
                    s0: g.radius(j),
                    s1: r,
                    weight: Weight::Collar(j - 1),
                    clip: Some(b),
                });
            }
        }
        out.push(Piece::Cartesian { rect: b });
        out
    }

    /// `∫ K(x, y) f(y)/σ(y) dy` for a real kernel.
    fn integrate(&self, src: &dyn SourceModel, kernel: &dyn Fn(C64) -> f64) -> Result<f64> {
        let mut total = 0.0;
        for piece in self.pieces(src) {
            match piece {
                Piece::Polar {
                    center,
                    s0,
                    s1,
                    weight,
                    clip,
                } => {
                    let f = |s: f64, t: f64| {
                        let y = center + C64::from_polar(s, t);
                        let w = match weight {
                            Weight::Constant(w) => w,
                            Weight::Collar(j) => self.partition(y, j),
                        };
                        if w == 0.0 {
                            return 0.0;
                        }
                        kernel(y) * src.density(y) * w * s
                    };
                    total += match clip {
                        None => self.rule.integrate(&f, &[[s0, s1, -PI, PI]])?.0,
                        Some(b) => self.clipped_polar(&f, center, s0, s1, b)?,
                    };
                }
                Piece::Cartesian { rect } => {
                    let f = |u: f64, v: f64| {
                        let y = C64::new(u, v);
                        let mut w = 1.0;
                        for j in 0..2 {
                            if (y - self.g.center(j + 1)).norm() <= self.g.radius(j + 1) {
                                return 0.0;
                            }
                            w -= self.partition(y, j);
                        }
                        if w == 0.0 {
                            return 0.0;
                        }
                        kernel(y) * src.density(y) * w
                    };
                    total += self.rule.integrate(&f, &[rect])?.0;
                }
            }
        }
        Ok(total)
    }

    pub fn value(&self, src: &dyn SourceModel, x: C64) -> Result<f64> {
        let k = |y: C64| (x - y).norm().ln() / (2.0 * PI);
        self.integrate(src, &k)
    }

    pub fn gradient(&self, src: &dyn SourceModel, x: C64) -> Result<[f64; 2]> {
        let kx = |y: C64| {
            let d = x - y;
            d.re / d.norm_sqr() / (2.0 * PI)
        };
        let ky = |y: C64| {
            let d = x - y;
            d.im / d.norm_sqr() / (2.0 * PI)
        };
        Ok([self.integrate(src, &kx)?, self.integrate(src, &ky)?])
    }

    /// `∫_{D_j} f` by polar quadrature. A source with disk support is
    /// integrated along rays from its own center, clipped to `D_j`, so the
    /// edge of the support never cuts through a cell.
    pub fn inclusion_integral(&self, src: &dyn SourceModel, side: usize) -> Result<f64> {
        let (cj, rj) = (self.g.center(side), self.g.radius(side));
        if let Some((c, a)) = src.support_disk() {
            let d = c - cj;
            let f = |u: f64, t: f64| {
                let e = C64::from_polar(1.0, t);
                let b = (d * e.conj()).re;
                let disc = b * b - (d.norm_sqr() - rj * rj);
                if disc <= 0.0 {
                    return 0.0;
                }
                let lo = (-b - disc.sqrt()).max(0.0);
                let hi = (-b + disc.sqrt()).min(a);
                if hi <= lo {
                    return 0.0;
                }
                let s = lo + u * (hi - lo);
                src.density(c + s * e) * s * (hi - lo)
            };
            return Ok(self.rule.integrate(&f, &[[0.0, 1.0, -PI, PI]])?.0);
        }
        let f = |s: f64, t: f64| src.density(cj + C64::from_polar(s, t)) * s;
        self.clipped_polar(&f, cj, 0.0, rj, src.support_box())
    }

    /// `∫∫ f(s, θ)` over `s0 ≤ s ≤ s1` and the part of the plane inside `b`,
    /// with `s` measured from `c`. Each ray is clipped to the box and the
    /// angular range is split where box corners and edge crossings sit, so
    /// the edges of the box never cut through a cell.
    fn clipped_polar(
        &self,
        f: &dyn Fn(f64, f64) -> f64,
        c: C64,
        s0: f64,
        s1: f64,
        b: [f64; 4],
    ) -> Result<f64> {
        let g = |v: f64, t: f64| match ray_interval(c, t, b, s0, s1) {
            Some((lo, hi)) => f(lo + v * (hi - lo), t) * (hi - lo),
            None => 0.0,
        };
        let breaks = polar_breaks(c, &[s0, s1], b);
        let rects: Vec<[f64; 4]> = breaks.windows(2).map(|w| [0.0, 1.0, w[0], w[1]]).collect();
        Ok(self.rule.integrate(&g, &rects)?.0)
    }

    pub fn weight_at(&self, y: C64) -> f64 {
        self.region_weight(y)
    }
}

/// `[s0, s1]` intersected with the ray `c + s·e^{iθ}` inside box `b`.
fn ray_interval(c: C64, theta: f64, b: [f64; 4], s0: f64, s1: f64) -> Option<(f64, f64)> {
    let (sn, cs) = theta.sin_cos();
    let (mut lo, mut hi) = (s0, s1);
    for (p, d, a0, a1) in [(c.re, cs, b[0], b[1]), (c.im, sn, b[2], b[3])] {
        if d.abs() < 1e-300 {
            if p < a0 || p > a1 {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((a0 - p) / d, (a1 - p) / d);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (hi > lo).then_some((lo, hi))
}

/// Angles in `[−π, π]` about `c` of the box corners and of the points where
/// the circles of the given radii cross the box edge lines, sorted.
fn polar_breaks(c: C64, radii: &[f64], b: [f64; 4]) -> Vec<f64> {
    let mut pts: Vec<C64> = [(b[0], b[2]), (b[1], b[2]), (b[0], b[3]), (b[1], b[3])]
        .iter()
        .map(|&(x, y)| C64::new(x, y))
        .collect();
    for &r in radii.iter().filter(|r| **r > 0.0) {
        for x in [b[0], b[1]] {
            let d = r * r - (x - c.re).powi(2);
            if d > 0.0 {
                pts.push(C64::new(x, c.im + d.sqrt()));
                pts.push(C64::new(x, c.im - d.sqrt()));
            }
        }
        for y in [b[2], b[3]] {
            let d = r * r - (y - c.im).powi(2);
            if d > 0.0 {
                pts.push(C64::new(c.re + d.sqrt(), y));
                pts.push(C64::new(c.re - d.sqrt(), y));
            }
        }
    }
    let mut angles: Vec<f64> = pts
        .into_iter()
        .filter(|p| *p != c)
        .map(|p| (p - c).arg())
        .chain([-PI, PI])
        .collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    angles
}

/// `F(x)`: closed form if the source provides one, quadrature otherwise.
pub fn newtonian_potential(
    g: &DiskPair,
    src: &dyn SourceModel,
    inv_k: [f64; 2],
    x: C64,
) -> Result<f64> {
    if let Some(j) = src.closed_form_potential(g, inv_k, x) {
        return Ok(j.value);
    }
    NewtonianQuadrature::new(g, inv_k, 1e-10).value(src, x)
}

//! Nyström discretization of the two-circle NP system, used as an
//! independent oracle for the spectral solver.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::layer::{CircleLayer, Jet};
use crate::np_spectrum::{lambda_from_k, Conductivity};

/// How nodes are placed on each circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeLayout {
    /// Preimages under `T` of equispaced points on `|ζ| = R_j`.
    Bipolar,
    /// Equispaced in the polar angle about the center.
    Uniform,
}

/// One boundary circle with its discretization parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: C64,
    pub radius: f64,
    /// `+1` when the normal points away from the center, `−1` otherwise.
    pub normal_sign: f64,
}

#[derive(Debug, Clone)]
pub struct NystromSystem {
    pub nodes_per_circle: usize,
    pub layout: NodeLayout,
    pub circles: Vec<Circle>,
    /// Quadrature parameter of each node (angle in the layout's variable).
    pub params: Vec<f64>,
    pub positions: Vec<C64>,
    pub normals: Vec<C64>,
    /// Arc-length weights.
    pub weights: Vec<f64>,
    /// Kernel of 𝕂*, without weights: the operator is `K̂·W`.
    pub k_kernel: DMatrix<f64>,
    /// Symmetric kernel of 𝕊, without weights: the operator is `Ŝ·W`.
    pub s_kernel: DMatrix<f64>,
    geometry: Option<DiskPair>,
}

/// Real circulant applying `(1/2π)∫ ln|2 sin((s − t)/2)| g(t) dt` to samples.
fn log_circulant(n: usize, params: &[f64]) -> DMatrix<f64> {
    let half = n / 2;
    DMatrix::from_fn(n, n, |i, k| {
        let d = params[i] - params[k];
        let mut acc = -(half as f64 * d).cos() / n as f64;
        for m in 1..half {
            acc -= (m as f64 * d).cos() / m as f64;
        }
        acc / n as f64
    })
}

impl NystromSystem {
    /// Assembles 𝕂* and 𝕊 on the two circles of `g`.
    pub fn assemble(g: &DiskPair, n: usize, layout: NodeLayout) -> Result<Self> {
        let circles = vec![
            Circle {
                center: g.center(1),
                radius: g.radius(1),
                normal_sign: 1.0,
            },
            Circle {
                center: g.center(2),
                radius: g.radius(2),
                normal_sign: 1.0,
            },
        ];
        let param = |j: usize, a: f64| -> Result<(C64, f64)> {
            match layout {
                NodeLayout::Uniform => {
                    let (c, r) = (g.center(j + 1), g.radius(j + 1));
                    Ok((c + C64::from_polar(r, a), r))
                }
                NodeLayout::Bipolar => {
                    let zeta = C64::from_polar(g.conc_radius(j + 1), a);
                    let x = g.inverse_map(zeta)?;
                    let dx = -g.beta / ((zeta - 1.0) * (zeta - 1.0)) * C64::i() * zeta;
                    Ok((x, dx.norm()))
                }
            }
        };
        let mut sys = Self::build(circles, n, layout, param)?;
        sys.geometry = Some(*g);
        Ok(sys)
    }

    /// Uniform nodes on the concentric circles `|ζ| = R₁` and `|ζ| = R₂`,
    /// oriented as the boundary of the annulus `R₁ < |ζ| < R₂`.
    pub fn concentric(g: &DiskPair, n: usize) -> Result<Self> {
        let circles = vec![
            Circle {
                center: C64::default(),
                radius: g.conc_r1,
                normal_sign: -1.0,
            },
            Circle {
                center: C64::default(),
                radius: g.conc_r2,
                normal_sign: 1.0,
            },
        ];
        let radii = [g.conc_r1, g.conc_r2];
        Self::build(circles, n, NodeLayout::Uniform, |j, a| {
            Ok((C64::from_polar(radii[j], a), radii[j]))
        })
    }

    fn build(
        circles: Vec<Circle>,
        n: usize,
        layout: NodeLayout,
        param: impl Fn(usize, f64) -> Result<(C64, f64)>,
    ) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(Error::Domain(format!(
                "nodes per circle must be even and at least 16, got {n}"
            )));
        }
        let total = n * circles.len();
        let mut params = Vec::with_capacity(total);
        let mut positions = Vec::with_capacity(total);
        let mut normals = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        let mut speeds = Vec::with_capacity(total);
        for (j, c) in circles.iter().enumerate() {
            for i in 0..n {
                let a = 2.0 * PI * i as f64 / n as f64;
                let (x, speed) = param(j, a)?;
                params.push(a);
                positions.push(x);
                normals.push(c.normal_sign * (x - c.center) / c.radius);
                weights.push(speed * 2.0 * PI / n as f64);
                speeds.push(speed);
            }
        }
        let block = |i: usize| i / n;
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..total)
            .into_par_iter()
            .map(|i| {
                let mut kr = vec![0.0; total];
                let mut sr = vec![0.0; total];
                for k in 0..total {
                    if block(i) == block(k) {
                        let c = &circles[block(i)];
                        kr[k] = c.normal_sign / (4.0 * PI * c.radius);
                    } else {
                        let d = positions[i] - positions[k];
                        kr[k] = (d * normals[i].conj()).re / d.norm_sqr() / (2.0 * PI);
                        sr[k] = d.norm().ln() / (2.0 * PI);
                    }
                }
                (kr, sr)
            })
            .collect();
        let mut k_kernel = DMatrix::zeros(total, total);
        let mut s_kernel = DMatrix::zeros(total, total);
        for (i, (kr, sr)) in rows.into_iter().enumerate() {
            for k in 0..total {
                k_kernel[(i, k)] = kr[k];
                s_kernel[(i, k)] = sr[k];
            }
        }
        for (j, c) in circles.iter().enumerate() {
            let off = j * n;
            let local = &params[off..off + n];
            let circ = log_circulant(n, local);
            let theta: Vec<f64> = positions[off..off + n]
                .iter()
                .map(|x| (x - c.center).arg())
                .collect();
            for i in 0..n {
                for k in 0..n {
                    let smooth = if i == k {
                        (speeds[off + i]).ln()
                    } else {
                        let ratio = ((theta[i] - theta[k]) / 2.0).sin()
                            / ((local[i] - local[k]) / 2.0).sin();
                        (c.radius * ratio.abs()).ln()
                    };
                    s_kernel[(off + i, off + k)] =
                        circ[(i, k)] * n as f64 / (2.0 * PI) + smooth / (2.0 * PI);
                }
            }
        }
        Ok(NystromSystem {
            nodes_per_circle: n,
            layout,
            circles,
            params,
            positions,
            normals,
            weights,
            k_kernel,
            s_kernel,
            geometry: None,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.weights.clone()))
    }

    /// Discrete 𝕂* acting on density samples.
    pub fn k_matrix(&self) -> DMatrix<f64> {
        &self.k_kernel * self.weight_matrix()
    }

    /// Discrete 𝕊 acting on density samples.
    pub fn s_matrix(&self) -> DMatrix<f64> {
        &self.s_kernel * self.weight_matrix()
    }

    fn circle_range(&self, j: usize) -> std::ops::Range<usize> {
        j * self.nodes_per_circle..(j + 1) * self.nodes_per_circle
    }

    /// `∫_{circle j} φ ds` by the quadrature.
    pub fn circle_integral(&self, phi: &[f64], j: usize) -> f64 {
        self.circle_range(j).map(|i| self.weights[i] * phi[i]).sum()
    }

    /// Bilinear form `⟨φ, ψ⟩ = −(φ, 𝕊ψ)`.
    pub fn inner_product(&self, phi: &[f64], psi: &[f64]) -> f64 {
        let s = self.s_matrix() * DVector::from_column_slice(psi);
        -phi.iter()
            .zip(self.weights.iter())
            .zip(s.iter())
            .map(|((p, w), v)| p * w * v)
            .sum::<f64>()
    }

    /// Λ as a diagonal vector.
    fn lambda_diag(&self, lambda: [f64; 2]) -> Vec<f64> {
        (0..self.len())
            .map(|i| lambda[i / self.nodes_per_circle])
            .collect()
    }
}

/// Operator-norm residual `‖𝕊𝕂* − 𝕂𝕊‖₂` with `𝕂 = W⁻¹(𝕂*)ᵀW`.
pub fn symmetrization_residual(sys: &NystromSystem) -> f64 {
    let k = sys.k_matrix();
    let s = sys.s_matrix();
    let w = DVector::from_vec(sys.weights.clone());
    let mut kadj = k.transpose();
    for i in 0..kadj.nrows() {
        for j in 0..kadj.ncols() {
            kadj[(i, j)] *= w[j] / w[i];
        }
    }
    let r = &s * &k - kadj * &s;
    r.singular_values().max()
}

/// Relative size of `∫η` per circle tolerated as quadrature error.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

/// Solves `(Λ − 𝕂*)φ = η` on mean-zero densities.
pub fn oracle_solve(sys: &NystromSystem, lambda: [f64; 2], eta: &[f64]) -> Result<Vec<f64>> {
    check_len(sys, eta)?;
    let mut eta = eta.to_vec();
    for j in 0..sys.circles.len() {
        let mean = sys.circle_integral(&eta, j);
        let scale: f64 = sys
            .circle_range(j)
            .map(|i| sys.weights[i] * eta[i].abs())
            .sum();
        if mean.abs() > COMPATIBILITY_TOL * scale {
            return Err(Error::Compatibility(format!(
                "density data has nonzero integral {mean:e} on circle {}",
                j + 1
            )));
        }
        // Remove the quadrature-level residue of the circle integral.
        let length: f64 = sys.circle_range(j).map(|i| sys.weights[i]).sum();
        for i in sys.circle_range(j) {
            eta[i] -= mean / length;
        }
    }
    let mut a = -sys.k_matrix();
    let ld = sys.lambda_diag(lambda);
    for i in 0..sys.len() {
        a[(i, i)] += ld[i];
    }
    // Rank-two update with the circle integrals removes the ½-eigenspace.
    for i in 0..sys.len() {
        let bi = i / sys.nodes_per_circle;
        for k in sys.circle_range(bi) {
            a[(i, k)] += sys.weights[k];
        }
    }
    let phi = dense_solve(a, &eta)?;
    for j in 0..sys.circles.len() {
        let mean = sys.circle_integral(&phi, j);
        let scale: f64 = sys
            .circle_range(j)
            .map(|i| sys.weights[i] * phi[i].abs())
            .sum();
        if mean.abs() > 1e-10 * scale.max(1.0) {
            return Err(Error::LinearAlgebra(format!(
                "deflated solve left mean {mean:e} on circle {}",
                j + 1
            )));
        }
    }
    Ok(phi)
}

/// Solves `(Λ − 𝕂*)φ = η` without a mean constraint; needs `|λ_j| > ½`.
pub fn oracle_solve_full(sys: &NystromSystem, lambda: [f64; 2], eta: &[f64]) -> Result<Vec<f64>> {
    check_len(sys, eta)?;
    if lambda.iter().any(|l| l.abs() <= 0.5) {
        return Err(Error::Domain(
            "the unconstrained solve requires finite nonzero conductivities".into(),
        ));
    }
    let mut a = -sys.k_matrix();
    let ld = sys.lambda_diag(lambda);
    for i in 0..sys.len() {
        a[(i, i)] += ld[i];
    }
    dense_solve(a, eta)
}

fn check_len(sys: &NystromSystem, v: &[f64]) -> Result<()> {
    if v.len() != sys.len() {
        return Err(Error::Domain(format!(
            "expected {} density samples, got {}",
            sys.len(),
            v.len()
        )));
    }
    Ok(())
}

fn dense_solve(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    a.lu()
        .solve(&DVector::from_column_slice(b))
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| Error::LinearAlgebra("singular Nyström system".into()))
}

/// `λ_j` for the oracle from conductivities.
pub fn lambdas(k1: Conductivity, k2: Conductivity) -> Result<[f64; 2]> {
    Ok([lambda_from_k(k1)?, lambda_from_k(k2)?])
}

/// Normal derivative of a field on every node.
pub fn normal_data(sys: &NystromSystem, grad: impl Fn(C64) -> [f64; 2]) -> Vec<f64> {
    sys.positions
        .iter()
        .zip(&sys.normals)
        .map(|(x, nu)| {
            let g = grad(*x);
            g[0] * nu.re + g[1] * nu.im
        })
        .collect()
}

/// Single-layer field of a Nyström density, evaluated exactly from its
/// Fourier coefficients on each circle after resampling to uniform angles.
#[derive(Debug, Clone)]
pub struct OracleField {
    layers: Vec<CircleLayer>,
    circles: Vec<Circle>,
    /// Distance below which the quadrature resolution is not trusted.
    near: Vec<f64>,
}

/// Value of the oracle field with a near-boundary flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub jet: Jet,
    pub near_boundary: bool,
}

impl OracleField {
    pub fn new(sys: &NystromSystem, phi: &[f64]) -> Result<Self> {
        check_len(sys, phi)?;
        let n = sys.nodes_per_circle;
        let m = 4 * n;
        let mut layers = Vec::new();
        let mut near = Vec::new();
        for (j, c) in sys.circles.iter().enumerate() {
            let r = sys.circle_range(j);
            let hat = crate::layer::dft_normalized(
                &phi[r].iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>(),
            );
            let samples: Vec<f64> = (0..m)
                .map(|i| {
                    let x = c.center + C64::from_polar(c.radius, 2.0 * PI * i as f64 / m as f64);
                    let a = sys.param_of(j, x);
                    let mut acc = hat[0].re + hat[n / 2].re * (n as f64 / 2.0 * a).cos();
                    for k in 1..n / 2 {
                        acc += 2.0 * (hat[k] * C64::from_polar(1.0, k as f64 * a)).re;
                    }
                    acc
                })
                .collect();
            layers.push(CircleLayer::from_samples(c.center, c.radius, &samples));
            near.push(2.0 * PI * c.radius / n as f64);
        }
        Ok(OracleField {
            layers,
            circles: sys.circles.clone(),
            near,
        })
    }

    pub fn eval(&self, x: C64) -> OracleValue {
        let mut jet = Jet::default();
        let mut near_boundary = false;
        for ((l, c), d) in self.layers.iter().zip(&self.circles).zip(&self.near) {
            jet = jet.add(l.eval(x));
            if ((x - c.center).norm() - c.radius).abs() < *d {
                near_boundary = true;
            }
        }
        OracleValue { jet, near_boundary }
    }
}

impl NystromSystem {
    /// Quadrature parameter of a point on circle `j`.
    fn param_of(&self, j: usize, x: C64) -> f64 {
        match (self.layout, self.geometry) {
            (NodeLayout::Bipolar, Some(g)) => g.forward_map(x).map(|z| z.arg()).unwrap_or(PI),
            _ => (x - self.circles[j].center).arg(),
        }
    }
}

/// Eigenvalue cluster of the discrete 𝕂*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenCluster {
    pub value: C64,
    pub multiplicity: usize,
}

/// Dense eigenvalues of 𝕂*, clustered at `tol` and sorted by modulus
/// (largest first); at most `count` clusters.
pub fn oracle_spectrum(sys: &NystromSystem, count: usize, tol: f64) -> Vec<EigenCluster> {
    let mut ev: Vec<C64> = sys
        .k_matrix()
        .complex_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut clusters: Vec<(C64, usize)> = Vec::new();
    for e in ev {
        match clusters.iter_mut().find(|(c, _)| (*c - e).norm() <= tol) {
            Some((c, m)) => {
                *c = (*c * *m as f64 + e) / (*m as f64 + 1.0);
                *m += 1;
            }
            None => clusters.push((e, 1)),
        }
    }
    clusters
        .into_iter()
        .take(count)
        .map(|(value, multiplicity)| EigenCluster {
            value,
            multiplicity,
        })
        .collect()
}

/// `(Uφ)_i = |z_i|²/β · φ_i` from bipolar nodes on ∂D to the uniform nodes
/// of the concentric system with the same count.
pub fn unitary_transform(g: &DiskPair, sys: &NystromSystem, phi: &[f64]) -> Vec<f64> {
    sys.positions
        .iter()
        .zip(phi)
        .map(|(z, p)| z.norm_sqr() / g.beta * p)
        .collect()
}

/// `(U⁻¹φ*)_i = β/|z_i|² · φ*_i`.
pub fn unitary_inverse(g: &DiskPair, sys: &NystromSystem, phi_star: &[f64]) -> Vec<f64> {
    sys.positions
        .iter()
        .zip(phi_star)
        .map(|(z, p)| g.beta / z.norm_sqr() * p)
        .collect()
}

/// `|⟨Uφ, Uψ⟩_{∂D*} − ⟨φ, ψ⟩_{∂D}|`.
pub fn unitarity_defect(
    g: &DiskPair,
    two: &NystromSystem,
    conc: &NystromSystem,
    phi: &[f64],
    psi: &[f64],
) -> f64 {
    let a = two.inner_product(phi, psi);
    let b = conc.inner_product(
        &unitary_transform(g, two, phi),
        &unitary_transform(g, two, psi),
    );
    (a - b).abs()
}

/// `max|𝕂*_{∂D*}Uφ + U𝕂*_{∂D}φ| / max|Uφ|`.
pub fn intertwining_residual(
    g: &DiskPair,
    two: &NystromSystem,
    conc: &NystromSystem,
    phi: &[f64],
) -> f64 {
    let u = unitary_transform(g, two, phi);
    let lhs = conc.k_matrix() * DVector::from_column_slice(&u);
    let kphi: Vec<f64> = (two.k_matrix() * DVector::from_column_slice(phi))
        .iter()
        .copied()
        .collect();
    let rhs = unitary_transform(g, two, &kphi);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    lhs.iter()
        .zip(&rhs)
        .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()))
        / scale
}

/// Samples of the pulled-back eigenfunction `φ^{n,±} = U⁻¹ f^{n,±}` (real part).
pub fn pulled_back_mode(g: &DiskPair, two: &NystromSystem, n: i64, sign: f64) -> Vec<f64> {
    let np = two.nodes_per_circle;
    let fstar: Vec<f64> = (0..two.len())
        .map(|i| {
            let a = two.params[i];
            let r = if i < np { g.conc_r1 } else { sign * g.conc_r2 };
            (n as f64 * a).cos() / r
        })
        .collect();
    unitary_inverse(g, two, &fstar)
}

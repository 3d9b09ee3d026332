//! Closed-form Neumann–Poincaré eigenpairs for two disks, their pullback to
//! concentric circles, and the per-mode resolvent solve.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPair;

/// Threshold on `|4λ₁λ₂ − ρ^{2n}|` below which a mode counts as resonant.
pub const RESONANCE_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Plus,
    Minus,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Plus => 1.0,
            Parity::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Parity::Plus => "+",
            Parity::Minus => "-",
        }
    }
}

/// Conductivity of an inclusion. `Infinite` and `Zero` are kept symbolic so
/// that λ = ±½ is exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Conductivity {
    Finite(f64),
    Infinite,
}

impl Conductivity {
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Conductivity::Infinite),
            _ => t
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("invalid conductivity '{s}'")))
                .and_then(Conductivity::from_f64),
        }
    }

    pub fn from_f64(k: f64) -> Result<Self> {
        if k.is_infinite() && k > 0.0 {
            Ok(Conductivity::Infinite)
        } else if k.is_nan() || k < 0.0 {
            Err(Error::Domain(format!(
                "conductivity must be nonnegative, got {k}"
            )))
        } else {
            Ok(Conductivity::Finite(k))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Conductivity::Finite(k) => k,
            Conductivity::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite_nonzero(self) -> bool {
        matches!(self, Conductivity::Finite(k) if k > 0.0)
    }

    pub fn label(self) -> String {
        match self {
            Conductivity::Infinite => "inf".into(),
            Conductivity::Finite(k) => format!("{k}"),
        }
    }
}

pub fn lambda_from_k(k: Conductivity) -> Result<f64> {
    match k {
        Conductivity::Infinite => Ok(0.5),
        Conductivity::Finite(k) if k == 0.0 => Ok(-0.5),
        Conductivity::Finite(k) if k == 1.0 => Err(Error::DegenerateContrast),
        Conductivity::Finite(k) if k < 0.0 || !k.is_finite() => Err(Error::Domain(format!(
            "conductivity must be nonnegative, got {k}"
        ))),
        Conductivity::Finite(k) => Ok((k + 1.0) / (2.0 * (k - 1.0))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMode {
    pub n: i64,
    pub parity: Parity,
    pub eigenvalue_concentric: f64,
    pub eigenvalue_twodisks: f64,
}

impl SpectralMode {
    pub fn new(g: &DiskPair, n: i64, parity: Parity) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mode order n must be nonzero".into()));
        }
        let e = 0.5 * parity.sign() * g.rho.powi(n.unsigned_abs() as i32);
        Ok(SpectralMode {
            n,
            parity,
            eigenvalue_concentric: e,
            eigenvalue_twodisks: -e,
        })
    }
}

/// Values of `f^{n,±}` on `|ζ| = R₁` and `|ζ| = R₂` at angle θ.
pub fn eigenfunction_concentric(
    g: &DiskPair,
    n: i64,
    parity: Parity,
    theta: f64,
) -> Result<(C64, C64)> {
    if n == 0 {
        return Err(Error::Domain("mode order n must be nonzero".into()));
    }
    let e = C64::from_polar(1.0, n as f64 * theta);
    Ok((e / g.conc_r1, parity.sign() * e / g.conc_r2))
}

/// Single-layer potential of `f^{n,±}` on the concentric circles.
pub fn single_layer_mode(g: &DiskPair, n: i64, parity: Parity, zeta: C64) -> Result<C64> {
    if n == 0 {
        return Err(Error::Domain("mode order n must be nonzero".into()));
    }
    if n < 0 {
        return Ok(single_layer_mode(g, -n, parity, zeta)?.conj());
    }
    let (r1, r2) = (g.conc_r1, g.conc_r2);
    let s = parity.sign();
    let m = n as i32;
    let nf = n as f64;
    let r = zeta.norm();
    Ok(if r <= r1 {
        -(r1.powi(-m) + s * r2.powi(-m)) / (2.0 * nf) * zeta.powi(m)
    } else if r <= r2 {
        -(r1.powi(m) / zeta.conj().powi(m) + s * (zeta / r2).powi(m)) / (2.0 * nf)
    } else {
        -(r1.powi(m) + s * r2.powi(m)) / (2.0 * nf) / zeta.conj().powi(m)
    })
}

/// `(Uφ)(T(z)) = |z|²/β · φ(z)` inverted: recovers φ(z) from `φ*(T(z))`.
pub fn pullback_density(g: &DiskPair, fstar_value: C64, z: C64) -> Result<C64> {
    if z == C64::new(0.0, 0.0) {
        return Err(Error::Pole("pullback density at z = 0".into()));
    }
    Ok(g.beta / z.norm_sqr() * fstar_value)
}

/// Forward density transform `φ*(T(z)) = |z|²/β · φ(z)`.
pub fn push_density(g: &DiskPair, value: C64, z: C64) -> C64 {
    z.norm_sqr() / g.beta * value
}

/// Squared norm `2π/|n| (1 ± ρ^{|n|})`.
pub fn mode_norm(g: &DiskPair, n: i64, parity: Parity) -> Result<f64> {
    mode_norm_rho(g.rho, n, parity)
}

pub fn mode_norm_rho(rho: f64, n: i64, parity: Parity) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("mode order n must be nonzero".into()));
    }
    let m = n.unsigned_abs();
    Ok(2.0 * PI / m as f64 * (1.0 + parity.sign() * rho.powi(m as i32)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCoefficients {
    pub n_modes: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub rho: f64,
    pub c_plus: Vec<C64>,
    pub c_minus: Vec<C64>,
    pub a_plus: Vec<C64>,
    pub a_minus: Vec<C64>,
}

/// Solves the 2×2 system of each mode `n = 1..N` (index `n − 1`).
pub fn solve_modes(
    lambda1: f64,
    lambda2: f64,
    rho: f64,
    c_plus: &[C64],
    c_minus: &[C64],
) -> Result<ModeCoefficients> {
    if c_plus.len() != c_minus.len() {
        return Err(Error::Domain("C+ and C- must have equal length".into()));
    }
    let n_modes = c_plus.len();
    let mut a_plus = Vec::with_capacity(n_modes);
    let mut a_minus = Vec::with_capacity(n_modes);
    let mut rn = 1.0;
    let sum = lambda1 + lambda2;
    let diff = lambda1 - lambda2;
    for n in 1..=n_modes {
        rn *= rho;
        let d = 4.0 * lambda1 * lambda2 - rn * rn;
        if d.abs() < RESONANCE_GUARD {
            return Err(Error::Resonance { n, value: d.abs() });
        }
        let (cp, cm) = (c_plus[n - 1], c_minus[n - 1]);
        a_plus.push(2.0 * ((sum - rn) * cp - diff * cm) / d);
        a_minus.push(2.0 * (-diff * cp + (sum + rn) * cm) / d);
    }
    Ok(ModeCoefficients {
        n_modes,
        lambda1,
        lambda2,
        rho,
        c_plus: c_plus.to_vec(),
        c_minus: c_minus.to_vec(),
        a_plus,
        a_minus,
    })
}

impl ModeCoefficients {
    /// Largest residual of the per-mode 2×2 systems, relative to `|C|`.
    pub fn system_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut rn = 1.0;
        let (l1, l2) = (self.lambda1, self.lambda2);
        for i in 0..self.n_modes {
            rn *= self.rho;
            let (ap, am) = (self.a_plus[i], self.a_minus[i]);
            let (cp, cm) = (self.c_plus[i], self.c_minus[i]);
            let e1 = (l1 + 0.5 * rn) * ap + (l1 - 0.5 * rn) * am - (cp + cm);
            let e2 = (l2 + 0.5 * rn) * ap - (l2 - 0.5 * rn) * am - (cp - cm);
            let scale = (cp.norm() + cm.norm()).max(f64::MIN_POSITIVE);
            worst = worst.max(e1.norm() / scale).max(e2.norm() / scale);
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn lambda_values() {
        assert_eq!(lambda_from_k(Conductivity::Finite(5.0)).unwrap(), 0.75);
        assert_eq!(lambda_from_k(Conductivity::Infinite).unwrap(), 0.5);
        assert_eq!(lambda_from_k(Conductivity::Finite(0.0)).unwrap(), -0.5);
        assert_eq!(lambda_from_k(Conductivity::Finite(0.5)).unwrap(), -1.5);
        assert_eq!(
            lambda_from_k(Conductivity::Finite(1.0)),
            Err(Error::DegenerateContrast)
        );
        assert!(Conductivity::from_f64(-1.0).is_err());
        assert_eq!(Conductivity::parse("inf").unwrap(), Conductivity::Infinite);
        assert_eq!(
            Conductivity::parse(" 0 ").unwrap(),
            Conductivity::Finite(0.0)
        );
        assert!(Conductivity::parse("abc").is_err());
    }

    #[test]
    fn solve_modes_examples() {
        let m = solve_modes(0.75, 0.75, 0.5, &[c(1.0)], &[c(0.0)]).unwrap();
        assert_relative_eq!(m.a_plus[0].re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.a_minus[0].re, 0.0, epsilon = 1e-15);

        let m = solve_modes(0.75, -1.5, 0.5, &[c(1.0)], &[c(0.0)]).unwrap();
        assert_relative_eq!(
            m.a_plus[0].re,
            2.0 * (0.75 - 1.5 - 0.5) / -4.75,
            epsilon = 1e-15
        );
        assert_relative_eq!(m.a_plus[0].re, 0.526315789473684, epsilon = 1e-12);
        assert_relative_eq!(m.a_minus[0].re, 0.947368421052632, epsilon = 1e-12);
        assert!(m.system_residual() < 1e-14);

        let m = solve_modes(0.6, -0.9, 0.7, &[c(0.0); 10], &[c(0.0); 10]).unwrap();
        assert!(m.a_plus.iter().chain(&m.a_minus).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn resonance_is_rejected() {
        // 4λ₁λ₂ = ρ² for the first mode.
        let r = solve_modes(0.25, 0.25, 0.5, &[c(1.0)], &[c(0.0)]);
        assert!(matches!(r, Err(Error::Resonance { n: 1, .. })));
    }

    #[test]
    fn mode_norm_examples() {
        assert_relative_eq!(
            mode_norm_rho(0.5, 1, Parity::Plus).unwrap(),
            3.0 * PI,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mode_norm_rho(0.5, 2, Parity::Minus).unwrap(),
            0.75 * PI,
            epsilon = 1e-14
        );
        assert_relative_eq!(
            mode_norm_rho(1e-300, 3, Parity::Minus).unwrap(),
            2.0 * PI / 3.0
        );
        let g = DiskPair::new(1.2, 0.8, 0.05).unwrap();
        let mut last = f64::INFINITY;
        for n in 1..20 {
            for p in [Parity::Plus, Parity::Minus] {
                let v = mode_norm(&g, n, p).unwrap();
                assert!(v > 0.0);
            }
            let v = mode_norm(&g, n, Parity::Minus).unwrap();
            assert!(v < last);
            last = v;
        }
        assert!(mode_norm(&g, 0, Parity::Plus).is_err());
    }

    #[test]
    fn eigenfunctions_and_modes() {
        let g = DiskPair::new(1.0, 1.0, 0.01).unwrap();
        let (a, b) = eigenfunction_concentric(&g, 1, Parity::Plus, 0.0).unwrap();
        assert_relative_eq!(a.re, 1.0 / g.conc_r1);
        assert_relative_eq!(b.re, 1.0 / g.conc_r2);
        let (a, b) = eigenfunction_concentric(&g, 2, Parity::Minus, PI).unwrap();
        assert!((a - 1.0 / g.conc_r1).norm() < 1e-15);
        assert!((b + 1.0 / g.conc_r2).norm() < 1e-15);
        for n in [-3, 1, 2, 7] {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..256 {
                let (a, b) =
                    eigenfunction_concentric(&g, n, Parity::Plus, 2.0 * PI * k as f64 / 256.0)
                        .unwrap();
                s += a + b;
            }
            assert!(s.norm() / 256.0 < 1e-14);
        }
        let m = SpectralMode::new(&g, 3, Parity::Plus).unwrap();
        assert_eq!(m.eigenvalue_twodisks, -m.eigenvalue_concentric);
        assert!(m.eigenvalue_concentric.abs() < 0.5);
    }

    #[test]
    fn single_layer_mode_is_continuous_and_conjugate_symmetric() {
        let g = DiskPair::new(1.2, 0.8, 0.05).unwrap();
        assert_eq!(
            single_layer_mode(&g, 1, Parity::Plus, c(0.0)).unwrap(),
            c(0.0)
        );
        for n in 1..6 {
            for p in [Parity::Plus, Parity::Minus] {
                for k in 0..16 {
                    let e = C64::from_polar(1.0, 0.3 + k as f64);
                    for r in [g.conc_r1, g.conc_r2] {
                        let inner = single_layer_mode(&g, n, p, e * r * (1.0 - 1e-15)).unwrap();
                        let outer = single_layer_mode(&g, n, p, e * r * (1.0 + 1e-15)).unwrap();
                        assert!((inner - outer).norm() < 1e-13, "n {n} r {r}");
                    }
                    let z = e * (0.3 + 0.2 * k as f64);
                    let a = single_layer_mode(&g, -n, p, z).unwrap();
                    let b = single_layer_mode(&g, n, p, z).unwrap();
                    assert!((a - b.conj()).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn single_layer_mode_matches_quadrature() {
        // Direct trapezoid of (1/2π)∮ ln|ζ−η| f(η) ds on both circles at a far point.
        let g = DiskPair::new(1.2, 0.8, 0.05).unwrap();
        let m = 2048;
        for zeta in [C64::new(0.2, 0.1), C64::new(1.0, 0.05), C64::new(-3.0, 2.0)] {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..m {
                let th = 2.0 * PI * k as f64 / m as f64;
                let (f1, f2) = eigenfunction_concentric(&g, 2, Parity::Minus, th).unwrap();
                let e = C64::from_polar(1.0, th);
                s += (zeta - g.conc_r1 * e).norm().ln() * f1 * g.conc_r1;
                s += (zeta - g.conc_r2 * e).norm().ln() * f2 * g.conc_r2;
            }
            s *= 2.0 * PI / m as f64 / (2.0 * PI);
            let v = single_layer_mode(&g, 2, Parity::Minus, zeta).unwrap();
            assert!((s - v).norm() < 1e-10, "{zeta}: {s} vs {v}");
        }
    }

    #[test]
    fn pullback_round_trip() {
        let g = DiskPair::new(1.0, 1.0, 0.01).unwrap();
        let z = g.center(1) + C64::from_polar(g.r1, 0.4);
        let v = C64::new(0.3, -1.2);
        let back = pullback_density(&g, push_density(&g, v, z), z).unwrap();
        assert!((back - v).norm() < 1e-13);
        assert!(pullback_density(&g, v, c(0.0)).is_err());
    }

    proptest! {
        #[test]
        fn substitution_reproduces_data(
            l1 in prop_oneof![0.5f64..5.0, -5.0f64..-0.5],
            l2s in prop_oneof![Just(1.0f64), Just(-1.0f64)],
            l2m in 0.5f64..5.0,
            rho in 0.05f64..0.99,
            re in -2.0f64..2.0, im in -2.0f64..2.0, re2 in -2.0f64..2.0,
        ) {
            let l2 = l2s * l2m * l1.signum();
            let cp: Vec<C64> = (0..20).map(|k| C64::new(re + k as f64, im)).collect();
            let cm: Vec<C64> = (0..20).map(|k| C64::new(re2, im * k as f64)).collect();
            let m = solve_modes(l1, l2, rho, &cp, &cm).unwrap();
            prop_assert!(m.system_residual() < 1e-12);
        }

        #[test]
        fn linear_in_data(rho in 0.1f64..0.95, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let a = solve_modes(0.75, 1.5, rho, &[C64::new(x, 0.0)], &[C64::new(0.0, y)]).unwrap();
            let b = solve_modes(0.75, 1.5, rho, &[C64::new(2.0 * x, 0.0)], &[C64::new(0.0, 2.0 * y)]).unwrap();
            prop_assert!((2.0 * a.a_plus[0] - b.a_plus[0]).norm() < 1e-12 * (1.0 + b.a_plus[0].norm()));
            prop_assert!((2.0 * a.a_minus[0] - b.a_minus[0]).norm() < 1e-12 * (1.0 + b.a_minus[0].norm()));
        }
    }
}

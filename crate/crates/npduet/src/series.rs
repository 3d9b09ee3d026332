//! Compensated evaluation of scaled power and inverse-power series.
//!
//! Every series here has the form `Σ_{n≥1} c_n yⁿ` with `|y| ≤ 1`, where
//! `y = ζ/s` (power series) or `y = s/ζ` (inverse series).

use num_complex::Complex64 as C64;

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: C64,
    comp: C64,
}

fn two_sum(acc: f64, comp: &mut f64, x: f64) -> f64 {
    let t = acc + x;
    if acc.abs() >= x.abs() {
        *comp += (acc - t) + x;
    } else {
        *comp += (x - t) + acc;
    }
    t
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: C64) {
        self.sum.re = two_sum(self.sum.re, &mut self.comp.re, x.re);
        self.sum.im = two_sum(self.sum.im, &mut self.comp.im, x.im);
    }

    pub fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

/// Value and first two derivatives of `Σ c_n yⁿ` with respect to `y`.
pub fn eval_in_y(coeffs: &[C64], y: C64) -> [C64; 3] {
    let mut f = KahanSum::new();
    let mut d1 = KahanSum::new();
    let mut d2 = KahanSum::new();
    // pw = y^(n-2); start with n = 1.
    let mut pm1 = C64::new(1.0, 0.0); // y^(n-1)
    let mut pm2 = C64::new(0.0, 0.0); // y^(n-2)
    for (i, &c) in coeffs.iter().enumerate() {
        let n = (i + 1) as f64;
        let p = pm1 * y;
        f.add(c * p);
        d1.add(c * n * pm1);
        if i >= 1 {
            d2.add(c * (n * (n - 1.0)) * pm2);
        }
        pm2 = pm1;
        pm1 = p;
    }
    [f.value(), d1.value(), d2.value()]
}

/// `Σ c_n (ζ/s)ⁿ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowerSeries {
    pub coeffs: Vec<C64>,
    pub scale: f64,
}

/// `Σ c_n (s/ζ)ⁿ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InverseSeries {
    pub coeffs: Vec<C64>,
    pub scale: f64,
}

impl PowerSeries {
    pub fn new(coeffs: Vec<C64>, scale: f64) -> Self {
        Self { coeffs, scale }
    }

    /// Value and derivatives with respect to ζ.
    pub fn eval(&self, zeta: C64) -> [C64; 3] {
        let s = self.scale;
        let [f, g1, g2] = eval_in_y(&self.coeffs, zeta / s);
        [f, g1 / s, g2 / (s * s)]
    }

    pub fn conj_coeffs(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect(), self.scale)
    }
}

impl InverseSeries {
    pub fn new(coeffs: Vec<C64>, scale: f64) -> Self {
        Self { coeffs, scale }
    }

    /// Value and derivatives with respect to ζ.
    pub fn eval(&self, zeta: C64) -> [C64; 3] {
        let s = self.scale;
        let [f, g1, g2] = eval_in_y(&self.coeffs, s / zeta);
        let dy = -s / (zeta * zeta);
        let d2y = 2.0 * s / (zeta * zeta * zeta);
        [f, g1 * dy, g2 * dy * dy + g1 * d2y]
    }

    pub fn conj_coeffs(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.conj()).collect(), self.scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = KahanSum::new();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(C64::new(x, -x));
        }
        assert_eq!(s.value(), C64::new(2.0, -2.0));
    }

    #[test]
    fn geometric_series_and_derivatives() {
        let n = 4000;
        let coeffs = vec![C64::new(1.0, 0.0); n];
        let s = PowerSeries::new(coeffs.clone(), 2.0);
        let z = C64::new(0.6, 0.8);
        let y = z / 2.0;
        let [f, d1, d2] = s.eval(z);
        let exact = y / (1.0 - y);
        let exact1 = 1.0 / ((1.0 - y) * (1.0 - y)) / 2.0;
        let exact2 = 2.0 / ((1.0 - y) * (1.0 - y) * (1.0 - y)) / 4.0;
        assert!((f - exact).norm() < 1e-14);
        assert!((d1 - exact1).norm() < 1e-13);
        assert!((d2 - exact2).norm() < 1e-12);

        let inv = InverseSeries::new(coeffs, 2.0);
        let z = C64::new(3.0, 4.0);
        let [f, d1, d2] = inv.eval(z);
        // Σ (2/z)^n = 2/(z-2)
        let e0 = 2.0 / (z - 2.0);
        let e1 = -2.0 / ((z - 2.0) * (z - 2.0));
        let e2 = 4.0 / ((z - 2.0) * (z - 2.0) * (z - 2.0));
        assert!((f - e0).norm() < 1e-14);
        assert!((d1 - e1).norm() < 1e-14);
        assert!((d2 - e2).norm() < 1e-14);
    }

    #[test]
    fn single_term() {
        let s = PowerSeries::new(vec![C64::new(0.0, 0.0), C64::new(3.0, 0.0)], 1.0);
        let [f, d1, d2] = s.eval(C64::new(0.5, 0.0));
        assert_relative_eq!(f.re, 0.75);
        assert_relative_eq!(d1.re, 3.0);
        assert_relative_eq!(d2.re, 6.0);
    }
}

//! Parser for harmonic polynomial backgrounds such as `x`, `x^2-y^2`, `3*x*y + 2`.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::harmonic_data::source::{HarmonicPoly, MAX_DEGREE};

/// Real polynomial in `x, y`: `(i, j) ↦ c` for `c·xⁱyʲ`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly(pub BTreeMap<(u32, u32), f64>);

impl Poly {
    fn constant(c: f64) -> Self {
        Poly([((0, 0), c)].into_iter().collect())
    }

    fn monomial(i: u32, j: u32) -> Self {
        Poly([((i, j), 1.0)].into_iter().collect())
    }

    fn add(mut self, o: &Poly, sign: f64) -> Self {
        for (k, v) in &o.0 {
            *self.0.entry(*k).or_insert(0.0) += sign * v;
        }
        self
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = BTreeMap::new();
        for ((i, j), a) in &self.0 {
            for ((k, l), b) in &o.0 {
                *out.entry((i + k, j + l)).or_insert(0.0) += a * b;
            }
        }
        Poly(out)
    }

    fn pow(&self, e: u32) -> Poly {
        (0..e).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn degree(&self) -> u32 {
        self.0
            .iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|((i, j), _)| i + j)
            .max()
            .unwrap_or(0)
    }

    /// `Δp` as a polynomial.
    pub fn laplacian(&self) -> Poly {
        let mut out = Poly::default();
        for (&(i, j), &c) in &self.0 {
            if i >= 2 {
                *out.0.entry((i - 2, j)).or_insert(0.0) += c * (i * (i - 1)) as f64;
            }
            if j >= 2 {
                *out.0.entry((i, j - 2)).or_insert(0.0) += c * (j * (j - 1)) as f64;
            }
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.0.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn coeff(&self, i: u32, j: u32) -> f64 {
        self.0.get(&(i, j)).copied().unwrap_or(0.0)
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Config(format!(
            "cannot parse polynomial {:?} at offset {}: {msg}",
            self.src, self.pos
        ))
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut sign = 1.0;
        match self.peek() {
            Some('-') | Some('−') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        let mut acc = Poly::default().add(&self.term()?, sign);
        loop {
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, 1.0);
                }
                Some('-') | Some('−') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, -1.0);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some('*') | Some('·') => {
                    self.pos += 1;
                    acc = acc.mul(&self.factor()?);
                }
                Some(c) if c == 'x' || c == 'y' || c == '(' || c.is_ascii_digit() || c == '.' => {
                    acc = acc.mul(&self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Poly> {
        let base = match self.peek() {
            Some('x') => {
                self.pos += 1;
                Poly::monomial(1, 0)
            }
            Some('y') => {
                self.pos += 1;
                Poly::monomial(0, 1)
            }
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                e
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Poly::constant(self.number()?),
            _ => return Err(self.err("expected x, y, a number or '('")),
        };
        if self.peek() == Some('^') {
            self.pos += 1;
            self.peek();
            let start = self.pos;
            while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            let digits: String = self.chars[start..self.pos].iter().collect();
            let e: u32 = digits
                .parse()
                .map_err(|_| self.err("expected an integer power"))?;
            if e as usize > MAX_DEGREE {
                return Err(self.err("power too large"));
            }
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == '.')
        {
            self.pos += 1;
        }
        if matches!(self.chars.get(self.pos), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.err("malformed number"))
    }
}

/// Parses a real polynomial in `x` and `y`.
pub fn parse_poly(s: &str) -> Result<Poly> {
    let mut p = Parser {
        chars: s.chars().collect(),
        pos: 0,
        src: s,
    };
    let out = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

/// Parses a polynomial and returns it as `Re Σ b_m z^m`, rejecting
/// non-harmonic input.
pub fn parse_harmonic(s: &str) -> Result<HarmonicPoly> {
    let p = parse_poly(s)?;
    let scale = p.max_abs().max(1.0);
    let lap = p.laplacian();
    if lap.max_abs() > 1e-12 * scale {
        return Err(Error::Config(format!("polynomial {s:?} is not harmonic")));
    }
    let d = p.degree();
    if d as usize > MAX_DEGREE {
        return Err(Error::Config(format!(
            "polynomial degree {d} exceeds {MAX_DEGREE}"
        )));
    }
    // The degree-m part is Re(b_m zᵐ): its xᵐ coefficient is Re b_m and its
    // x^{m−1}y coefficient is −m·Im b_m.
    let coeffs: Vec<C64> = (0..=d)
        .map(|m| {
            if m == 0 {
                C64::new(p.coeff(0, 0), 0.0)
            } else {
                C64::new(p.coeff(m, 0), -p.coeff(m - 1, 1) / m as f64)
            }
        })
        .collect();
    HarmonicPoly::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn expand(h: &HarmonicPoly) -> Poly {
        let z = Poly::monomial(1, 0);
        let iy = Poly::monomial(0, 1);
        let mut out = Poly::default();
        for (m, b) in h.coeffs.iter().enumerate() {
            // Re((α + iβ)(x + iy)^m) via binomial expansion.
            for k in 0..=m as u32 {
                let binom = (0..k).fold(1.0, |acc, t| acc * (m as f64 - t as f64) / (t + 1) as f64);
                let term = z.pow(m as u32 - k).mul(&iy.pow(k));
                let re = match k % 4 {
                    0 => b.re,
                    1 => -b.im,
                    2 => -b.re,
                    _ => b.im,
                };
                out = out.add(&term, binom * re);
            }
        }
        out
    }

    fn same(a: &Poly, b: &Poly) -> bool {
        let keys: std::collections::BTreeSet<_> = a.0.keys().chain(b.0.keys()).collect();
        keys.into_iter()
            .all(|&(i, j)| (a.coeff(i, j) - b.coeff(i, j)).abs() < 1e-9)
    }

    #[test]
    fn basic_inputs() {
        let h = parse_harmonic("x").unwrap();
        assert_eq!(h.coeffs, vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let h = parse_harmonic("y").unwrap();
        assert_eq!(h.coeffs[1], C64::new(0.0, -1.0));
        let h = parse_harmonic("x^2 - y^2").unwrap();
        assert_eq!(h.coeffs[2], C64::new(1.0, 0.0));
        let h = parse_harmonic("2xy").unwrap();
        assert_eq!(h.coeffs[2], C64::new(0.0, -1.0));
        let h = parse_harmonic("3").unwrap();
        assert_eq!(h.coeffs, vec![C64::new(3.0, 0.0)]);
        let h = parse_harmonic("x^3 - 3*x*y^2 + 1.5e0").unwrap();
        assert_eq!(h.coeffs[3], C64::new(1.0, 0.0));
        assert_eq!(h.coeffs[0], C64::new(1.5, 0.0));
        assert!(parse_harmonic("(x+y)^2 - 2·x·y - x^2 - y^2")
            .unwrap()
            .coeffs
            .iter()
            .all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_harmonic("x^2"), Err(Error::Config(_))));
        assert!(parse_harmonic("x +").is_err());
        assert!(parse_harmonic("z").is_err());
        assert!(parse_harmonic("x^").is_err());
        assert!(parse_harmonic("(x").is_err());
        assert!(parse_harmonic("x^40 ").is_err());
    }

    #[test]
    fn harmonic_jet_matches_expression() {
        let h = parse_harmonic("x^3 - 3x y^2 - 2x y + 4").unwrap();
        let z = C64::new(0.3, -0.7);
        let (x, y) = (z.re, z.im);
        let j = h.jet(z);
        assert!((j.value - (x.powi(3) - 3.0 * x * y * y - 2.0 * x * y + 4.0)).abs() < 1e-14);
        assert!((j.grad[0] - (3.0 * x * x - 3.0 * y * y - 2.0 * y)).abs() < 1e-14);
        assert!((j.grad[1] - (-6.0 * x * y - 2.0 * x)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn round_trip_through_complex_coefficients(
            re in proptest::collection::vec(-3i32..=3, 1..5),
            im in proptest::collection::vec(-3i32..=3, 1..5),
        ) {
            let coeffs: Vec<C64> = re.iter().zip(&im).enumerate()
                .map(|(m, (a, b))| C64::new(*a as f64, if m == 0 { 0.0 } else { *b as f64 }))
                .collect();
            let h = HarmonicPoly::new(coeffs.clone()).unwrap();
            let p = expand(&h);
            let text: Vec<String> = p.0.iter().filter(|(_, v)| **v != 0.0)
                .map(|((i, j), v)| format!("({v})*x^{i}*y^{j}")).collect();
            let text = if text.is_empty() { "0".to_string() } else { text.join(" + ") };
            let back = parse_harmonic(&text).unwrap();
            prop_assert!(same(&expand(&back), &p));
        }
    }
}

//! Run configuration: TOML file keys, flag overrides and validation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::output::Format;
use super::poly::parse_harmonic;
use crate::error::{Error, Result};
use crate::harmonic_data::source::{FunctionSource, SourceSpec, UniformDisk};
use crate::harmonic_data::TruncationOptions;
use crate::np_spectrum::Conductivity;
use crate::spectral_solver::SolveOptions;

pub const DEFAULT_NMAX: usize = 256;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_RADIUS: f64 = 1.0;

/// A conductivity as written in a config file: a number or `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KValue {
    Number(f64),
    Text(String),
}

impl KValue {
    pub fn parse(&self) -> Result<Conductivity> {
        match self {
            KValue::Number(v) => Conductivity::from_f64(*v),
            KValue::Text(s) => Conductivity::parse(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConductivityConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<KValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<KValue>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Starting truncation order (doubled automatically); for `spectrum`,
    /// the number of modes listed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nmax: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Normalisation of `u − F`; only `"infinity"` (decay at infinity).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    /// Nyström nodes per circle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Derivative order for sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// `xmin:xmax:ymin:ymax:res`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub conductivities: ConductivityConfig,
    /// Harmonic polynomial (`"x^2-y^2"`), `"disk(cx,cy,r,a)"` or
    /// `"box(xmin,xmax,ymin,ymax,a)"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

fn over<T: Clone>(base: &mut Option<T>, top: &Option<T>) {
    if top.is_some() {
        *base = top.clone();
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        over(&mut self.geometry.r1, &top.geometry.r1);
        over(&mut self.geometry.r2, &top.geometry.r2);
        over(&mut self.geometry.eps, &top.geometry.eps);
        over(&mut self.geometry.eps_list, &top.geometry.eps_list);
        over(&mut self.conductivities.k1, &top.conductivities.k1);
        over(&mut self.conductivities.k2, &top.conductivities.k2);
        over(&mut self.source, &top.source);
        over(&mut self.solver.nmax, &top.solver.nmax);
        over(&mut self.solver.tol, &top.solver.tol);
        over(&mut self.solver.anchor, &top.solver.anchor);
        over(&mut self.solver.nodes, &top.solver.nodes);
        over(&mut self.solver.order, &top.solver.order);
        over(&mut self.output.path, &top.output.path);
        over(&mut self.output.format, &top.output.format);
        over(&mut self.output.grid, &top.output.grid);
        self
    }

    /// Unset radii default to `DEFAULT_RADIUS`.
    pub fn radii(&self) -> (f64, f64) {
        (
            self.geometry.r1.unwrap_or(DEFAULT_RADIUS),
            self.geometry.r2.unwrap_or(DEFAULT_RADIUS),
        )
    }

    pub fn eps(&self) -> Result<f64> {
        self.geometry
            .eps
            .ok_or_else(|| Error::Config("geometry needs eps".into()))
    }

    pub fn eps_list(&self) -> Result<Vec<f64>> {
        match (&self.geometry.eps_list, self.geometry.eps) {
            (Some(l), _) if !l.is_empty() => Ok(l.clone()),
            (_, Some(e)) => Ok(vec![e]),
            _ => Err(Error::Config("sweep needs eps_list".into())),
        }
    }

    pub fn conductivities(&self) -> Result<(Conductivity, Conductivity)> {
        let get = |k: &Option<KValue>, name: &str| {
            k.as_ref()
                .ok_or_else(|| Error::Config(format!("conductivities need {name}")))?
                .parse()
        };
        Ok((
            get(&self.conductivities.k1, "k1")?,
            get(&self.conductivities.k2, "k2")?,
        ))
    }

    pub fn has_conductivities(&self) -> bool {
        self.conductivities.k1.is_some() && self.conductivities.k2.is_some()
    }

    pub fn source_spec(&self) -> Result<SourceSpec> {
        let s = self
            .source
            .as_deref()
            .ok_or_else(|| Error::Config("missing source".into()))?;
        parse_source(s)
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        if let Some(a) = &self.solver.anchor {
            if a != "infinity" {
                return Err(Error::Config(format!(
                    "unsupported anchor {a:?}; only \"infinity\""
                )));
            }
        }
        let tol = self.solver.tol.unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {tol}")));
        }
        let n_start = self.solver.nmax.unwrap_or(DEFAULT_NMAX);
        if n_start < 8 {
            return Err(Error::Config(format!(
                "nmax must be at least 8, got {n_start}"
            )));
        }
        Ok(SolveOptions {
            truncation: TruncationOptions {
                n_start,
                ..TruncationOptions::default()
            },
            tol,
        })
    }

    pub fn format(&self) -> Format {
        self.output.format.unwrap_or_default()
    }
}

fn call_args(s: &str, name: &str, count: usize) -> Result<Option<Vec<f64>>> {
    let t = s.trim();
    let Some(inner) = t.strip_prefix(name).map(str::trim_start) else {
        return Ok(None);
    };
    let inner = inner
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Config(format!("malformed {name} source {s:?}")))?;
    let vals = inner
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::Config(format!("malformed {name} source {s:?}")))?;
    if vals.len() != count {
        return Err(Error::Config(format!(
            "{name} source takes {count} numbers, got {}",
            vals.len()
        )));
    }
    Ok(Some(vals))
}

/// Harmonic polynomial, `disk(cx,cy,r,a)` or `box(xmin,xmax,ymin,ymax,a)`.
pub fn parse_source(s: &str) -> Result<SourceSpec> {
    if let Some(v) = call_args(s, "disk", 4)? {
        let d = UniformDisk::new(C64::new(v[0], v[1]), v[2], v[3])
            .map_err(|e| Error::Config(e.to_string()))?;
        return Ok(SourceSpec::DivergenceSource(Arc::new(d)));
    }
    if let Some(v) = call_args(s, "box", 5)? {
        let [x0, x1, y0, y1, a] = [v[0], v[1], v[2], v[3], v[4]];
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Config(format!("empty support box in {s:?}")));
        }
        let f = FunctionSource {
            density: Arc::new(move |p: C64| {
                if p.re >= x0 && p.re <= x1 && p.im >= y0 && p.im <= y1 {
                    a
                } else {
                    0.0
                }
            }),
            support: [x0, x1, y0, y1],
        };
        return Ok(SourceSpec::DivergenceSource(Arc::new(f)));
    }
    Ok(SourceSpec::HarmonicBackground(parse_harmonic(s)?))
}

/// `xmin:xmax:ymin:ymax:res` with `res ≥ 2` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub res: usize,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Grid> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("grid must be xmin:xmax:ymin:ymax:res, got {s:?}"));
        if parts.len() != 5 {
            return Err(bad());
        }
        let f = |i: usize| parts[i].trim().parse::<f64>().map_err(|_| bad());
        let res: usize = parts[4].trim().parse().map_err(|_| bad())?;
        let g = Grid {
            x: [f(0)?, f(1)?],
            y: [f(2)?, f(3)?],
            res,
        };
        if !(g.x[1] > g.x[0] && g.y[1] > g.y[0] && res >= 2) {
            return Err(bad());
        }
        Ok(g)
    }

    /// Points row by row, `y` outer and `x` inner, both increasing.
    pub fn points(&self) -> Vec<C64> {
        let step = |r: [f64; 2], i: usize| r[0] + (r[1] - r[0]) * i as f64 / (self.res - 1) as f64;
        (0..self.res)
            .flat_map(|j| (0..self.res).map(move |i| C64::new(step(self.x, i), step(self.y, j))))
            .collect()
    }
}

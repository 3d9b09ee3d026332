//! Command-line front end: `solve`, `spectrum`, `oracle`, `sweep`, `decompose`.

pub mod config;
pub mod output;
pub mod poly;

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::analysis::{bound_ratio, fit_exponent, fit_loglog, sweep, SweepRecord, SweepTemplate};
use crate::bie_oracle::{
    lambdas, normal_data, oracle_solve, oracle_spectrum, symmetrization_residual, NodeLayout,
    NystromSystem, OracleField,
};
use crate::error::{Error, Result};
use crate::geometry::DiskPair;
use crate::harmonic_data::source::{SourceModel, SourceSpec};
use crate::harmonic_data::{corrector_integral, source_decompose};
use crate::np_spectrum::{mode_norm, Parity, SpectralMode};
use crate::spectral_solver::solve_field;

use config::{Grid, KValue, RunConfig, DEFAULT_NODES};
use output::{write_tables, Cell, Format, Table};

pub const DEFAULT_SPECTRUM_MODES: usize = 8;
pub const ORACLE_POINTS: usize = 50;
pub const ORACLE_CLEARANCE: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(
    name = "npduet",
    version,
    about = "Two-disk conductivity problems solved through the NP spectrum"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate u and its first two derivatives on a grid.
    Solve(RunArgs),
    /// List NP eigenvalues, mode norms and (with data) mode coefficients.
    Spectrum(RunArgs),
    /// Cross-check the spectral solution against the Nyström discretisation.
    Oracle(RunArgs),
    /// Gap maxima over a list of eps values, with fitted exponents.
    Sweep(RunArgs),
    /// Inclusion integrals of a divergence source and its corrector split.
    Decompose(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Spectrum(_) => "spectrum",
            Command::Oracle(_) => "oracle",
            Command::Sweep(_) => "sweep",
            Command::Decompose(_) => "decompose",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Solve(a)
            | Command::Spectrum(a)
            | Command::Oracle(a)
            | Command::Sweep(a)
            | Command::Decompose(a) => a,
        }
    }
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// TOML config file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub r1: Option<f64>,
    #[arg(long)]
    pub r2: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated eps values for `sweep`.
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Option<Vec<f64>>,
    /// Conductivity of D1: a nonnegative number or `inf`.
    #[arg(long)]
    pub k1: Option<String>,
    #[arg(long)]
    pub k2: Option<String>,
    /// Harmonic polynomial, `disk(cx,cy,r,a)` or `box(xmin,xmax,ymin,ymax,a)`.
    #[arg(long, allow_hyphen_values = true)]
    pub source: Option<String>,
    /// Starting truncation order; for `spectrum`, the number of modes.
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub anchor: Option<String>,
    /// Nyström nodes per circle.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Derivative order (1 or 2) for `sweep`.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// `xmin:xmax:ymin:ymax:res`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

fn kvalue(s: &str) -> KValue {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => KValue::Number(v),
        _ => KValue::Text(s.to_string()),
    }
}

impl RunArgs {
    pub fn to_config(&self) -> RunConfig {
        let mut c = RunConfig::default();
        c.geometry.r1 = self.r1;
        c.geometry.r2 = self.r2;
        c.geometry.eps = self.eps;
        c.geometry.eps_list = self.eps_list.clone();
        c.conductivities.k1 = self.k1.as_deref().map(kvalue);
        c.conductivities.k2 = self.k2.as_deref().map(kvalue);
        c.source = self.source.clone();
        c.solver.nmax = self.nmax;
        c.solver.tol = self.tol;
        c.solver.anchor = self.anchor.clone();
        c.solver.nodes = self.nodes;
        c.solver.order = self.order;
        c.output.path = self.output.clone();
        c.output.format = self.format;
        c.output.grid = self.grid.clone();
        c
    }

    /// File keys, then flags on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        Ok(base.overlay(&self.to_config()))
    }
}

fn geometry(c: &RunConfig) -> Result<DiskPair> {
    let (r1, r2) = c.radii();
    DiskPair::new(r1, r2, c.eps()?)
}

fn solve_tables(c: &RunConfig) -> Result<Vec<Table>> {
    let g = geometry(c)?;
    let (k1, k2) = c.conductivities()?;
    let grid = Grid::parse(
        c.output
            .grid
            .as_deref()
            .ok_or_else(|| Error::Config("solve needs a grid".into()))?,
    )?;
    let sol = solve_field(&g, k1, k2, &c.source_spec()?, &c.solve_options()?)?;
    let rows = grid
        .points()
        .into_par_iter()
        .map(|x| {
            let e = sol.evaluate(x)?;
            let j = e.jet;
            Ok(vec![
                Cell::Num(x.re),
                Cell::Num(x.im),
                Cell::Text(e.zone.as_str().into()),
                Cell::Num(j.value),
                Cell::Num(j.grad[0]),
                Cell::Num(j.grad[1]),
                Cell::Num(j.hess[0]),
                Cell::Num(j.hess[1]),
                Cell::Num(j.hess[2]),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "field",
        &["x", "y", "zone", "u", "ux", "uy", "uxx", "uxy", "uyy"],
    );
    t.rows = rows;
    Ok(vec![t])
}

fn spectrum_tables(c: &RunConfig) -> Result<Vec<Table>> {
    let g = geometry(c)?;
    let count = c.solver.nmax.unwrap_or(DEFAULT_SPECTRUM_MODES);
    if count == 0 {
        return Err(Error::Config("spectrum needs nmax ≥ 1".into()));
    }
    // `nmax` counts listed modes here, so the solve keeps its default start.
    let modes = if c.source.is_some() && c.has_conductivities() {
        let (k1, k2) = c.conductivities()?;
        let mut sc = c.clone();
        sc.solver.nmax = None;
        Some(solve_field(&g, k1, k2, &sc.source_spec()?, &sc.solve_options()?)?.modes)
    } else {
        None
    };
    let mut t = Table::new(
        "spectrum",
        &[
            "n",
            "parity",
            "eigenvalue",
            "mode_norm",
            "C+",
            "C-",
            "a+",
            "a-",
        ],
    );
    for n in 1..=count as i64 {
        for parity in [Parity::Plus, Parity::Minus] {
            let m = SpectralMode::new(&g, n, parity)?;
            let i = n as usize - 1;
            let pick = |v: &Vec<C64>, want: Parity, scale: f64| match &modes {
                Some(_) if parity == want && i < v.len() => Cell::Complex(v[i] * scale),
                _ => Cell::Empty,
            };
            // Stored C is scaled by n/(8π); print the raw mode data.
            let unscale = 8.0 * std::f64::consts::PI / n as f64;
            let (cp, cm, ap, am) = match &modes {
                Some(md) => (
                    pick(&md.c_plus, Parity::Plus, unscale),
                    pick(&md.c_minus, Parity::Minus, unscale),
                    pick(&md.a_plus, Parity::Plus, 1.0),
                    pick(&md.a_minus, Parity::Minus, 1.0),
                ),
                None => (Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty),
            };
            t.push(vec![
                Cell::Int(n),
                Cell::Text(parity.symbol().into()),
                Cell::Num(m.eigenvalue_twodisks),
                Cell::Num(mode_norm(&g, n, parity)?),
                cp,
                cm,
                ap,
                am,
            ]);
        }
    }
    Ok(vec![t])
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in a box around both disks, at least `ORACLE_CLEARANCE`
/// from either circle.
pub fn oracle_points(g: &DiskPair, count: usize) -> Vec<C64> {
    let x0 = (g.c1 - g.r1).min(g.c2 - g.r2) - 1.0;
    let x1 = (g.c1 + g.r1).max(g.c2 + g.r2) + 1.0;
    let h = g.r1.max(g.r2) + 1.0;
    (1..)
        .map(|i| {
            C64::new(
                x0 + (x1 - x0) * radical_inverse(i, 2),
                h * (2.0 * radical_inverse(i, 3) - 1.0),
            )
        })
        .filter(|&x| {
            (1..=2).all(|j| ((x - g.center(j)).norm() - g.radius(j)).abs() >= ORACLE_CLEARANCE)
        })
        .take(count)
        .collect()
}

fn oracle_tables(c: &RunConfig) -> Result<Vec<Table>> {
    let g = geometry(c)?;
    let (k1, k2) = c.conductivities()?;
    let src = c.source_spec()?;
    let SourceSpec::HarmonicBackground(h) = &src else {
        return Err(Error::Config(
            "oracle compares harmonic-background problems only".into(),
        ));
    };
    let nodes = c.solver.nodes.unwrap_or(DEFAULT_NODES);
    let sol = solve_field(&g, k1, k2, &src, &c.solve_options()?)?;
    let sys = NystromSystem::assemble(&g, nodes, NodeLayout::Bipolar)?;
    let eta = normal_data(&sys, |x| h.jet(x).grad);
    let phi = oracle_solve(&sys, lambdas(k1, k2)?, &eta)?;
    let field = OracleField::new(&sys, &phi)?;

    let pts = oracle_points(&g, ORACLE_POINTS);
    let pairs = pts
        .par_iter()
        .map(|&x| {
            let o = h.jet(x).value + field.eval(x).jet.value;
            Ok((o, sol.evaluate(x)?.jet.value))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs = pairs.iter().fold(0.0_f64, |m, (o, s)| m.max((o - s).abs()));
    let scale = pairs.iter().fold(0.0_f64, |m, (o, _)| m.max(o.abs()));
    let residual = symmetrization_residual(&sys);

    let mut summary = Table::new("summary", &["quantity", "value"]);
    summary.push(vec![
        Cell::Text("max_rel_error".into()),
        Cell::Num(max_abs / scale),
    ]);
    summary.push(vec![Cell::Text("max_abs_error".into()), Cell::Num(max_abs)]);
    summary.push(vec![
        Cell::Text("symmetrization_residual".into()),
        Cell::Num(residual),
    ]);
    summary.push(vec![
        Cell::Text("points".into()),
        Cell::Int(pts.len() as i64),
    ]);
    summary.push(vec![
        Cell::Text("nodes_per_circle".into()),
        Cell::Int(nodes as i64),
    ]);

    let count = c
        .solver
        .nmax
        .unwrap_or(DEFAULT_SPECTRUM_MODES)
        .min(nodes / 4);
    let clusters = oracle_spectrum(&sys, 2 * sys.len(), 1e-9);
    let mut eig = Table::new(
        "eigenvalues",
        &["n", "parity", "closed_form", "nystrom", "abs_error"],
    );
    for n in 1..=count as i64 {
        for parity in [Parity::Plus, Parity::Minus] {
            let exact = SpectralMode::new(&g, n, parity)?.eigenvalue_twodisks;
            let near = clusters
                .iter()
                .map(|cl| cl.value)
                .min_by(|a, b| (a - exact).norm().total_cmp(&(b - exact).norm()))
                .unwrap_or(C64::new(f64::NAN, 0.0));
            eig.push(vec![
                Cell::Int(n),
                Cell::Text(parity.symbol().into()),
                Cell::Num(exact),
                Cell::Num(near.re),
                Cell::Num((near - exact).norm()),
            ]);
        }
    }
    Ok(vec![summary, eig])
}

fn opt_fit(fit: Result<(f64, f64)>) -> [Cell; 2] {
    match fit {
        Ok((s, r2)) => [Cell::Num(s), Cell::Num(r2)],
        Err(_) => [Cell::Empty, Cell::Empty],
    }
}

fn sweep_tables(c: &RunConfig) -> Result<Vec<Table>> {
    let (r1, r2) = c.radii();
    let (k1, k2) = c.conductivities()?;
    let order = c.solver.order.unwrap_or(1);
    if !(1..=2).contains(&order) {
        return Err(Error::Config(format!("order must be 1 or 2, got {order}")));
    }
    let eps_list = c.eps_list()?;
    let t = SweepTemplate {
        r1,
        r2,
        k1,
        k2,
        source: c.source_spec()?,
        order,
        options: c.solve_options()?,
    };
    let records = sweep(&t, &eps_list);

    let mut rec = Table::new(
        "records",
        &[
            "eps",
            "rho",
            "r_star",
            "lambda1",
            "lambda2",
            "order",
            "gap_max",
            "bound_value",
            "grad_max",
            "hess_max",
            "n_modes",
            "error",
        ],
    );
    for r in &records {
        rec.push(vec![
            Cell::Num(r.eps),
            Cell::Num(r.rho),
            Cell::Num(r.r_star),
            Cell::Num(r.lambda1),
            Cell::Num(r.lambda2),
            Cell::Int(r.order as i64),
            Cell::Num(r.gap_max),
            Cell::Num(r.bound_value),
            Cell::Num(r.norms[0]),
            Cell::Num(r.norms[1]),
            Cell::Int(r.n_modes as i64),
            r.error
                .clone()
                .map_or(Cell::Empty, |e| Cell::Text(e.replace(',', ";"))),
        ]);
    }

    let ok: Vec<&SweepRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let mut fit = Table::new("fit", &["quantity", "slope", "r2"]);
    let [s, r] = opt_fit(fit_exponent(&records));
    fit.push(vec![Cell::Text("gap_max".into()), s, r]);
    for (i, name) in ["grad_max", "hess_max"].into_iter().enumerate() {
        let pts: Vec<(f64, f64)> = ok.iter().map(|r| (r.eps, r.norms[i])).collect();
        let [s, r] = opt_fit(fit_loglog(&pts));
        fit.push(vec![Cell::Text(name.into()), s, r]);
    }

    let mut ratios = Table::new("bound_ratio", &["eps", "ratio"]);
    for (r, q) in ok.iter().zip(bound_ratio(&records, order)?) {
        ratios.push(vec![Cell::Num(r.eps), Cell::Num(q)]);
    }
    Ok(vec![rec, fit, ratios])
}

fn decompose_tables(c: &RunConfig) -> Result<Vec<Table>> {
    let g = geometry(c)?;
    let (k1, k2) = c.conductivities()?;
    let src: Arc<dyn SourceModel> = match c.source_spec()? {
        SourceSpec::DivergenceSource(s) => s,
        SourceSpec::HarmonicBackground(_) => {
            return Err(Error::Config(
                "decompose needs a divergence source (disk or box)".into(),
            ))
        }
    };
    let d = source_decompose(&g, [k1, k2], src.as_ref())?;
    let mut t = Table::new(
        "decomposition",
        &["side", "w", "corrector_integral", "residual_integral"],
    );
    for side in 0..2 {
        t.push(vec![
            Cell::Int(side as i64 + 1),
            Cell::Num(d.weights[side]),
            d.correctors[side]
                .as_ref()
                .map_or(Cell::Empty, |cr| Cell::Num(corrector_integral(cr))),
            Cell::Num(d.residual_integrals[side]),
        ]);
    }
    Ok(vec![t])
}

/// Runs one subcommand, returning its tables and output format.
pub fn execute(cmd: &Command) -> Result<(Vec<Table>, RunConfig)> {
    let c = cmd.args().resolve()?;
    let tables = match cmd {
        Command::Solve(_) => solve_tables(&c)?,
        Command::Spectrum(_) => spectrum_tables(&c)?,
        Command::Oracle(_) => oracle_tables(&c)?,
        Command::Sweep(_) => sweep_tables(&c)?,
        Command::Decompose(_) => decompose_tables(&c)?,
    };
    Ok((tables, c))
}

fn destination(cmd: &Command, c: &RunConfig) -> Option<PathBuf> {
    let dir = std::env::var_os("NP_DUET_OUT").map(PathBuf::from);
    let default_name = || PathBuf::from(format!("{}.{}", cmd.name(), c.format().extension()));
    match (&c.output.path, dir) {
        (Some(p), Some(d)) => Some(d.join(p.file_name().map_or_else(default_name, PathBuf::from))),
        (Some(p), None) => Some(p.clone()),
        (None, Some(d)) => Some(d.join(default_name())),
        (None, None) => None,
    }
}

/// Parses `argv` (program name first), runs, and returns the exit code:
/// 0 on success, 1 for invalid input, 2 for numerical failures.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    let (tables, c) = match execute(&cli.command) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let written = match destination(&cli.command, &c) {
        Some(path) => std::fs::File::create(&path)
            .and_then(|f| {
                let mut w = std::io::BufWriter::new(f);
                write_tables(&mut w, &tables, c.format())?;
                w.flush()
            })
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => write_tables(stdout, &tables, c.format()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => 0,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            1
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = run_with(argv, &mut out, &mut std::io::stderr());
    let _ = out.flush();
    code
}

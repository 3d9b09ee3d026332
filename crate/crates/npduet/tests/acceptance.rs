use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use npduet::analysis::{bound_ratio, fit_loglog, sweep, SweepRecord, SweepTemplate};
use npduet::bie_oracle::{
    intertwining_residual, lambdas, normal_data, oracle_solve, oracle_solve_full, pulled_back_mode,
    symmetrization_residual, unitarity_defect, unitary_inverse, NodeLayout, NystromSystem,
    OracleField,
};
use npduet::cli::oracle_points;
use npduet::geometry::{DiskPair, Zone};
use npduet::harmonic_data::source::{HarmonicPoly, SourceModel, SourceSpec, UniformDisk};
use npduet::harmonic_data::{corrector::Corrector, corrector_integral, inverse_conductivities};
use npduet::layer::Jet;
use npduet::np_spectrum::Conductivity;
use npduet::spectral_solver::{solve_field, FieldSolution, SolveOptions};

const SWEEP_EPS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn standard() -> DiskPair {
    DiskPair::new(1.2, 0.8, 0.05).unwrap()
}

fn finite(k: f64) -> Conductivity {
    Conductivity::Finite(k)
}

fn solve_x(g: &DiskPair, k1: Conductivity, k2: Conductivity) -> FieldSolution {
    solve_field(
        g,
        k1,
        k2,
        &SourceSpec::HarmonicBackground(HarmonicPoly::x()),
        &SolveOptions::default(),
    )
    .unwrap()
}

fn boundary_distance(g: &DiskPair, x: C64) -> f64 {
    (1..=2)
        .map(|j| ((x - g.center(j)).norm() - g.radius(j)).abs())
        .fold(f64::MAX, f64::min)
}

fn exterior_points(g: &DiskPair, count: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let x = C64::new(rng.random_range(-4.0..3.0), rng.random_range(-2.5..2.5));
        if g.zone_at(x) == Zone::Annulus && boundary_distance(g, x) >= 0.05 {
            out.push(x);
        }
    }
    out
}

fn sweep_x(k1: Conductivity, k2: Conductivity, order: u32) -> Vec<SweepRecord> {
    let t = SweepTemplate {
        r1: 1.0,
        r2: 1.0,
        k1,
        k2,
        source: SourceSpec::HarmonicBackground(HarmonicPoly::x()),
        order,
        options: SolveOptions::default(),
    };
    let recs = sweep(&t, &SWEEP_EPS);
    for r in &recs {
        if let Some(e) = &r.error {
            panic!("sweep failed at eps {}: {e}", r.eps);
        }
    }
    recs
}

fn slope(recs: &[SweepRecord], order: usize) -> f64 {
    let pts: Vec<(f64, f64)> = recs.iter().map(|r| (r.eps, r.norms[order - 1])).collect();
    fit_loglog(&pts).unwrap().0
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::MIN, f64::max);
    let lo = v.iter().copied().fold(f64::MAX, f64::min);
    hi / lo
}

fn spectrum_match() -> Outcome {
    let g = standard();
    let sys = NystromSystem::assemble(&g, 256, NodeLayout::Bipolar).unwrap();
    let ev = sys.k_matrix().complex_eigenvalues();
    let count = |target: f64| ev.iter().filter(|e| (*e - target).norm() < 1e-8).count();
    let mut bad = Vec::new();
    for n in 1..=8 {
        for s in [-1.0, 1.0] {
            let target = s * 0.5 * g.rho.powi(n);
            if count(target) != 2 {
                bad.push(format!("{target:+.6} x{}", count(target)));
            }
        }
    }
    if count(0.5) != 2 {
        bad.push(format!("0.5 x{}", count(0.5)));
    }
    let detail = if bad.is_empty() {
        "all 16 values ∓ρⁿ/2 and 1/2 found twice within 1e-8".to_string()
    } else {
        format!("mismatched: {}", bad.join(", "))
    };
    outcome(bad.is_empty(), detail)
}

fn cross_validation() -> Outcome {
    let g = standard();
    let (k1, k2) = (finite(5.0), finite(10.0));
    let sol = solve_x(&g, k1, k2);
    let sys = NystromSystem::assemble(&g, 256, NodeLayout::Bipolar).unwrap();
    let eta = normal_data(&sys, |_| [1.0, 0.0]);
    let phi = oracle_solve(&sys, lambdas(k1, k2).unwrap(), &eta).unwrap();
    let field = OracleField::new(&sys, &phi).unwrap();
    let pts = oracle_points(&g, 50);
    let (mut diff, mut scale) = (0.0_f64, 0.0_f64);
    for &x in &pts {
        let o = x.re + field.eval(x).jet.value;
        diff = diff.max((o - sol.evaluate(x).unwrap().jet.value).abs());
        scale = scale.max(o.abs());
    }
    let rel = diff / scale;
    outcome(
        rel < 1e-8,
        format!(
            "max relative error {rel:.3e} over {} points (< 1e-8)",
            pts.len()
        ),
    )
}

fn same_sign_blow_up() -> Outcome {
    let recs = sweep_x(Conductivity::Infinite, Conductivity::Infinite, 1);
    let s = slope(&recs, 1);
    outcome(
        (s + 0.5).abs() <= 0.05,
        format!("gap-max |∇u| slope {s:.5} (target -0.5 ± 0.05)"),
    )
}

fn opposite_sign() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, k1, k2) in [
        ("k1=0,k2=inf", finite(0.0), Conductivity::Infinite),
        ("k1=inf,k2=0", Conductivity::Infinite, finite(0.0)),
    ] {
        let recs = sweep_x(k1, k2, 2);
        let grads: Vec<f64> = recs.iter().map(|r| r.norms[0]).collect();
        let var = spread(&grads);
        let s = slope(&recs, 2);
        pass &= var < 2.0 && (s + 0.5).abs() <= 0.05;
        parts.push(format!(
            "{label}: |∇u| max/min {var:.3} (< 2), |∇²u| slope {s:.4} (target -0.5 ± 0.05)"
        ));
    }
    outcome(pass, parts.join("; "))
}

fn bound_ratios() -> Outcome {
    let same = bound_ratio(
        &sweep_x(Conductivity::Infinite, Conductivity::Infinite, 1),
        1,
    )
    .unwrap();
    let opp = bound_ratio(&sweep_x(finite(0.0), Conductivity::Infinite, 2), 2).unwrap();
    let (a, b) = (spread(&same), spread(&opp));
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|r| format!("{r:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outcome(
        a <= 5.0 && b <= 5.0,
        format!(
            "same-sign n=1 ratios [{}] spread {a:.3}; opposite-sign n=2 ratios [{}] spread {b:.3e} (band 5)",
            fmt(&same),
            fmt(&opp)
        ),
    )
}

fn structural_identities() -> Outcome {
    let g = standard();
    let n = 256;
    let two = NystromSystem::assemble(&g, n, NodeLayout::Bipolar).unwrap();
    let conc = NystromSystem::concentric(&g, n).unwrap();
    let sym = symmetrization_residual(&two);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut random_pair = || {
        let mut one = || {
            let c: Vec<[f64; 2]> = (0..16)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                .collect();
            let fstar: Vec<f64> = (0..two.len())
                .map(|i| {
                    let a = two.params[i];
                    let off = if i < n { 0 } else { 8 };
                    (1..=8)
                        .map(|m| {
                            c[off + m - 1][0] * (m as f64 * a).cos()
                                + c[off + m - 1][1] * (m as f64 * a).sin()
                        })
                        .sum()
                })
                .collect();
            unitary_inverse(&g, &two, &fstar)
        };
        (one(), one())
    };
    let unit = (0..10)
        .map(|_| {
            let (phi, psi) = random_pair();
            unitarity_defect(&g, &two, &conc, &phi, &psi)
        })
        .fold(0.0_f64, f64::max);
    let inter = (1..=5)
        .flat_map(|m| [1.0, -1.0].map(|s| (m, s)))
        .map(|(m, s)| intertwining_residual(&g, &two, &conc, &pulled_back_mode(&g, &two, m, s)))
        .fold(0.0_f64, f64::max);
    outcome(
        sym < 1e-8 && unit < 1e-9 && inter < 1e-8,
        format!("symmetrization {sym:.3e} (< 1e-8), unitarity {unit:.3e} (< 1e-9), intertwining {inter:.3e} (< 1e-8)"),
    )
}

/// Fourth-order mixed partials ∂y(ux) and ∂x(uy) by Richardson extrapolation.
fn mixed_partials(sol: &FieldSolution, x: C64, h: f64) -> (f64, f64) {
    let grad = |d: C64| sol.evaluate(x + d).unwrap().jet.grad;
    let at = |h: f64| {
        let dy = (grad(C64::new(0.0, h))[0] - grad(C64::new(0.0, -h))[0]) / (2.0 * h);
        let dx = (grad(C64::new(h, 0.0))[1] - grad(C64::new(-h, 0.0))[1]) / (2.0 * h);
        (dy, dx)
    };
    let (a, b) = (at(h), at(h / 2.0));
    ((4.0 * b.0 - a.0) / 3.0, (4.0 * b.1 - a.1) / 3.0)
}

fn regularity() -> Outcome {
    let g = standard();
    let k = [5.0, 10.0];
    let sol = solve_x(&g, finite(k[0]), finite(k[1]));
    let dn = |j: Jet, nu: C64| j.grad[0] * nu.re + j.grad[1] * nu.im;
    let (mut jump, mut flux) = (0.0_f64, 0.0_f64);
    for side in 1..=2 {
        let (c, r) = (g.center(side), g.radius(side));
        let h = 1e-5 * r;
        for i in 0..64 {
            let nu = C64::from_polar(1.0, 2.0 * PI * (i as f64 + 0.5) / 64.0);
            let at = |t: f64| sol.evaluate(c + (r + t) * nu).unwrap().jet;
            let inner = sol.evaluate(c + r * (1.0 - 1e-15) * nu).unwrap().jet;
            jump = jump.max((at(0.0).value - inner.value).abs());
            let fo = 2.0 * dn(at(h), nu) - dn(at(2.0 * h), nu);
            let fi = 2.0 * dn(at(-h), nu) - dn(at(-2.0 * h), nu);
            flux = flux.max((fo - k[side - 1] * fi).abs() / fo.abs().max(1.0));
        }
    }
    let (mut grad_err, mut sym, mut lap) = (0.0_f64, 0.0_f64, 0.0_f64);
    let h = 1e-5;
    for x in exterior_points(&g, 40, 11) {
        let j = sol.evaluate(x).unwrap().jet;
        let val = |d: C64| sol.evaluate(x + d).unwrap().jet.value;
        let gx = (val(C64::new(h, 0.0)) - val(C64::new(-h, 0.0))) / (2.0 * h);
        let gy = (val(C64::new(0.0, h)) - val(C64::new(0.0, -h))) / (2.0 * h);
        let scale = j.grad_norm().max(1e-3);
        grad_err = grad_err.max((gx - j.grad[0]).abs().max((gy - j.grad[1]).abs()) / scale);
        let (dy, dx) = mixed_partials(&sol, x, 1e-3);
        sym = sym.max((dy - dx).abs() / j.hess_frobenius().max(1.0));
        let v = sol.perturbation(x).unwrap().jet;
        lap = lap.max((v.hess[0] + v.hess[2]).abs() / v.hess_frobenius().max(1.0));
    }
    outcome(
        jump < 1e-8 && flux < 1e-6 && grad_err < 1e-6 && sym < 1e-10 && lap < 1e-7,
        format!(
            "jump {jump:.2e} (< 1e-8), flux {flux:.2e} (< 1e-6), gradient vs FD {grad_err:.2e} (< 1e-6), \
             Hessian symmetry {sym:.2e} (< 1e-10), Δ(u−F) {lap:.2e} (< 1e-7)"
        ),
    )
}

fn decomposition() -> Outcome {
    let g = standard();
    let (k1, k2) = (finite(5.0), finite(10.0));
    let unit = corrector_integral(&Corrector::new(&g, 1, k1).unwrap());
    let src = UniformDisk::new(g.center(1) + C64::new(-0.2, 0.3), 0.4, 1.0).unwrap();
    let inv_k = inverse_conductivities([k1, k2]).unwrap();
    let potential = |x: C64| src.closed_form_potential(&g, inv_k, x).unwrap();
    let sys = NystromSystem::assemble(&g, 256, NodeLayout::Bipolar).unwrap();
    let eta = normal_data(&sys, |x| potential(x).grad);
    let phi = oracle_solve_full(&sys, lambdas(k1, k2).unwrap(), &eta).unwrap();
    let field = OracleField::new(&sys, &phi).unwrap();
    let source = SourceSpec::DivergenceSource(Arc::new(src));
    let sol = solve_field(&g, k1, k2, &source, &SolveOptions::default()).unwrap();
    let diffs: Vec<f64> = exterior_points(&g, 25, 5)
        .into_iter()
        .map(|x| {
            sol.evaluate(x).unwrap().jet.value - (potential(x).value + field.eval(x).jet.value)
        })
        .collect();
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let dev = diffs.iter().fold(0.0_f64, |m, d| m.max((d - mean).abs()));
    outcome(
        (unit - 1.0).abs() < 1e-8 && dev < 1e-6,
        format!(
            "∫∇·v₁ − 1 = {:.2e} (< 1e-8), oracle agreement modulo a constant {dev:.2e} at 25 points (< 1e-6)",
            unit - 1.0
        ),
    )
}

fn geometry_asymptotics() -> Outcome {
    let mut worst = 0.0_f64;
    let mut tails = Vec::new();
    for (r1, r2) in [(1.0, 1.0), (1.2, 0.8), (0.5, 2.0)] {
        let q: Vec<f64> = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
            .iter()
            .map(|&eps| {
                let g = DiskPair::new(r1, r2, eps).unwrap();
                (g.rho - (1.0 - g.r_star * eps.sqrt())).abs() / eps
            })
            .collect();
        worst = worst.max(q.iter().copied().fold(0.0, f64::max));
        tails.push((q[4] - q[3]).abs() / q[4]);
    }
    let drift = tails.iter().copied().fold(0.0, f64::max);
    outcome(
        worst < 10.0 && drift < 0.05,
        format!("max |ρ − (1 − r*√ε)|/ε = {worst:.4} (< 10), last-decade drift {drift:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("spectrum match", spectrum_match),
        ("cross-validation", cross_validation),
        ("same-sign blow-up", same_sign_blow_up),
        (
            "opposite-sign boundedness and Hessian blow-up",
            opposite_sign,
        ),
        ("bound ratios", bound_ratios),
        ("structural identities", structural_identities),
        ("transmission and regularity", regularity),
        ("decomposition", decomposition),
        ("geometry asymptotics", geometry_asymptotics),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {name}: {} [{:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

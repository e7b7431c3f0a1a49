//! The acceptance criteria for the Gamma-function example, runnable from tests and the CLI.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Rational;
use serde::Serialize;

use crate::betti::{dft_cycles, gamma_cycles, h_factor, local_model_integral, TraceConfig};
use crate::derham::*;
use crate::error::Result;
use crate::gamma;
use crate::gevrey::{check_asymptotic, formal_borel, GevreySeries};
use crate::lattice::*;
use crate::poly::Poly;
use crate::scalar::{factorial, ComplexScalar};
use crate::stokes::{comparison_check, cycle_integral, prepare, stokes_factor, xi_matrix};
use crate::summation::{borel_sum, locate_borel_singularities, BorelFunction};

/// Inputs shared by every criterion.
#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub lambda: f64,
    pub seed: u64,
    pub prec: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { lambda: 1.0, seed: 0, prec: 256 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: f64,
}

type Check = fn(&Params) -> Result<(bool, String)>;

/// `(id, name, runtime budget, check)` in criterion order.
pub const CRITERIA: [(u32, &str, u64, Check); 12] = [
    (1, "stirling coefficients", 1, stirling),
    (2, "borel summability", 30, summability),
    (3, "stokes factor 1-u", 60, stokes_factor_gamma),
    (4, "reduction oracle", 10, reduction_oracle),
    (5, "local normalizer", 5, local_normalizer),
    (6, "rank identity", 5, rank_identity),
    (7, "generic directions", 1, generic_directions),
    (8, "thimble integral", 60, thimble_integral),
    (9, "comparison diagram", 30, comparison),
    (10, "neumann gluing", 1, neumann),
    (11, "asymptotic checker", 5, asymptotic_checker),
    (12, "borel singularities", 10, singularities),
];

/// Runs the criteria whose id passes `select`.
pub fn run(p: &Params, select: impl Fn(u32) -> bool) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .filter(|c| select(c.0))
        .map(|&(id, name, budget, check)| {
            let t = Instant::now();
            let r = check(p);
            let el = t.elapsed();
            let (ok, detail) = match r {
                Ok(v) => v,
                Err(e) => (false, format!("error: {e}")),
            };
            let within = el <= Duration::from_secs(budget);
            let detail = if ok && !within { format!("{detail}; over the {budget} s budget") } else { detail };
            Outcome { id, name, pass: ok && within, detail, seconds: el.as_secs_f64(), budget_seconds: budget as f64 }
        })
        .collect()
}

fn lam(p: &Params) -> Complex64 {
    Complex64::new(p.lambda, 0.0)
}

fn setup(p: &Params) -> Result<(OneForm, PeriodLattice, CriticalData)> {
    let f = gamma_form(&ComplexScalar::from_f64(p.lambda, 0.0, p.prec))?;
    let pl = period_lattice(&f)?;
    let cd = critical_values(&f, &pl.lattice, None, &[])?;
    Ok((f, pl, cd))
}

/// Twenty points with `|z| ∈ [0.05, 0.5]·λ` and `|arg z| ≤ 1`.
pub fn summability_grid(lambda: f64) -> Vec<Complex64> {
    let mut g = Vec::new();
    for r in [0.05, 0.2, 0.35, 0.5] {
        for a in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            g.push(Complex64::from_polar(r * lambda, a));
        }
    }
    g
}

const STIRLING: [f64; 4] = [1.0, -1.0 / 12.0, 1.0 / 288.0, 139.0 / 51840.0];

fn stirling(p: &Params) -> Result<(bool, String)> {
    let r = stirling_check(&ComplexScalar::from_f64(p.lambda, 0.0, p.prec), 12)?;
    let mut worst: f64 = 0.0;
    for (n, want) in STIRLING.iter().enumerate() {
        // The table is in z/λ, with the overall factor λ^{−1/2}.
        let want = want * p.lambda.powi(-(n as i32)) / p.lambda.sqrt();
        worst = worst.max((r.formal_xi[n] - want).norm() / want.abs());
    }
    Ok((worst <= 1e-12 && r.pass, format!("table gap {worst:.2e}, exp(-b) gap {:.2e} through order 12", r.max_rel_gap)))
}

fn summability(p: &Params) -> Result<(bool, String)> {
    let (f, _, _) = setup(p)?;
    let xi = formal_xi(&FormRep::dx_over_x(p.prec), &f, 0, 40)?;
    let grid = summability_grid(p.lambda);
    let s = borel_sum(&xi.g[0].reflect(), 0.0, &grid)?;
    let worst = s.points.iter().map(|(z, v)| {
        let want = gamma::xi_closed(lam(p), *z);
        (v - want).norm() / want.norm()
    });
    let worst = worst.fold(0.0, f64::max);
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e} on {} points", grid.len())))
}

fn overlap(center: f64, lambda: f64) -> Vec<Complex64> {
    let mut g = Vec::new();
    for i in 0..5 {
        for k in 0..5 {
            g.push(Complex64::from_polar((0.3 + 0.3 * i as f64) * lambda, center - 0.5 + 0.25 * k as f64));
        }
    }
    g
}

fn stokes_factor_gamma(p: &Params) -> Result<(bool, String)> {
    let (f, pl, cd) = setup(p)?;
    let reps = [FormRep::dx_over_x(p.prec)];
    let cfg = TraceConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    // The lattice generator is μ = −2πiλ, so u = e^{−2πiλ/z} is γ = 1.
    for (center, before, after, gamma, label) in [
        (FRAC_PI_2, FRAC_PI_2 - 0.6, FRAC_PI_2 + 0.6, 1i64, "1 - e^(-2πiλ/z) across π/2"),
        (-FRAC_PI_2, -FRAC_PI_2 + 0.6, 1.5 * PI - 0.6, -1, "1 - e^(2πiλ/z) across -π/2"),
    ] {
        let g = overlap(center, p.lambda);
        let a = xi_matrix(&f, &cd, &pl.lattice, before, &g, &reps, &cfg, 10)?;
        let b = xi_matrix(&f, &cd, &pl.lattice, after, &g, &reps, &cfg, 10)?;
        let s = stokes_factor(&a, &b, &pl.lattice, 3.0, 1e-6)?;
        let e = &s.entries[0][0];
        let one = e.terms.get(&vec![0]).copied().unwrap_or_default();
        let u = e.terms.get(&vec![gamma]).copied().unwrap_or_default();
        let gap = (one - 1.0).norm().max((u + 1.0).norm());
        let good = e.terms.len() == 2 && gap <= 1e-6 && s.fit_residual <= 1e-6;
        ok &= good;
        parts.push(format!("{label}: coefficient gap {gap:.1e}, residual {:.1e}", s.fit_residual));
    }
    Ok((ok, parts.join("; ")))
}

/// Rewrites `u^N du → −z(N−m)u^{N−m−1}du` term by term until every power is below `m`.
pub fn reduce_by_rewriting(a: &[Rational], m: usize, zorder: usize) -> Vec<Vec<Rational>> {
    let mut state: Vec<Vec<Rational>> = a.iter().map(|c| vec![c.clone()]).collect();
    if state.len() < m {
        state.resize(m, vec![]);
    }
    for big_n in (m..state.len()).rev() {
        let poly = std::mem::take(&mut state[big_n]);
        if big_n == m || poly.iter().all(|c| *c == 0) {
            continue;
        }
        let t = &mut state[big_n - m - 1];
        if t.len() < poly.len() + 1 {
            t.resize(poly.len() + 1, Rational::new());
        }
        for (i, c) in poly.iter().enumerate() {
            t[i + 1] -= Rational::from(c * Rational::from((big_n - m) as u64));
        }
    }
    (0..m)
        .map(|k| {
            let mut v = std::mem::take(&mut state[k]);
            v.resize(zorder + 1, Rational::new());
            v
        })
        .collect()
}

fn reduction_oracle(p: &Params) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let m = rng.gen_range(1..=4usize);
        let order = rng.gen_range(1..=40usize);
        let len = (m + 1) * order + m;
        let a: Vec<Rational> = (0..len).map(|_| Rational::from((rng.gen_range(-9i64..=9), rng.gen_range(1u64..=9)))).collect();
        let want = reduce_by_rewriting(&a, m, order);
        let s = GevreySeries::new(a.iter().map(|q| ComplexScalar::from_rational(q, p.prec)).collect());
        let xi = formal_xi_from_local(&s, m, order)?;
        for (k, row) in want.iter().enumerate() {
            for (n, w) in row.iter().enumerate() {
                let got = xi.g[k].coeff(n).to_c64();
                let w = w.to_f64();
                let scale = w.abs().max(1e-300);
                worst = worst.max(if w == 0.0 { got.norm() } else { (got - w).norm() / scale });
            }
        }
    }
    Ok((worst <= 1e-12, format!("max relative gap {worst:.2e} over 50 instances")))
}

fn local_normalizer(_: &Params) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let c = &dft_cycles(0, 1, 0.0)[0];
    for r in [0.1, 0.3, 1.0] {
        let z = Complex64::new(r, 0.0);
        let closed = (TAU * z).sqrt();
        let h = h_factor(1, 0, z, 0.0);
        let q = local_model_integral(1, 0, c, z, 1e-13);
        worst = worst.max((q - closed).norm() / closed.norm()).max((h - closed).norm() / closed.norm());
    }
    Ok((worst <= 1e-8, format!("max relative gap {worst:.2e}")))
}

fn rank_identity(p: &Params) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut done = 0;
    let mut bad = 0;
    while done < 100 {
        let (np, nq) = (rng.gen_range(0..5usize), rng.gen_range(0..5usize));
        let mut poly = |n: usize| {
            let c: Vec<Complex64> = (0..=n).map(|_| Complex64::new(rng.gen_range(-3i32..=3) as f64, rng.gen_range(-3i32..=3) as f64)).collect();
            Poly::from_c64(&c, p.prec)
        };
        let (a, b) = (poly(np), poly(nq));
        if let Ok(f) = analyze(&a, &b) {
            done += 1;
            if f.degree_sum() != -2 {
                bad += 1;
            }
        }
    }
    Ok((bad == 0, format!("{bad} of 100 forms violate Σm - Σn = -2")))
}

fn generic_directions(p: &Params) -> Result<(bool, String)> {
    let (_, pl, cd) = setup(p)?;
    let dirs = non_generic_directions(&cd.c_f, &pl.lattice, 20.0 * PI)?;
    let ok = dirs.len() == 2 && (dirs[0] - FRAC_PI_2).abs() <= 1e-12 && (dirs[1] - 1.5 * PI).abs() <= 1e-12;
    Ok((ok, format!("non-generic directions {dirs:?}")))
}

fn thimble_integral(p: &Params) -> Result<(bool, String)> {
    let (f, pl, cd) = setup(p)?;
    let g = gamma_cycles(&f, &cd, &pl.lattice, 0, 0.0, &TraceConfig::default())?;
    let w = FormRep::dx_over_x(p.prec);
    let prep: Vec<_> = g.halves.iter().map(|h| prepare(&f, h, &w)).collect();
    let c = gamma::critical_value(lam(p));
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let z = Complex64::from_polar((0.05 + 0.1 * i as f64) * p.lambda, 0.9 * ((i % 5) as f64 - 2.0) / 2.0);
        let v = cycle_integral(&prep, &g.cycles[0], z)? * (-c / z).exp();
        let want = gamma::thimble_integral(lam(p), z);
        worst = worst.max((v - want).norm() / want.norm());
    }
    Ok((worst <= 1e-6, format!("max relative error {worst:.2e} at 10 points")))
}

fn comparison(p: &Params) -> Result<(bool, String)> {
    let (f, pl, cd) = setup(p)?;
    let reps = [FormRep::dx_over_x(p.prec)];
    let grid = summability_grid(p.lambda);
    let r = comparison_check(&f, &cd, &pl.lattice, 0.0, &grid, &reps, &TraceConfig::default(), 40, &Default::default())?;
    Ok((r.max_discrepancy <= 1e-6, format!("max discrepancy {:.2e} on {} points", r.max_discrepancy, r.points)))
}

fn neumann(p: &Params) -> Result<(bool, String)> {
    let lat = Lattice::unit(vec![Complex64::new(0.0, -TAU * p.lambda)]);
    let arc = (FRAC_PI_2 - 0.3, FRAC_PI_2 + 0.3);
    let trunc = Truncation::LatticeNorm(6.0);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut check = |psi: &ExpMatrix, g: &ExpVector| -> Result<()> {
        let r = neumann_solve(psi, g, &lat, None, arc, &trunc)?;
        let res = vector_norm(&r.residual, &lat, 0.5)?;
        let tail = vector_norm(&r.discarded, &lat, 0.5)?;
        ok &= res <= tail * (1.0 + 1e-12) + 1e-300;
        worst = worst.max(if tail > 0.0 { res / tail } else { res });
        Ok(())
    };
    let psi = ExpMatrix { entries: vec![vec![ExpSum::monomial(vec![1], Complex64::new(0.5, 0.0))]] };
    check(&psi, &vec![ExpSum::constant(1, Complex64::new(1.0, 0.0))])?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut cplx = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    for _ in 0..20 {
        let mut m = ExpMatrix::zero(2);
        for i in 0..2 {
            for j in 0..2 {
                let mut e = ExpSum::default();
                e.add_term(vec![1], 0.5 * cplx());
                e.add_term(vec![2], 0.25 * cplx());
                m.entries[i][j] = e;
            }
        }
        check(&m, &vec![ExpSum::constant(1, cplx()), ExpSum::constant(1, cplx())])?;
    }
    Ok((ok, format!("largest residual/tail ratio {worst:.3}")))
}

fn euler(n: usize, prec: u32) -> GevreySeries {
    GevreySeries::new(
        (0..=n)
            .map(|k| {
                let f = ComplexScalar::from_real(factorial(k as u32, prec));
                if k % 2 == 1 {
                    -f
                } else {
                    f
                }
            })
            .collect(),
    )
}

fn asymptotic_checker(p: &Params) -> Result<(bool, String)> {
    let s = euler(12, p.prec);
    let grid: Vec<Complex64> = (0..8).map(|i| Complex64::from_polar(0.005 + 0.002 * i as f64, 0.3 * (i as f64 - 3.5) / 3.5)).collect();
    let f = borel_sum(&s, 0.0, &grid)?;
    let clean = check_asymptotic(&f.points, &s, 10, 2.0)?;
    // (5!)² z⁵ is outside every Gevrey-1 bound at that order.
    let bumped: Vec<_> = f.points.iter().map(|&(z, v)| (z, v + z.powu(5) * 14400.0)).collect();
    let dirty = check_asymptotic(&bumped, &s, 10, 2.0)?;
    let ok = clean.pass && !dirty.pass && dirty.first_failure == Some(5);
    Ok((ok, format!("euler pass {}, perturbed first failure {:?}", clean.pass, dirty.first_failure)))
}

fn singularities(p: &Params) -> Result<(bool, String)> {
    let b = formal_borel(&gamma::stirling_exponent(&ComplexScalar::from_f64(p.lambda, 0.0, p.prec), 80, p.prec));
    let found = locate_borel_singularities(&BorelFunction::pade(b)?, 15.0, 1e-3);
    let omega = omega_set(&[lam(p)], &Lattice::unit(vec![Complex64::new(0.0, -TAU * p.lambda)]), 15.0)?;
    let matched = found.iter().all(|q| omega.iter().any(|w| (w - q).norm() <= 1e-3));
    let ok = matched && found.len() == omega.len();
    Ok((ok, format!("{} Padé clusters, {} Ω points within radius 15", found.len(), omega.len())))
}

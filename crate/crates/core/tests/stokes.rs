use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use stokeswb::betti::*;
use stokeswb::derham::*;
use stokeswb::gamma;
use stokeswb::gevrey::check_asymptotic;
use stokeswb::lattice::Lattice;
use stokeswb::scalar::ComplexScalar;
use stokeswb::stokes::*;
use stokeswb::summation::borel_sum;

fn setup() -> (OneForm, PeriodLattice, CriticalData) {
    let f = gamma_form(&ComplexScalar::one(256)).unwrap();
    let pl = period_lattice(&f).unwrap();
    let cd = critical_values(&f, &pl.lattice, None, &[]).unwrap();
    (f, pl, cd)
}

fn overlap(center: f64) -> Vec<Complex64> {
    let mut g = Vec::new();
    for i in 0..5 {
        for k in 0..5 {
            g.push(Complex64::from_polar(0.3 + 0.3 * i as f64, center - 0.5 + 0.25 * k as f64));
        }
    }
    g
}

#[test]
fn xi_entry_asymptotics() {
    let (f, pl, cd) = setup();
    let reps = vec![FormRep::dx_over_x(256)];
    let grid: Vec<Complex64> = (0..12).map(|i| Complex64::from_polar(0.02 + 0.18 * i as f64 / 11.0, 0.5 * ((i % 3) as f64 - 1.0))).collect();
    let xi = xi_matrix(&f, &cd, &pl.lattice, 0.0, &grid, &reps, &TraceConfig::default(), 40).unwrap();
    // 1 + z/12 + …
    let z = grid[0];
    let slope = (xi.entries[0][0][0] - 1.0) / z;
    assert!((slope - 1.0 / 12.0).norm() < 0.01, "{slope}");
    let samples: Vec<(Complex64, Complex64)> = grid.iter().zip(&xi.entries).map(|(z, m)| (*z, m[0][0])).collect();
    let rep = check_asymptotic(&samples, &xi.asy[0][0], 6, 10.0).unwrap();
    assert!(rep.pass, "{rep:?}");
    let sum = borel_sum(&xi.asy[0][0], 0.0, &grid).unwrap();
    for (p, m) in sum.points.iter().zip(&xi.entries) {
        assert!((p.1 - m[0][0]).norm() <= 1e-6 * m[0][0].norm());
    }
    for (z, m) in grid.iter().zip(&xi.entries) {
        let want = gamma::xi_closed(Complex64::new(1.0, 0.0), *z);
        assert!((m[0][0] - want).norm() < 1e-10 * want.norm());
    }
    let js = xi.to_json();
    assert_eq!(js["entries"].as_array().unwrap().len(), grid.len());
}

#[test]
fn cauchy_small_loop() {
    let (f, _, _) = setup();
    let w = FormRep::dx_over_x(256);
    let c = Complex64::new(2.0, 0.5);
    let pts: Vec<Complex64> = (0..=16).map(|k| c + Complex64::from_polar(0.1, TAU * k as f64 / 16.0)).collect();
    let v = polyline_exp_integral(&f, &w, &pts, Complex64::new(0.0, 0.0), Complex64::new(0.4, 0.1), 1e-13).unwrap();
    assert!(v.norm() < 1e-12, "{v}");
}

#[test]
fn stokes_factors_gamma() {
    let (f, pl, cd) = setup();
    let reps = vec![FormRep::dx_over_x(256)];
    let cfg = TraceConfig::default();
    // Crossing +π/2: the factor is 1 − e^{−2πi/z}; μ = −2πi, so the term sits at γ = 1.
    let g = overlap(FRAC_PI_2);
    let a = xi_matrix(&f, &cd, &pl.lattice, FRAC_PI_2 - 0.6, &g, &reps, &cfg, 10).unwrap();
    let b = xi_matrix(&f, &cd, &pl.lattice, FRAC_PI_2 + 0.6, &g, &reps, &cfg, 10).unwrap();
    let s = stokes_factor(&a, &b, &pl.lattice, 3.0, 1e-6).unwrap();
    assert!(s.near_identity && s.fit_residual < 1e-10);
    let e = &s.entries[0][0];
    assert_eq!(e.terms.len(), 2);
    assert!((e.terms[&vec![0]] - 1.0).norm() < 1e-10);
    assert!((e.terms[&vec![1]] + 1.0).norm() < 1e-10);
    // At z with u = e^{−2πi/z} real negative the factor is 1 − u.
    let t = 5.0;
    let zu = Complex64::new(0.0, TAU) / Complex64::new(t, PI);
    let u = (Complex64::new(0.0, -TAU) / zu).exp();
    assert!(u.im.abs() < 1e-12 && u.re < 0.0);
    assert!((s.eval(&pl.lattice, zu)[0][0] - (1.0 - u)).norm() < 1e-9);
    let text = serde_json::to_string(&s.to_json()).unwrap();
    assert_eq!(StokesFactor::from_json(&serde_json::from_str(&text).unwrap()).unwrap(), s);
    // Crossing −π/2: 1 − e^{2πi/z}.
    let g = overlap(-FRAC_PI_2);
    let a = xi_matrix(&f, &cd, &pl.lattice, -FRAC_PI_2 + 0.6, &g, &reps, &cfg, 10).unwrap();
    let b = xi_matrix(&f, &cd, &pl.lattice, 1.5 * PI - 0.6, &g, &reps, &cfg, 10).unwrap();
    let s = stokes_factor(&a, &b, &pl.lattice, 3.0, 1e-6).unwrap();
    let e = &s.entries[0][0];
    assert!((e.terms[&vec![0]] - 1.0).norm() < 1e-10);
    assert!((e.terms[&vec![-1]] + 1.0).norm() < 1e-10);
    assert!(s.near_identity);
}

#[test]
fn identity_and_cocycle() {
    let (f, pl, cd) = setup();
    let reps = vec![FormRep::dx_over_x(256)];
    // Some grid points sit near the edge of the d3 half-plane, where decay along the thimble is slow.
    let cfg = TraceConfig { s_max: 400.0, ..Default::default() };
    // Arguments in (0.6, 1.2) lie in all three half-planes.
    let g: Vec<Complex64> = (0..12).map(|i| Complex64::from_polar(0.3 + 0.1 * (i % 4) as f64, 0.65 + 0.15 * (i / 4) as f64)).collect();
    let (d1, d2, d3) = (-0.3, 0.9, FRAC_PI_2 + 0.6);
    let x1 = xi_matrix(&f, &cd, &pl.lattice, d1, &g, &reps, &cfg, 10).unwrap();
    let x2 = xi_matrix(&f, &cd, &pl.lattice, d2, &g, &reps, &cfg, 10).unwrap();
    let x3 = xi_matrix(&f, &cd, &pl.lattice, d3, &g, &reps, &cfg, 10).unwrap();
    let same = stokes_factor(&x1, &x1, &pl.lattice, 2.0, 1e-10).unwrap();
    assert_eq!(same.entries[0][0].terms.len(), 1);
    let s12 = stokes_factor(&x1, &x2, &pl.lattice, 3.0, 1e-6).unwrap();
    let s23 = stokes_factor(&x2, &x3, &pl.lattice, 3.0, 1e-6).unwrap();
    let s13 = stokes_factor(&x1, &x3, &pl.lattice, 3.0, 1e-6).unwrap();
    let tol = 10.0 * (s12.fit_residual + s23.fit_residual + s13.fit_residual) + 1e-12;
    for z in &g {
        let lhs = s12.eval(&pl.lattice, *z)[0][0] * s23.eval(&pl.lattice, *z)[0][0];
        let rhs = s13.eval(&pl.lattice, *z)[0][0];
        assert!((lhs - rhs).norm() <= tol);
    }
}

#[test]
fn factor_ignores_diagonal_rescaling() {
    let (f, pl, cd) = setup();
    let reps = vec![FormRep::dx_over_x(256)];
    let cfg = TraceConfig::default();
    let g = overlap(FRAC_PI_2);
    let a = xi_matrix(&f, &cd, &pl.lattice, FRAC_PI_2 - 0.6, &g, &reps, &cfg, 10).unwrap();
    let b = xi_matrix(&f, &cd, &pl.lattice, FRAC_PI_2 + 0.6, &g, &reps, &cfg, 10).unwrap();
    let s = stokes_factor(&a, &b, &pl.lattice, 3.0, 1e-6).unwrap();
    let (mut a2, mut b2) = (a.clone(), b.clone());
    for (iz, z) in g.iter().enumerate() {
        let scale = (Complex64::new(0.3, 0.0) / z).exp() * z.sqrt();
        a2.entries[iz][0][0] *= scale;
        b2.entries[iz][0][0] *= scale;
    }
    let s2 = stokes_factor(&a2, &b2, &pl.lattice, 3.0, 1e-6).unwrap();
    for (k, v) in &s.entries[0][0].terms {
        assert!((s2.entries[0][0].terms[k] - v).norm() < 1e-9);
    }
}

#[test]
fn comparison_diagram_rank_zero() {
    // x dx has its only pole at ∞, so L = 0.
    let p = stokeswb::poly::Poly::from_c64(&[0.0.into(), 1.0.into()], 256);
    let q = stokeswb::poly::Poly::from_c64(&[1.0.into()], 256);
    let f = analyze(&p, &q).unwrap();
    let pl = period_lattice(&f).unwrap();
    assert_eq!(pl.lattice.rank(), 0);
    let cd = critical_values(&f, &pl.lattice, None, &[]).unwrap();
    let reps = FormRep::default_basis(&f, 1);
    let grid: Vec<Complex64> = (0..5).map(|i| Complex64::from_polar(0.1 + 0.2 * i as f64, 0.3 * (i as f64 - 2.0))).collect();
    let r = comparison_check(&f, &cd, &pl.lattice, 0.0, &grid, &reps, &TraceConfig::default(), 20, &Default::default()).unwrap();
    assert!(r.max_discrepancy <= 1e-8, "{r:?}");
}

#[test]
fn comparison_diagram_sector_edge() {
    let (f, pl, cd) = setup();
    let reps = vec![FormRep::dx_over_x(256)];
    let edge = FRAC_PI_2 - 0.05;
    let grid = vec![Complex64::from_polar(0.3, edge), Complex64::from_polar(0.5, -edge)];
    let r = comparison_check(&f, &cd, &pl.lattice, 0.0, &grid, &reps, &TraceConfig { s_max: 400.0, ..Default::default() }, 40, &Default::default()).unwrap();
    assert!(r.max_discrepancy <= 1e-6, "{r:?}");
}

#[test]
fn digamma_connection() {
    let cfg = TraceConfig::default();
    let r = digamma_connection_check(Complex64::new(1.0, 0.0), 0.0, &[Complex64::new(0.2, 0.0)], &cfg).unwrap();
    assert!(r.max_rel_error < 1e-5, "{r:?}");
    // Expansion through z³: the remaining gap is the z⁴ coefficient B₄/(4λ³) in size.
    assert!(r.expansion_gap < 0.01);
    let r = digamma_connection_check(Complex64::new(1.0, 0.0), 2.0, &[Complex64::new(-0.2, 0.3), Complex64::new(-0.1, 0.4)], &cfg).unwrap();
    assert!(r.max_rel_error < 1e-5, "{r:?}");
    assert_eq!(r.branch_offset, Some(1));
}

#[test]
fn lattice_dictionary_sizes() {
    let l = Lattice::unit(vec![Complex64::new(0.0, -TAU)]);
    assert_eq!(l.ball(3.0).len(), 7);
}

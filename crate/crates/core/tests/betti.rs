use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use stokeswb::betti::*;
use stokeswb::derham::*;
use stokeswb::error::Error;
use stokeswb::gamma;
use stokeswb::poly::Poly;
use stokeswb::scalar::ComplexScalar;
use stokeswb::special::ln_gamma;
use stokeswb::stokes::{cycle_integral, prepare};

fn setup(lam: f64) -> (OneForm, PeriodLattice, CriticalData) {
    let f = gamma_form(&ComplexScalar::from_f64(lam, 0.0, 256)).unwrap();
    let pl = period_lattice(&f).unwrap();
    let cd = critical_values(&f, &pl.lattice, None, &[]).unwrap();
    (f, pl, cd)
}

#[test]
fn ray_slopes() {
    let r = local_rays(0, 2, 0.0);
    let s: Vec<f64> = r.iter().map(|r| r.slope_out).collect();
    assert!((s[0] - 0.0).abs() < 1e-15 && (s[1] - TAU / 3.0).abs() < 1e-15 && (s[2] - 2.0 * TAU / 3.0).abs() < 1e-15);
    let r1 = local_rays(0, 1, 0.0);
    assert!((r1[0].slope_out).abs() < 1e-15 && (r1[0].slope_in - PI).abs() < 1e-15);
    let shifted = local_rays(0, 2, 0.9);
    for (a, b) in shifted.iter().zip(&r) {
        assert!((a.slope_out - b.slope_out - 0.3).abs() < 1e-15);
    }
}

#[test]
fn dft_examples() {
    let w = dft_weights(1, 0);
    assert!((w[0] - 0.5).norm() < 1e-15 && (w[1] + 0.5).norm() < 1e-15);
    let w = dft_weights(2, 0);
    for (l, v) in w.iter().enumerate() {
        assert!((v - Complex64::from_polar(1.0 / 3.0, -TAU * l as f64 / 3.0)).norm() < 1e-15);
    }
}

#[test]
fn h_closed_forms() {
    let z = Complex64::new(1.0, 0.0);
    let want = (1.0 - Complex64::from_polar(1.0, TAU / 3.0)) / 3.0 * 3f64.powf(1.0 / 3.0) * ln_gamma((1.0 / 3.0).into()).exp();
    assert!((h_factor(2, 0, z, 0.0) - want).norm() < 1e-14);
    for r in [0.1, 0.3, 1.0] {
        let z = Complex64::new(r, 0.0);
        let c = &dft_cycles(0, 1, 0.0)[0];
        let q = local_model_integral(1, 0, c, z, 1e-13);
        let h = h_factor(1, 0, z, 0.0);
        assert!((h - (TAU * z).sqrt()).norm() < 1e-14);
        assert!((q - h).norm() / h.norm() < 1e-8);
    }
    let z = Complex64::new(0.5, 0.0);
    let c = &dft_cycles(0, 2, 0.0)[0];
    let q = local_model_integral(2, 0, c, z, 1e-13);
    assert!((q - h_factor(2, 0, z, 0.0)).norm() < 1e-8);
}

#[test]
fn dft_diagonality_m2() {
    let z = Complex64::new(0.3, 0.0);
    let cycles = dft_cycles(0, 2, 0.0);
    for (k, c) in cycles.iter().enumerate() {
        let diag = local_model_integral(2, k, c, z, 1e-13);
        assert!((diag - h_factor(2, k, z, 0.0)).norm() < 1e-9 * diag.norm());
        for k2 in 0..2 {
            if k2 != k {
                assert!(local_model_integral(2, k2, c, z, 1e-13).norm() <= 1e-8 * diag.norm());
            }
        }
    }
}

#[test]
fn boundary_set_examples() {
    let b = boundary_set(2, Complex64::new(1.0, 0.0), (0.0, 0.0));
    assert_eq!(b, BoundarySet::Arcs(vec![(0.5 * PI, 1.5 * PI)]));
    assert_eq!(boundary_set(1, Complex64::new(-1.0, 0.0), (-0.25 * PI, 0.25 * PI)), BoundarySet::Full);
    assert_eq!(boundary_set(1, Complex64::new(-1.0, 0.0), (0.9 * PI, 1.1 * PI)), BoundarySet::Empty);
}

#[test]
fn gamma_thimble_terminals() {
    let (f, pl, cd) = setup(1.0);
    let cfg = TraceConfig::default();
    let t = trace_thimble(&f, &cd, &pl.lattice, 0, 0, 0.0, &cfg).unwrap();
    let mut poles = [t.forward.terminal.pole(), t.backward.terminal.pole()];
    poles.sort();
    // pole 0 is x = 0, pole 1 is ∞
    assert_eq!(poles, [0, 1]);
    for h in [&t.forward, &t.backward] {
        match &h.terminal {
            Terminal::Pole { pole: 1, boundary_angle, in_boundary_set, .. } => {
                assert!(*in_boundary_set);
                assert!((boundary_angle - PI).abs() < 1e-6);
            }
            Terminal::Pole { pole: 0, order: 1, in_boundary_set, .. } => assert!(*in_boundary_set),
            other => panic!("unexpected terminal {other:?}"),
        }
        let fc = flow_check(&f, h);
        assert!(fc.max_im_dev <= 1e-9 && fc.monotone, "{fc:?}");
    }
    let hankel = trace_thimble(&f, &cd, &pl.lattice, 0, 0, FRAC_PI_2 + 0.3, &cfg).unwrap();
    assert_eq!(hankel.forward.terminal.pole(), 1);
    assert_eq!(hankel.backward.terminal.pole(), 1);
    let mut buf = Vec::new();
    hankel.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x_re,x_im,f_re,f_im"));
    assert!(hankel.header_json()["forward_terminal"].is_object());
}

#[test]
fn non_generic_direction_is_rejected() {
    let (f, pl, cd) = setup(1.0);
    let r = trace_thimble(&f, &cd, &pl.lattice, 0, 0, FRAC_PI_2, &TraceConfig::default());
    assert!(matches!(r, Err(Error::SaddleEncounter(_))));
}

#[test]
fn gamma_cycle_weights_match_dft() {
    let (f, pl, cd) = setup(1.0);
    let g = gamma_cycles(&f, &cd, &pl.lattice, 0, 0.0, &TraceConfig::default()).unwrap();
    assert_eq!(g.cycles[0].weights, dft_weights(1, 0));
    assert_eq!(g.halves.len(), 2);
}

#[test]
fn thimble_integral_reproduces_gamma() {
    let (f, pl, cd) = setup(1.0);
    let g = gamma_cycles(&f, &cd, &pl.lattice, 0, 0.0, &TraceConfig::default()).unwrap();
    let w = FormRep::dx_over_x(256);
    let prep: Vec<_> = g.halves.iter().map(|h| prepare(&f, h, &w)).collect();
    let z = Complex64::new(0.5, 0.0);
    let v = cycle_integral(&prep, &g.cycles[0], z).unwrap() * (-1.0 / z).exp();
    assert!((v - 0.25).norm() < 1e-12, "{v}");
    for (r, a) in [(0.05, 0.0), (0.3, -0.8), (1.0, 1.0)] {
        let z = Complex64::from_polar(r, a);
        let v = cycle_integral(&prep, &g.cycles[0], z).unwrap() * (-1.0 / z).exp();
        let want = gamma::thimble_integral(Complex64::new(1.0, 0.0), z);
        assert!((v - want).norm() < 1e-10 * want.norm());
    }
}

#[test]
fn hankel_matches_closed_form() {
    let (f, pl, cd) = setup(1.0);
    for dp in [FRAC_PI_2 + 0.6, 2.0, 1.5 * PI - 0.6] {
        let g = gamma_cycles(&f, &cd, &pl.lattice, 0, dp, &TraceConfig::default()).unwrap();
        let w = FormRep::dx_over_x(256);
        let prep: Vec<_> = g.halves.iter().map(|h| prepare(&f, h, &w)).collect();
        for a in [-0.5, 0.0, 0.5] {
            let z = Complex64::from_polar(0.4, dp + a);
            let xi = cycle_integral(&prep, &g.cycles[0], z).unwrap() / h_factor(1, 0, z, dp);
            let want = gamma::xi_closed_prime(Complex64::new(1.0, 0.0), z, dp);
            assert!((xi - want).norm() < 1e-10 * want.norm());
        }
    }
}

#[test]
fn triple_zero_form_traces() {
    // x² dx/(x³ − 1): double zero at 0, simple poles at the cube roots of unity and at ∞.
    let p = Poly::from_c64(&[0.0.into(), 0.0.into(), 1.0.into()], 256);
    let q = Poly::from_c64(&[(-1.0).into(), 0.0.into(), 0.0.into(), 1.0.into()], 256);
    let f = analyze(&p, &q).unwrap();
    let pl = period_lattice(&f).unwrap();
    let cd = critical_values(&f, &pl.lattice, None, &[]).unwrap();
    let g = gamma_cycles(&f, &cd, &pl.lattice, 0, 0.3, &TraceConfig::default()).unwrap();
    assert_eq!(g.halves.len(), 3);
    for h in &g.halves {
        assert!(matches!(h.terminal, Terminal::SpiralAtSimplePole { in_boundary_set: true, .. }));
        let fc = flow_check(&f, h);
        assert!(fc.max_im_dev <= 1e-9 && fc.monotone);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn dft_matrix_is_scaled_unitary(m in 1usize..7) {
        for k in 0..=m {
            for k2 in 0..=m {
                let (a, b) = (dft_weights(m, k), dft_weights(m, k2));
                let s: Complex64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
                let want = if k == k2 { 1.0 / (m + 1) as f64 } else { 0.0 };
                prop_assert!((s - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn gaussian_normalizer_branch(r in 0.05f64..3.0, a in -1.4f64..1.4) {
        let z = Complex64::from_polar(r, a);
        prop_assert!((h_factor(1, 0, z, 0.0) / (TAU * z).sqrt() - 1.0).norm() < 1e-13);
    }
}

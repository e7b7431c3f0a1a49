use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};
use stokeswb::error::Error;
use stokeswb::gamma::stirling_exponent;
use stokeswb::gevrey::*;
use stokeswb::lattice::{omega_set, Lattice};
use stokeswb::scalar::{factorial, ComplexScalar};
use stokeswb::summation::*;

const P: u32 = 256;

// Frozen with mpmath at 30 digits: e·E₁(1), e^{1/z}E₁(1/z)/z, and ∫₀^∞ e^{−t}/(1+zt) dt.
const EULER_AT_1: f64 = 0.596_347_362_323_194_074_3;
const EULER_AT_02: f64 = 0.852_110_881_423_661_009_1;
const EULER_AT_01: f64 = 0.915_633_339_397_880_818_8;
const EULER_AT_C: (f64, f64) = (0.785_266_029_651_118_521_0, -0.088_734_157_192_779_141_5);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn geo(n: usize, sign: i64) -> GevreySeries {
    GevreySeries::new((0..=n).map(|k| ComplexScalar::from_i64(sign.pow(k as u32), P)).collect())
}

fn euler(n: usize) -> GevreySeries {
    GevreySeries::new(
        (0..=n)
            .map(|k| {
                let f = ComplexScalar::from_real(factorial(k as u32, P));
                if k % 2 == 1 {
                    -f
                } else {
                    f
                }
            })
            .collect(),
    )
}

#[test]
fn continuation_examples() {
    let g = BorelFunction::pade(geo(30, 1)).unwrap().with_singularities(&[c(1.0, 0.0)]);
    assert!((continue_borel(&g, c(2.0, 0.0), 1e-8).unwrap() + 1.0).norm() < 1e-12);
    assert!(matches!(continue_borel(&g, c(1.0, 0.0), 1e-8), Err(Error::NearSingularity { .. })));

    // B̂(b₁) at 3π, outside the disk of convergence; Padé against Taylor stepping at doubled precision.
    let b = formal_borel(&stirling_exponent(&ComplexScalar::one(P), 60, P));
    let pade = BorelFunction::pade(b.clone()).unwrap();
    let cfg = ContinuationConfig { eval_prec: 512, ..Default::default() };
    let b512 = formal_borel(&stirling_exponent(&ComplexScalar::one(512), 800, 512));
    let steps = BorelFunction::new(b512, "taylor_stepping", &cfg).unwrap();
    let zeta = c(3.0 * PI, 0.0);
    let v = continue_borel(&pade, zeta, 1e-8).unwrap();
    let w = continue_borel(&steps, zeta, 1e-12).unwrap();
    assert!(v.is_finite());
    assert!((v - w).norm() <= 1e-8 * w.norm(), "{v} vs {w}");
}

#[test]
fn exp_size_examples() {
    let radii: Vec<f64> = (0..10).map(|k| 0.5 * 1.4f64.powi(k)).collect();
    let one = BorelFunction::pade(GevreySeries::from_f64(&[1.0, 0.0, 0.0], P)).unwrap();
    let e = exp_size_one_estimate(&one, UnboundedSector::new(0.0, 0.01).unwrap(), &radii).unwrap();
    assert!(e.h.abs() < 1e-12 && (e.c - 1.0).abs() < 1e-12);
    let exp = GevreySeries::new((0..=150).map(|n| ComplexScalar::from_real(factorial(n, P)).recip()).collect());
    let g = BorelFunction::new(exp, "taylor_stepping", &ContinuationConfig::default()).unwrap();
    let e = exp_size_one_estimate(&g, UnboundedSector::new(0.0, 0.01).unwrap(), &radii).unwrap();
    assert!((e.h - 1.0).abs() < 0.05, "{e:?}");
    assert!(exp_size_one_estimate(&one, UnboundedSector::new(0.0, 0.01).unwrap(), &[1.0, 2.0]).is_err());
}

#[test]
fn laplace_examples() {
    let cfg = LaplaceConfig::default();
    let one = BorelFunction::pade(GevreySeries::from_f64(&[1.0, 0.0, 0.0], P)).unwrap();
    assert!((laplace(&one, 0.0, c(0.5, 0.0), &cfg).unwrap().value - 1.0).norm() < 1e-12);
    let zeta = BorelFunction::pade(GevreySeries::from_f64(&[0.0, 1.0, 0.0], P)).unwrap();
    assert!((laplace(&zeta, 0.0, c(0.25, 0.0), &cfg).unwrap().value - 0.25).norm() < 1e-12);
    let g = borel_function(&euler(40), &SumOptions::default()).unwrap();
    let v = laplace(&g, 0.0, c(1.0, 0.0), &cfg).unwrap().value;
    assert!((v - EULER_AT_1).norm() < 1e-10, "{v}");
    assert!(matches!(laplace(&g, PI, c(-1.0, 0.0), &cfg), Err(Error::SingularRay(_))));
}

#[test]
fn borel_sum_examples() {
    let poly = GevreySeries::from_f64(&[1.0, 1.0, 1.0], P);
    for d in [0.0, 0.7, -1.1] {
        let z = Complex64::from_polar(0.1, d);
        let f = borel_sum(&poly, d, &[z]).unwrap();
        assert!((f.points[0].1 - (1.0 + z + z * z)).norm() < 1e-12);
    }
    let s = euler(40);
    let f = borel_sum(&s, 0.0, &[c(0.2, 0.0), c(0.1, 0.0)]).unwrap();
    assert!((f.points[0].1 - EULER_AT_02).norm() < 1e-12);
    assert!((f.points[1].1 - EULER_AT_01).norm() < 1e-12);
    // A tilted ray inside the same sector gives the same function.
    let z = c(0.3, 0.2);
    for d in [0.0, 0.5, -0.4] {
        let f = borel_sum(&s, d, &[z]).unwrap();
        assert!((f.points[0].1 - c(EULER_AT_C.0, EULER_AT_C.1)).norm() < 1e-10, "d = {d}: {}", f.points[0].1);
    }
    assert!(matches!(borel_sum(&s, PI / 2.0, &[c(0.1, 0.0)]), Err(Error::DivergentLaplace(_))));
    assert_eq!(borel_sum(&s, 0.0, &[]), Err(Error::EmptyGrid));
}

#[test]
fn sum_is_a_ring_map() {
    let f = euler(40);
    let z = [c(0.1, 0.0), c(0.08, 0.03)];
    let a = borel_sum(&f, 0.0, &z).unwrap();
    let sq = borel_sum(&f.mul(&f), 0.0, &z).unwrap();
    let sum = borel_sum(&f.add(&f), 0.0, &z).unwrap();
    for i in 0..2 {
        let x = a.points[i].1;
        assert!((sq.points[i].1 - x * x).norm() <= 1e-8 * (x * x).norm());
        assert!((sum.points[i].1 - 2.0 * x).norm() <= 1e-12);
    }
}

#[test]
fn borel_sum_satisfies_its_asymptotics() {
    let s = euler(14);
    let grid: Vec<Complex64> = (0..10).map(|i| Complex64::from_polar(0.01 + 0.004 * i as f64, 0.5 * (i as f64 - 4.5) / 4.5)).collect();
    let f = borel_sum(&s, 0.0, &grid).unwrap();
    assert!(check_asymptotic(&f.points, &s, 12, 2.0).unwrap().pass);
}

#[test]
fn singularity_examples() {
    let p = locate_borel_singularities(&BorelFunction::pade(geo(30, 1)).unwrap(), 5.0, 5e-4);
    assert_eq!(p.len(), 1);
    assert!((p[0] - 1.0).norm() < 1e-8);
    let p = locate_borel_singularities(&BorelFunction::pade(formal_borel(&euler(30))).unwrap(), 5.0, 5e-4);
    assert_eq!(p.len(), 1);
    assert!((p[0] + 1.0).norm() < 1e-8);
    let b = formal_borel(&stirling_exponent(&ComplexScalar::one(P), 80, P));
    let found = locate_borel_singularities(&BorelFunction::pade(b).unwrap(), 15.0, 1e-3);
    let omega = omega_set(&[c(1.0, 0.0)], &Lattice::unit(vec![c(0.0, -TAU)]), 15.0).unwrap();
    assert_eq!(found.len(), omega.len());
    for p in &found {
        assert!(omega.iter().any(|w| (w - p).norm() < 1e-3), "{p}");
    }
}

#[test]
fn csv_round_trip() {
    let f = borel_sum(&euler(30), 0.0, &[c(0.1, 0.02), c(0.2, -0.05)]).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let back = SampledFunction::read_csv(&buf[..], &f.sidecar()).unwrap();
    assert_eq!(back, f);
}

fn stepped(n: usize) -> BorelFunction {
    BorelFunction::new(geo(n, 1), "taylor_stepping", &ContinuationConfig::default()).unwrap()
}

#[test]
fn taylor_stepping_reaches_past_the_disk() {
    let pade = BorelFunction::pade(geo(40, 1)).unwrap();
    let steps = stepped(400);
    for (r, th) in [(0.8, 0.4), (1.2, 1.5), (1.5, 3.0)] {
        let zeta = Complex64::from_polar(r, th);
        let a = continue_borel(&pade, zeta, 1e-10).unwrap();
        let b = continue_borel(&steps, zeta, 1e-10).unwrap();
        assert!((a - b).norm() <= 1e-10 * b.norm(), "{zeta}: {a} {b}");
        assert!((a - 1.0 / (1.0 - zeta)).norm() <= 1e-12 * a.norm());
    }
    // Too far for 400 terms: an honest refusal.
    let far = Complex64::from_polar(5.0, 3.0);
    assert!(matches!(continue_borel(&steps, far, 1e-10), Err(Error::ContinuationDiverged(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn taylor_stepping_agrees_or_refuses(r in 0.2f64..5.0, th in 0.2f64..6.08) {
        let zeta = Complex64::from_polar(r, th);
        let a = continue_borel(&BorelFunction::pade(geo(40, 1)).unwrap(), zeta, 1e-10).unwrap();
        match continue_borel(&stepped(400), zeta, 1e-10) {
            Ok(b) => prop_assert!((a - b).norm() <= 1e-10 * b.norm(), "{} {}", a, b),
            Err(e) => prop_assert!(matches!(e, Error::ContinuationDiverged(_)), "{}", e),
        }
    }
}

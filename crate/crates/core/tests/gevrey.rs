use num_complex::Complex64;
use proptest::prelude::*;
use stokeswb::gamma::stirling_exponent;
use stokeswb::gevrey::*;
use stokeswb::scalar::{factorial, ComplexScalar};
use stokeswb::summation::borel_sum;

const P: u32 = 256;

fn ints(c: &[i64]) -> GevreySeries {
    GevreySeries::new(c.iter().map(|&k| ComplexScalar::from_i64(k, P)).collect())
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
fn arithmetic_examples() {
    let a = ints(&[1, 1, 0, 0]);
    let b = ints(&[1, -1, 0, 0]);
    assert_eq!(series_arith(&a, Some(&b), SeriesOp::Mul).unwrap(), ints(&[1, 0, -1, 0]));
    for n in [3, 10, 25] {
        let mut c = vec![0i64; n + 1];
        c[0] = 1;
        c[1] = 1;
        let x = ints(&c);
        let back = series_arith(&series_arith(&x, None, SeriesOp::Log).unwrap(), None, SeriesOp::Exp).unwrap();
        for (u, v) in back.coeffs().iter().zip(x.coeffs()) {
            assert!((u.to_c64() - v.to_c64()).norm() < 1e-60);
        }
    }
    // Σ z^n ∘ 2z = Σ 2^n z^n
    let geo = ints(&[1; 13]);
    let two_z = ints(&[0, 2, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
    let c = series_arith(&geo, Some(&two_z), SeriesOp::Compose).unwrap();
    assert_eq!(c, ints(&(0..13).map(|n| 1i64 << n).collect::<Vec<_>>()));
    assert!(matches!(ints(&[0, 1]).reciprocal(), Err(stokeswb::error::Error::ZeroLeadingCoefficient(_))));
    assert!(ints(&[0, 1]).log().is_err());
}

#[test]
fn gevrey_constant_examples() {
    let fact = GevreySeries::new((0..=15).map(|n| ComplexScalar::from_real(factorial(n, P))).collect());
    assert!((estimate_gevrey_constant(&fact) - 1.0).abs() < 1e-15);
    assert!((estimate_gevrey_constant(&ints(&[1])) - 1.0).abs() < 1e-15);
    let b = stirling_exponent(&ComplexScalar::one(P), 20, P);
    assert!(estimate_gevrey_constant(&b) < 1.0);
    assert_eq!(estimate_gevrey_constant(&GevreySeries::zero(5, P)), 0.0);
}

#[test]
fn borel_examples() {
    let fact = GevreySeries::new((0..=10).map(|n| ComplexScalar::from_real(factorial(n, P))).collect());
    assert_eq!(formal_borel(&fact), ints(&[1; 11]));
    assert_eq!(formal_borel(&ints(&[1])), ints(&[1]));
    let b = formal_borel(&ints(&[0, 0, 1]));
    assert_eq!(b.coeff(2).to_c64(), Complex64::new(0.5, 0.0));
    assert_eq!(b.trunc_order(), 2);
}

#[test]
fn asymptotic_checker_discriminates() {
    let s = euler(12);
    let grid: Vec<Complex64> = (0..8).map(|i| Complex64::from_polar(0.005 + 0.002 * i as f64, 0.3 * (i as f64 - 3.5) / 3.5)).collect();
    let f = borel_sum(&s, 0.0, &grid).unwrap();
    let r = check_asymptotic(&f.points, &s, 10, 2.0).unwrap();
    assert!(r.pass, "{r:?}");
    let bumped: Vec<_> = f.points.iter().map(|&(z, v)| (z, v + z.powu(5) * 14400.0)).collect();
    let r = check_asymptotic(&bumped, &s, 10, 2.0).unwrap();
    assert_eq!(r.first_failure, Some(5), "{r:?}");
    // An exact polynomial leaves no remainder.
    let p = ints(&[1, 1, 0, 0]);
    let pts: Vec<_> = grid.iter().map(|&z| (z, 1.0 + z)).collect();
    let r = check_asymptotic(&pts, &p, 3, 2.0).unwrap();
    assert!(r.pass && r.constants[2] < 1e-3, "{r:?}");
    assert!(check_asymptotic(&[], &p, 3, 1.0).is_err());
}

#[test]
fn json_is_bit_exact() {
    let s = stirling_exponent(&ComplexScalar::from_f64(1.5, -0.25, P), 15, P);
    let j = serde_json::to_string(&s.to_json()).unwrap();
    let back = GevreySeries::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
    assert_eq!(back, s);
}

fn small_series() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-9i64..10, 6)
}

proptest! {
    #[test]
    fn borel_is_linear(a in small_series(), b in small_series(), x in -5i64..6, y in -5i64..6) {
        let (sa, sb) = (ints(&a), ints(&b));
        let lhs = formal_borel(&sa.scale(&ComplexScalar::from_i64(x, P)).add(&sb.scale(&ComplexScalar::from_i64(y, P))));
        let rhs = formal_borel(&sa).scale(&ComplexScalar::from_i64(x, P)).add(&formal_borel(&sb).scale(&ComplexScalar::from_i64(y, P)));
        for (u, v) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!(u.approx_eq(v, 1e-70));
        }
    }

    #[test]
    fn ring_axioms(a in small_series(), b in small_series(), c in small_series()) {
        let (a, b, c) = (ints(&a), ints(&b), ints(&c));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
    }

    #[test]
    fn constant_ignores_trailing_zeros(a in small_series(), extra in 1usize..8) {
        let s = ints(&a);
        let padded = s.pad_polynomial(s.trunc_order() + extra);
        prop_assert_eq!(estimate_gevrey_constant(&s), estimate_gevrey_constant(&padded));
    }

    #[test]
    fn borel_coefficients_are_geometric(a in prop::collection::vec(-1000i64..1000, 1..12)) {
        let s = ints(&a).with_gevrey_constant();
        let c = estimate_gevrey_constant(&s);
        let b = formal_borel(&s);
        for (n, v) in b.coeffs().iter().enumerate() {
            prop_assert!(v.abs_f64() <= c.powi(n as i32 + 1) * (1.0 + 1e-12));
        }
    }
}

//! Closed forms for the Gamma-function example `α_λ = −(λ − x)x^{−1}dx`.

use num_complex::Complex64;
use rug::{Float, Rational};
use std::f64::consts::PI;

use crate::gevrey::GevreySeries;
use crate::scalar::ComplexScalar;
use crate::special::{bernoulli_numbers, digamma, ln_gamma};

/// The exponent `b_λ(z) = Σ B_{2n} z^{2n−1} / (2n(2n−1)λ^{2n−1})` to `order`.
pub fn stirling_exponent(lambda: &ComplexScalar, order: usize, prec: u32) -> GevreySeries {
    let b = bernoulli_numbers(order + 2);
    let mut c = vec![ComplexScalar::zero(prec); order + 1];
    let inv = lambda.with_prec(prec).recip();
    let mut pw = inv.clone(); // λ^{−(2n−1)}
    let inv2 = &inv * &inv;
    let mut n = 1;
    while 2 * n - 1 <= order {
        let q = Rational::from(&b[2 * n]) / Rational::from((2 * n * (2 * n - 1)) as u64);
        c[2 * n - 1] = pw.scale(&Float::with_val(prec, &q));
        pw = &pw * &inv2;
        n += 1;
    }
    GevreySeries::new(c)
}

/// `λ^{−1/2} exp(−b_λ(z))`, the formal series of the example.
pub fn stirling_formal(lambda: &ComplexScalar, order: usize, prec: u32) -> GevreySeries {
    let b = stirling_exponent(lambda, order, prec);
    let s = lambda.with_prec(prec).principal_root(2).recip();
    b.neg().exp().scale(&s)
}

/// Critical value `λ − λ log λ`.
pub fn critical_value(lambda: Complex64) -> Complex64 {
    lambda - lambda * lambda.ln()
}

/// `log z` with the argument continued into `(d − π, d + π]`.
pub fn log_near(z: Complex64, d: f64) -> Complex64 {
    let mut a = z.arg();
    while a <= d - PI {
        a += 2.0 * PI;
    }
    while a > d + PI {
        a -= 2.0 * PI;
    }
    Complex64::new(z.norm().ln(), a)
}

/// `z^{λ/z} Γ(λ/z)`: the thimble integral of `dx/x` for directions with `|d − arg λ| < π/2`.
pub fn thimble_integral(lambda: Complex64, z: Complex64) -> Complex64 {
    let w = lambda / z;
    (w * log_near(z, z.arg()) + ln_gamma(w)).exp()
}

/// `e^{c/z} z^{λ/z} Γ(λ/z) / √(2πz)` for `d ∈ I_λ`.
pub fn xi_closed(lambda: Complex64, z: Complex64) -> Complex64 {
    let lz = z.ln();
    let w = lambda / z;
    (critical_value(lambda) / z + w * lz + ln_gamma(w) - 0.5 * ((2.0 * PI).ln() + lz)).exp()
}

/// `√(2π) z^{λ/z−1/2} i e^{(c − πiλ)/z} / Γ(1 − λ/z)` for `d′ ∈ I′_λ`, `arg z` taken near `d′`.
pub fn xi_closed_prime(lambda: Complex64, z: Complex64, d_prime: f64) -> Complex64 {
    let lz = log_near(z, d_prime);
    let w = lambda / z;
    let i = Complex64::new(0.0, 1.0);
    let c = critical_value(lambda);
    (0.5 * (2.0 * PI).ln() + (w - 0.5) * lz + i * PI * 0.5 + (c - i * PI * lambda) / z - ln_gamma(1.0 - w)).exp()
}

/// Connection coefficient `[λ(ψ(λ/z) − log(λ/z)) − c]/z²` for `d ∈ I_λ`.
pub fn connection_d(lambda: Complex64, z: Complex64) -> Complex64 {
    let w = lambda / z;
    (lambda * (digamma(w) - w.ln()) - critical_value(lambda)) / (z * z)
}

/// Connection coefficient for `d′ ∈ I′_λ`, with `0 < arg(λ/z) < 2π`.
pub fn connection_d_prime(lambda: Complex64, z: Complex64) -> Complex64 {
    let w = lambda / z;
    let mut lw = w.ln();
    if lw.im <= 0.0 {
        lw.im += 2.0 * PI;
    }
    let i = Complex64::new(0.0, 1.0);
    (lambda * (digamma(1.0 - w) - lw - i * PI) - critical_value(lambda)) / (z * z)
}

/// Asymptotic connection form coefficient of `dz/z` and `dz/z²` through `z^order`:
/// `−½(1 + Σ B_{2n} z^{2n−1}/(nλ^{2n−1}))/z − c/z²`, returned as the series multiplying `dz/z²`.
pub fn connection_formal(lambda: f64, order: usize) -> Vec<f64> {
    let b = bernoulli_numbers(order + 2);
    let mut out = vec![0.0; order + 1];
    out[0] = -critical_value(Complex64::new(lambda, 0.0)).re;
    if order >= 1 {
        out[1] = -0.5;
    }
    let mut n = 1;
    while 2 * n <= order {
        out[2 * n] = -0.5 * b[2 * n].to_f64() / (n as f64 * lambda.powi(2 * n as i32 - 1));
        n += 1;
    }
    out
}

//! Bernoulli numbers, complex log-Gamma and digamma.

use num_complex::Complex64;
use rug::{Integer, Rational};
use std::f64::consts::PI;

/// Exact Bernoulli numbers `B_0..=B_n` with `B_1 = −1/2`, from `Σ_{k≤n} C(n+1,k) B_k = 0`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    b.push(Rational::from(1));
    for m in 1..=n {
        let mut acc = Rational::new();
        let mut binom = Integer::from(1); // C(m+1, 0)
        for (k, bk) in b.iter().enumerate() {
            acc += Rational::from(&binom * bk.numer()) / bk.denom();
            binom *= (m + 1 - k) as u32;
            binom /= (k + 1) as u32;
        }
        // binom is now C(m+1, m)
        b.push(-acc / Rational::from(binom));
    }
    b
}

const STIRLING_TERMS: usize = 12;

fn stirling_coeffs() -> &'static [f64; STIRLING_TERMS] {
    use once_cell::sync::Lazy;
    static C: Lazy<[f64; STIRLING_TERMS]> = Lazy::new(|| {
        let b = bernoulli_numbers(2 * STIRLING_TERMS);
        let mut c = [0.0; STIRLING_TERMS];
        for (i, slot) in c.iter_mut().enumerate() {
            let n = i + 1;
            let q = Rational::from(&b[2 * n]) / Rational::from((2 * n * (2 * n - 1)) as u64);
            *slot = q.to_f64();
        }
        c
    });
    &C
}

/// `ln Γ(z)` for complex `z`, continuous in `z` away from the negative real axis.
///
/// Uses upward recurrence to `Re z ≥ 15`, the Stirling series, and reflection for `Re z < 0.5`.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Γ(z)Γ(1−z) = π / sin(πz)
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < 15.0 {
        shift += w.ln();
        w += 1.0;
    }
    let c = stirling_coeffs();
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for ck in c.iter() {
        series += pow * *ck;
        pow *= inv2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - shift
}

/// `Γ(z)` for complex `z` not a non-positive integer.
pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// Digamma `ψ(z) = Γ'(z)/Γ(z)` for complex `z`.
pub fn digamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // ψ(1−z) − ψ(z) = π cot(πz)
        let pz = Complex64::new(PI, 0.0) * z;
        return digamma(Complex64::new(1.0, 0.0) - z) - PI * pz.cos() / pz.sin();
    }
    let b = bernoulli_f64();
    let mut w = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while w.re < 15.0 {
        shift += w.inv();
        w += 1.0;
    }
    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv2;
    for n in 1..=STIRLING_TERMS {
        series += pow * (b[2 * n] / (2 * n) as f64);
        pow *= inv2;
    }
    w.ln() - 0.5 * inv - series - shift
}

fn bernoulli_f64() -> &'static [f64] {
    use once_cell::sync::Lazy;
    static B: Lazy<Vec<f64>> =
        Lazy::new(|| bernoulli_numbers(2 * STIRLING_TERMS + 2).iter().map(|q| q.to_f64()).collect());
    &B
}

/// Exponential integral `E₁(x)` for real `x > 0`, at the given MPFR precision.
///
/// Convergent series `−γ − ln x − Σ (−x)^k / (k·k!)`, evaluated with enough guard bits to
/// absorb the cancellation for moderate `x`.
pub fn expint_e1(x: f64, prec: u32) -> rug::Float {
    use rug::float::Constant;
    use rug::Float;
    let guard = (x * 1.5) as u32 + 64;
    let p = prec + guard;
    let xf = Float::with_val(p, x);
    let mut sum = Float::with_val(p, 0);
    let mut term = Float::with_val(p, 1); // (−x)^k / k!
    let eps = Float::with_val(p, Float::i_exp(1, -(p as i32)));
    let mut k: u32 = 1;
    loop {
        term *= &xf;
        term = -term;
        term /= k;
        let t = Float::with_val(p, &term / k);
        sum += &t;
        if t.clone().abs() < eps && k > 2 {
            break;
        }
        k += 1;
    }
    let gamma_e = Float::with_val(p, Constant::Euler);
    let r = -gamma_e - xf.ln() - sum;
    Float::with_val(prec, r)
}

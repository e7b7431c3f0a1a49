//! Arbitrary-precision complex scalars on top of MPFR floats.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

/// Working precision used when nothing else is requested.
pub const DEFAULT_PRECISION: u32 = 256;

/// Smallest precision a scalar may carry.
pub const MIN_PRECISION: u32 = 64;

/// Environment variable overriding [`DEFAULT_PRECISION`].
pub const PRECISION_ENV: &str = "STOKES_WB_PRECISION";

static ENV_PRECISION: Lazy<u32> = Lazy::new(|| {
    std::env::var(PRECISION_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .map(|p| p.max(MIN_PRECISION))
        .unwrap_or(DEFAULT_PRECISION)
});

/// Default working precision, honoring `STOKES_WB_PRECISION`.
pub fn working_precision() -> u32 {
    *ENV_PRECISION
}

/// Complex number with MPFR real and imaginary parts at a fixed precision.
#[derive(Clone, PartialEq)]
pub struct ComplexScalar {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for ComplexScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.to_c64();
        write!(f, "({:e}{:+e}i)@{}", c.re, c.im, self.prec())
    }
}

impl fmt::Display for ComplexScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}i", self.re, if self.im.is_sign_negative() { "" } else { "+" }, self.im)
    }
}

impl ComplexScalar {
    pub fn zero(prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        ComplexScalar { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_f64(1.0, 0.0, prec)
    }

    pub fn i(prec: u32) -> Self {
        Self::from_f64(0.0, 1.0, prec)
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        ComplexScalar { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_c64(c: Complex64, prec: u32) -> Self {
        Self::from_f64(c.re, c.im, prec)
    }

    pub fn from_real(re: Float) -> Self {
        let im = Float::new(re.prec());
        ComplexScalar { re, im }
    }

    pub fn from_parts(re: Float, im: Float) -> Self {
        let prec = re.prec().max(im.prec());
        ComplexScalar { re: Float::with_val(prec, re), im: Float::with_val(prec, im) }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        Self::from_real(Float::with_val(prec.max(MIN_PRECISION), q))
    }

    pub fn from_i64(n: i64, prec: u32) -> Self {
        Self::from_real(Float::with_val(prec.max(MIN_PRECISION), n))
    }

    /// Parses a pair of decimal strings at the given precision.
    pub fn parse(re: &str, im: &str, prec: u32) -> Result<Self, String> {
        let prec = prec.max(MIN_PRECISION);
        let r = Float::parse(re).map_err(|e| format!("bad real part {re:?}: {e}"))?;
        let i = Float::parse(im).map_err(|e| format!("bad imaginary part {im:?}: {e}"))?;
        Ok(ComplexScalar { re: Float::with_val(prec, r), im: Float::with_val(prec, i) })
    }

    /// Decimal strings that parse back to the identical value at this precision.
    pub fn to_strings(&self) -> (String, String) {
        (self.re.to_string_radix(10, None), self.im.to_string_radix(10, None))
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        let prec = prec.max(MIN_PRECISION);
        ComplexScalar { re: Float::with_val(prec, &self.re), im: Float::with_val(prec, &self.im) }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn conj(&self) -> Self {
        ComplexScalar { re: self.re.clone(), im: Float::with_val(self.im.prec(), -&self.im) }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        let a = Float::with_val(p, self.re.square_ref());
        let b = Float::with_val(p, self.im.square_ref());
        a + b
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_f64(&self) -> f64 {
        self.abs().to_f64()
    }

    pub fn arg(&self) -> Float {
        Float::with_val(self.prec(), self.im.atan2_ref(&self.re))
    }

    pub fn scale(&self, s: &Float) -> Self {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_f64(&self, s: f64) -> Self {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn scale_i64(&self, s: i64) -> Self {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, &self.re * s), im: Float::with_val(p, &self.im * s) }
    }

    pub fn div_real(&self, s: &Float) -> Self {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, &self.re / s), im: Float::with_val(p, &self.im / s) }
    }

    pub fn recip(&self) -> Self {
        let n = self.norm_sqr();
        let p = self.prec();
        ComplexScalar {
            re: Float::with_val(p, &self.re / &n),
            im: Float::with_val(p, -Float::with_val(p, &self.im / &n)),
        }
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        let r = Float::with_val(p, self.re.exp_ref());
        let (s, c) = self.im.clone().sin_cos(Float::new(p));
        ComplexScalar { re: Float::with_val(p, &r * &c), im: Float::with_val(p, &r * &s) }
    }

    /// Principal logarithm, argument in (−π, π].
    pub fn ln(&self) -> Self {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, self.abs().ln_ref()), im: self.arg() }
    }

    /// `self^e` on the principal branch.
    pub fn pow_real(&self, e: &Float) -> Self {
        if self.is_zero() {
            return Self::zero(self.prec());
        }
        let l = self.ln();
        l.scale(e).exp()
    }

    pub fn powi(&self, n: i64) -> Self {
        let p = self.prec();
        if n == 0 {
            return Self::one(p);
        }
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one(p);
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            k >>= 1;
        }
        acc
    }

    /// The `n`-th root whose argument lies in (−π/n, π/n].
    pub fn principal_root(&self, n: u32) -> Self {
        let p = self.prec();
        if self.is_zero() {
            return Self::zero(p);
        }
        let r = self.abs();
        let mag = Float::with_val(p, r.pow(Float::with_val(p, 1) / Float::with_val(p, n)));
        let theta = Float::with_val(p, self.arg() / n);
        let (s, c) = theta.sin_cos(Float::new(p));
        ComplexScalar { re: Float::with_val(p, &mag * &c), im: Float::with_val(p, &mag * &s) }
    }

    pub fn approx_eq(&self, other: &Self, rel: f64) -> bool {
        let d = (self - other).abs_f64();
        let s = self.abs_f64().max(other.abs_f64());
        if s <= 1e-30 {
            d <= rel.max(1e-30)
        } else {
            d <= rel * s
        }
    }
}

/// High-precision π.
pub fn pi(prec: u32) -> Float {
    Float::with_val(prec.max(MIN_PRECISION), Constant::Pi)
}

/// `n!` as an MPFR float.
pub fn factorial(n: u32, prec: u32) -> Float {
    Float::with_val(prec.max(MIN_PRECISION), Float::factorial(n))
}

/// Relative comparison that switches to absolute below 1e−30.
pub fn rel_close(a: Complex64, b: Complex64, tol: f64) -> bool {
    let d = (a - b).norm();
    let s = a.norm().max(b.norm());
    if s <= 1e-30 {
        d <= tol.max(1e-30)
    } else {
        d <= tol * s
    }
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    let s = b.norm();
    if s <= 1e-30 {
        (a - b).norm()
    } else {
        (a - b).norm() / s
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl<'a, 'b> $tr<&'b ComplexScalar> for &'a ComplexScalar {
            type Output = ComplexScalar;
            fn $m(self, rhs: &'b ComplexScalar) -> ComplexScalar {
                let f: fn(&ComplexScalar, &ComplexScalar) -> ComplexScalar = $body;
                f(self, rhs)
            }
        }
        impl $tr<ComplexScalar> for ComplexScalar {
            type Output = ComplexScalar;
            fn $m(self, rhs: ComplexScalar) -> ComplexScalar {
                (&self).$m(&rhs)
            }
        }
        impl<'b> $tr<&'b ComplexScalar> for ComplexScalar {
            type Output = ComplexScalar;
            fn $m(self, rhs: &'b ComplexScalar) -> ComplexScalar {
                (&self).$m(rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| {
    let p = a.prec().max(b.prec());
    ComplexScalar { re: Float::with_val(p, &a.re + &b.re), im: Float::with_val(p, &a.im + &b.im) }
});

binop!(Sub, sub, |a, b| {
    let p = a.prec().max(b.prec());
    ComplexScalar { re: Float::with_val(p, &a.re - &b.re), im: Float::with_val(p, &a.im - &b.im) }
});

binop!(Mul, mul, |a, b| {
    let p = a.prec().max(b.prec());
    let ac = Float::with_val(p, &a.re * &b.re);
    let bd = Float::with_val(p, &a.im * &b.im);
    let ad = Float::with_val(p, &a.re * &b.im);
    let bc = Float::with_val(p, &a.im * &b.re);
    ComplexScalar { re: ac - bd, im: ad + bc }
});

binop!(Div, div, |a, b| a * &b.recip());

impl Neg for &ComplexScalar {
    type Output = ComplexScalar;
    fn neg(self) -> ComplexScalar {
        let p = self.prec();
        ComplexScalar { re: Float::with_val(p, -&self.re), im: Float::with_val(p, -&self.im) }
    }
}

impl Neg for ComplexScalar {
    type Output = ComplexScalar;
    fn neg(self) -> ComplexScalar {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_round_trip_is_bit_exact() {
        let a = ComplexScalar::from_f64(1.0, 3.0, 256).recip().exp();
        let (r, i) = a.to_strings();
        let b = ComplexScalar::parse(&r, &i, 256).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn principal_root_branch() {
        let m1 = ComplexScalar::from_f64(-1.0, 0.0, 128);
        let r = m1.principal_root(2).to_c64();
        assert!((r - Complex64::new(0.0, 1.0)).norm() < 1e-30);
        let x = ComplexScalar::from_f64(0.0, -8.0, 128).principal_root(3).to_c64();
        // arg −π/2 → −π/6
        assert!((x.arg() + std::f64::consts::PI / 6.0).abs() < 1e-14);
        assert!((x.norm() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exp_ln_inverse() {
        let z = ComplexScalar::from_f64(0.3, -2.1, 256);
        assert!(z.ln().exp().approx_eq(&z, 1e-70));
        let w = &z * &z.recip();
        assert!(w.approx_eq(&ComplexScalar::one(256), 1e-70));
        assert!(z.powi(-3).approx_eq(&(&z * &z * &z).recip(), 1e-70));
    }
}

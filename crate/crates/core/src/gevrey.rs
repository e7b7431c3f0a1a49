//! Truncated formal power series with Gevrey-1 bookkeeping.

use num_complex::Complex64;
use rug::Float;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::{factorial, ComplexScalar};

/// `a_0 + a_1 z + … + a_N z^N`, known modulo `z^{N+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct GevreySeries {
    coeffs: Vec<ComplexScalar>,
    prec: u32,
    pub gevrey_constant: Option<f64>,
}

/// Closed sector `S(d, Θ, ρ)` in the `z`-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub direction: f64,
    pub opening: f64,
    pub radius: f64,
}

impl Sector {
    pub fn new(direction: f64, opening: f64, radius: f64) -> Result<Self> {
        if !(opening > 0.0 && radius > 0.0) {
            return Err(Error::Invalid("sector needs positive opening and radius".into()));
        }
        Ok(Sector { direction, opening, radius })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let r = z.norm();
        r > 0.0 && r <= self.radius && angle_dist(z.arg(), self.direction) <= 0.5 * self.opening
    }
}

/// Unbounded sector `S(d, ε)` in the Borel plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnboundedSector {
    pub direction: f64,
    pub half_opening: f64,
}

impl UnboundedSector {
    pub fn new(direction: f64, half_opening: f64) -> Result<Self> {
        if !(half_opening > 0.0) {
            return Err(Error::Invalid("unbounded sector needs ε > 0".into()));
        }
        Ok(UnboundedSector { direction, half_opening })
    }
}

/// Distance between two angles on the circle, in `[0, π]`.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(std::f64::consts::TAU);
    t.min(std::f64::consts::TAU - t)
}

impl GevreySeries {
    pub fn new(coeffs: Vec<ComplexScalar>) -> Self {
        assert!(!coeffs.is_empty(), "a series stores at least a_0");
        let prec = coeffs.iter().map(|c| c.prec()).max().unwrap();
        let coeffs = coeffs.into_iter().map(|c| if c.prec() == prec { c } else { c.with_prec(prec) }).collect();
        GevreySeries { coeffs, prec, gevrey_constant: None }
    }

    pub fn zero(order: usize, prec: u32) -> Self {
        Self::new(vec![ComplexScalar::zero(prec); order + 1])
    }

    pub fn from_c64(c: &[Complex64], prec: u32) -> Self {
        Self::new(c.iter().map(|&v| ComplexScalar::from_c64(v, prec)).collect())
    }

    pub fn from_f64(c: &[f64], prec: u32) -> Self {
        Self::new(c.iter().map(|&v| ComplexScalar::from_f64(v, 0.0, prec)).collect())
    }

    /// The series `z` (identity) truncated at `order`.
    pub fn variable(order: usize, prec: u32) -> Self {
        let mut s = Self::zero(order, prec);
        if order >= 1 {
            s.coeffs[1] = ComplexScalar::one(prec);
        }
        s
    }

    pub fn constant(c: ComplexScalar, order: usize) -> Self {
        let p = c.prec();
        let mut s = Self::zero(order, p);
        s.coeffs[0] = c;
        s
    }

    pub fn trunc_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[ComplexScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &ComplexScalar {
        &self.coeffs[n]
    }

    pub fn coeffs_c64(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.to_c64()).collect()
    }

    /// Attaches the estimated Gevrey constant.
    pub fn with_gevrey_constant(mut self) -> Self {
        self.gevrey_constant = Some(estimate_gevrey_constant(&self));
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.trunc_order());
        GevreySeries::new(self.coeffs[..=n].to_vec())
    }

    /// Pads with zero coefficients. Only meaningful for exact polynomials.
    pub fn pad_polynomial(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        while c.len() < order + 1 {
            c.push(ComplexScalar::zero(self.prec));
        }
        GevreySeries::new(c)
    }

    /// Index of the first nonzero coefficient, if any.
    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    fn common(&self, other: &Self) -> usize {
        self.trunc_order().min(other.trunc_order())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.common(other);
        GevreySeries::new((0..=n).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.common(other);
        GevreySeries::new((0..=n).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect())
    }

    pub fn neg(&self) -> Self {
        GevreySeries::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, s: &ComplexScalar) -> Self {
        GevreySeries::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common(other);
        let p = self.prec.max(other.prec);
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut acc = ComplexScalar::zero(p);
            for i in 0..=k {
                if self.coeffs[i].is_zero() || other.coeffs[k - i].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[i] * &other.coeffs[k - i]);
            }
            out.push(acc);
        }
        GevreySeries::new(out)
    }

    /// `self(z^k)`-free multiplication by `z^k`, dropping the top `k` coefficients.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.trunc_order();
        let mut c = vec![ComplexScalar::zero(self.prec); k.min(n + 1)];
        c.extend(self.coeffs.iter().take(n + 1 - c.len()).cloned());
        GevreySeries::new(c)
    }

    /// `self(b(z))`; requires `b_0 = 0`.
    pub fn compose(&self, b: &Self) -> Result<Self> {
        if !b.coeffs[0].is_zero() {
            return Err(Error::Incompatible("compose requires the inner series to vanish at 0".into()));
        }
        let n = self.common(b);
        let b = b.truncate(n);
        let mut acc = GevreySeries::constant(self.coeffs[n].clone(), n);
        for i in (0..n).rev() {
            acc = acc.mul(&b);
            acc.coeffs[0] = &acc.coeffs[0] + &self.coeffs[i];
        }
        Ok(acc)
    }

    pub fn reciprocal(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::ZeroLeadingCoefficient("reciprocal".into()));
        }
        let n = self.trunc_order();
        let inv0 = a0.recip();
        let mut out: Vec<ComplexScalar> = vec![inv0.clone()];
        for k in 1..=n {
            let mut acc = ComplexScalar::zero(self.prec);
            for i in 1..=k {
                if self.coeffs[i].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[i] * &out[k - i]);
            }
            out.push(-(&acc * &inv0));
        }
        Ok(GevreySeries::new(out))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.reciprocal()?))
    }

    pub fn derivative(&self) -> Self {
        let n = self.trunc_order();
        if n == 0 {
            return GevreySeries::zero(0, self.prec);
        }
        GevreySeries::new((1..=n).map(|k| self.coeffs[k].scale_i64(k as i64)).collect())
    }

    /// Term-wise antiderivative with zero constant; the order grows by one.
    pub fn integral(&self) -> Self {
        let mut c = vec![ComplexScalar::zero(self.prec)];
        for (k, a) in self.coeffs.iter().enumerate() {
            c.push(a.div_real(&Float::with_val(self.prec, (k + 1) as u64)));
        }
        GevreySeries::new(c)
    }

    pub fn exp(&self) -> Self {
        let n = self.trunc_order();
        let mut out = vec![self.coeffs[0].exp()];
        for k in 1..=n {
            let mut acc = ComplexScalar::zero(self.prec);
            for i in 1..=k {
                if self.coeffs[i].is_zero() {
                    continue;
                }
                acc = &acc + &(&self.coeffs[i].scale_i64(i as i64) * &out[k - i]);
            }
            out.push(acc.div_real(&Float::with_val(self.prec, k as u64)));
        }
        GevreySeries::new(out)
    }

    /// Principal logarithm of `a_0` plus `∫ a'/a`.
    pub fn log(&self) -> Result<Self> {
        if self.coeffs[0].is_zero() {
            return Err(Error::ZeroLeadingCoefficient("log".into()));
        }
        let n = self.trunc_order();
        if n == 0 {
            return Ok(GevreySeries::new(vec![self.coeffs[0].ln()]));
        }
        let q = self.derivative().div(&self.truncate(n - 1))?;
        let mut out = q.integral();
        out.coeffs[0] = self.coeffs[0].ln();
        Ok(out)
    }

    /// `n`-th root; the valuation must be divisible by `n`.
    ///
    /// The leading root has argument in `(−π/n, π/n]`, rotated by `e^{2πi·branch/n}`.
    /// A series of valuation `v` known to order `N` yields a root known to order `N − v + v/n`.
    pub fn nth_root(&self, n: u32, branch: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("0-th root".into()));
        }
        let v = self.valuation().ok_or_else(|| Error::ZeroLeadingCoefficient("nth_root of zero".into()))?;
        if v % n as usize != 0 {
            return Err(Error::ZeroLeadingCoefficient(format!("valuation {v} not divisible by {n}")));
        }
        let tail = GevreySeries::new(self.coeffs[v..].to_vec());
        let m = tail.trunc_order();
        let a0 = &tail.coeffs[0];
        let p = Float::with_val(self.prec, 1) / Float::with_val(self.prec, n);
        // J.C.P. Miller recurrence for a^p.
        let mut root0 = a0.principal_root(n);
        if branch.rem_euclid(n as i64) != 0 {
            let ang = crate::scalar::pi(self.prec) * Float::with_val(self.prec, 2 * branch) / n;
            let rot = ComplexScalar::from_parts(ang.clone().cos(), ang.sin());
            root0 = &root0 * &rot;
        }
        let inv0 = a0.recip();
        let mut b = vec![root0];
        for k in 1..=m {
            let mut acc = ComplexScalar::zero(self.prec);
            for i in 1..=k {
                if tail.coeffs[i].is_zero() {
                    continue;
                }
                let w = Float::with_val(self.prec, &p + 1u32) * (i as u64) - (k as u64);
                acc = &acc + &(&tail.coeffs[i] * &b[k - i]).scale(&w);
            }
            b.push((&acc * &inv0).div_real(&Float::with_val(self.prec, k as u64)));
        }
        let out = GevreySeries::new(b);
        Ok(if v > 0 { out.pad_polynomial(m).shift_up_exact(v / n as usize) } else { out })
    }

    /// Multiplication by `z^k` keeping all known coefficients (the order grows by `k`).
    pub fn shift_up_exact(&self, k: usize) -> Self {
        let mut c = vec![ComplexScalar::zero(self.prec); k];
        c.extend(self.coeffs.iter().cloned());
        GevreySeries::new(c)
    }

    /// Compositional inverse of a series with `b_0 = 0`, `b_1 ≠ 0`, by Newton iteration.
    pub fn reversion(&self) -> Result<Self> {
        let n = self.trunc_order();
        if n == 0 || !self.coeffs[0].is_zero() || self.coeffs[1].is_zero() {
            return Err(Error::ZeroLeadingCoefficient("reversion needs b_0 = 0 and b_1 ≠ 0".into()));
        }
        let d = self.derivative().pad_polynomial(n);
        let ident = GevreySeries::variable(n, self.prec);
        let mut c = ident.scale(&self.coeffs[1].recip());
        let mut known = 1usize;
        while known < n {
            known = (2 * known).min(n);
            let cc = c.pad_polynomial(known);
            let bc = self.truncate(known).compose(&cc)?;
            let dc = d.truncate(known).compose(&cc)?;
            let corr = bc.sub(&ident.truncate(known)).div(&dc)?;
            c = cc.sub(&corr);
        }
        Ok(c)
    }

    /// `Σ a_n z^n` at a high-precision point.
    pub fn eval(&self, z: &ComplexScalar) -> ComplexScalar {
        let mut acc = ComplexScalar::zero(self.prec.max(z.prec()));
        for a in self.coeffs.iter().rev() {
            acc = &(&acc * z) + a;
        }
        acc
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * z + a.to_c64();
        }
        acc
    }

    /// Partial sum `Σ_{n<N} a_n z^n`.
    pub fn partial_sum(&self, n: usize, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs[..n.min(self.coeffs.len())].iter().rev() {
            acc = acc * z + a.to_c64();
        }
        acc
    }

    /// `s(−z)`.
    pub fn reflect(&self) -> Self {
        GevreySeries::new(
            self.coeffs.iter().enumerate().map(|(n, c)| if n % 2 == 1 { -c } else { c.clone() }).collect(),
        )
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            precision: self.prec,
            trunc_order: self.trunc_order(),
            coeffs: self.coeffs.iter().map(|c| {
                let (r, i) = c.to_strings();
                [r, i]
            })
            .collect(),
        }
    }

    pub fn from_json(j: &SeriesJson) -> Result<Self> {
        if j.coeffs.len() != j.trunc_order + 1 {
            return Err(Error::Invalid(format!(
                "trunc_order {} but {} coefficients",
                j.trunc_order,
                j.coeffs.len()
            )));
        }
        if j.precision < crate::scalar::MIN_PRECISION {
            return Err(Error::Invalid("precision below 64 bits".into()));
        }
        let c = j
            .coeffs
            .iter()
            .map(|[r, i]| ComplexScalar::parse(r, i, j.precision).map_err(Error::Invalid))
            .collect::<Result<Vec<_>>>()?;
        Ok(GevreySeries::new(c))
    }

    /// SHA-256 of the JSON form, used to tag derived artifacts.
    pub fn hash_hex(&self) -> String {
        let s = serde_json::to_string(&self.to_json()).expect("series json");
        hex::encode(Sha256::digest(s.as_bytes()))
    }
}

/// Wire form of a series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub precision: u32,
    pub trunc_order: usize,
    pub coeffs: Vec<[String; 2]>,
}

/// `max_n (|a_n|/n!)^{1/(n+1)}` over stored coefficients.
pub fn estimate_gevrey_constant(s: &GevreySeries) -> f64 {
    let p = s.prec();
    let mut best = Float::with_val(p, 0);
    for (n, a) in s.coeffs().iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let r = Float::with_val(p, a.abs() / factorial(n as u32, p));
        let c = r.root(n as u32 + 1);
        if c > best {
            best = c;
        }
    }
    best.to_f64()
}

/// `Σ a_n z^n ↦ Σ a_n/n! ζ^n`.
pub fn formal_borel(s: &GevreySeries) -> GevreySeries {
    let p = s.prec();
    let mut out = Vec::with_capacity(s.trunc_order() + 1);
    let mut fact = Float::with_val(p, 1);
    for (n, a) in s.coeffs().iter().enumerate() {
        if n > 0 {
            fact *= n as u64;
        }
        out.push(a.div_real(&fact));
    }
    GevreySeries::new(out)
}

/// Inverse of [`formal_borel`] at the coefficient level.
pub fn formal_borel_inverse(s: &GevreySeries) -> GevreySeries {
    let p = s.prec();
    let mut out = Vec::with_capacity(s.trunc_order() + 1);
    let mut fact = Float::with_val(p, 1);
    for (n, a) in s.coeffs().iter().enumerate() {
        if n > 0 {
            fact *= n as u64;
        }
        out.push(a.scale(&fact));
    }
    GevreySeries::new(out)
}

/// Arithmetic dispatched by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Mul,
    Compose,
    Reciprocal,
    Exp,
    Log,
    NthRoot(u32),
}

pub fn series_arith(a: &GevreySeries, b: Option<&GevreySeries>, op: SeriesOp) -> Result<GevreySeries> {
    let need_b = || b.ok_or_else(|| Error::Invalid("binary operation needs two series".into()));
    match op {
        SeriesOp::Add => Ok(a.add(need_b()?)),
        SeriesOp::Mul => Ok(a.mul(need_b()?)),
        SeriesOp::Compose => a.compose(need_b()?),
        SeriesOp::Reciprocal => a.reciprocal(),
        SeriesOp::Exp => Ok(a.exp()),
        SeriesOp::Log => a.log(),
        SeriesOp::NthRoot(n) => a.nth_root(n, 0),
    }
}

/// Report of [`check_asymptotic`].
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub pass: bool,
    /// `C_N` for `N = 0..=N_max`.
    pub constants: Vec<f64>,
    pub reference: f64,
    pub tolerance_factor: f64,
    pub first_failure: Option<usize>,
}

/// Gevrey-1 remainder test of sampled values against a series.
pub fn check_asymptotic(
    samples: &[(Complex64, Complex64)],
    s: &GevreySeries,
    n_max: usize,
    tolerance_factor: f64,
) -> Result<AsymptoticReport> {
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n_max = n_max.min(s.trunc_order());
    let reference = estimate_gevrey_constant(s);
    let bound = tolerance_factor * reference.max(f64::MIN_POSITIVE);
    let mut constants = Vec::with_capacity(n_max + 1);
    let mut first_failure = None;
    let mut fact = 1.0f64;
    for n in 0..=n_max {
        if n > 0 {
            fact *= n as f64;
        }
        let mut sup: f64 = 0.0;
        for &(z, f) in samples {
            let rem = (f - s.partial_sum(n, z)).norm();
            let c = (rem / (z.norm().powi(n as i32) * fact)).powf(1.0 / (n as f64 + 1.0));
            sup = sup.max(c);
        }
        if sup > bound && first_failure.is_none() {
            first_failure = Some(n);
        }
        constants.push(sup);
    }
    Ok(AsymptoticReport { pass: first_failure.is_none(), constants, reference, tolerance_factor, first_failure })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> GevreySeries {
        GevreySeries::from_f64(c, 128)
    }

    #[test]
    fn product_and_compose() {
        let a = p(&[1.0, 1.0, 0.0]);
        let b = p(&[1.0, -1.0, 0.0]);
        assert_eq!(a.mul(&b).coeffs_c64(), vec![1.0.into(), 0.0.into(), (-1.0).into()]);
        let geo = p(&[1.0; 8]);
        let two = p(&[0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = geo.compose(&two).unwrap();
        for (n, v) in c.coeffs_c64().iter().enumerate() {
            assert_eq!(v.re, 2f64.powi(n as i32));
        }
    }

    #[test]
    fn exp_log_and_roots() {
        let a = p(&[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let r = a.log().unwrap().exp();
        assert!(r.sub(&a).coeffs().iter().all(|c| c.abs_f64() < 1e-35));
        let sq = a.mul(&a).nth_root(2, 0).unwrap();
        assert!(sq.sub(&a).coeffs().iter().all(|c| c.abs_f64() < 1e-35));
        // z^2(1+z)^2 → z(1+z)
        let v = p(&[0.0, 0.0, 1.0, 2.0, 1.0, 0.0, 0.0]);
        let rt = v.nth_root(2, 0).unwrap();
        assert_eq!(rt.trunc_order(), 5);
        let expect = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        for (c, e) in rt.coeffs_c64().iter().zip(expect) {
            assert!((c.re - e).abs() < 1e-30 && c.im.abs() < 1e-30);
        }
    }

    #[test]
    fn reversion_of_exp_minus_one() {
        // b = e^z − 1, inverse log(1+u)
        let n = 15;
        let mut c = vec![0.0];
        let mut f = 1.0;
        for k in 1..=n {
            f *= k as f64;
            c.push(1.0 / f);
        }
        let b = p(&c);
        let inv = b.reversion().unwrap();
        for (k, v) in inv.coeffs_c64().iter().enumerate().skip(1) {
            let e = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            assert!((v.re - e).abs() < 1e-14, "k={k} {v}");
        }
    }

    #[test]
    fn gevrey_constants() {
        let mut c = vec![];
        let mut f = 1.0;
        for n in 0..15 {
            if n > 0 {
                f *= n as f64;
            }
            c.push(f);
        }
        let s = p(&c);
        assert!((estimate_gevrey_constant(&s) - 1.0).abs() < 1e-12);
        let b = formal_borel(&s);
        assert!(b.coeffs_c64().iter().all(|v| (v.re - 1.0).abs() < 1e-12));
        assert_eq!(estimate_gevrey_constant(&p(&[1.0])), 1.0);
        assert_eq!(estimate_gevrey_constant(&p(&[0.0, 0.0])), 0.0);
    }

    #[test]
    fn json_round_trip() {
        let s = p(&[1.0, 1.0 / 3.0, -2.5]).exp();
        let j = serde_json::to_string(&s.to_json()).unwrap();
        let back: SeriesJson = serde_json::from_str(&j).unwrap();
        assert_eq!(GevreySeries::from_json(&back).unwrap(), s);
    }
}

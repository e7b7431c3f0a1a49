//! Borel-plane continuation, Laplace transform and 1-summation.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gevrey::{formal_borel, GevreySeries, UnboundedSector};
use crate::poly::{simple_roots, Poly};
use crate::quadrature;
use crate::scalar::ComplexScalar;

/// Tuning shared by the continuation strategies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationConfig {
    /// Diagonal Padé order; `None` means `floor(N/2)`.
    pub pade_order: Option<usize>,
    /// Largest relative error estimate accepted from a continuation.
    pub agree_tol: f64,
    /// Taylor-stepping step as a fraction of the current convergence radius.
    pub step_fraction: f64,
    /// Guard distance relative to `|ζ|`.
    pub guard_rel: f64,
    /// Precision used when evaluating approximants.
    pub eval_prec: u32,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        ContinuationConfig { pade_order: None, agree_tol: 1e-8, step_fraction: 0.3, guard_rel: 1e-3, eval_prec: 128 }
    }
}

/// Value of a continuation together with a self-reported disagreement estimate.
#[derive(Clone, Copy, Debug)]
pub struct ContinuedValue {
    pub value: Complex64,
    pub spread: f64,
}

/// A prepared continuation of one Borel-plane germ.
pub trait Continuation: Send + Sync {
    fn eval(&self, zeta: Complex64) -> Result<ContinuedValue>;
    /// Singularities the method can see on its own (e.g. approximant poles).
    fn poles(&self) -> Vec<Complex64> {
        Vec::new()
    }
}

/// A continuation method, registered by name.
pub trait ContinuationStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, base: &GevreySeries, cfg: &ContinuationConfig) -> Result<Arc<dyn Continuation>>;
}

static REGISTRY: Lazy<BTreeMap<&'static str, Arc<dyn ContinuationStrategy>>> = Lazy::new(|| {
    let mut m: BTreeMap<&'static str, Arc<dyn ContinuationStrategy>> = BTreeMap::new();
    for s in [Arc::new(PadeStrategy) as Arc<dyn ContinuationStrategy>, Arc::new(TaylorSteppingStrategy)] {
        m.insert(s.name(), s);
    }
    m
});

/// Looks up a continuation strategy by name.
pub fn strategy(name: &str) -> Result<Arc<dyn ContinuationStrategy>> {
    REGISTRY.get(name).cloned().ok_or_else(|| Error::UnknownStrategy(name.to_string()))
}

pub fn strategy_names() -> Vec<&'static str> {
    REGISTRY.keys().copied().collect()
}

/// Root-test estimate of the convergence radius from the upper half of the coefficients.
pub fn radius_estimate(c: &[ComplexScalar]) -> f64 {
    let n = c.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let mut best = 0.0f64;
    for (k, a) in c.iter().enumerate().skip(n / 2).filter(|(k, _)| *k > 0) {
        if a.is_zero() {
            continue;
        }
        let l = a.abs().ln().to_f64() / k as f64;
        best = best.max(l.exp());
    }
    if best == 0.0 {
        f64::INFINITY
    } else {
        1.0 / best
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting; `None` if rank deficient.
pub fn solve_dense(mut a: Vec<Vec<ComplexScalar>>, mut b: Vec<ComplexScalar>, rank_tol: f64) -> Option<Vec<ComplexScalar>> {
    let n = b.len();
    let scale = a.iter().flatten().map(|v| v.abs_f64()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r][col].abs_f64()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pmax <= rank_tol * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            for c in col..n {
                let t = &f * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            let t = &f * &b[col];
            b[r] = &b[r] - &t;
        }
    }
    let mut x = vec![ComplexScalar::zero(b[0].prec()); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s = &s - &(&a[r][c] * &x[c]);
        }
        x[r] = &s / &a[r][r];
    }
    Some(x)
}

/// `[L/M]` approximant in the scaled variable `w = ζ/scale`.
#[derive(Clone, Debug)]
pub struct PadeApproximant {
    pub num: Vec<ComplexScalar>,
    pub den: Vec<ComplexScalar>,
    pub scale: f64,
}

impl PadeApproximant {
    /// Diagonal approximant of order at most `m`, reduced while the system is rank deficient.
    pub fn diagonal(c: &[ComplexScalar], m: usize) -> PadeApproximant {
        let prec = c[0].prec();
        let r = radius_estimate(c);
        let scale = if r.is_finite() && r > 0.0 { r } else { 1.0 };
        let sc = Float::with_val(prec, scale);
        let mut pw = Float::with_val(prec, 1);
        let cs: Vec<ComplexScalar> = c
            .iter()
            .map(|v| {
                let o = v.scale(&pw);
                pw *= &sc;
                o
            })
            .collect();
        let rank_tol = 2f64.powi(-(prec as i32) / 2);
        let mut m = m.min((c.len() - 1) / 2);
        loop {
            if m == 0 {
                return PadeApproximant { num: vec![cs[0].clone()], den: vec![ComplexScalar::one(prec)], scale };
            }
            let l = m;
            let get = |k: isize| if k < 0 { ComplexScalar::zero(prec) } else { cs[k as usize].clone() };
            let a: Vec<Vec<ComplexScalar>> = (1..=m)
                .map(|i| (1..=m).map(|j| get((l + i) as isize - j as isize)).collect())
                .collect();
            let b: Vec<ComplexScalar> = (1..=m).map(|i| -get((l + i) as isize)).collect();
            if let Some(q) = solve_dense(a, b, rank_tol) {
                let mut den = vec![ComplexScalar::one(prec)];
                den.extend(q);
                let num = (0..=l)
                    .map(|i| {
                        let mut s = ComplexScalar::zero(prec);
                        for j in 0..=i.min(m) {
                            s = &s + &(&den[j] * &cs[i - j]);
                        }
                        s
                    })
                    .collect();
                return PadeApproximant { num, den, scale };
            }
            m -= 1;
        }
    }

    pub fn order(&self) -> usize {
        self.den.len() - 1
    }

    pub fn eval(&self, zeta: Complex64, prec: u32) -> Complex64 {
        let w = ComplexScalar::from_c64(zeta / self.scale, prec);
        let h = |c: &[ComplexScalar]| {
            let mut acc = ComplexScalar::zero(prec);
            for a in c.iter().rev() {
                acc = &(&acc * &w) + a;
            }
            acc
        };
        (&h(&self.num) / &h(&self.den)).to_c64()
    }

    /// Zeros of the denominator, in the `ζ` variable.
    pub fn poles(&self) -> Vec<Complex64> {
        let prec = self.den[0].prec();
        let p = Poly::new(self.den.clone(), prec);
        if p.degree() == 0 {
            return vec![];
        }
        simple_roots(&p, 500).iter().map(|r| r.to_c64() * self.scale).collect()
    }
}

/// Series shorter than this are continued as the polynomial they are.
pub const SHORT_SERIES: usize = 8;

/// Diagonal Padé continuation compared against the next lower order.
pub struct PadeStrategy;

struct PadeContinuation {
    main: PadeApproximant,
    lower: PadeApproximant,
    prec: u32,
}

impl ContinuationStrategy for PadeStrategy {
    fn name(&self) -> &'static str {
        "pade"
    }

    fn build(&self, base: &GevreySeries, cfg: &ContinuationConfig) -> Result<Arc<dyn Continuation>> {
        if base.trunc_order() < SHORT_SERIES {
            // Too few terms to say anything beyond the polynomial itself.
            let poly = PadeApproximant { num: base.coeffs().to_vec(), den: vec![ComplexScalar::one(base.prec())], scale: 1.0 };
            return Ok(Arc::new(PadeContinuation { main: poly.clone(), lower: poly, prec: cfg.eval_prec.min(base.prec()) }));
        }
        let m = cfg.pade_order.unwrap_or(base.trunc_order() / 2);
        let main = PadeApproximant::diagonal(base.coeffs(), m);
        let lower = PadeApproximant::diagonal(base.coeffs(), m.min(base.trunc_order() / 2).saturating_sub(1));
        Ok(Arc::new(PadeContinuation { main, lower, prec: cfg.eval_prec.min(base.prec()) }))
    }
}

impl Continuation for PadeContinuation {
    fn eval(&self, zeta: Complex64) -> Result<ContinuedValue> {
        let a = self.main.eval(zeta, self.prec);
        let b = self.lower.eval(zeta, self.prec);
        if !a.is_finite() {
            return Err(Error::ContinuationDiverged(format!("approximant not finite at {zeta}")));
        }
        Ok(ContinuedValue { value: a, spread: (a - b).norm() })
    }

    fn poles(&self) -> Vec<Complex64> {
        self.main.poles()
    }
}

/// Re-expansion along the segment `[0, ζ]`.
///
/// Each step moves by `step_fraction` of the current root-test radius. Alongside the
/// coefficients it carries a bound on their error, pushed through the same shift together with
/// a geometric model of the discarded tail, and drops coefficients once the bound reaches half
/// their size. Truncated data only determine the function near the original disk: the number of
/// usable terms falls roughly like `e^{-3L}` in the hyperbolic length `L` of the path, so far
/// points fail with `ContinuationDiverged` rather than return a wrong value.
pub struct TaylorSteppingStrategy;

struct TaylorStepping {
    coeffs: Vec<ComplexScalar>,
    fraction: f64,
    prec: u32,
}

impl ContinuationStrategy for TaylorSteppingStrategy {
    fn name(&self) -> &'static str {
        "taylor_stepping"
    }

    fn build(&self, base: &GevreySeries, cfg: &ContinuationConfig) -> Result<Arc<dyn Continuation>> {
        if !(cfg.step_fraction > 0.0 && cfg.step_fraction < 0.5) {
            return Err(Error::Invalid("step fraction must lie in (0, 0.5)".into()));
        }
        let n = base.trunc_order() as f64 + 1.0;
        let extra = (n * (1.0 / (1.0 - cfg.step_fraction)).log2()).ceil() as u32 + 32;
        let prec = base.prec().max(cfg.eval_prec) + extra;
        let coeffs = base.coeffs().iter().map(|c| c.with_prec(prec)).collect();
        Ok(Arc::new(TaylorStepping { coeffs, fraction: cfg.step_fraction, prec }))
    }
}

fn reexpand(c: &[ComplexScalar], h: &ComplexScalar, keep: usize) -> Vec<ComplexScalar> {
    // Repeated synthetic division gives the Taylor coefficients at the shifted centre.
    let mut a = c.to_vec();
    let n = a.len();
    for i in 0..keep.min(n) {
        for k in (i..n - 1).rev() {
            let t = &a[k + 1] * h;
            a[k] = &a[k] + &t;
        }
    }
    a.truncate(keep);
    a
}

fn reexpand_bound(e: &[f64], h: f64, keep: usize) -> Vec<f64> {
    let mut a = e.to_vec();
    let n = a.len();
    for i in 0..keep.min(n) {
        for k in (i..n - 1).rev() {
            a[k] += a[k + 1] * h;
        }
    }
    a.truncate(keep);
    a
}

/// `|a_k| s^k` without leaving the f64 range in between.
fn scaled_abs(c: &[ComplexScalar], s: f64) -> Vec<f64> {
    let ls = s.ln();
    c.iter()
        .enumerate()
        .map(|(k, a)| if a.is_zero() { 0.0 } else { (a.abs().ln().to_f64() + k as f64 * ls).exp() })
        .collect()
}

/// Number of leading coefficients whose error is below `rel` times the local size. The size is
/// taken over a small window so that series with vanishing odd or even terms are not cut short.
fn accurate_prefix(size: &[f64], err: &[f64], rel: f64) -> usize {
    (0..size.len())
        .take_while(|&j| {
            let local = size[j.saturating_sub(2)..(j + 3).min(size.len())].iter().fold(0.0f64, |m, &x| m.max(x));
            err[j] < rel * local
        })
        .count()
}

impl Continuation for TaylorStepping {
    fn eval(&self, zeta: Complex64) -> Result<ContinuedValue> {
        let mut coeffs = self.coeffs.clone();
        let ulp = 2f64.powi(-(self.prec as i32));
        // Errors are kept in the variable (ζ - centre)/scale.
        let mut scale = radius_estimate(&coeffs);
        if !scale.is_finite() {
            scale = zeta.norm().max(1.0);
        }
        let mut err: Vec<f64> = scaled_abs(&coeffs, scale).iter().map(|a| a * ulp).collect();
        let mut center = Complex64::new(0.0, 0.0);
        for _ in 0..400 {
            let size = scaled_abs(&coeffs, scale);
            let m = accurate_prefix(&size, &err, 1e-6).max(2);
            let mut r = radius_estimate(&coeffs[..m.min(coeffs.len())]);
            if !r.is_finite() {
                r = 2.0 * (zeta - center).norm().max(scale);
            }
            let rho = 0.95 * r;
            let lq = (rho / scale).ln();
            for (j, e) in err.iter_mut().enumerate() {
                if *e > 0.0 {
                    *e = (e.ln() + j as f64 * lq).exp();
                }
            }
            scale = rho;
            let size = scaled_abs(&coeffs, scale);
            // The last quarter of the terms sets the size of the unknown tail.
            let from = 3 * size.len() / 4;
            let big = size[from..].iter().zip(&err[from..]).fold(0.0f64, |m, (a, e)| m.max(a + e));
            let rem = zeta - center;
            if rem.norm() <= 0.5 * r || rem.norm() == 0.0 {
                let w = ComplexScalar::from_c64(rem, self.prec);
                let mut acc = ComplexScalar::zero(self.prec);
                for a in coeffs.iter().rev() {
                    acc = &(&acc * &w) + a;
                }
                let x = rem.norm() / rho;
                let mut bound = err.iter().rev().fold(0.0, |s, e| s * x + e);
                bound += big * x.powi(coeffs.len() as i32) / (1.0 - x);
                return Ok(ContinuedValue { value: acc.to_c64(), spread: bound });
            }
            let len = (self.fraction * r).min(rem.norm());
            let step = rem / rem.norm() * len;
            let n = coeffs.len();
            // Unknown coefficients past the end enter the error through the tail model.
            let mut ext = err.clone();
            ext.resize(3 * n, big);
            let h = ComplexScalar::from_c64(step, self.prec);
            let next = reexpand(&coeffs, &h, n);
            let size = scaled_abs(&next, scale);
            let mut next_err = reexpand_bound(&ext, len / rho, n);
            for (e, a) in next_err.iter_mut().zip(&size) {
                *e += a * ulp;
            }
            let keep = accurate_prefix(&size, &next_err, 0.5);
            if keep < 16 {
                return Err(Error::ContinuationDiverged(format!("ran out of Taylor terms before reaching {zeta}")));
            }
            coeffs = next;
            coeffs.truncate(keep);
            err = next_err;
            err.truncate(keep);
            center += step;
        }
        Err(Error::ContinuationDiverged(format!("too many Taylor steps toward {zeta}")))
    }
}

/// Borel-plane function: Taylor data at 0 plus a continuation method.
#[derive(Clone)]
pub struct BorelFunction {
    pub base: GevreySeries,
    pub method: String,
    pub known_singularities: Vec<Complex64>,
    pub guard_rel: f64,
    cont: Arc<dyn Continuation>,
}

impl std::fmt::Debug for BorelFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BorelFunction")
            .field("order", &self.base.trunc_order())
            .field("method", &self.method)
            .field("known_singularities", &self.known_singularities)
            .finish()
    }
}

impl BorelFunction {
    pub fn new(base: GevreySeries, method: &str, cfg: &ContinuationConfig) -> Result<Self> {
        let cont = strategy(method)?.build(&base, cfg)?;
        Ok(BorelFunction { base, method: method.to_string(), known_singularities: vec![], guard_rel: cfg.guard_rel, cont })
    }

    pub fn pade(base: GevreySeries) -> Result<Self> {
        Self::new(base, "pade", &ContinuationConfig::default())
    }

    /// Adds singularities, merging those closer than the guard distance.
    pub fn with_singularities(mut self, s: &[Complex64]) -> Self {
        for &p in s {
            if !self.known_singularities.iter().any(|q| (q - p).norm() <= 1e-9 * (1.0 + p.norm())) {
                self.known_singularities.push(p);
            }
        }
        self
    }

    pub fn radius(&self) -> f64 {
        radius_estimate(self.base.coeffs())
    }

    fn check_guard(&self, zeta: Complex64) -> Result<()> {
        for s in &self.known_singularities {
            if (zeta - s).norm() <= self.guard_rel * zeta.norm().max(s.norm()) {
                return Err(Error::NearSingularity { zeta: zeta.to_string(), sing: s.to_string() });
            }
        }
        Ok(())
    }

    pub fn eval_with_spread(&self, zeta: Complex64) -> Result<ContinuedValue> {
        self.check_guard(zeta)?;
        self.cont.eval(zeta)
    }

    pub fn eval(&self, zeta: Complex64) -> Result<Complex64> {
        Ok(self.eval_with_spread(zeta)?.value)
    }

    pub fn approximant_poles(&self) -> Vec<Complex64> {
        self.cont.poles()
    }
}

/// Continuation that refuses when the method's own error estimate exceeds `agree_tol`.
pub fn continue_borel(g: &BorelFunction, zeta: Complex64, agree_tol: f64) -> Result<Complex64> {
    let v = g.eval_with_spread(zeta)?;
    if v.spread > agree_tol * v.value.norm().max(1e-30) {
        return Err(Error::ContinuationDiverged(format!(
            "{} error estimate {:.3e} at {zeta}",
            g.method,
            v.spread / v.value.norm().max(1e-30)
        )));
    }
    Ok(v.value)
}

/// Fitted `|g(ζ)| ≤ C e^{h|ζ|}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpSizeEstimate {
    pub c: f64,
    pub h: f64,
    pub sector: UnboundedSector,
}

/// Least-squares exponential-size fit over radii `samples` in the sector's three rays.
pub fn exp_size_one_estimate(g: &BorelFunction, s: UnboundedSector, samples: &[f64]) -> Result<ExpSizeEstimate> {
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(0.0, f64::max);
    if samples.is_empty() || hi < 10.0 * lo {
        return Err(Error::Invalid("exp-size samples must cover one decade".into()));
    }
    let mut pts = Vec::new();
    for dir in [s.direction - s.half_opening, s.direction, s.direction + s.half_opening] {
        for &t in samples {
            let zeta = Complex64::from_polar(t, dir);
            match g.eval(zeta) {
                Ok(v) if v.is_finite() => pts.push((t, v.norm().max(1e-300).ln())),
                Ok(_) | Err(Error::NearSingularity { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if pts.len() < 3 {
        return Err(Error::EmptyGrid);
    }
    let (h_fit, _) = linear_fit(&pts);
    // Superlinear growth shows up as a steeper outer slope than inner slope.
    let mid = 0.5 * (lo + hi);
    let inner: Vec<_> = pts.iter().copied().filter(|p| p.0 <= mid).collect();
    let outer: Vec<_> = pts.iter().copied().filter(|p| p.0 >= mid).collect();
    if inner.len() >= 2 && outer.len() >= 2 {
        let (s_in, s_out) = (linear_fit(&inner).0, linear_fit(&outer).0);
        if s_out > 1.5 * s_in.max(0.0) + 0.5 {
            return Err(Error::GrowthTooFast(format!("log|g| slope rises from {s_in:.3} to {s_out:.3} over radii [{lo}, {hi}]")));
        }
    }
    let h = h_fit.max(0.0);
    let logc = pts.iter().map(|(t, y)| y - h * t).fold(f64::NEG_INFINITY, f64::max);
    Ok(ExpSizeEstimate { c: logc.exp(), h, sector: s })
}

fn linear_fit(p: &[(f64, f64)]) -> (f64, f64) {
    let n = p.len() as f64;
    let mx = p.iter().map(|x| x.0).sum::<f64>() / n;
    let my = p.iter().map(|x| x.1).sum::<f64>() / n;
    let sxy: f64 = p.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = p.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Parameters of the Laplace quadrature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LaplaceConfig {
    /// Bound on the discarded tail `C e^{(h − Re(e^{id}/z))T}`.
    pub tail_cut: f64,
    /// Relative quadrature tolerance.
    pub quad_tol: f64,
    /// Radii for the exponential-size fit.
    pub fit_radii: Vec<f64>,
    /// Weighted disagreement allowed between consecutive continuation orders.
    pub agree_tol: f64,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        let fit_radii = (0..16).map(|k| 0.5 * 1.35f64.powi(k)).collect();
        LaplaceConfig { tail_cut: 1e-16, quad_tol: 1e-13, fit_radii, agree_tol: 1e-8 }
    }
}

/// Result of one Laplace integral.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LaplaceValue {
    pub value: Complex64,
    pub cutoff: f64,
    pub quad_error: f64,
    pub continuation_spread: f64,
}

fn ray_hits(sings: &[Complex64], d: f64, guard_rel: f64) -> Option<Complex64> {
    let e = Complex64::from_polar(1.0, d);
    sings.iter().copied().find(|s| {
        let t = (s * e.conj()).re;
        let dist = if t <= 0.0 { s.norm() } else { (s - e * t).norm() };
        dist <= guard_rel * s.norm()
    })
}

/// `z^{−1} ∫_0^{∞e^{id}} g(ζ) e^{−ζ/z} dζ`, truncated at the tail cut.
pub fn laplace(g: &BorelFunction, d: f64, z: Complex64, cfg: &LaplaceConfig) -> Result<LaplaceValue> {
    if let Some(s) = ray_hits(&g.known_singularities, d, g.guard_rel) {
        return Err(Error::SingularRay(format!("direction {d} meets {s}")));
    }
    let decay = (Complex64::from_polar(1.0, d) / z).re;
    let est = exp_size_one_estimate(g, UnboundedSector::new(d, 1e-3)?, &cfg.fit_radii)?;
    if decay <= est.h + 1e-12 {
        return Err(Error::DivergentLaplace(format!(
            "Re(e^(id)/z) = {decay:.4} does not exceed the fitted growth rate {:.4}",
            est.h
        )));
    }
    let cutoff = ((est.c.max(1e-300) / cfg.tail_cut).ln() / (decay - est.h)).max(1.0 / decay);
    let e = Complex64::from_polar(1.0, d);
    let mut err: Option<Error> = None;
    let mut eval = |t: f64| -> (Complex64, f64) {
        let zeta = e * t;
        match g.eval_with_spread(zeta) {
            Ok(v) => {
                let w = (-zeta / z).exp() * e / z;
                (v.value * w, v.spread * w.norm())
            }
            Err(ex) => {
                err.get_or_insert(ex);
                (Complex64::new(0.0, 0.0), 0.0)
            }
        }
    };
    // Coarse pass fixes the absolute tolerance of the adaptive pass and integrates the
    // disagreement between continuation orders.
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut spread = 0.0;
    let n = 16;
    let (xs, ws) = quadrature::gl32();
    for k in 0..n {
        let (a, b) = (cutoff * k as f64 / n as f64, cutoff * (k + 1) as f64 / n as f64);
        let (h, m) = (0.5 * (b - a), 0.5 * (a + b));
        for (x, w) in xs.iter().zip(ws) {
            let (v, s) = eval(m + h * x);
            coarse += v * (w * h);
            spread += s * w * h;
        }
    }
    let tol = cfg.quad_tol * coarse.norm().max(1e-300);
    let res = quadrature::integrate(|t| eval(t).0, 0.0, cutoff, tol);
    if let Some(e) = err {
        return Err(match e {
            Error::NearSingularity { .. } => Error::SingularRay(e.to_string()),
            other => other,
        });
    }
    if spread > cfg.agree_tol * res.value.norm().max(1e-300) {
        return Err(Error::ContinuationDiverged(format!(
            "{} error estimate {:.2e} (relative) along the ray",
            g.method,
            spread / res.value.norm().max(1e-300)
        )));
    }
    Ok(LaplaceValue { value: res.value, cutoff, quad_error: res.error, continuation_spread: spread })
}

/// Laplace integral of `g` for the sum in direction `d`, taken along the ray turned toward `arg z`.
///
/// The ray only sweeps angles free of located singularities, so the value is the same
/// function as along `d`; the turned ray shortens the integral near the sector edge.
pub fn laplace_in_sector(g: &BorelFunction, d: f64, z: Complex64, cfg: &LaplaceConfig) -> Result<LaplaceValue> {
    let margin = 0.05;
    let want = (z.arg() - d + PI).rem_euclid(TAU) - PI;
    let mut turn = 0.8 * want;
    for s in &g.known_singularities {
        let a = (s.arg() - d + PI).rem_euclid(TAU) - PI;
        if a * want > 0.0 && a.abs() - margin < turn.abs() {
            turn = a.signum() * (a.abs() - margin).max(0.0);
        }
    }
    laplace(g, d + turn, z, cfg)
}

/// Sampled function on a `z`-grid with provenance.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SampledFunction {
    pub direction: f64,
    pub tolerance: f64,
    pub source_hash: String,
    pub points: Vec<(Complex64, Complex64)>,
}

impl SampledFunction {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["z_re", "z_im", "f_re", "f_im"])?;
        for (z, f) in &self.points {
            wr.write_record([z.re, z.im, f.re, f.im].map(|v| format!("{v:.17e}")))?;
        }
        wr.flush()
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "direction": self.direction,
            "tolerance": self.tolerance,
            "source_hash": self.source_hash,
            "columns": ["z_re", "z_im", "f_re", "f_im"],
            "points": self.points.len(),
        })
    }

    pub fn read_csv<R: std::io::Read>(r: R, sidecar: &serde_json::Value) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut points = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Invalid(e.to_string()))?;
            let v: Vec<f64> = rec.iter().map(|s| s.parse::<f64>().map_err(|e| Error::Invalid(e.to_string()))).collect::<Result<_>>()?;
            if v.len() != 4 {
                return Err(Error::Invalid("expected four columns".into()));
            }
            points.push((Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])));
        }
        Ok(SampledFunction {
            direction: sidecar["direction"].as_f64().unwrap_or(0.0),
            tolerance: sidecar["tolerance"].as_f64().unwrap_or(0.0),
            source_hash: sidecar["source_hash"].as_str().unwrap_or("").to_string(),
            points,
        })
    }
}

/// Options for [`borel_sum_with`].
#[derive(Clone, Debug)]
pub struct SumOptions {
    pub method: String,
    pub continuation: ContinuationConfig,
    pub laplace: LaplaceConfig,
    /// Radius within which Borel singularities are located and guarded against.
    pub singularity_radius: Option<f64>,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions {
            method: "pade".into(),
            continuation: ContinuationConfig::default(),
            laplace: LaplaceConfig::default(),
            singularity_radius: None,
        }
    }
}

/// Builds `B̂(s)` with its located singularities.
pub fn borel_function(s: &GevreySeries, opts: &SumOptions) -> Result<BorelFunction> {
    let b = formal_borel(s);
    let g = BorelFunction::new(b.clone(), &opts.method, &opts.continuation)?;
    let pade = BorelFunction::new(b, "pade", &opts.continuation)?;
    let radius = opts.singularity_radius.unwrap_or_else(|| (4.0 * pade.radius()).min(200.0));
    let sings = locate_borel_singularities(&pade, radius, 1e-4 * radius);
    Ok(g.with_singularities(&sings))
}

/// `S_d(s)` sampled on `z_grid`.
pub fn borel_sum(s: &GevreySeries, d: f64, z_grid: &[Complex64]) -> Result<SampledFunction> {
    borel_sum_with(s, d, z_grid, &SumOptions::default())
}

pub fn borel_sum_with(s: &GevreySeries, d: f64, z_grid: &[Complex64], opts: &SumOptions) -> Result<SampledFunction> {
    if z_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for z in z_grid {
        if crate::gevrey::angle_dist(z.arg(), d) >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::DivergentLaplace(format!("|arg z − d| ≥ π/2 at z = {z}")));
        }
    }
    let g = borel_function(s, opts)?;
    let mut points = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        points.push((z, laplace(&g, d, z, &opts.laplace)?.value));
    }
    Ok(SampledFunction { direction: d, tolerance: opts.laplace.quad_tol, source_hash: s.hash_hex(), points })
}

/// Stable poles of the diagonal Padé approximant of `g′`, within `search_radius`.
///
/// The derivative turns logarithmic branch points into poles, so it is the better target.
pub fn locate_borel_singularities(g: &BorelFunction, search_radius: f64, cluster_tol: f64) -> Vec<Complex64> {
    let d = g.base.derivative();
    let n = d.trunc_order();
    if n < 2 {
        return vec![];
    }
    let m = n / 2;
    let a = PadeApproximant::diagonal(d.coeffs(), m);
    let b = PadeApproximant::diagonal(d.coeffs(), m.saturating_sub(1));
    let pa = a.poles();
    let pb = b.poles();
    let mut out: Vec<Complex64> = Vec::new();
    for p in pa {
        if p.norm() > search_radius || !p.is_finite() {
            continue;
        }
        if !pb.iter().any(|q| (q - p).norm() <= cluster_tol) {
            continue;
        }
        if out.iter().any(|q| (q - p).norm() <= cluster_tol) {
            continue;
        }
        out.push(p);
    }
    out.sort_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap().then(x.arg().partial_cmp(&y.arg()).unwrap()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(n: usize, sign: f64) -> GevreySeries {
        GevreySeries::from_f64(&(0..=n).map(|k| sign.powi(k as i32)).collect::<Vec<_>>(), 256)
    }

    #[test]
    fn registry_lists_both() {
        assert_eq!(strategy_names(), vec!["pade", "taylor_stepping"]);
        assert!(strategy("nope").is_err());
    }

    #[test]
    fn pade_continues_geometric() {
        let g = BorelFunction::pade(geo(20, 1.0)).unwrap().with_singularities(&[Complex64::new(1.0, 0.0)]);
        let v = continue_borel(&g, Complex64::new(2.0, 0.0), 1e-8).unwrap();
        assert!((v + 1.0).norm() < 1e-12);
        assert!(matches!(g.eval(Complex64::new(1.0, 0.0)), Err(Error::NearSingularity { .. })));
    }

    #[test]
    fn poles_of_simple_functions() {
        let g = BorelFunction::pade(geo(20, -1.0)).unwrap();
        let p = locate_borel_singularities(&g, 5.0, 5e-4);
        assert_eq!(p.len(), 1);
        assert!((p[0] + 1.0).norm() < 1e-8);
    }

    #[test]
    fn laplace_of_monomials() {
        let cfg = LaplaceConfig::default();
        let one = BorelFunction::pade(GevreySeries::from_f64(&[1.0, 0.0, 0.0], 128)).unwrap();
        let v = laplace(&one, 0.0, Complex64::new(0.5, 0.0), &cfg).unwrap().value;
        assert!((v - 1.0).norm() < 1e-12);
        let zeta = BorelFunction::pade(GevreySeries::from_f64(&[0.0, 1.0, 0.0], 128)).unwrap();
        let v = laplace(&zeta, 0.0, Complex64::new(0.25, 0.0), &cfg).unwrap().value;
        assert!((v - 0.25).norm() < 1e-12);
    }
}

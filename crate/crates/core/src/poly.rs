//! Dense polynomials over high-precision complex scalars, and their roots.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rug::Float;

use crate::scalar::ComplexScalar;

/// `c_0 + c_1 x + … + c_n x^n`, coefficients ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<ComplexScalar>,
}

/// A root with its multiplicity.
#[derive(Clone, Debug)]
pub struct Root {
    pub value: ComplexScalar,
    pub multiplicity: usize,
}

impl Poly {
    pub fn new(mut coeffs: Vec<ComplexScalar>, prec: u32) -> Self {
        while coeffs.len() > 1 && coeffs.last().unwrap().is_zero() {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ComplexScalar::zero(prec));
        }
        Poly { coeffs }
    }

    pub fn from_c64(c: &[Complex64], prec: u32) -> Self {
        Poly::new(c.iter().map(|&v| ComplexScalar::from_c64(v, prec)).collect(), prec)
    }

    pub fn prec(&self) -> u32 {
        self.coeffs.iter().map(|c| c.prec()).max().unwrap()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    pub fn leading(&self) -> &ComplexScalar {
        self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: &ComplexScalar) -> ComplexScalar {
        let mut acc = ComplexScalar::zero(self.prec().max(x.prec()));
        for a in self.coeffs.iter().rev() {
            acc = &(&acc * x) + a;
        }
        acc
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in self.coeffs.iter().rev() {
            acc = acc * x + a.to_c64();
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        let p = self.prec();
        if self.degree() == 0 {
            return Poly::new(vec![ComplexScalar::zero(p)], p);
        }
        Poly::new((1..self.coeffs.len()).map(|k| self.coeffs[k].scale_i64(k as i64)).collect(), p)
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let p = self.prec().max(o.prec());
        let mut out = vec![ComplexScalar::zero(p); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(out, p)
    }

    /// Quotient and remainder.
    pub fn divrem(&self, d: &Poly) -> (Poly, Poly) {
        let p = self.prec().max(d.prec());
        let n = self.degree();
        let m = d.degree();
        if n < m {
            return (Poly::new(vec![ComplexScalar::zero(p)], p), self.clone());
        }
        let mut r = self.coeffs.clone();
        let mut q = vec![ComplexScalar::zero(p); n - m + 1];
        let inv = d.leading().recip();
        for k in (0..=n - m).rev() {
            let c = &r[k + m] * &inv;
            for (j, dj) in d.coeffs.iter().enumerate() {
                r[k + j] = &r[k + j] - &(&c * dj);
            }
            q[k] = c;
        }
        r.truncate(m.max(1));
        (Poly::new(q, p), Poly::new(r, p))
    }

    /// Divides by `(x − r)` via synthetic division, discarding the remainder.
    pub fn deflate(&self, r: &ComplexScalar) -> Poly {
        let p = self.prec();
        let n = self.degree();
        let mut q = vec![ComplexScalar::zero(p); n];
        let mut acc = self.coeffs[n].clone();
        for k in (0..n).rev() {
            q[k] = acc.clone();
            acc = &(&acc * r) + &self.coeffs[k];
        }
        Poly::new(q, p)
    }

    /// Taylor coefficients at `x0`: `P(x0 + t) = Σ b_k t^k`.
    pub fn shift(&self, x0: &ComplexScalar) -> Vec<ComplexScalar> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for k in (i..n - 1).rev() {
                let t = &c[k + 1] * x0;
                c[k] = &c[k] + &t;
            }
        }
        c
    }

    /// Coefficients reversed: `x^n P(1/x)`.
    pub fn reversed(&self) -> Vec<ComplexScalar> {
        self.coeffs.iter().rev().cloned().collect()
    }
}

fn companion_seeds(p: &Poly) -> Vec<Complex64> {
    let n = p.degree();
    let c: Vec<Complex64> = p.coeffs.iter().map(|v| v.to_c64()).collect();
    let lead = c[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    let ok = m.iter().all(|v| v.is_finite());
    let eig = if ok { m.clone().try_schur(1e-14, 10_000).map(|s| s.eigenvalues()) } else { None };
    match eig.flatten() {
        Some(ev) if ev.iter().all(|v| v.is_finite()) => ev.iter().cloned().collect(),
        _ => {
            // Fall back to a circle of the Cauchy radius.
            let r = c.iter().take(n).map(|v| (v / lead).norm()).fold(0.0, f64::max) + 1.0;
            (0..n)
                .map(|k| Complex64::from_polar(r, 0.4 + std::f64::consts::TAU * k as f64 / n as f64))
                .collect()
        }
    }
}

/// All roots (with repetition) by Aberth–Ehrlich iteration at precision `work_prec`.
pub fn aberth(p: &Poly, work_prec: u32, max_iter: usize) -> Vec<ComplexScalar> {
    let n = p.degree();
    if n == 0 {
        return vec![];
    }
    let q = Poly::new(p.coeffs.iter().map(|c| c.with_prec(work_prec)).collect(), work_prec);
    let dq = q.derivative();
    let mut z: Vec<ComplexScalar> = companion_seeds(p)
        .into_iter()
        .enumerate()
        .map(|(k, v)| {
            // Nudge coincident seeds apart so the iteration can separate them.
            let jitter = Complex64::from_polar(1e-9 * (1.0 + v.norm()), 1.3 + k as f64);
            ComplexScalar::from_c64(v + jitter, work_prec)
        })
        .collect();
    let eps = Float::with_val(work_prec, Float::i_exp(1, -(work_prec as i32) + 8));
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let pv = q.eval(&z[i]);
            if pv.is_zero() {
                done[i] = true;
                continue;
            }
            let ratio = &pv / &dq.eval(&z[i]);
            let mut s = ComplexScalar::zero(work_prec);
            for j in 0..n {
                if j != i {
                    s = &s + &(&z[i] - &z[j]).recip();
                }
            }
            let denom = &ComplexScalar::one(work_prec) - &(&ratio * &s);
            let w = &ratio / &denom;
            if !w.is_finite() {
                continue;
            }
            z[i] = &z[i] - &w;
            let scale = Float::with_val(work_prec, z[i].abs() + 1u32);
            if w.abs() <= Float::with_val(work_prec, &eps * &scale) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

/// Roots with multiplicities.
///
/// Aberth at doubled precision, clustering with relative tolerance `cluster_tol`, then
/// Newton polishing of each cluster on `P^{(μ−1)}`.
pub fn roots_with_multiplicity(p: &Poly, cluster_tol: f64) -> Vec<Root> {
    let prec = p.prec();
    let raw = aberth(p, 2 * prec, 2000);
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut members = vec![i];
        let ri = raw[i].to_c64();
        for j in i + 1..raw.len() {
            if !used[j] {
                let d = (&raw[i] - &raw[j]).abs_f64();
                if d <= cluster_tol * ri.norm().max(1.0) {
                    used[j] = true;
                    members.push(j);
                }
            }
        }
        let mu = members.len();
        let mut c = ComplexScalar::zero(2 * prec);
        for &k in &members {
            c = &c + &raw[k];
        }
        c = c.scale_f64(1.0 / mu as f64);
        // Newton on the (μ−1)-th derivative, which has a simple root here.
        let mut d = p.clone();
        for _ in 1..mu {
            d = d.derivative();
        }
        let dd = d.derivative();
        let mut x = c.with_prec(prec);
        for _ in 0..60 {
            let den = dd.eval(&x);
            if den.is_zero() {
                break;
            }
            let step = &d.eval(&x) / &den;
            x = &x - &step;
            if step.abs_f64() <= 1e-70 * (1.0 + x.abs_f64()) {
                break;
            }
        }
        out.push(Root { value: x, multiplicity: mu });
    }
    out.sort_by(|a, b| {
        let (x, y) = (a.value.to_c64(), b.value.to_c64());
        x.norm().partial_cmp(&y.norm()).unwrap().then(x.arg().partial_cmp(&y.arg()).unwrap())
    });
    out
}

/// Simple roots at working precision, no clustering; for well-separated roots.
pub fn simple_roots(p: &Poly, max_iter: usize) -> Vec<ComplexScalar> {
    aberth(p, p.prec(), max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_with_repetition() {
        // (x−1)^2 (x+2)(x−i)^3
        let prec = 256;
        let lin = |r: Complex64| Poly::from_c64(&[-r, Complex64::new(1.0, 0.0)], prec);
        let i = Complex64::new(0.0, 1.0);
        let mut p = lin(1.0.into());
        p = p.mul(&lin(1.0.into()));
        p = p.mul(&lin((-2.0).into()));
        for _ in 0..3 {
            p = p.mul(&lin(i));
        }
        let r = roots_with_multiplicity(&p, 1e-20);
        assert_eq!(r.len(), 3);
        let mut mults: Vec<(usize, Complex64)> = r.iter().map(|x| (x.multiplicity, x.value.to_c64())).collect();
        mults.sort_by_key(|m| m.0);
        assert_eq!(mults[0].0, 1);
        assert!((mults[0].1 + 2.0).norm() < 1e-30);
        assert_eq!(mults[1].0, 2);
        assert!((mults[1].1 - 1.0).norm() < 1e-30);
        assert_eq!(mults[2].0, 3);
        assert!((mults[2].1 - i).norm() < 1e-30);
    }

    #[test]
    fn divrem_and_shift() {
        let prec = 128;
        let p = Poly::from_c64(&[1.0.into(), 2.0.into(), 3.0.into()], prec);
        let d = Poly::from_c64(&[1.0.into(), 1.0.into()], prec);
        let (q, r) = p.divrem(&d);
        assert!((q.eval_c64(0.0.into()) - (-1.0)).norm() < 1e-30);
        assert!((r.eval_c64(0.0.into()) - 2.0).norm() < 1e-30);
        let s = p.shift(&ComplexScalar::from_f64(1.0, 0.0, prec));
        let v: Vec<f64> = s.iter().map(|c| c.to_c64().re).collect();
        assert_eq!(v, vec![6.0, 8.0, 3.0]);
    }
}

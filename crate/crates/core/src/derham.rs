//! Rational 1-forms on ℙ¹: zeros, poles, periods, local coordinates and formal Ξ̂ data.

use num_complex::Complex64;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gevrey::GevreySeries;
use crate::lattice::Lattice;
use crate::poly::{roots_with_multiplicity, Poly};
use crate::quadrature;
use crate::scalar::{pi, ComplexScalar};

/// Where a zero or pole sits.
#[derive(Clone, Debug, PartialEq)]
pub enum Place {
    Finite(ComplexScalar),
    Infinity,
}

impl Place {
    pub fn to_c64(&self) -> Option<Complex64> {
        match self {
            Place::Finite(x) => Some(x.to_c64()),
            Place::Infinity => None,
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Place::Finite(x) => {
                let c = x.to_c64();
                serde_json::json!([c.re, c.im])
            }
            Place::Infinity => serde_json::json!("infinity"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Zero {
    pub place: Place,
    pub order: usize,
}

#[derive(Clone, Debug)]
pub struct Pole {
    pub place: Place,
    pub order: usize,
    pub residue: ComplexScalar,
    /// `A_r` with `α = Σ_r A_r (x − p)^{−r} dx + holomorphic`, `r = 1..=order`; empty at ∞.
    pub laurent: Vec<ComplexScalar>,
}

/// `α = P(x)/Q(x) dx` with derived divisor data; genus 0.
#[derive(Clone, Debug)]
pub struct OneForm {
    /// Numerator and denominator after cancelling common roots.
    pub p: Poly,
    pub q: Poly,
    pub zeros: Vec<Zero>,
    pub poles: Vec<Pole>,
    /// Polynomial part of `P/Q`.
    pub poly_part: Poly,
    pub prec: u32,
}

/// Cluster tolerance for root multiplicities.
pub const ROOT_CLUSTER_TOL: f64 = 1e-20;

fn from_roots(lead: &ComplexScalar, roots: &[(ComplexScalar, usize)], prec: u32) -> Poly {
    let mut p = Poly::new(vec![lead.clone()], prec);
    for (r, m) in roots {
        for _ in 0..*m {
            p = p.mul(&Poly::new(vec![-r, ComplexScalar::one(prec)], prec));
        }
    }
    p
}

/// Power series of `num/den` at `x0` to `order`.
pub fn rational_taylor(num: &Poly, den: &Poly, x0: &ComplexScalar, order: usize) -> Result<GevreySeries> {
    let prec = num.prec().max(den.prec());
    let pad = |v: Vec<ComplexScalar>| {
        let mut v = v;
        v.resize(order + 1, ComplexScalar::zero(prec));
        v.truncate(order + 1);
        GevreySeries::new(v)
    };
    let a = pad(num.shift(x0));
    let b = pad(den.shift(x0));
    a.div(&b).map_err(|_| Error::Invalid("expansion point is a pole".into()))
}

impl OneForm {
    /// Finite pole locations.
    pub fn finite_poles(&self) -> Vec<(usize, Complex64)> {
        self.poles.iter().enumerate().filter_map(|(i, p)| p.place.to_c64().map(|x| (i, x))).collect()
    }

    pub fn a_c64(&self, x: Complex64) -> Complex64 {
        self.p.eval_c64(x) / self.q.eval_c64(x)
    }

    pub fn zero_location(&self, j: usize) -> Result<ComplexScalar> {
        match &self.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.place {
            Place::Finite(x) => Ok(x.clone()),
            Place::Infinity => Err(Error::Invalid("zero at infinity; move it to a finite point by a Möbius change".into())),
        }
    }

    /// Primitive with principal logarithms:
    /// `∫poly + Σ A_1 log(x − p) + Σ_{r≥2} A_r (x − p)^{1−r}/(1−r)`.
    pub fn primitive_c64(&self, x: Complex64) -> Complex64 {
        let logs = self.log_terms(x);
        self.primitive_rational(x) + logs.iter().map(|(a, l)| a * l).sum::<Complex64>()
    }

    /// Non-logarithmic part of the primitive.
    pub fn primitive_rational(&self, x: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut pw = x;
        for (k, c) in self.poly_part.coeffs.iter().enumerate() {
            s += c.to_c64() * pw / (k + 1) as f64;
            pw *= x;
        }
        for pole in &self.poles {
            if let Place::Finite(p) = &pole.place {
                let d = x - p.to_c64();
                for (r0, a) in pole.laurent.iter().enumerate().skip(1) {
                    let r = r0 as i32 + 1;
                    s += a.to_c64() * d.powi(1 - r) / (1 - r) as f64;
                }
            }
        }
        s
    }

    /// `(A_1, log(x − p))` for each finite pole, principal branch.
    pub fn log_terms(&self, x: Complex64) -> Vec<(Complex64, Complex64)> {
        self.poles
            .iter()
            .filter_map(|pole| match &pole.place {
                Place::Finite(p) => Some((pole.laurent[0].to_c64(), (x - p.to_c64()).ln())),
                Place::Infinity => None,
            })
            .collect()
    }

    /// `P̃/Q̃` with `α = P̃(v)/Q̃(v) dv` in the chart `v = 1/x`.
    pub fn chart_at_infinity(&self) -> (Poly, Poly) {
        // a(1/v)·(−v^{−2}) = −v^{dQ−dP−2} rev(P)/rev(Q)
        let prec = self.prec;
        let (dp, dq) = (self.p.degree() as i64, self.q.degree() as i64);
        let k = dq - dp - 2;
        let mut num = Poly::new(self.p.reversed().into_iter().map(|c| -c).collect(), prec);
        let mut den = Poly::new(self.q.reversed(), prec);
        let mono = |n: i64| {
            let mut c = vec![ComplexScalar::zero(prec); n as usize];
            c.push(ComplexScalar::one(prec));
            Poly::new(c, prec)
        };
        if k >= 0 {
            num = num.mul(&mono(k));
        } else {
            den = den.mul(&mono(-k));
        }
        (num, den)
    }

    /// Report data.
    pub fn to_json(&self) -> serde_json::Value {
        let c = |x: &ComplexScalar| {
            let v = x.to_c64();
            serde_json::json!([v.re, v.im])
        };
        serde_json::json!({
            "numerator": self.p.coeffs.iter().map(c).collect::<Vec<_>>(),
            "denominator": self.q.coeffs.iter().map(c).collect::<Vec<_>>(),
            "genus": 0,
            "zeros": self.zeros.iter().map(|z| serde_json::json!({"location": z.place.json(), "order": z.order})).collect::<Vec<_>>(),
            "poles": self.poles.iter().map(|p| serde_json::json!({"location": p.place.json(), "order": p.order, "residue": c(&p.residue)})).collect::<Vec<_>>(),
            "degree_sum": self.degree_sum(),
        })
    }

    /// `Σ m_j − Σ n_k`.
    pub fn degree_sum(&self) -> i64 {
        self.zeros.iter().map(|z| z.order as i64).sum::<i64>() - self.poles.iter().map(|p| p.order as i64).sum::<i64>()
    }
}

/// Zeros, poles and residues of `(P/Q) dx`.
pub fn analyze(p: &Poly, q: &Poly) -> Result<OneForm> {
    if p.is_zero() || q.is_zero() {
        return Err(Error::NotOneForm("P and Q must be nonzero".into()));
    }
    let prec = p.prec().max(q.prec());
    let mut pr: Vec<(ComplexScalar, usize)> =
        roots_with_multiplicity(p, ROOT_CLUSTER_TOL).into_iter().map(|r| (r.value, r.multiplicity)).collect();
    let mut qr: Vec<(ComplexScalar, usize)> =
        roots_with_multiplicity(q, ROOT_CLUSTER_TOL).into_iter().map(|r| (r.value, r.multiplicity)).collect();
    // Cancel common factors.
    for a in pr.iter_mut() {
        for b in qr.iter_mut() {
            let d = (&a.0 - &b.0).abs_f64();
            if d <= 1e-18 * (1.0 + a.0.abs_f64()) && a.1 > 0 && b.1 > 0 {
                let c = a.1.min(b.1);
                a.1 -= c;
                b.1 -= c;
            }
        }
    }
    pr.retain(|r| r.1 > 0);
    qr.retain(|r| r.1 > 0);
    let pp = from_roots(p.leading(), &pr, prec);
    let qq = from_roots(q.leading(), &qr, prec);
    let k_inf = qq.degree() as i64 - pp.degree() as i64 - 2;

    let mut zeros: Vec<Zero> = pr.iter().map(|(r, m)| Zero { place: Place::Finite(r.clone()), order: *m }).collect();
    if k_inf > 0 {
        zeros.push(Zero { place: Place::Infinity, order: k_inf as usize });
    }
    let mut poles = Vec::new();
    let mut res_sum = ComplexScalar::zero(prec);
    for (r, n) in &qr {
        // Q = (x − r)^n Q1; Laurent coefficients from the Taylor series of P/Q1.
        let mut q1 = qq.clone();
        for _ in 0..*n {
            q1 = q1.deflate(r);
        }
        let t = rational_taylor(&pp, &q1, r, n - 1)?;
        let laurent: Vec<ComplexScalar> = (1..=*n).map(|k| t.coeff(n - k).clone()).collect();
        res_sum = &res_sum + &laurent[0];
        poles.push(Pole { place: Place::Finite(r.clone()), order: *n, residue: laurent[0].clone(), laurent });
    }
    if k_inf < 0 {
        poles.push(Pole { place: Place::Infinity, order: (-k_inf) as usize, residue: -res_sum, laurent: vec![] });
    }
    if zeros.is_empty() || poles.is_empty() {
        return Err(Error::NotOneForm(format!(
            "the form needs at least one zero and one pole (found {} zeros, {} poles)",
            zeros.len(),
            poles.len()
        )));
    }
    let (poly_part, _) = pp.divrem(&qq);
    let form = OneForm { p: pp, q: qq, zeros, poles, poly_part, prec };
    assert_eq!(form.degree_sum(), -2, "canonical divisor of ℙ¹ has degree −2");
    Ok(form)
}

/// `(L, μ)` with bookkeeping from the loop generators.
#[derive(Clone, Debug)]
pub struct PeriodLattice {
    pub lattice: Lattice,
    /// Finite-pole indices whose loops generate `H₁`.
    pub loops: Vec<usize>,
    /// Coordinates of each loop in the lattice basis.
    pub loop_coords: Vec<Vec<i64>>,
    /// Set when a relation was suspected but not imposed.
    pub ambiguous: Option<String>,
}

fn lll(mut b: Vec<Vec<Integer>>) -> Vec<Vec<Integer>> {
    // Textbook LLL with exact rational Gram–Schmidt, δ = 3/4.
    let n = b.len();
    if n == 0 {
        return b;
    }
    let dot = |x: &[Integer], y: &[Integer]| -> Rational {
        let mut s = Integer::new();
        for (a, c) in x.iter().zip(y) {
            s += Integer::from(a * c);
        }
        Rational::from(s)
    };
    let gs = |b: &Vec<Vec<Integer>>| -> (Vec<Vec<Rational>>, Vec<Rational>) {
        let mut mu = vec![vec![Rational::new(); n]; n];
        let mut bstar: Vec<Vec<Rational>> = Vec::with_capacity(n);
        let mut norms = Vec::with_capacity(n);
        for i in 0..n {
            let mut v: Vec<Rational> = b[i].iter().map(|x| Rational::from(x)).collect();
            for j in 0..i {
                let num = {
                    let mut s = Rational::new();
                    for (a, c) in b[i].iter().zip(&bstar[j]) {
                        s += Rational::from(a) * c;
                    }
                    s
                };
                let m = if norms[j] == Rational::new() { Rational::new() } else { num / &norms[j] };
                for (vv, bs) in v.iter_mut().zip(&bstar[j]) {
                    *vv -= Rational::from(&m * bs);
                }
                mu[i][j] = m;
            }
            let nn = v.iter().fold(Rational::new(), |acc, x| acc + Rational::from(x * x));
            norms.push(nn);
            bstar.push(v);
        }
        (mu, norms)
    };
    let _ = dot;
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 100_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (mu, _) = gs(&b);
            let r = mu[k][j].clone().round();
            let r = r.numer().clone();
            if r != 0 {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= Integer::from(&r * y);
                }
            }
        }
        let (mu, norms) = gs(&b);
        let lhs = norms[k].clone();
        let rhs = (Rational::from((3, 4)) - Rational::from(&mu[k][k - 1] * &mu[k][k - 1])) * &norms[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    b
}

/// Inverse of a unimodular integer matrix.
fn unimodular_inverse(u: &[Vec<Integer>]) -> Option<Vec<Vec<Integer>>> {
    let n = u.len();
    let mut a: Vec<Vec<Rational>> = u
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Rational> = row.iter().map(Rational::from).collect();
            r.extend((0..n).map(|j| Rational::from(if i == j { 1 } else { 0 })));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| a[r][c] != 0)?;
        a.swap(c, p);
        let inv = Rational::from(1) / a[c][c].clone();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != c && a[r][c] != 0 {
                let f = a[r][c].clone();
                let pivot_row = a[c].clone();
                for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                    *x -= Rational::from(&f * y);
                }
            }
        }
    }
    a.into_iter()
        .map(|row| row[n..].iter().map(|x| if *x.denom() == 1 { Some(x.numer().clone()) } else { None }).collect())
        .collect()
}

/// Period lattice `L = H₁ / Ker μ̃` from loops around the finite poles.
pub fn period_lattice(form: &OneForm) -> Result<PeriodLattice> {
    let prec = form.prec;
    let two_pi_i = ComplexScalar::from_parts(Float::new(prec), Float::with_val(prec, 2 * pi(prec)));
    let mut loops = Vec::new();
    let mut periods = Vec::new();
    for (i, pole) in form.poles.iter().enumerate() {
        if matches!(pole.place, Place::Finite(_)) {
            loops.push(i);
            periods.push(&two_pi_i * &pole.residue);
        }
    }
    let r = periods.len();
    let scale = periods.iter().map(|v| v.abs_f64()).fold(0.0, f64::max);
    if r == 0 || scale == 0.0 {
        return Ok(PeriodLattice { lattice: Lattice::zero(), loops, loop_coords: vec![vec![]; r], ambiguous: None });
    }
    // Rows (e_i, K·Re v_i, K·Im v_i) with K = 2^100/scale.
    let kexp = 100i32;
    let scale_f = Float::with_val(prec, scale);
    let rows: Vec<Vec<Integer>> = (0..r)
        .map(|i| {
            let mut row: Vec<Integer> = (0..r).map(|j| Integer::from((i == j) as i32)).collect();
            for part in [&periods[i].re, &periods[i].im] {
                let v = Float::with_val(prec, part / &scale_f) << kexp;
                row.push(v.to_integer().unwrap_or_default());
            }
            row
        })
        .collect();
    let red = lll(rows);
    let mut kernel = Vec::new();
    let mut complement = Vec::new();
    let mut ambiguous = None;
    for row in &red {
        let coeffs: Vec<i64> = row[..r].iter().map(|x| x.to_i64().unwrap_or(i64::MAX)).collect();
        let mut v = ComplexScalar::zero(prec);
        for (c, p) in coeffs.iter().zip(&periods) {
            v = &v + &p.scale_i64(*c);
        }
        let rel = v.abs_f64() / scale;
        if rel < 1e-25 {
            kernel.push(coeffs);
        } else {
            if rel < 1e-8 {
                ambiguous = Some(format!("combination {coeffs:?} has period {rel:.2e} relative to the largest; no relation imposed"));
            }
            complement.push((coeffs, v));
        }
    }
    let u: Vec<Vec<Integer>> = red.iter().map(|row| row[..r].to_vec()).collect();
    let inv = unimodular_inverse(&u).ok_or_else(|| Error::Invalid("LLL transform not unimodular".into()))?;
    // Original e_k = Σ_j inv[k][j] red_j; keep complement components.
    let comp_idx: Vec<usize> = red
        .iter()
        .enumerate()
        .filter(|(_, row)| {
            let c: Vec<i64> = row[..r].iter().map(|x| x.to_i64().unwrap_or(i64::MAX)).collect();
            !kernel.contains(&c)
        })
        .map(|(i, _)| i)
        .collect();
    let loop_coords: Vec<Vec<i64>> =
        (0..r).map(|k| comp_idx.iter().map(|&j| inv[k][j].to_i64().unwrap_or(0)).collect()).collect();
    let mu: Vec<Complex64> = complement.iter().map(|(_, v)| v.to_c64()).collect();
    let lattice = Lattice::unit(mu);
    Ok(PeriodLattice { lattice, loops, loop_coords, ambiguous })
}

/// Local coordinate at a zero: `u(t)` with `t = x − q` and `x(u) − q`, plus the check residual.
#[derive(Clone, Debug)]
pub struct LocalCoordinate {
    pub m: usize,
    pub u_of_t: GevreySeries,
    pub t_of_u: GevreySeries,
    /// Largest coefficient of `a(x(u))x′(u) − u^m`.
    pub residual: f64,
}

/// Form data `(P, Q)` in the chart containing zero `j`, with the zero's location there.
fn zero_chart(form: &OneForm, j: usize) -> Result<(Poly, Poly, ComplexScalar)> {
    match &form.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.place {
        Place::Finite(x) => Ok((form.p.clone(), form.q.clone(), x.clone())),
        Place::Infinity => {
            let (p, q) = form.chart_at_infinity();
            Ok((p, q, ComplexScalar::zero(form.prec)))
        }
    }
}

/// Solves `u^{m+1}/(m+1) = ∫_q^x α` as series, principal root branch.
pub fn local_coordinate_series(form: &OneForm, j: usize, order: usize) -> Result<LocalCoordinate> {
    let m = form.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.order;
    if order < m + 2 {
        return Err(Error::Invalid(format!("order must be at least m + 2 = {}", m + 2)));
    }
    let (p, q, x0) = zero_chart(form, j)?;
    let prec = form.prec;
    let k = order + m;
    let a = rational_taylor(&p, &q, &x0, k)?;
    let big_f = a.integral(); // order k + 1, valuation m + 1
    let mp1 = ComplexScalar::from_i64((m + 1) as i64, prec);
    let u = big_f.scale(&mp1).nth_root((m + 1) as u32, 0)?;
    let u = u.truncate(order);
    let t = u.reversion()?;
    // Verify: a(x(u)) x'(u) = u^m.
    let au = a.truncate(order).compose(&t)?;
    let pulled = au.mul(&t.derivative().pad_polynomial(order));
    let mut residual: f64 = 0.0;
    for (n, c) in pulled.coeffs().iter().enumerate().take(order) {
        let target = if n == m { 1.0 } else { 0.0 };
        residual = residual.max((c.to_c64() - target).norm());
    }
    Ok(LocalCoordinate { m, u_of_t: u, t_of_u: t, residual })
}

/// `[u^N du] = factor(z)·[u^k du]` in the local cohomology at a zero of order `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedClass {
    pub k: usize,
    pub n: usize,
    /// Coefficient of `z^n`; zero when `k = m` (that class vanishes).
    pub factor: Rational,
}

/// Closed form of the reduction `u^{N}du ↦ −z(N−m)u^{N−m−1}du`.
pub fn reduce_class(big_n: usize, m: usize) -> Result<ReducedClass> {
    if m < 1 {
        return Err(Error::Invalid("zero order must be ≥ 1".into()));
    }
    let n = big_n / (m + 1);
    let k = big_n % (m + 1);
    if k == m {
        return Ok(ReducedClass { k, n, factor: Rational::new() });
    }
    let mut f = Integer::from(if n % 2 == 0 { 1 } else { -1 });
    for l in 0..n {
        f *= ((m + 1) * l + k + 1) as u64;
    }
    Ok(ReducedClass { k, n, factor: Rational::from(f) })
}

/// A rational form `ω = R(x)/S(x) dx`.
#[derive(Clone, Debug)]
pub struct FormRep {
    pub num: Poly,
    pub den: Poly,
}

impl FormRep {
    pub fn dx_over_x(prec: u32) -> Self {
        FormRep {
            num: Poly::new(vec![ComplexScalar::one(prec)], prec),
            den: Poly::new(vec![ComplexScalar::zero(prec), ComplexScalar::one(prec)], prec),
        }
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        self.num.eval_c64(x) / self.den.eval_c64(x)
    }

    /// The forms `x^i dx / Q` for `i < count`.
    pub fn default_basis(form: &OneForm, count: usize) -> Vec<FormRep> {
        let prec = form.prec;
        (0..count)
            .map(|i| {
                let mut c = vec![ComplexScalar::zero(prec); i];
                c.push(ComplexScalar::one(prec));
                FormRep { num: Poly::new(c, prec), den: form.q.clone() }
            })
            .collect()
    }
}

/// `g_j(u)` with `ω = g_j(u)du` near zero `j`, to `order`.
pub fn form_in_local_coordinate(form: &OneForm, omega: &FormRep, j: usize, order: usize) -> Result<GevreySeries> {
    let lc = local_coordinate_series(form, j, (order + 1).max(form.zeros[j].order + 2))?;
    let (_, _, x0) = zero_chart(form, j)?;
    let (num, den) = match form.zeros[j].place {
        Place::Finite(_) => (omega.num.clone(), omega.den.clone()),
        Place::Infinity => {
            // ω(1/v)·(−v^{−2})
            let prec = form.prec;
            let (dn, dd) = (omega.num.degree() as i64, omega.den.degree() as i64);
            let kk = dd - dn - 2;
            let mut num = Poly::new(omega.num.reversed().into_iter().map(|c| -c).collect(), prec);
            let mut den = Poly::new(omega.den.reversed(), prec);
            let mono = |n: i64| {
                let mut c = vec![ComplexScalar::zero(prec); n as usize];
                c.push(ComplexScalar::one(prec));
                Poly::new(c, prec)
            };
            if kk >= 0 {
                num = num.mul(&mono(kk));
            } else {
                den = den.mul(&mono(-kk));
            }
            (num, den)
        }
    };
    let b = rational_taylor(&num, &den, &x0, order)?;
    let dt = lc.t_of_u.derivative();
    let t = lc.t_of_u.truncate(order);
    Ok(b.compose(&t)?.mul(&dt))
}

/// The series `ĝ_{j,k}`, `k = 0..m_j−1`, to `z`-order `order`.
#[derive(Clone, Debug)]
pub struct FormalXi {
    pub m: usize,
    pub g: Vec<GevreySeries>,
    /// Largest relative gap between the product and Gamma forms.
    pub gamma_form_gap: f64,
}

/// `ĝ_{j,k}(z) = Σ_n (−1)^n a_{(m+1)n+k} Π_{ℓ<n}((m+1)ℓ+k+1) z^n` from `ω = Σ a_n u^n du`.
pub fn formal_xi_from_local(a: &GevreySeries, m: usize, order: usize) -> Result<FormalXi> {
    let prec = a.prec();
    let need = (m + 1) * order + m - 1;
    if a.trunc_order() < need {
        return Err(Error::Incompatible(format!("local expansion needs order {need}")));
    }
    let mut out = Vec::with_capacity(m);
    let mut gap: f64 = 0.0;
    for k in 0..m {
        let mut c = Vec::with_capacity(order + 1);
        let mut prod = Float::with_val(prec, 1);
        for n in 0..=order {
            if n > 0 {
                prod *= ((m + 1) * (n - 1) + k + 1) as u64;
            }
            let v = a.coeff((m + 1) * n + k).scale(&prod);
            c.push(if n % 2 == 0 { v } else { -v });
        }
        // Gamma form: Γ(p)^{−1} Σ (−1)^n a (m+1)^n Γ(p + n), p = (k+1)/(m+1).
        let p = Float::with_val(prec, (k + 1) as u64) / Float::with_val(prec, (m + 1) as u64);
        let gp = p.clone().gamma();
        let mut pw = Float::with_val(prec, 1);
        for (n, cn) in c.iter().enumerate() {
            if n > 0 {
                pw *= (m + 1) as u64;
            }
            let w = Float::with_val(prec, &pw * Float::with_val(prec, &p + n as u64).gamma()) / &gp;
            let v = a.coeff((m + 1) * n + k).scale(&w);
            let v = if n % 2 == 0 { v } else { -v };
            let s = cn.abs_f64().max(v.abs_f64());
            if s > 0.0 {
                gap = gap.max((cn - &v).abs_f64() / s);
            }
        }
        out.push(GevreySeries::new(c));
    }
    Ok(FormalXi { m, g: out, gamma_form_gap: gap })
}

/// Formal isomorphism data `ĝ_{j,k}` for `ω` at zero `j`.
pub fn formal_xi(omega: &FormRep, form: &OneForm, j: usize, order: usize) -> Result<FormalXi> {
    let m = form.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.order;
    let need = (m + 1) * order + m + 2;
    let a = form_in_local_coordinate(form, omega, j, need)?;
    let r = formal_xi_from_local(&a, m, order)?;
    if r.gamma_form_gap > 1e-20 {
        return Err(Error::Invalid(format!("product and Gamma forms differ by {:.2e}", r.gamma_form_gap)));
    }
    Ok(r)
}

/// Report of [`stirling_check`].
#[derive(Clone, Debug, Serialize)]
pub struct StirlingReport {
    pub formal_xi: Vec<Complex64>,
    pub closed_form: Vec<Complex64>,
    pub max_rel_gap: f64,
    pub pass: bool,
}

/// Compares `formal_xi(dx/x)` for `α_λ` with `λ^{−1/2} exp(−b_λ)`.
pub fn stirling_check(lambda: &ComplexScalar, order: usize) -> Result<StirlingReport> {
    let prec = lambda.prec();
    let form = gamma_form(lambda)?;
    let xi = formal_xi(&FormRep::dx_over_x(prec), &form, 0, order)?;
    let cf = crate::gamma::stirling_formal(lambda, order, prec);
    let mut gap: f64 = 0.0;
    for n in 0..=order {
        let (a, b) = (xi.g[0].coeff(n), cf.coeff(n));
        let s = a.abs_f64().max(b.abs_f64());
        if s > 1e-30 {
            gap = gap.max((a - b).abs_f64() / s);
        } else {
            gap = gap.max((a - b).abs_f64());
        }
    }
    Ok(StirlingReport {
        formal_xi: xi.g[0].coeffs_c64(),
        closed_form: cf.coeffs_c64(),
        max_rel_gap: gap,
        pass: gap <= 1e-12,
    })
}

/// `α_λ = −(λ − x) x^{−1} dx`.
pub fn gamma_form(lambda: &ComplexScalar) -> Result<OneForm> {
    let prec = lambda.prec();
    let p = Poly::new(vec![-lambda, ComplexScalar::one(prec)], prec);
    let q = Poly::new(vec![ComplexScalar::zero(prec), ComplexScalar::one(prec)], prec);
    analyze(&p, &q)
}

/// Per-zero exponential factor and regular-singular exponents.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroSpectrum {
    pub c: Complex64,
    pub exponents: Vec<f64>,
}

/// `c_j` and `(k+1)/(m_j+1)` for each zero.
pub fn elementary_connection(form: &OneForm, crit: &CriticalData) -> Vec<ZeroSpectrum> {
    form.zeros
        .iter()
        .zip(&crit.values)
        .map(|(z, c)| ZeroSpectrum {
            c: *c,
            exponents: (0..z.order).map(|k| (k + 1) as f64 / (z.order + 1) as f64).collect(),
        })
        .collect()
}

/// Critical values along chosen paths and their representatives modulo `μ(L)`.
#[derive(Clone, Debug)]
pub struct CriticalData {
    pub basepoint: Option<Complex64>,
    pub values: Vec<Complex64>,
    pub representatives: Vec<Complex64>,
    /// Distinct representatives: the set `C_f`.
    pub c_f: Vec<Complex64>,
}

impl CriticalData {
    pub fn to_json(&self) -> serde_json::Value {
        let c = |v: &Complex64| serde_json::json!([v.re, v.im]);
        serde_json::json!({
            "basepoint": self.basepoint.map(|b| [b.re, b.im]),
            "values": self.values.iter().map(c).collect::<Vec<_>>(),
            "representatives": self.representatives.iter().map(c).collect::<Vec<_>>(),
            "C_f": self.c_f.iter().map(c).collect::<Vec<_>>(),
        })
    }
}

/// Reduces `c` into the fundamental domain: coordinates along `μ` in `[0, 1)`.
pub fn reduce_mod_lattice(c: Complex64, lat: &Lattice) -> Complex64 {
    let r = lat.rank();
    if r == 0 {
        return c;
    }
    let m = nalgebra::DMatrix::from_fn(2, r, |i, j| if i == 0 { lat.mu[j].re } else { lat.mu[j].im });
    let y = nalgebra::DVector::from_vec(vec![c.re, c.im]);
    let t = match m.clone().svd(true, true).solve(&y, 1e-12) {
        Ok(t) => t,
        Err(_) => return c,
    };
    let mut out = c;
    for (j, tj) in t.iter().enumerate() {
        // Snap values within rounding of an integer before flooring.
        let s = if (tj - tj.round()).abs() < 1e-12 { tj.round() } else { tj.floor() };
        out -= lat.mu[j] * s;
    }
    out
}

/// `c_j = F(x₀) + ∫_path α`, or `F(q_j)` with principal logarithms when no basepoint is given.
pub fn critical_values(form: &OneForm, lat: &Lattice, basepoint: Option<Complex64>, paths: &[Vec<Complex64>]) -> Result<CriticalData> {
    let mut values = Vec::new();
    for (j, z) in form.zeros.iter().enumerate() {
        let q = match &z.place {
            Place::Finite(x) => x.to_c64(),
            Place::Infinity => {
                return Err(Error::Invalid("critical value at a zero at infinity is not supported".into()));
            }
        };
        let v = match basepoint {
            None => form.primitive_c64(q),
            Some(x0) => {
                let mut pts = vec![x0];
                if let Some(w) = paths.get(j) {
                    pts.extend(w.iter().copied());
                }
                pts.push(q);
                check_path(form, &pts)?;
                form.primitive_c64(x0) + quadrature::integrate_polyline(|x| form.a_c64(x), &pts, 1e-13).value
            }
        };
        values.push(v);
    }
    let representatives: Vec<Complex64> = values.iter().map(|c| reduce_mod_lattice(*c, lat)).collect();
    let mut c_f: Vec<Complex64> = Vec::new();
    for r in &representatives {
        if !c_f.iter().any(|s| (s - r).norm() <= 1e-10 * (1.0 + r.norm())) {
            c_f.push(*r);
        }
    }
    Ok(CriticalData { basepoint, values, representatives, c_f })
}

fn check_path(form: &OneForm, pts: &[Complex64]) -> Result<()> {
    for (_, p) in form.finite_poles() {
        for s in pts.windows(2) {
            let (a, b) = (s[0], s[1]);
            let d = b - a;
            let t = if d.norm() == 0.0 { 0.0 } else { (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0) };
            if (a + d * t - p).norm() <= 1e-8 * (1.0 + p.norm()) {
                return Err(Error::PathThroughPole(format!("segment {a} → {b} meets the pole {p}")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_example_divisor() {
        let f = gamma_form(&ComplexScalar::one(256)).unwrap();
        assert_eq!(f.zeros.len(), 1);
        assert_eq!(f.zeros[0].order, 1);
        assert!((f.zeros[0].place.to_c64().unwrap() - 1.0).norm() < 1e-60);
        assert_eq!(f.poles.len(), 2);
        assert_eq!(f.poles[0].order, 1);
        assert!((f.poles[0].residue.to_c64() + 1.0).norm() < 1e-60);
        assert_eq!(f.poles[1].place, Place::Infinity);
        assert_eq!(f.poles[1].order, 2);
    }

    #[test]
    fn reduce_class_examples() {
        assert_eq!(reduce_class(2, 1).unwrap().factor, Rational::from(-1));
        assert_eq!(reduce_class(4, 1).unwrap().factor, Rational::from(3));
        let r = reduce_class(1, 3).unwrap();
        assert_eq!((r.k, r.n, r.factor), (1, 0, Rational::from(1)));
    }

    #[test]
    fn lattice_of_two_residues() {
        let prec = 256;
        // 1/x + i/(x−1) = ((1+i)x − 1)/(x(x−1))
        let p = Poly::from_c64(&[Complex64::new(-1.0, 0.0), Complex64::new(1.0, 1.0)], prec);
        let q = Poly::from_c64(&[0.0.into(), Complex64::new(-1.0, 0.0), 1.0.into()], prec);
        let f = analyze(&p, &q).unwrap();
        let pl = period_lattice(&f).unwrap();
        assert_eq!(pl.lattice.rank(), 2);
        assert!(pl.ambiguous.is_none());
    }
}

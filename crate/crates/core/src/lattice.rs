//! Period lattices, exponent orderings and truncated exponential sums.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gevrey::angle_dist;

/// `(L, μ)` with a weighted ℓ¹ norm on `L = ℤ^r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub mu: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl Lattice {
    pub fn new(mu: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        if mu.len() != weights.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::Invalid("lattice needs one positive weight per generator".into()));
        }
        Ok(Lattice { mu, weights })
    }

    pub fn unit(mu: Vec<Complex64>) -> Self {
        let n = mu.len();
        Lattice { mu, weights: vec![1.0; n] }
    }

    pub fn zero() -> Self {
        Lattice { mu: vec![], weights: vec![] }
    }

    pub fn rank(&self) -> usize {
        self.mu.len()
    }

    pub fn norm(&self, g: &[i64]) -> f64 {
        g.iter().zip(&self.weights).map(|(a, w)| w * a.unsigned_abs() as f64).sum()
    }

    pub fn mu_of(&self, g: &[i64]) -> Complex64 {
        g.iter().zip(&self.mu).map(|(a, m)| m * *a as f64).sum()
    }

    /// All `γ` with `‖γ‖ ≤ bound`, including 0.
    pub fn ball(&self, bound: f64) -> Vec<Vec<i64>> {
        let mut out = vec![vec![]];
        for w in &self.weights {
            let k = (bound / w + 1e-9).floor() as i64;
            let mut next = Vec::new();
            for v in &out {
                for a in -k..=k {
                    let mut u = v.clone();
                    u.push(a);
                    next.push(u);
                }
            }
            out = next;
        }
        out.retain(|g| self.norm(g) <= bound + 1e-9);
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rank": self.rank(),
            "mu": self.mu.iter().map(|m| [m.re, m.im]).collect::<Vec<_>>(),
            "weights": self.weights,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Invalid("lattice json".into());
        let mu = v["mu"]
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|p| Some(Complex64::new(p[0].as_f64()?, p[1].as_f64()?)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(bad)?;
        let weights = v["weights"].as_array().ok_or_else(bad)?.iter().map(|w| w.as_f64()).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
        if v["rank"].as_u64() != Some(mu.len() as u64) {
            return Err(bad());
        }
        Lattice::new(mu, weights)
    }
}

/// Outcome of [`support_radius`].
#[derive(Clone, Debug, Serialize)]
pub struct SupportRadius {
    pub radius: f64,
    pub witness: Option<Vec<i64>>,
    /// Exact at rank ≤ 1; otherwise an upper estimate of the infimum.
    pub exact: bool,
    /// Whether the minimiser lies strictly inside the enumeration ball.
    pub interior: bool,
}

/// `min |μ(γ)|/‖γ‖` over `0 < ‖γ‖ ≤ enum_bound`.
pub fn support_radius(lat: &Lattice, enum_bound: u32) -> Result<SupportRadius> {
    if enum_bound < 1 {
        return Err(Error::Invalid("enum_bound must be ≥ 1".into()));
    }
    match lat.rank() {
        0 => return Ok(SupportRadius { radius: f64::INFINITY, witness: None, exact: true, interior: true }),
        1 => {
            let m = lat.mu[0].norm();
            if m == 0.0 {
                return Err(Error::DegenerateLattice("generator has zero period".into()));
            }
            return Ok(SupportRadius { radius: m / lat.weights[0], witness: Some(vec![1]), exact: true, interior: true });
        }
        _ => {}
    }
    let scale = lat.mu.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let mut best = f64::INFINITY;
    let mut wit = None;
    for g in lat.ball(enum_bound as f64) {
        let n = lat.norm(&g);
        if n == 0.0 {
            continue;
        }
        let v = lat.mu_of(&g).norm();
        if v <= 1e-12 * scale * n {
            return Err(Error::DegenerateLattice(format!("μ({g:?}) = 0")));
        }
        if v / n < best {
            best = v / n;
            wit = Some(g);
        }
    }
    let interior = wit.as_ref().map(|g| lat.norm(g) < enum_bound as f64).unwrap_or(true);
    Ok(SupportRadius { radius: best, witness: wit, exact: false, interior })
}

fn dedup_push(v: &mut Vec<Complex64>, x: Complex64, tol: f64) {
    if !v.iter().any(|y| (y - x).norm() <= tol * (1.0 + x.norm())) {
        v.push(x);
    }
}

/// Elements of `Ω_{C,μ} = {(c−c′) + μ(γ)} ∖ {0}` with modulus ≤ `radius`.
pub fn omega_set(cs: &[Complex64], lat: &Lattice, radius: f64) -> Result<Vec<Complex64>> {
    if !(radius > 0.0) {
        return Err(Error::Invalid("radius must be positive".into()));
    }
    let spread = cs.iter().flat_map(|a| cs.iter().map(move |b| (a - b).norm())).fold(0.0, f64::max);
    let gammas = if lat.rank() == 0 {
        vec![vec![]]
    } else {
        let r = support_radius(lat, 12)?.radius;
        // Rank ≥ 2 radii are upper estimates; halve for a safe enumeration ball.
        let r = if lat.rank() >= 2 { 0.5 * r } else { r };
        lat.ball((radius + spread) / r)
    };
    let mut out = Vec::new();
    for a in cs {
        for b in cs {
            for g in &gammas {
                let w = a - b + lat.mu_of(g);
                if w.norm() <= radius && w.norm() > 1e-12 * (1.0 + radius) {
                    dedup_push(&mut out, w, 1e-12);
                }
            }
        }
    }
    out.sort_by(|x, y| x.norm().partial_cmp(&y.norm()).unwrap().then(x.arg().partial_cmp(&y.arg()).unwrap()));
    Ok(out)
}

/// Result of [`is_generic`].
#[derive(Clone, Debug, Serialize)]
pub struct Genericity {
    pub generic: bool,
    pub witness: Option<Complex64>,
}

pub const ANGLE_TOL: f64 = 1e-12;

/// Whether the ray `arg = d` avoids `Ω_{C,μ}` within `radius`.
pub fn is_generic(d: f64, cs: &[Complex64], lat: &Lattice, radius: f64) -> Result<Genericity> {
    for w in omega_set(cs, lat, radius)? {
        if angle_dist(w.arg(), d) <= ANGLE_TOL {
            return Ok(Genericity { generic: false, witness: Some(w) });
        }
    }
    Ok(Genericity { generic: true, witness: None })
}

/// Distinct arguments in `[0, 2π)` of `Ω_{C,μ}` within `radius`: the non-generic directions.
pub fn non_generic_directions(cs: &[Complex64], lat: &Lattice, radius: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = Vec::new();
    for w in omega_set(cs, lat, radius)? {
        let a = w.arg().rem_euclid(TAU);
        if !out.iter().any(|b| angle_dist(*b, a) <= ANGLE_TOL) {
            out.push(a);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Outcome of comparing two exponents at one direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Order {
    Less,
    Equal,
    NotLess,
}

/// `c <_θ c′` iff `Re(e^{−iθ}(c − c′)) < 0`.
pub fn lt_theta(c: Complex64, c2: Complex64, theta: f64) -> Order {
    if c == c2 {
        return Order::Equal;
    }
    if (Complex64::from_polar(1.0, -theta) * (c - c2)).re < 0.0 {
        Order::Less
    } else {
        Order::NotLess
    }
}

/// `c <_θ c′` for every `θ` in the closed arc `[a, b]`.
pub fn lt_interval(c: Complex64, c2: Complex64, a: f64, b: f64) -> bool {
    let w = c - c2;
    if w == Complex64::new(0.0, 0.0) || b < a {
        return false;
    }
    if lt_theta(c, c2, a) != Order::Less || lt_theta(c, c2, b) != Order::Less {
        return false;
    }
    // Zeros of θ ↦ Re(e^{−iθ}w) sit at arg w ± π/2.
    for z0 in [w.arg() + PI / 2.0, w.arg() - PI / 2.0] {
        let k = ((a - z0) / TAU).ceil();
        if z0 + k * TAU <= b {
            return false;
        }
    }
    true
}

/// `e^{c/z} Σ_γ a_γ e^{μ(γ)/z}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct ExpSum {
    pub offset: Complex64,
    #[serde(with = "terms_as_pairs")]
    pub terms: BTreeMap<Vec<i64>, Complex64>,
}

// JSON object keys must be strings, so the terms travel as `[γ, a_γ]` pairs.
mod terms_as_pairs {
    use std::collections::BTreeMap;

    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<Vec<i64>, Complex64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Vec<i64>, Complex64>, D::Error> {
        Ok(Vec::<(Vec<i64>, Complex64)>::deserialize(d)?.into_iter().collect())
    }
}

impl ExpSum {
    pub fn new(offset: Complex64) -> Self {
        ExpSum { offset, terms: BTreeMap::new() }
    }

    pub fn constant(rank: usize, a: Complex64) -> Self {
        let mut s = ExpSum::new(Complex64::new(0.0, 0.0));
        s.add_term(vec![0; rank], a);
        s
    }

    pub fn monomial(g: Vec<i64>, a: Complex64) -> Self {
        let mut s = ExpSum::new(Complex64::new(0.0, 0.0));
        s.add_term(g, a);
        s
    }

    pub fn add_term(&mut self, g: Vec<i64>, a: Complex64) {
        let e = self.terms.entry(g.clone()).or_insert(Complex64::new(0.0, 0.0));
        *e += a;
        if *e == Complex64::new(0.0, 0.0) {
            self.terms.remove(&g);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn exponent(&self, lat: &Lattice, g: &[i64]) -> Complex64 {
        self.offset + lat.mu_of(g)
    }

    pub fn eval(&self, lat: &Lattice, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(g, a)| a * (self.exponent(lat, g) / z).exp()).sum()
    }

    /// Sum of two sums with equal offsets.
    pub fn add(&self, o: &ExpSum) -> Result<ExpSum> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        if (self.offset - o.offset).norm() > 1e-12 * (1.0 + self.offset.norm()) {
            return Err(Error::Invalid("adding exponential sums with different offsets".into()));
        }
        let mut s = self.clone();
        for (g, a) in &o.terms {
            s.add_term(g.clone(), *a);
        }
        Ok(s)
    }

    pub fn sub(&self, o: &ExpSum) -> Result<ExpSum> {
        self.add(&o.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> ExpSum {
        let mut s = ExpSum::new(self.offset);
        for (g, a) in &self.terms {
            s.add_term(g.clone(), a * c);
        }
        s
    }

    pub fn mul(&self, o: &ExpSum) -> ExpSum {
        let mut s = ExpSum::new(self.offset + o.offset);
        for (g, a) in &self.terms {
            for (h, b) in &o.terms {
                let k: Vec<i64> = g.iter().zip(h).map(|(x, y)| x + y).collect();
                s.add_term(k, a * b);
            }
        }
        s
    }

    /// `u^γ · f`.
    pub fn shift(&self, g: &[i64]) -> ExpSum {
        let mut s = ExpSum::new(self.offset);
        for (h, a) in &self.terms {
            s.add_term(h.iter().zip(g).map(|(x, y)| x + y).collect(), *a);
        }
        s
    }

    /// Exponent-to-coefficient map after merging the offset.
    pub fn normal_form(&self, lat: &Lattice) -> Vec<(Complex64, Complex64)> {
        let mut v: Vec<(Complex64, Complex64)> = Vec::new();
        for (g, a) in &self.terms {
            let e = self.exponent(lat, g);
            match v.iter_mut().find(|(x, _)| (x - e).norm() <= 1e-12 * (1.0 + e.norm())) {
                Some(slot) => slot.1 += a,
                None => v.push((e, *a)),
            }
        }
        v.retain(|(_, a)| *a != Complex64::new(0.0, 0.0));
        v.sort_by(|x, y| (x.0.re, x.0.im).partial_cmp(&(y.0.re, y.0.im)).unwrap());
        v
    }

    pub fn equivalent(&self, o: &ExpSum, lat: &Lattice, tol: f64) -> bool {
        let (a, b) = (self.normal_form(lat), o.normal_form(lat));
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| (x.0 - y.0).norm() <= tol * (1.0 + x.0.norm()) && (x.1 - y.1).norm() <= tol * (1.0 + x.1.norm()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "offset": [self.offset.re, self.offset.im],
            "terms": self.terms.iter().map(|(g, a)| serde_json::json!({"gamma": g, "coeff": [a.re, a.im]})).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::Invalid("exponential sum json".into());
        let o = &v["offset"];
        let mut s = ExpSum::new(Complex64::new(o[0].as_f64().ok_or_else(bad)?, o[1].as_f64().ok_or_else(bad)?));
        for t in v["terms"].as_array().ok_or_else(bad)? {
            let g = t["gamma"].as_array().ok_or_else(bad)?.iter().map(|x| x.as_i64()).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
            let c = &t["coeff"];
            s.add_term(g, Complex64::new(c[0].as_f64().ok_or_else(bad)?, c[1].as_f64().ok_or_else(bad)?));
        }
        Ok(s)
    }
}

/// `Σ |a_γ| ϱ^{‖γ‖}`.
pub fn expsum_norm(f: &ExpSum, lat: &Lattice, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Invalid("ϱ must lie in (0, 1)".into()));
    }
    Ok(f.terms.iter().map(|(g, a)| a.norm() * rho.powf(lat.norm(g))).sum())
}

fn max_cos_on_arc(e: Complex64, a: f64, b: f64) -> f64 {
    let t = e.arg();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let dist = (angle_dist(t, mid) - half).max(0.0);
    dist.cos()
}

/// Output of [`moderate_bound`].
#[derive(Clone, Debug, Serialize)]
pub struct ModerateBound {
    pub bound: f64,
    pub eps_j: f64,
    pub sampled_max: f64,
    pub holds: bool,
}

/// Bound on `|f(z)|` for `arg z ∈ [a, b]`, `|z| = z_abs`, with `|a_0| + Σ|a_γ|e^{−ε_J R‖γ‖/|z|}`.
///
/// `a_0` is the coefficient of the exponent 0. For a nonzero offset the bound uses `|c + μ(γ)|`
/// in place of `R‖γ‖`.
pub fn moderate_bound(f: &ExpSum, a: f64, b: f64, lat: &Lattice, z_abs: f64) -> Result<ModerateBound> {
    let r = if lat.rank() == 0 { f64::INFINITY } else { support_radius(lat, 12)?.radius };
    let zero_off = f.offset.norm() == 0.0;
    let mut eps = f64::INFINITY;
    let mut a0 = Complex64::new(0.0, 0.0);
    for g in f.terms.keys() {
        let e = f.exponent(lat, g);
        if e.norm() <= 1e-14 {
            a0 += f.terms[g];
            continue;
        }
        if !lt_interval(e, Complex64::new(0.0, 0.0), a, b) {
            return Err(Error::NotDecaying(format!("exponent {e} is not below 0 on [{a}, {b}]")));
        }
        eps = eps.min(-max_cos_on_arc(e, a, b));
    }
    let mut bound = a0.norm();
    for (g, c) in &f.terms {
        let e = f.exponent(lat, g);
        if e.norm() <= 1e-14 {
            continue;
        }
        let size = if zero_off && r.is_finite() { r * lat.norm(g) } else { e.norm() };
        bound += c.norm() * (-eps * size / z_abs).exp();
    }
    let mut sampled: f64 = 0.0;
    for k in 0..=64 {
        let th = a + (b - a) * k as f64 / 64.0;
        let z = Complex64::from_polar(z_abs, th);
        sampled = sampled.max(f.eval(lat, z).norm());
    }
    let eps = if eps.is_finite() { eps } else { 1.0 };
    Ok(ModerateBound { bound, eps_j: eps, sampled_max: sampled, holds: sampled <= bound * (1.0 + 1e-12) + 1e-300 })
}

/// Maximal exponents of `f` under `<_θ`.
pub fn filtration_level(f: &ExpSum, lat: &Lattice, theta: f64) -> Vec<Complex64> {
    let exps: Vec<Complex64> = f.normal_form(lat).into_iter().map(|(e, _)| e).collect();
    exps.iter()
        .copied()
        .filter(|&e| !exps.iter().any(|&o| lt_theta(e, o, theta) == Order::Less))
        .collect()
}

/// Finite part of an element of `Exp(I)`: arcs `[θ_min, θ_max]` with values `a_J`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ExponentMultiMap {
    pub arcs: Vec<(f64, f64, f64)>,
}

impl ExponentMultiMap {
    /// Inserts an arc, rejecting it if monotonicity (`J ⊆ J′ ⇒ a_J ≥ a_J′`) would break.
    pub fn insert(&mut self, lo: f64, hi: f64, a: f64) -> Result<()> {
        if hi < lo {
            return Err(Error::Invalid("arc with θ_max < θ_min".into()));
        }
        for &(l, h, v) in &self.arcs {
            let inside = l <= lo && hi <= h;
            let outside = lo <= l && h <= hi;
            if (inside && a < v) || (outside && v < a) {
                return Err(Error::Invalid(format!("value {a} on [{lo}, {hi}] breaks monotonicity against {v} on [{l}, {h}]")));
            }
        }
        self.arcs.retain(|&(l, h, _)| !(l == lo && h == hi));
        self.arcs.push((lo, hi, a));
        Ok(())
    }

    pub fn get(&self, lo: f64, hi: f64) -> Option<f64> {
        self.arcs.iter().find(|&&(l, h, _)| l == lo && h == hi).map(|a| a.2)
    }
}

/// Output of [`frechet_seminorm`].
#[derive(Clone, Debug, Serialize)]
pub struct Seminorm {
    pub value: f64,
    pub growth_detected: bool,
    pub radial_samples: usize,
    pub angular_samples: usize,
    pub r_min: f64,
    pub rho: f64,
}

/// `sup_{z∈K} e^{a_J/|z|}|f(z)|` on `K = S̄(J, ρ)`, sampled.
///
/// Radii run geometrically from `ρ` down to `ρ·r_min_frac`; growth toward the vertex is flagged.
pub fn frechet_seminorm<F: Fn(Complex64) -> Complex64>(
    f: F,
    a: &ExponentMultiMap,
    arc: (f64, f64),
    rho: f64,
    r_min_frac: f64,
    n_radial: usize,
    n_angular: usize,
) -> Result<Seminorm> {
    let aj = a.get(arc.0, arc.1).ok_or_else(|| Error::Invalid("arc not stored in the exponent map".into()))?;
    let mut per_radius = Vec::with_capacity(n_radial);
    for i in 0..n_radial {
        let r = rho * r_min_frac.powf(i as f64 / (n_radial.max(2) - 1) as f64);
        let mut m: f64 = 0.0;
        for k in 0..n_angular {
            let th = if n_angular == 1 { arc.0 } else { arc.0 + (arc.1 - arc.0) * k as f64 / (n_angular - 1) as f64 };
            let v = f(Complex64::from_polar(r, th)).norm();
            // exp(a/r)·|f| computed in log form to survive underflow of |f|.
            let p = if v == 0.0 { 0.0 } else { (aj / r + v.ln()).exp() };
            m = m.max(p);
        }
        per_radius.push(m);
    }
    let value = per_radius.iter().cloned().fold(0.0, f64::max);
    let first = per_radius[0].max(1e-300);
    let last = *per_radius.last().unwrap();
    let tail_increasing = per_radius.windows(2).rev().take(3).all(|w| w[1] > w[0]);
    let growth_detected = !value.is_finite() || (last > 1e3 * first && tail_increasing);
    Ok(Seminorm { value, growth_detected, radial_samples: n_radial, angular_samples: n_angular, r_min: rho * r_min_frac, rho })
}

/// How [`neumann_solve`] truncates.
#[derive(Clone, Debug)]
pub enum Truncation {
    /// Keep terms with `‖γ‖ ≤ bound`.
    LatticeNorm(f64),
    /// Drop terms whose depth `min_{θ∈[a,b]} −Re(e^{−iθ}·exponent)` exceeds `cutoff`.
    Depth { arc: (f64, f64), cutoff: f64 },
}

impl Truncation {
    /// Depth cutoff with the default `8R`.
    pub fn default_depth(lat: &Lattice, arc: (f64, f64)) -> Result<Self> {
        let r = support_radius(lat, 12)?.radius;
        Ok(Truncation::Depth { arc, cutoff: 8.0 * if r.is_finite() { r } else { 1.0 } })
    }

    fn keep(&self, lat: &Lattice, f: &ExpSum, g: &[i64]) -> bool {
        match self {
            Truncation::LatticeNorm(b) => lat.norm(g) <= *b + 1e-9,
            Truncation::Depth { arc, cutoff } => {
                let e = f.exponent(lat, g);
                let depth = (0..=32)
                    .map(|k| arc.0 + (arc.1 - arc.0) * k as f64 / 32.0)
                    .map(|t| -(Complex64::from_polar(1.0, -t) * e).re)
                    .fold(f64::INFINITY, f64::min);
                depth <= *cutoff
            }
        }
    }

    /// Splits into kept and discarded parts.
    fn split(&self, lat: &Lattice, f: &ExpSum) -> (ExpSum, ExpSum) {
        let mut k = ExpSum::new(f.offset);
        let mut d = ExpSum::new(f.offset);
        for (g, a) in &f.terms {
            if self.keep(lat, f, g) {
                k.add_term(g.clone(), *a);
            } else {
                d.add_term(g.clone(), *a);
            }
        }
        (k, d)
    }
}

/// Square matrix of exponential sums acting on vectors of them.
#[derive(Clone, Debug)]
pub struct ExpMatrix {
    pub entries: Vec<Vec<ExpSum>>,
}

pub type ExpVector = Vec<ExpSum>;

impl ExpMatrix {
    pub fn zero(n: usize) -> Self {
        ExpMatrix { entries: vec![vec![ExpSum::default(); n]; n] }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn apply(&self, v: &ExpVector) -> Result<ExpVector> {
        let mut out = Vec::with_capacity(self.dim());
        for row in &self.entries {
            let mut acc = ExpSum::default();
            for (m, x) in row.iter().zip(v) {
                let p = m.mul(x);
                if !p.is_zero() {
                    acc = acc.add(&p)?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn vec_sub(a: &ExpVector, b: &ExpVector) -> Result<ExpVector> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

fn vec_add(a: &ExpVector, b: &ExpVector) -> Result<ExpVector> {
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

pub fn vector_norm(v: &ExpVector, lat: &Lattice, rho: f64) -> Result<f64> {
    v.iter().map(|x| expsum_norm(x, lat, rho)).sum()
}

/// Result of [`neumann_solve`].
#[derive(Clone, Debug)]
pub struct NeumannResult {
    pub h: ExpVector,
    pub iterations: usize,
    /// Everything removed by truncation.
    pub discarded: ExpVector,
    /// `(id − Ψ)h − g`, computed without truncation.
    pub residual: ExpVector,
}

/// Checks that each entry of `Ψ` strictly lowers the level `levels[j] → levels[i]` on the arc.
pub fn check_lowering(psi: &ExpMatrix, lat: &Lattice, levels: &[Complex64], arc: (f64, f64)) -> Result<()> {
    for (i, row) in psi.entries.iter().enumerate() {
        for (j, m) in row.iter().enumerate() {
            for g in m.terms.keys() {
                let e = m.exponent(lat, g) + levels[j] - levels[i];
                if !lt_interval(e, Complex64::new(0.0, 0.0), arc.0, arc.1) {
                    return Err(Error::NotLowering(format!("entry ({i},{j}) has exponent {e} not below 0 on the arc")));
                }
            }
        }
    }
    Ok(())
}

/// `h = Σ_n Ψ^n g` until the next term is entirely truncated away.
pub fn neumann_solve(
    psi: &ExpMatrix,
    g: &ExpVector,
    lat: &Lattice,
    levels: Option<&[Complex64]>,
    arc: (f64, f64),
    trunc: &Truncation,
) -> Result<NeumannResult> {
    let n = psi.dim();
    if g.len() != n {
        return Err(Error::Invalid("vector and matrix sizes differ".into()));
    }
    let zeros = vec![Complex64::new(0.0, 0.0); n];
    check_lowering(psi, lat, levels.unwrap_or(&zeros), arc)?;
    let mut h = g.clone();
    let mut term = g.clone();
    let mut discarded: ExpVector = g.iter().map(|x| ExpSum::new(x.offset)).collect();
    let mut iterations = 0;
    loop {
        let next = psi.apply(&term)?;
        let mut kept = Vec::with_capacity(n);
        for (k, x) in next.iter().enumerate() {
            let (a, b) = trunc.split(lat, x);
            kept.push(a);
            if !b.is_zero() {
                discarded[k] = if discarded[k].is_zero() { b } else { discarded[k].add(&b)? };
            }
        }
        if kept.iter().all(|x| x.is_zero()) {
            break;
        }
        h = vec_add(&h, &kept)?;
        term = kept;
        iterations += 1;
        if iterations > 10_000 {
            return Err(Error::NotLowering("Neumann series failed to terminate".into()));
        }
    }
    let residual = vec_sub(&vec_sub(&h, &psi.apply(&h)?)?, g)?;
    Ok(NeumannResult { h, iterations, discarded, residual })
}

/// Output of [`glue_surjective`].
#[derive(Clone, Debug)]
pub struct Gluing {
    pub h: ExpVector,
    pub s1: ExpVector,
    pub s2: ExpVector,
    /// `g − s₁(h) − φ(s₂(h))`.
    pub residual: ExpVector,
    pub discarded: ExpVector,
}

/// Splits `g` along a partition of the components into `T₁` (`true`) and `T₂`.
fn split_partition(g: &ExpVector, t1: &[bool]) -> (ExpVector, ExpVector) {
    let z = |x: &ExpSum| ExpSum::new(x.offset);
    let s1 = g.iter().zip(t1).map(|(x, &b)| if b { x.clone() } else { z(x) }).collect();
    let s2 = g.iter().zip(t1).map(|(x, &b)| if b { z(x) } else { x.clone() }).collect();
    (s1, s2)
}

/// Solves `g = s₁(h) + φ(s₂(h))` for a near-identity `φ = id + n` and a given partition.
///
/// Iterates `Φ(g) = (id − φ)(s₂(g)) = −n(s₂(g))` in the Neumann series.
pub fn glue_surjective(
    n_part: &ExpMatrix,
    t1: &[bool],
    g: &ExpVector,
    lat: &Lattice,
    arc: (f64, f64),
    trunc: &Truncation,
) -> Result<Gluing> {
    let dim = n_part.dim();
    let mut phi_map = ExpMatrix::zero(dim);
    for i in 0..dim {
        for j in 0..dim {
            if !t1[j] {
                phi_map.entries[i][j] = n_part.entries[i][j].scale(Complex64::new(-1.0, 0.0));
            }
        }
    }
    let r = neumann_solve(&phi_map, g, lat, None, arc, trunc)?;
    let (s1, s2) = split_partition(&r.h, t1);
    let phi_s2 = vec_add(&s2, &n_part.apply(&s2)?)?;
    let residual = vec_sub(&vec_sub(g, &s1)?, &phi_s2)?;
    Ok(Gluing { h: r.h, s1, s2, residual, discarded: r.discarded })
}

//! Module invariants behind `stokes-wb check`, one registry entry per property.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::betti::{dft_weights, flow_check, trace_thimble, TraceConfig};
use crate::derham::*;
use crate::error::Error;
use crate::gamma;
use crate::gevrey::{formal_borel, GevreySeries, SeriesJson};
use crate::lattice::*;
use crate::poly::Poly;
use crate::scalar::ComplexScalar;
use crate::stokes::{stokes_factor, xi_matrix};
use crate::summation::{continue_borel, BorelFunction, ContinuationConfig};

/// Shared inputs: the seed and an optional deliberate corruption used to exercise failure paths.
#[derive(Clone, Debug, Default)]
pub struct CheckContext {
    pub seed: u64,
    /// Perturbs one coefficient of the reference Stirling series.
    pub corrupt_stirling: bool,
}

impl CheckContext {
    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

pub trait Invariant: Sync {
    fn module(&self) -> &'static str;
    fn name(&self) -> &'static str;
    fn check(&self, ctx: &CheckContext) -> Result<(), String>;

    fn id(&self) -> String {
        format!("{}.{}", self.module(), self.name())
    }
}

struct Inv {
    module: &'static str,
    name: &'static str,
    f: fn(&CheckContext) -> Result<(), String>,
}

impl Invariant for Inv {
    fn module(&self) -> &'static str {
        self.module
    }
    fn name(&self) -> &'static str {
        self.name
    }
    fn check(&self, ctx: &CheckContext) -> Result<(), String> {
        (self.f)(ctx)
    }
}

macro_rules! inv {
    ($m:literal, $n:literal, $f:expr) => {
        Box::new(Inv { module: $m, name: $n, f: $f }) as Box<dyn Invariant>
    };
}

pub fn registry() -> Vec<Box<dyn Invariant>> {
    vec![
        inv!("gevrey", "ring_axioms", ring_axioms),
        inv!("gevrey", "borel_linearity", borel_linearity),
        inv!("gevrey", "json_round_trip", json_round_trip),
        inv!("summation", "continuations_agree_or_refuse", continuations_agree),
        inv!("lattice", "strict_order", strict_order),
        inv!("lattice", "omega_symmetry", omega_symmetry),
        inv!("lattice", "level_equivariance", level_equivariance),
        inv!("lattice", "neumann_residual", neumann_residual),
        inv!("lattice", "rank_one_radius", rank_one_radius),
        inv!("derham", "degree_identity", degree_identity),
        inv!("derham", "residue_sum", residue_sum),
        inv!("derham", "stirling_formal_xi", stirling_formal_xi),
        inv!("betti", "dft_unitary", dft_unitary),
        inv!("betti", "flow_is_steepest_descent", flow_is_steepest_descent),
        inv!("stokes", "near_identity_factor", near_identity_factor),
    ]
}

/// Runs the invariants whose id starts with `filter` (all when `None`).
pub fn run(ctx: &CheckContext, filter: Option<&str>) -> Vec<(String, Result<(), String>)> {
    registry()
        .into_iter()
        .filter(|i| filter.map_or(true, |f| i.module() == f || i.id().starts_with(f)))
        .map(|i| (i.id(), i.check(ctx)))
        .collect()
}

/// TAP version 13 report.
pub fn tap(results: &[(String, Result<(), String>)]) -> String {
    let mut s = format!("TAP version 13\n1..{}\n", results.len());
    for (k, (id, r)) in results.iter().enumerate() {
        match r {
            Ok(()) => s += &format!("ok {} - {id}\n", k + 1),
            Err(e) => s += &format!("not ok {} - {id}\n  ---\n  message: {:?}\n  ...\n", k + 1, e),
        }
    }
    s
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn int_series(rng: &mut ChaCha8Rng) -> GevreySeries {
    GevreySeries::new((0..6).map(|_| ComplexScalar::from_i64(rng.gen_range(-9..10), 256)).collect())
}

fn ring_axioms(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(1);
    for _ in 0..20 {
        let (a, b, c) = (int_series(&mut rng), int_series(&mut rng), int_series(&mut rng));
        ensure(a.mul(&b).mul(&c) == a.mul(&b.mul(&c)), || "multiplication is not associative".into())?;
        ensure(a.mul(&b.add(&c)) == a.mul(&b).add(&a.mul(&c)), || "multiplication does not distribute".into())?;
        ensure(a.mul(&b) == b.mul(&a), || "multiplication is not commutative".into())?;
    }
    Ok(())
}

fn borel_linearity(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(2);
    for _ in 0..20 {
        let (a, b) = (int_series(&mut rng), int_series(&mut rng));
        let x = ComplexScalar::from_i64(rng.gen_range(-5..6), 256);
        let lhs = formal_borel(&a.scale(&x).add(&b));
        let rhs = formal_borel(&a).scale(&x).add(&formal_borel(&b));
        for (u, v) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            ensure(u.approx_eq(v, 1e-70), || "Borel transform is not linear".into())?;
        }
    }
    Ok(())
}

fn json_round_trip(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(3);
    let lam = ComplexScalar::from_f64(rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0), 256);
    let s = gamma::stirling_exponent(&lam, 15, 256);
    let text = serde_json::to_string(&s.to_json()).map_err(|e| e.to_string())?;
    let j: SeriesJson = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(GevreySeries::from_json(&j).map_err(e2s)? == s, || "series JSON is not bit-exact".into())?;
    let lat = Lattice::unit(vec![Complex64::new(rng.gen(), rng.gen()), Complex64::new(0.0, -TAU)]);
    ensure(Lattice::from_json(&lat.to_json()).map_err(e2s)? == lat, || "lattice JSON does not round-trip".into())
}

fn continuations_agree(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(4);
    let geo = GevreySeries::new((0..=400).map(|_| ComplexScalar::one(256)).collect());
    let pade = BorelFunction::pade(geo.truncate(40)).map_err(e2s)?;
    let steps = BorelFunction::new(geo, "taylor_stepping", &ContinuationConfig::default()).map_err(e2s)?;
    for _ in 0..4 {
        let zeta = Complex64::from_polar(rng.gen_range(0.2..5.0), rng.gen_range(0.2..TAU - 0.2));
        let a = continue_borel(&pade, zeta, 1e-10).map_err(e2s)?;
        match continue_borel(&steps, zeta, 1e-10) {
            Ok(b) => ensure((a - b).norm() <= 1e-10 * b.norm(), || format!("Padé {a} and Taylor stepping {b} differ at {zeta}"))?,
            Err(Error::ContinuationDiverged(_)) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(())
}

fn cplx(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))
}

fn strict_order(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(5);
    for _ in 0..500 {
        let (a, b, c) = (cplx(&mut rng), cplx(&mut rng), cplx(&mut rng));
        let th = rng.gen_range(-PI..PI);
        ensure(lt_theta(a, a, th) != Order::Less, || "irreflexivity fails".into())?;
        if lt_theta(a, b, th) == Order::Less && lt_theta(b, c, th) == Order::Less {
            ensure(lt_theta(a, c, th) == Order::Less, || format!("transitivity fails for {a}, {b}, {c} at {th}"))?;
        }
    }
    Ok(())
}

fn omega_symmetry(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(6);
    for _ in 0..10 {
        let lat = Lattice::unit(vec![Complex64::new(rng.gen_range(0.5..2.0), 0.0), Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0))]);
        let o = omega_set(&[cplx(&mut rng)], &lat, 6.0).map_err(e2s)?;
        for w in &o {
            ensure(o.iter().any(|v| (v + w).norm() <= 1e-12 * (1.0 + w.norm())), || format!("{w} has no negative in Ω"))?;
        }
    }
    Ok(())
}

fn level_equivariance(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(7);
    let lat = Lattice::unit(vec![Complex64::new(-1.0, 0.3), Complex64::new(0.2, -1.1)]);
    for _ in 0..50 {
        let mut f = ExpSum::default();
        for _ in 0..4 {
            f.add_term(vec![rng.gen_range(-3..4), rng.gen_range(-3..4)], cplx(&mut rng));
        }
        let g = vec![rng.gen_range(-3..4), rng.gen_range(-3..4)];
        let th = rng.gen_range(-PI..PI);
        let shifted = filtration_level(&f.shift(&g), &lat, th);
        let moved: Vec<Complex64> = filtration_level(&f, &lat, th).into_iter().map(|e| e + lat.mu_of(&g)).collect();
        let same = shifted.len() == moved.len() && shifted.iter().all(|a| moved.iter().any(|b| (a - b).norm() <= 1e-12 * (1.0 + a.norm())));
        ensure(same, || format!("levels of u^{g:?}·f are not shifted by μ(γ)"))?;
    }
    Ok(())
}

fn neumann_residual(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(8);
    let lat = Lattice::unit(vec![Complex64::new(0.0, -TAU)]);
    let arc = (FRAC_PI_2 - 0.3, FRAC_PI_2 + 0.3);
    for _ in 0..10 {
        let mut m = ExpMatrix::zero(2);
        for i in 0..2 {
            for j in 0..2 {
                m.entries[i][j] = ExpSum::monomial(vec![rng.gen_range(1..4)], 0.2 * cplx(&mut rng));
            }
        }
        let g = vec![ExpSum::constant(1, cplx(&mut rng)), ExpSum::constant(1, cplx(&mut rng))];
        let r = neumann_solve(&m, &g, &lat, None, arc, &Truncation::LatticeNorm(8.0)).map_err(e2s)?;
        let res = vector_norm(&r.residual, &lat, 0.5).map_err(e2s)?;
        let tail = vector_norm(&r.discarded, &lat, 0.5).map_err(e2s)?;
        ensure(res <= tail * (1.0 + 1e-12) + 1e-300, || format!("residual {res:e} exceeds the discarded tail {tail:e}"))?;
    }
    Ok(())
}

fn rank_one_radius(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(9);
    for _ in 0..20 {
        let m = cplx(&mut rng);
        let w = rng.gen_range(0.1..5.0);
        let r = support_radius(&Lattice::new(vec![m], vec![w]).map_err(e2s)?, 5).map_err(e2s)?;
        ensure(r.radius == m.norm() / w, || format!("rank-1 radius {} is not |μ|/w", r.radius))?;
    }
    Ok(())
}

fn random_poly(rng: &mut ChaCha8Rng, n: usize) -> Poly {
    let c: Vec<Complex64> = (0..=n).map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
    Poly::from_c64(&c, 256)
}

fn degree_identity(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(10);
    for _ in 0..30 {
        let (np, nq) = (rng.gen_range(0..4), rng.gen_range(0..4));
        let (p, q) = (random_poly(&mut rng, np), random_poly(&mut rng, nq));
        if let Ok(f) = analyze(&p, &q) {
            ensure(f.degree_sum() == -2, || format!("Σm − Σn = {}", f.degree_sum()))?;
        }
    }
    Ok(())
}

fn residue_sum(ctx: &CheckContext) -> Result<(), String> {
    let mut rng = ctx.rng(11);
    for _ in 0..30 {
        let (p, q) = (random_poly(&mut rng, 1), random_poly(&mut rng, 2));
        if let Ok(f) = analyze(&p, &q) {
            let s: Complex64 = f.poles.iter().map(|p| p.residue.to_c64()).sum();
            ensure(s.norm() < 1e-12, || format!("residues sum to {s}"))?;
        }
    }
    Ok(())
}

fn stirling_formal_xi(ctx: &CheckContext) -> Result<(), String> {
    let lam = ComplexScalar::one(256);
    let form = gamma_form(&lam).map_err(e2s)?;
    let xi = formal_xi(&FormRep::dx_over_x(256), &form, 0, 20).map_err(e2s)?;
    let mut reference = gamma::stirling_formal(&lam, 20, 256).coeffs().to_vec();
    if ctx.corrupt_stirling {
        reference[3] = &reference[3] + &ComplexScalar::from_f64(1e-6, 0.0, 256);
    }
    for (n, (a, b)) in xi.g[0].coeffs().iter().zip(&reference).enumerate() {
        ensure(a.approx_eq(b, 1e-12), || format!("coefficient {n} of formal Ξ differs from λ^(-1/2)exp(-b_λ)"))?;
    }
    Ok(())
}

fn dft_unitary(_: &CheckContext) -> Result<(), String> {
    for m in 1..7usize {
        for a in 0..=m {
            for b in 0..=m {
                let (u, v) = (dft_weights(m, a), dft_weights(m, b));
                let ip: Complex64 = u.iter().zip(&v).map(|(x, y)| x * y.conj()).sum();
                let scale: f64 = u.iter().map(|x| x.norm_sqr()).sum();
                let want = if a == b { scale } else { 0.0 };
                ensure((ip - want).norm() <= 1e-12 * scale, || format!("DFT weights for m = {m} are not orthogonal"))?;
            }
        }
    }
    Ok(())
}

fn flow_is_steepest_descent(_: &CheckContext) -> Result<(), String> {
    let form = gamma_form(&ComplexScalar::one(256)).map_err(e2s)?;
    let pl = period_lattice(&form).map_err(e2s)?;
    let cd = critical_values(&form, &pl.lattice, None, &[]).map_err(e2s)?;
    for d in [0.0, 2.0] {
        let t = trace_thimble(&form, &cd, &pl.lattice, 0, 0, d, &TraceConfig::default()).map_err(e2s)?;
        for h in [&t.forward, &t.backward] {
            let fc = flow_check(&form, h);
            ensure(fc.max_im_dev <= 1e-9 && fc.monotone, || format!("flow check at d = {d}: {fc:?}"))?;
        }
    }
    Ok(())
}

fn near_identity_factor(_: &CheckContext) -> Result<(), String> {
    let form = gamma_form(&ComplexScalar::one(256)).map_err(e2s)?;
    let pl = period_lattice(&form).map_err(e2s)?;
    let cd = critical_values(&form, &pl.lattice, None, &[]).map_err(e2s)?;
    let grid: Vec<Complex64> = (0..9).map(|i| Complex64::from_polar(0.3 + 0.3 * (i % 3) as f64, FRAC_PI_2 - 0.25 + 0.25 * (i / 3) as f64)).collect();
    let reps = [FormRep::dx_over_x(256)];
    let cfg = TraceConfig::default();
    let a = xi_matrix(&form, &cd, &pl.lattice, FRAC_PI_2 - 0.6, &grid, &reps, &cfg, 10).map_err(e2s)?;
    let b = xi_matrix(&form, &cd, &pl.lattice, FRAC_PI_2 + 0.6, &grid, &reps, &cfg, 10).map_err(e2s)?;
    let s = stokes_factor(&a, &b, &pl.lattice, 3.0, 1e-6).map_err(e2s)?;
    ensure(s.near_identity, || "Stokes factor is not exponentially close to the identity".into())
}

//! Local model cycles, normalizers `h_{j,k}`, and steepest-flow thimbles on ℙ¹∖(D∪Z).

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::derham::{local_coordinate_series, CriticalData, OneForm, Place};
use crate::error::{Error, Result};
use crate::lattice::{is_generic, Lattice};
use crate::quadrature;
use crate::special::ln_gamma;

/// The straight path `t ↦ t·e^{i(2πℓ+d)/(m+1)}` in the local coordinate; `t < 0` leaves along ray `ℓ+1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalRay {
    pub j: usize,
    pub ell: usize,
    pub d: f64,
    /// Angle for `t ≥ 0`.
    pub slope_out: f64,
    /// Angle for `t ≤ 0`.
    pub slope_in: f64,
}

/// Half-ray angle `φ_ℓ = (2πℓ + d)/(m+1)`.
pub fn ray_angle(m: usize, ell: usize, d: f64) -> f64 {
    (TAU * ell as f64 + d) / (m + 1) as f64
}

pub fn local_rays(j: usize, m: usize, d: f64) -> Vec<LocalRay> {
    (0..=m)
        .map(|ell| LocalRay { j, ell, d, slope_out: ray_angle(m, ell, d), slope_in: ray_angle(m, ell + 1, d) })
        .collect()
}

/// `Σ_ℓ w_ℓ c_ℓ` over the paths `c_ℓ` at one zero, all in direction `d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cycle {
    pub j: usize,
    pub d: f64,
    pub weights: Vec<Complex64>,
}

/// `(1/(m+1)) e^{−2πi(k+1)ℓ/(m+1)}`, `ℓ = 0..=m`.
pub fn dft_weights(m: usize, k: usize) -> Vec<Complex64> {
    let n = (m + 1) as f64;
    (0..=m).map(|ell| Complex64::from_polar(1.0 / n, -TAU * ((k + 1) * ell) as f64 / n)).collect()
}

pub fn dft_cycles(j: usize, m: usize, d: f64) -> Vec<Cycle> {
    (0..m).map(|k| Cycle { j, d, weights: dft_weights(m, k) }).collect()
}

/// `z^p` with `arg z` continued into `(d − π, d + π]`.
pub fn pow_near(z: Complex64, p: f64, d: f64) -> Complex64 {
    (p * crate::gamma::log_near(z, d)).exp()
}

/// `h_{j,k}(z) = (m+1)^{−1}(1 − e^{2πi(k+1)/(m+1)}) ((m+1)z)^{(k+1)/(m+1)} Γ((k+1)/(m+1))`.
pub fn h_factor(m: usize, k: usize, z: Complex64, d: f64) -> Complex64 {
    let n = (m + 1) as f64;
    let p = (k + 1) as f64 / n;
    let phase = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, TAU * p);
    phase / n * pow_near(n * z, p, d) * ln_gamma(Complex64::new(p, 0.0)).exp()
}

/// `∫_{cycle} e^{−u^{m+1}/((m+1)z)} u^{k} du` by adaptive quadrature along the rays.
pub fn local_model_integral(m: usize, k: usize, cycle: &Cycle, z: Complex64, tol: f64) -> Complex64 {
    let n = (m + 1) as f64;
    // Outgoing half-ray integrals I_ℓ along φ_ℓ, cut where the integrand is below tol.
    let half = |ell: usize| -> Complex64 {
        let phi = ray_angle(m, ell, cycle.d);
        let e = Complex64::from_polar(1.0, phi);
        let rate = (Complex64::from_polar(1.0, cycle.d) / (n * z)).re;
        assert!(rate > 0.0, "z outside the half-plane of the cycle");
        let cut = (40.0 / rate).powf(1.0 / n) + 1.0;
        let r = quadrature::integrate(
            |r| {
                let u = e * r;
                (-u.powu(m as u32 + 1) / (n * z)).exp() * u.powu(k as u32) * e
            },
            0.0,
            cut,
            tol,
        );
        r.value
    };
    let ints: Vec<Complex64> = (0..=m).map(half).collect();
    cycle.weights.iter().enumerate().map(|(ell, w)| w * (ints[ell] - ints[(ell + 1) % (m + 1)])).sum()
}

/// Angular description of `D̃_k^I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum BoundarySet {
    /// Union of open intervals of the normalized boundary angle.
    Arcs(Vec<(f64, f64)>),
    Full,
    Empty,
}

impl BoundarySet {
    pub fn contains(&self, theta: f64) -> bool {
        match self {
            BoundarySet::Full => true,
            BoundarySet::Empty => false,
            BoundarySet::Arcs(a) => a.iter().any(|&(lo, hi)| {
                let t = lo + (theta - lo).rem_euclid(TAU);
                t > lo && t < hi
            }),
        }
    }
}

/// `D̃_k^I` for a pole of order `n` and closed arc `I = [a, b]`; `residue` is used when `n = 1`.
pub fn boundary_set(n: usize, residue: Complex64, arc: (f64, f64)) -> BoundarySet {
    let (a, b) = arc;
    if n == 1 {
        // Re(e^{−iθ}α_k) = |α_k| cos(arg α_k − θ) < 0 on [a, b]
        let ok = |t: f64| (Complex64::from_polar(1.0, -t) * residue).re < 0.0;
        let worst = {
            // cos is extremal at the endpoints or at θ = arg α_k.
            let mut pts = vec![a, b];
            let c = residue.arg();
            for s in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let t = c + s * TAU;
                if t > a && t < b {
                    pts.push(t);
                }
            }
            pts.into_iter().all(ok)
        };
        return if worst { BoundarySet::Full } else { BoundarySet::Empty };
    }
    if b - a >= PI {
        return BoundarySet::Empty;
    }
    let k = (n - 1) as f64;
    let arcs = (0..n - 1)
        .map(|r| ((0.5 * PI - a + TAU * r as f64) / k, (1.5 * PI - b + TAU * r as f64) / k))
        .collect();
    BoundarySet::Arcs(arcs)
}

/// Where a half-thimble ends.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Terminal {
    /// Pole of order ≥ 2 or a simple pole approached along a straight line.
    Pole { pole: usize, order: usize, boundary_angle: f64, in_boundary_set: bool },
    /// Simple pole approached on a logarithmic spiral; the tail is straightened to the pole.
    SpiralAtSimplePole { pole: usize, boundary_angle: f64, in_boundary_set: bool },
}

impl Terminal {
    pub fn pole(&self) -> usize {
        match self {
            Terminal::Pole { pole, .. } | Terminal::SpiralAtSimplePole { pole, .. } => *pole,
        }
    }
}

/// Step controls for the flow integrator.
#[derive(Clone, Copy, Debug)]
pub struct TraceConfig {
    pub rtol: f64,
    /// Largest step in the action parameter `s`.
    pub h_max: f64,
    /// Trace at least until `s = s_max`.
    pub s_max: f64,
    pub max_steps: usize,
    /// Seed radius in the `u` coordinate as a fraction of the series radius.
    pub seed_fraction: f64,
    /// Order of the local coordinate series.
    pub local_order: usize,
    pub genericity_radius: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            rtol: 1e-11,
            h_max: 0.05,
            s_max: 120.0,
            max_steps: 400_000,
            seed_fraction: 0.3,
            local_order: 40,
            genericity_radius: 100.0,
        }
    }
}

impl TraceConfig {
    /// Lengthens the trace so that `e^{−s·Re(e^{id}/z)}` falls below `e^{−45}` at every `z` of the grid.
    pub fn reaching(&self, d: f64, z_grid: &[Complex64]) -> TraceConfig {
        let e = Complex64::from_polar(1.0, d);
        let rate = z_grid.iter().map(|z| (e / z).re).fold(f64::INFINITY, f64::min);
        let mut c = *self;
        if rate > 0.0 && rate.is_finite() {
            c.s_max = c.s_max.max(45.0 / rate);
        }
        c
    }
}

/// Primitive `F` with logarithm branches followed continuously.
#[derive(Clone, Debug)]
pub struct Primitive<'a> {
    form: &'a OneForm,
    poles: Vec<(Complex64, Complex64)>,
}

impl<'a> Primitive<'a> {
    pub fn new(form: &'a OneForm) -> Self {
        let poles = form
            .poles
            .iter()
            .filter_map(|p| match &p.place {
                Place::Finite(x) => Some((x.to_c64(), p.laurent[0].to_c64())),
                Place::Infinity => None,
            })
            .collect();
        Primitive { form, poles }
    }

    /// `F(x)` with each `log(x − p)` taken nearest to `near`; returns the chosen logs.
    pub fn eval(&self, x: Complex64, near: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let mut v = self.form.primitive_rational(x);
        let mut logs = Vec::with_capacity(self.poles.len());
        for (i, (p, a)) in self.poles.iter().enumerate() {
            let mut l = (x - p).ln();
            if let Some(prev) = near.get(i) {
                l.im += TAU * ((prev.im - l.im) / TAU).round();
            }
            v += a * l;
            logs.push(l);
        }
        (v, logs)
    }

    pub fn principal_logs(&self, x: Complex64) -> Vec<Complex64> {
        self.poles.iter().map(|(p, _)| (x - p).ln()).collect()
    }
}

/// Outgoing half-thimble from zero `j` along local ray `ℓ`: `f − c_j = s e^{id}`, `s ≥ 0`.
#[derive(Clone, Debug)]
pub struct HalfThimble {
    pub j: usize,
    pub ell: usize,
    pub d: f64,
    pub m: usize,
    /// Seed radius and angle in the `u` coordinate.
    pub r0: f64,
    pub phi: f64,
    /// Taylor coefficients of `x(u) − q_j`.
    pub x_of_u: Vec<Complex64>,
    pub q: Complex64,
    /// Samples `(s, x, f − c_j)` with `f` followed by the primitive.
    pub samples: Vec<(f64, Complex64, Complex64)>,
    /// Gauss nodes `(s, weight, x)` of each step.
    pub nodes: Vec<(f64, f64, Complex64)>,
    pub terminal: Terminal,
}

impl HalfThimble {
    pub fn s_end(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(0.0)
    }
}

/// A global path `c_ℓ`: in along ray `ℓ+1`, out along ray `ℓ`.
#[derive(Clone, Debug)]
pub struct ThimblePath {
    pub forward: HalfThimble,
    pub backward: HalfThimble,
}

impl ThimblePath {
    /// `(t, x, f − c)` with `t = −s` on the backward half.
    pub fn samples(&self) -> Vec<(f64, Complex64, Complex64)> {
        let mut out: Vec<_> = self.backward.samples.iter().rev().map(|&(s, x, f)| (-s, x, f)).collect();
        out.extend(self.forward.samples.iter().skip(1).copied());
        out
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Invalid(e.to_string());
        wr.write_record(["t", "x_re", "x_im", "f_re", "f_im"]).map_err(io)?;
        for (t, x, f) in self.samples() {
            wr.write_record(&[t, x.re, x.im, f.re, f.im].map(|v| format!("{v:.17e}"))).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn header_json(&self) -> serde_json::Value {
        serde_json::json!({
            "j": self.forward.j,
            "ell": self.forward.ell,
            "d": self.forward.d,
            "forward_terminal": self.forward.terminal,
            "backward_terminal": self.backward.terminal,
        })
    }
}

fn special_points(form: &OneForm) -> Vec<Complex64> {
    form.zeros
        .iter()
        .filter_map(|z| z.place.to_c64())
        .chain(form.poles.iter().filter_map(|p| p.place.to_c64()))
        .collect()
}

/// Pole data used at capture.
struct PoleInfo {
    index: usize,
    at: Option<Complex64>,
    order: usize,
    leading: Complex64,
    residue: Complex64,
    capture: f64,
}

fn pole_infos(form: &OneForm) -> Vec<PoleInfo> {
    let pts = special_points(form);
    let big = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    form.poles
        .iter()
        .enumerate()
        .map(|(i, p)| match &p.place {
            Place::Finite(x) => {
                let x = x.to_c64();
                let dist = pts.iter().filter(|q| (*q - x).norm() > 0.0).map(|q| (q - x).norm()).fold(f64::INFINITY, f64::min);
                PoleInfo {
                    index: i,
                    at: Some(x),
                    order: p.order,
                    leading: p.laurent[p.order - 1].to_c64(),
                    residue: p.residue.to_c64(),
                    capture: 0.1 * if dist.is_finite() { dist } else { 1.0 },
                }
            }
            Place::Infinity => {
                // a(x) ~ L x^{n−2}, so α ~ −L v^{−n} dv with v = 1/x.
                let l = form.p.leading().to_c64() / form.q.leading().to_c64();
                PoleInfo { index: i, at: None, order: p.order, leading: -l, residue: p.residue.to_c64(), capture: 10.0 * big }
            }
        })
        .collect()
}

fn terminal_for(info: &PoleInfo, x: Complex64, d: f64) -> Terminal {
    let w = match info.at {
        Some(p) => x - p,
        None => x.inv(),
    };
    let raw = w.arg();
    if info.order == 1 {
        let set = boundary_set(1, info.residue, (d, d));
        let spiral = (Complex64::from_polar(1.0, -d) * info.residue).im.abs() > 1e-8 * info.residue.norm();
        let inside = set.contains(raw);
        if spiral {
            Terminal::SpiralAtSimplePole { pole: info.index, boundary_angle: raw, in_boundary_set: inside }
        } else {
            Terminal::Pole { pole: info.index, order: 1, boundary_angle: raw, in_boundary_set: inside }
        }
    } else {
        // Normalize so that f ≈ −v^{1−n}: v = w·(−B)^{1/(1−n)}, B = A_n/(1−n).
        let k = (info.order - 1) as f64;
        let b = info.leading / (1.0 - info.order as f64);
        let theta = raw - (-b).arg() / k;
        let theta = theta.rem_euclid(TAU);
        let inside = boundary_set(info.order, info.residue, (d, d)).contains(theta);
        Terminal::Pole { pole: info.index, order: info.order, boundary_angle: theta, in_boundary_set: inside }
    }
}

fn hermite(x0: Complex64, x1: Complex64, v0: Complex64, v1: Complex64, h: f64, t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    x0 * (2.0 * t3 - 3.0 * t2 + 1.0) + v0 * h * (t3 - 2.0 * t2 + t) + x1 * (-2.0 * t3 + 3.0 * t2) + v1 * h * (t3 - t2)
}

/// Traces the half-thimble from zero `j` leaving along ray `ℓ`.
pub fn trace_half(form: &OneForm, j: usize, ell: usize, d: f64, cfg: &TraceConfig) -> Result<HalfThimble> {
    let m = form.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.order;
    let q = form.zero_location(j)?.to_c64();
    let lc = local_coordinate_series(form, j, cfg.local_order)?;
    let coeffs = lc.t_of_u.coeffs_c64();
    let radius = crate::summation::radius_estimate(lc.t_of_u.coeffs());
    let pts = special_points(form);
    let near_scale = pts.iter().filter(|p| (*p - q).norm() > 0.0).map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
    let r0 = (cfg.seed_fraction * radius.min(if near_scale.is_finite() { near_scale } else { 1.0 })).min(0.5);
    let phi = ray_angle(m, ell, d);
    let e_d = Complex64::from_polar(1.0, d);
    let x_of_u = |u: Complex64| coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);

    let prim = Primitive::new(form);
    let (f_q, _) = prim.eval(q, &prim.principal_logs(q));
    let logs_q = prim.principal_logs(q);

    let mut samples = Vec::new();
    // Seed segment along the exact local ray.
    let nseed = 8;
    let mut logs = logs_q.clone();
    for i in 0..=nseed {
        let r = r0 * i as f64 / nseed as f64;
        let u = Complex64::from_polar(r, phi);
        let x = q + x_of_u(u);
        let s = r.powi(m as i32 + 1) / (m + 1) as f64;
        if i > 0 {
            let (fv, l) = prim.eval(x, &logs);
            logs = l;
            samples.push((s, x, fv - f_q));
        } else {
            samples.push((0.0, q, Complex64::new(0.0, 0.0)));
        }
    }
    let s0 = r0.powi(m as i32 + 1) / (m + 1) as f64;
    let mut x = q + x_of_u(Complex64::from_polar(r0, phi));
    let mut s = s0;

    let other_zeros: Vec<Complex64> =
        form.zeros.iter().enumerate().filter(|(i, _)| *i != j).filter_map(|(_, z)| z.place.to_c64()).collect();
    let infos = pole_infos(form);
    let scale = pts.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let saddle_tol = 1e-4 * scale;

    let rhs = |x: Complex64| e_d / form.a_c64(x);
    // Newton projection onto F(x) − F(q) = s e^{id}.
    let project = |x: Complex64, s: f64, logs: &[Complex64]| -> (Complex64, Vec<Complex64>, Complex64) {
        let mut x = x;
        let mut l = logs.to_vec();
        for _ in 0..3 {
            let (v, nl) = prim.eval(x, &l);
            l = nl;
            let r = v - f_q - s * e_d;
            let dx = r / form.a_c64(x);
            x -= dx;
            if dx.norm() <= 1e-16 * x.norm().max(1e-300) {
                break;
            }
        }
        let (v, nl) = prim.eval(x, &l);
        (x, nl, v - f_q)
    };
    let (gx, gw) = quadrature::gl16();
    let mut nodes = Vec::new();
    let mut h = (0.1 * s0).max(1e-6).min(cfg.h_max);
    let mut captured: Option<Terminal> = None;
    let mut steps = 0;
    let local_scale = |x: Complex64| -> f64 {
        let mut dmin = f64::INFINITY;
        for p in &pts {
            dmin = dmin.min((x - p).norm());
        }
        dmin.min(x.norm().max(1.0))
    };
    let mut v0 = rhs(x);
    loop {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::NoCapture(format!("no pole reached after {} steps (s = {s:.3})", cfg.max_steps)));
        }
        // Dormand–Prince 5(4).
        let k1 = v0;
        let k2 = rhs(x + h * (k1 * (1.0 / 5.0)));
        let k3 = rhs(x + h * (k1 * (3.0 / 40.0) + k2 * (9.0 / 40.0)));
        let k4 = rhs(x + h * (k1 * (44.0 / 45.0) - k2 * (56.0 / 15.0) + k3 * (32.0 / 9.0)));
        let k5 = rhs(x + h * (k1 * (19372.0 / 6561.0) - k2 * (25360.0 / 2187.0) + k3 * (64448.0 / 6561.0) - k4 * (212.0 / 729.0)));
        let k6 = rhs(x + h * (k1 * (9017.0 / 3168.0) - k2 * (355.0 / 33.0) + k3 * (46732.0 / 5247.0) + k4 * (49.0 / 176.0) - k5 * (5103.0 / 18656.0)));
        let x5 = x + h * (k1 * (35.0 / 384.0) + k3 * (500.0 / 1113.0) + k4 * (125.0 / 192.0) - k5 * (2187.0 / 6784.0) + k6 * (11.0 / 84.0));
        let k7 = rhs(x5);
        let x4 = x + h * (k1 * (5179.0 / 57600.0) + k3 * (7571.0 / 16695.0) + k4 * (393.0 / 640.0) - k5 * (92097.0 / 339200.0) + k6 * (187.0 / 2100.0) + k7 * (1.0 / 40.0));
        let sc = local_scale(x);
        let err = (x5 - x4).norm() / (cfg.rtol * sc);
        // Limit the angular motion around the nearest special point per step.
        let turn = (x5 - x).norm() / sc;
        if !err.is_finite() || err > 1.0 || turn > 0.3 {
            let fac = if err.is_finite() && err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
            h *= if turn > 0.3 { fac.min(0.3 / turn) } else { fac };
            if h < 1e-14 * s.max(1.0) {
                return Err(Error::SaddleEncounter(format!("step size collapsed near x = {x}")));
            }
            continue;
        }
        let s1 = s + h;
        let (x1, l1, f1) = project(x5, s1, &logs);
        let v1 = rhs(x1);
        // Gauss nodes refined onto the exact parametrization.
        let mut lnode = logs.clone();
        for (t, w) in gx.iter().zip(gw.iter()) {
            let tt = 0.5 * (t + 1.0);
            let guess = hermite(x, x1, v0, v1, h, tt);
            let (xn, ln, _) = project(guess, s + h * tt, &lnode);
            lnode = ln;
            nodes.push((s + h * tt, 0.5 * h * w, xn));
        }
        x = x1;
        s = s1;
        logs = l1;
        v0 = v1;
        samples.push((s, x, f1));
        for z in &other_zeros {
            if (x - z).norm() < saddle_tol {
                return Err(Error::SaddleEncounter(format!("flow passes within {:.1e} of the zero {z}", (x - z).norm())));
            }
        }
        if captured.is_none() {
            for info in &infos {
                let inside = match info.at {
                    Some(p) => (x - p).norm() < info.capture,
                    None => x.norm() > info.capture,
                };
                if inside {
                    captured = Some(terminal_for(info, x, d));
                }
            }
        }
        if let Some(t) = &captured {
            if s >= cfg.s_max {
                break;
            }
            // Past this the flow is no longer resolvable in f64.
            let info = infos.iter().find(|i| i.index == t.pole()).expect("known pole");
            let unresolved = match info.at {
                Some(p) => (x - p).norm() < 1e-120 * p.norm().max(1.0),
                None => x.norm() > 1e120,
            };
            if unresolved {
                break;
            }
        }
        if s > 50.0 * cfg.s_max {
            return Err(Error::NoCapture(format!("no capture by s = {s:.1}")));
        }
        let fac = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        h = (h * fac).min(cfg.h_max);
    }
    let mut terminal = captured.expect("loop exits only after capture");
    // The limiting boundary angle is read at the end of the trace.
    let info = infos.iter().find(|i| i.index == terminal.pole()).expect("known pole");
    terminal = terminal_for(info, x, d);
    match &terminal {
        Terminal::Pole { in_boundary_set: false, .. } | Terminal::SpiralAtSimplePole { in_boundary_set: false, .. } => {
            return Err(Error::NoCapture(format!("terminal {terminal:?} lies outside the boundary set")));
        }
        _ => {}
    }
    Ok(HalfThimble { j, ell, d, m, r0, phi, x_of_u: coeffs, q, samples, nodes, terminal })
}

/// Traces `c_ℓ` at zero `j` after checking that `d` is generic.
pub fn trace_thimble(
    form: &OneForm,
    crit: &CriticalData,
    lat: &Lattice,
    j: usize,
    ell: usize,
    d: f64,
    cfg: &TraceConfig,
) -> Result<ThimblePath> {
    check_generic(crit, lat, d, cfg)?;
    let m = form.zeros[j].order;
    let forward = trace_half(form, j, ell % (m + 1), d, cfg)?;
    let backward = trace_half(form, j, (ell + 1) % (m + 1), d, cfg)?;
    Ok(ThimblePath { forward, backward })
}

fn check_generic(crit: &CriticalData, lat: &Lattice, d: f64, cfg: &TraceConfig) -> Result<()> {
    let g = is_generic(d, &crit.values, lat, cfg.genericity_radius)?;
    if !g.generic {
        return Err(Error::SaddleEncounter(format!("direction {d} is not generic (Ω point {:?})", g.witness)));
    }
    Ok(())
}

/// All half-thimbles at zero `j` and the cycles `Γ_{k,d}`.
#[derive(Clone, Debug)]
pub struct GammaCycles {
    pub j: usize,
    pub d: f64,
    pub halves: Vec<HalfThimble>,
    pub cycles: Vec<Cycle>,
}

pub fn gamma_cycles(form: &OneForm, crit: &CriticalData, lat: &Lattice, j: usize, d: f64, cfg: &TraceConfig) -> Result<GammaCycles> {
    check_generic(crit, lat, d, cfg)?;
    let m = form.zeros.get(j).ok_or_else(|| Error::Invalid(format!("no zero {j}")))?.order;
    let halves = (0..=m).map(|ell| trace_half(form, j, ell, d, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(GammaCycles { j, d, halves, cycles: dft_cycles(j, m, d) })
}

/// Flow invariants recomputed by quadrature of `α` along the sampled polyline.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FlowCheck {
    /// Largest `|Im(e^{−id}(f − c))|` relative to `max |f − c|`.
    pub max_im_dev: f64,
    pub monotone: bool,
}

pub fn flow_check(form: &OneForm, half: &HalfThimble) -> FlowCheck {
    let e = Complex64::from_polar(1.0, -half.d);
    // Start past the seed, where α is regular along the chords.
    let seed = half.samples.iter().position(|s| s.0 > 0.0).unwrap_or(0);
    let mut f = half.samples[seed].2;
    let mut prev_re = (e * f).re;
    let mut worst: f64 = 0.0;
    let mut big: f64 = f.norm();
    let mut monotone = true;
    for w in half.samples[seed..].windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        f += quadrature::integrate_polyline(|x| form.a_c64(x), &[a, b], 1e-14).value;
        let g = e * f;
        big = big.max(f.norm());
        worst = worst.max(g.im.abs());
        if g.re <= prev_re {
            monotone = false;
        }
        prev_re = g.re;
    }
    FlowCheck { max_im_dev: worst / big.max(1e-300), monotone }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_gaussian() {
        for z in [0.1, 0.3, 1.0] {
            let z = Complex64::new(z, 0.0);
            let h = h_factor(1, 0, z, 0.0);
            assert!((h / (TAU * z).sqrt() - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn boundary_examples() {
        let b = boundary_set(2, Complex64::new(1.0, 0.0), (0.0, 0.0));
        assert!(b.contains(PI) && !b.contains(0.0) && !b.contains(0.5 * PI));
        assert_eq!(boundary_set(1, Complex64::new(-1.0, 0.0), (-0.25 * PI, 0.25 * PI)), BoundarySet::Full);
        assert_eq!(boundary_set(1, Complex64::new(-1.0, 0.0), (0.5 * PI, 1.5 * PI)), BoundarySet::Empty);
    }

    #[test]
    fn dft_unitarity() {
        let m = 3;
        for k in 0..=m {
            for k2 in 0..=m {
                let (a, b) = (dft_weights(m, k), dft_weights(m, k2));
                let s: Complex64 = a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum();
                let want = if k == k2 { 1.0 / (m + 1) as f64 } else { 0.0 };
                assert!((s - want).norm() < 1e-15);
            }
        }
    }
}

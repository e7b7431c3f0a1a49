//! Exponential period integrals, sectorial Ξ matrices, Stokes factors and the comparison check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::betti::{gamma_cycles, h_factor, Cycle, GammaCycles, HalfThimble, TraceConfig};
use crate::derham::{critical_values, formal_xi, gamma_form, period_lattice, CriticalData, FormRep, OneForm};
use crate::error::{Error, Result};
use crate::gevrey::{angle_dist, GevreySeries};
use crate::lattice::{ExpSum, Lattice};
use crate::quadrature;
use crate::scalar::ComplexScalar;
use crate::summation::{borel_function, laplace_in_sector, SumOptions};

/// A half-thimble with `ω` evaluated at its quadrature nodes.
#[derive(Clone, Debug)]
pub struct PreparedHalf<'a> {
    half: &'a HalfThimble,
    omega: &'a FormRep,
    /// `(s, weight, ω(x) e^{id}/a(x))`.
    nodes: Vec<(f64, f64, Complex64)>,
    tail: (f64, Complex64),
}

pub fn prepare<'a>(form: &OneForm, half: &'a HalfThimble, omega: &'a FormRep) -> PreparedHalf<'a> {
    let e = Complex64::from_polar(1.0, half.d);
    let g = |x: Complex64| omega.eval_c64(x) * e / form.a_c64(x);
    let nodes = half.nodes.iter().map(|&(s, w, x)| (s, w, g(x))).collect();
    let (s_end, x_end, _) = *half.samples.last().expect("nonempty trace");
    PreparedHalf { half, omega, nodes, tail: (s_end, g(x_end)) }
}

/// Tolerance for the near-zero quadrature and for the tail test.
pub const EXP_TOL: f64 = 1e-13;

impl PreparedHalf<'_> {
    /// `∫_{H} e^{−(f−c_j)/z} ω`: `I₁` in the local coordinate, `I₂` on the traced nodes, `I₃` bounded.
    pub fn integral(&self, z: Complex64) -> Result<Complex64> {
        let h = self.half;
        let rate = (Complex64::from_polar(1.0, h.d) / z).re;
        if rate <= 0.0 {
            return Err(Error::TailNotDecaying(format!("z = {z} outside the half-plane of direction {}", h.d)));
        }
        let n = (h.m + 1) as f64;
        let e = Complex64::from_polar(1.0, h.phi);
        let dcoef: Vec<Complex64> = h.x_of_u.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
        let i1 = quadrature::integrate(
            |r| {
                let u = e * r;
                let x = h.q + h.x_of_u.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
                let dx = dcoef.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
                (-u.powu(h.m as u32 + 1) / (n * z)).exp() * self.omega.eval_c64(x) * dx * e
            },
            0.0,
            h.r0,
            EXP_TOL,
        )
        .value;
        let ed = Complex64::from_polar(1.0, h.d);
        let mut i2 = Complex64::new(0.0, 0.0);
        for &(s, w, g) in &self.nodes {
            i2 += w * (-s * ed / z).exp() * g;
        }
        let total = i1 + i2;
        // Tail bound with the endpoint integrand frozen.
        let (s_end, g_end) = self.tail;
        let bound = (-s_end * rate).exp() * g_end.norm() / rate;
        if !(bound <= 1e-10 * total.norm().max(1e-300)) {
            return Err(Error::TailNotDecaying(format!("tail bound {bound:.2e} at z = {z}")));
        }
        Ok(total)
    }
}

/// `∫_{Σ w_ℓ c_ℓ} e^{−(f−c_j)/z} ω` with `c_ℓ = H_ℓ − H_{ℓ+1}`.
pub fn cycle_integral(halves: &[PreparedHalf], cycle: &Cycle, z: Complex64) -> Result<Complex64> {
    let m1 = halves.len();
    let ints = halves.iter().map(|h| h.integral(z)).collect::<Result<Vec<_>>>()?;
    Ok(cycle.weights.iter().enumerate().map(|(ell, w)| w * (ints[ell] - ints[(ell + 1) % m1])).sum())
}

/// `∫_{H} e^{−(f−c_j)/z} ω` for one half-thimble.
pub fn exp_integral(form: &OneForm, half: &HalfThimble, omega: &FormRep, z: Complex64) -> Result<Complex64> {
    prepare(form, half, omega).integral(z)
}

/// `∫ e^{−(f−c)/z} ω` along a polyline starting at `x0`, where `f(x0) − c = f0`.
pub fn polyline_exp_integral(
    form: &OneForm,
    omega: &FormRep,
    pts: &[Complex64],
    f0: Complex64,
    z: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let prim = crate::betti::Primitive::new(form);
    let mut logs = prim.principal_logs(pts[0]);
    let (base, _) = prim.eval(pts[0], &logs);
    let mut total = Complex64::new(0.0, 0.0);
    for seg in pts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut seg_logs = logs.clone();
        let r = quadrature::integrate(
            |t| {
                let x = a + (b - a) * t;
                let (fv, l) = prim.eval(x, &seg_logs);
                seg_logs = l;
                (-(fv - base + f0) / z).exp() * omega.eval_c64(x) * (b - a)
            },
            0.0,
            1.0,
            tol,
        );
        total += r.value;
        logs = prim.eval(b, &logs).1;
    }
    Ok(total)
}

/// Sampled `𝔻_z(Ξ)^d` with its expected asymptotics.
#[derive(Clone, Debug)]
pub struct XiSample {
    pub d: f64,
    pub z_grid: Vec<Complex64>,
    /// Row labels `(j, k)`.
    pub rows: Vec<(usize, usize)>,
    /// `c_j` for each row.
    pub c: Vec<Complex64>,
    /// `∫_{Γ_{k,d}^{(j)}} e^{−(f−c_j)/z} ω`, indexed `[z][row][col]`.
    pub raw: Vec<Vec<Vec<Complex64>>>,
    /// `h_{j,k}(z)` with the branch continued from `d`, `[z][row]`.
    pub h: Vec<Vec<Complex64>>,
    /// `raw / h`.
    pub entries: Vec<Vec<Vec<Complex64>>>,
    /// `ĝ(−z)` for each entry.
    pub asy: Vec<Vec<GevreySeries>>,
}

impl XiSample {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let c = |v: &Complex64| serde_json::json!([v.re, v.im]);
        serde_json::json!({
            "d": self.d,
            "z_grid": self.z_grid.iter().map(c).collect::<Vec<_>>(),
            "rows": self.rows,
            "c": self.c.iter().map(c).collect::<Vec<_>>(),
            "entries": self.entries.iter().map(|m| m.iter().map(|r| r.iter().map(c).collect::<Vec<_>>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "asy": self.asy.iter().map(|r| r.iter().map(|s| serde_json::to_value(s.to_json()).unwrap()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }
}

/// Everything traced for one direction.
pub struct Traced {
    pub d: f64,
    pub zeros: Vec<GammaCycles>,
}

pub fn trace_all(form: &OneForm, crit: &CriticalData, lat: &Lattice, d: f64, cfg: &TraceConfig) -> Result<Traced> {
    let zeros = (0..form.zeros.len()).map(|j| gamma_cycles(form, crit, lat, j, d, cfg)).collect::<Result<Vec<_>>>()?;
    Ok(Traced { d, zeros })
}

/// Rows `(j, k)` and the raw integrals `[z][row][col]`.
pub fn raw_matrix(form: &OneForm, traced: &Traced, reps: &[FormRep], z_grid: &[Complex64]) -> Result<(Vec<(usize, usize)>, Vec<Vec<Vec<Complex64>>>)> {
    let mut rows = Vec::new();
    for g in &traced.zeros {
        for k in 0..g.cycles.len() {
            rows.push((g.j, k));
        }
    }
    let prepared: Vec<Vec<Vec<PreparedHalf>>> = traced
        .zeros
        .iter()
        .map(|g| reps.iter().map(|w| g.halves.iter().map(|h| prepare(form, h, w)).collect()).collect())
        .collect();
    let mut raw = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let mut mat = Vec::with_capacity(rows.len());
        for &(j, k) in &rows {
            let g = &traced.zeros[j];
            let row = (0..reps.len()).map(|col| cycle_integral(&prepared[j][col], &g.cycles[k], z)).collect::<Result<Vec<_>>>()?;
            mat.push(row);
        }
        raw.push(mat);
    }
    Ok((rows, raw))
}

/// Samples `h_{j,k}^{−1} ∫_Γ e^{−(f−c_j)/z} ω` on `z_grid`.
#[allow(clippy::too_many_arguments)]
pub fn xi_matrix(
    form: &OneForm,
    crit: &CriticalData,
    lat: &Lattice,
    d: f64,
    z_grid: &[Complex64],
    reps: &[FormRep],
    cfg: &TraceConfig,
    asy_order: usize,
) -> Result<XiSample> {
    if z_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for z in z_grid {
        if angle_dist(z.arg(), d) >= FRAC_PI_2 {
            return Err(Error::Invalid(format!("grid point {z} is not in the half-plane of direction {d}")));
        }
    }
    let traced = trace_all(form, crit, lat, d, &cfg.reaching(d, z_grid))?;
    xi_from_traced(form, crit, &traced, z_grid, reps, asy_order)
}

pub fn xi_from_traced(
    form: &OneForm,
    crit: &CriticalData,
    traced: &Traced,
    z_grid: &[Complex64],
    reps: &[FormRep],
    asy_order: usize,
) -> Result<XiSample> {
    let (rows, raw) = raw_matrix(form, traced, reps, z_grid)?;
    if rows.len() != reps.len() {
        return Err(Error::Incompatible(format!("{} rows but {} global representatives", rows.len(), reps.len())));
    }
    let h: Vec<Vec<Complex64>> =
        z_grid.iter().map(|&z| rows.iter().map(|&(j, k)| h_factor(form.zeros[j].order, k, z, traced.d)).collect()).collect();
    let entries = raw
        .iter()
        .zip(&h)
        .map(|(m, hz)| m.iter().zip(hz).map(|(row, hv)| row.iter().map(|v| v / hv).collect()).collect())
        .collect();
    let mut asy = Vec::with_capacity(rows.len());
    let mut cache: Vec<Option<Vec<crate::derham::FormalXi>>> = vec![None; form.zeros.len()];
    for &(j, k) in &rows {
        if cache[j].is_none() {
            cache[j] = Some(reps.iter().map(|w| formal_xi(w, form, j, asy_order)).collect::<Result<Vec<_>>>()?);
        }
        asy.push(cache[j].as_ref().unwrap().iter().map(|fx| fx.g[k].reflect()).collect());
    }
    let c = rows.iter().map(|&(j, _)| crit.values[j]).collect();
    Ok(XiSample { d: traced.d, z_grid: z_grid.to_vec(), rows, c, raw, h, entries, asy })
}

/// A fitted Stokes factor `Ξ^d ∘ (Ξ^{d′})^{−1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StokesFactor {
    pub directions: (f64, f64),
    pub entries: Vec<Vec<ExpSum>>,
    pub fit_residual: f64,
    pub near_identity: bool,
    /// Grid points kept after the condition-number filter.
    pub used_points: usize,
}

impl StokesFactor {
    pub fn eval(&self, lat: &Lattice, z: Complex64) -> Vec<Vec<Complex64>> {
        self.entries.iter().map(|r| r.iter().map(|e| e.eval(lat, z)).collect()).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Invalid(format!("stokes factor json: {e}")))
    }
}

fn to_matrix(m: &[Vec<Complex64>]) -> nalgebra::DMatrix<Complex64> {
    let n = m.len();
    nalgebra::DMatrix::from_fn(n, m[0].len(), |i, j| m[i][j])
}

/// Condition number above which a grid point is dropped from the fit.
pub const MAX_COND: f64 = 1e12;

/// Numeric transition matrices `(E_B E_A^{−1})ᵀ` on the shared grid.
///
/// The sampled entries live on the dual side, so the primal automorphism `Ξ^d ∘ (Ξ^{d′})^{−1}` is the
/// transpose of `E_{d′} E_d^{−1}`. Each side keeps its own branch of `h`.
pub fn transition_samples(a: &XiSample, b: &XiSample) -> Result<Vec<(Complex64, nalgebra::DMatrix<Complex64>)>> {
    if a.z_grid.len() != b.z_grid.len() || a.z_grid.iter().zip(&b.z_grid).any(|(x, y)| (x - y).norm() > 1e-14 * x.norm()) {
        return Err(Error::Incompatible("Ξ samples must share the overlap grid".into()));
    }
    let mut out = Vec::new();
    for (iz, &z) in a.z_grid.iter().enumerate() {
        let ea = to_matrix(&a.entries[iz]);
        let eb = to_matrix(&b.entries[iz]);
        let sv = ea.clone().svd(false, false).singular_values;
        let cond = sv.max() / sv.min();
        if !(cond.is_finite() && cond <= MAX_COND) {
            continue;
        }
        let inv = ea.try_inverse().ok_or_else(|| Error::Invalid(format!("singular Ξ at z = {z}")))?;
        out.push((z, (eb * inv).transpose()));
    }
    Ok(out)
}

/// Least-squares fit of each transition entry over `e^{(o + μ(γ))/z}`, `‖γ‖ ≤ basis_bound`.
pub fn stokes_factor(a: &XiSample, b: &XiSample, lat: &Lattice, basis_bound: f64, max_residual: f64) -> Result<StokesFactor> {
    let samples = transition_samples(a, b)?;
    if samples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = a.dim();
    let mut offsets: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
    for ci in &a.c {
        for cj in &a.c {
            let o = ci - cj;
            if !offsets.iter().any(|p| (p - o).norm() < 1e-12) {
                offsets.push(o);
            }
        }
    }
    let ball = lat.ball(basis_bound);
    let mut entries = vec![vec![ExpSum::default(); n]; n];
    let mut residual: f64 = 0.0;
    for p in 0..n {
        for q in 0..n {
            let target: Vec<Complex64> = samples.iter().map(|(_, m)| m[(p, q)]).collect();
            let mut best: Option<(f64, ExpSum)> = None;
            for &o in &offsets {
                let (fit, res) = fit_expsum(&samples, &target, lat, &ball, o)?;
                if best.as_ref().map_or(true, |b| res < b.0) {
                    best = Some((res, fit));
                }
            }
            let (res, fit) = best.expect("at least one offset");
            residual = residual.max(res);
            entries[p][q] = fit;
        }
    }
    let zero_g = vec![0i64; lat.rank()];
    let near_identity = (0..n).all(|p| {
        (0..n).all(|q| {
            let e = &entries[p][q];
            let c0 = if e.offset.norm() < 1e-12 { e.terms.get(&zero_g).copied().unwrap_or_default() } else { Complex64::new(0.0, 0.0) };
            let want = if p == q { 1.0 } else { 0.0 };
            (c0 - want).norm() <= 1e-6_f64.max(10.0 * residual)
        })
    });
    if residual > max_residual {
        return Err(Error::FitResidualTooLarge(format!("residual {residual:.2e} exceeds {max_residual:.1e}")));
    }
    Ok(StokesFactor { directions: (a.d, b.d), entries, fit_residual: residual, near_identity, used_points: samples.len() })
}

fn fit_expsum(
    samples: &[(Complex64, nalgebra::DMatrix<Complex64>)],
    target: &[Complex64],
    lat: &Lattice,
    ball: &[Vec<i64>],
    offset: Complex64,
) -> Result<(ExpSum, f64)> {
    let rows = samples.len();
    let cols = ball.len();
    let mut a = nalgebra::DMatrix::<Complex64>::zeros(rows, cols);
    for (i, (z, _)) in samples.iter().enumerate() {
        for (j, g) in ball.iter().enumerate() {
            a[(i, j)] = ((offset + lat.mu_of(g)) / z).exp();
        }
    }
    // Column scaling keeps exponentially large and small columns comparable.
    let mut norms = Vec::with_capacity(cols);
    for j in 0..cols {
        let s = a.column(j).norm();
        let s = if s > 0.0 && s.is_finite() { s } else { 1.0 };
        norms.push(s);
        a.column_mut(j).unscale_mut(s);
    }
    let y = nalgebra::DVector::from_vec(target.to_vec());
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd.solve(&y, 1e-13 * smax).map_err(|e| Error::Invalid(e.to_string()))?;
    let r = &a * &x - &y;
    let res = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut e = ExpSum::new(offset);
    for (j, g) in ball.iter().enumerate() {
        // Scaled coefficients measure the contribution on the grid; drop pure noise.
        if x[j].norm() > 1e-8 {
            e.add_term(g.clone(), x[j] / norms[j]);
        }
    }
    Ok((e, res))
}

/// Result of [`comparison_check`].
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub d: f64,
    pub points: usize,
    pub max_discrepancy: f64,
    /// `(z, row, col, relative discrepancy)` at the worst point.
    pub worst: Option<(Complex64, usize, usize, f64)>,
}

/// Both paths of the comparison diagram on the cycle basis.
///
/// Left: `∫_Γ e^{−f/z}ω` by thimble quadrature. Right: `e^{−c_j/z} h_{j,k}(z)` times the Borel sum of
/// `ĝ(−z)`, so the two sides share no code path beyond the form data.
#[allow(clippy::too_many_arguments)]
pub fn comparison_check(
    form: &OneForm,
    crit: &CriticalData,
    lat: &Lattice,
    d: f64,
    z_grid: &[Complex64],
    reps: &[FormRep],
    cfg: &TraceConfig,
    asy_order: usize,
    opts: &SumOptions,
) -> Result<ComparisonReport> {
    let xi = xi_matrix(form, crit, lat, d, z_grid, reps, cfg, asy_order)?;
    let nr = xi.rows.len();
    let nc = reps.len();
    // left/right indexed [z][row][col]
    let mut left = vec![vec![vec![Complex64::new(0.0, 0.0); nc]; nr]; z_grid.len()];
    let mut right = left.clone();
    for (r, (j, k)) in xi.rows.iter().enumerate() {
        for col in 0..nc {
            let g = borel_function(&xi.asy[r][col], opts)?;
            for (iz, &z) in z_grid.iter().enumerate() {
                let twist = (-crit.values[*j] / z).exp();
                left[iz][r][col] = twist * xi.raw[iz][r][col];
                let sum = laplace_in_sector(&g, d, z, &opts.laplace)?.value;
                right[iz][r][col] = twist * h_factor(form.zeros[*j].order, *k, z, d) * sum;
            }
        }
    }
    // Entries that vanish by symmetry are measured against the largest entry of their row.
    let mut worst: Option<(Complex64, usize, usize, f64)> = None;
    for (iz, &z) in z_grid.iter().enumerate() {
        for r in 0..nr {
            let scale = left[iz][r].iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
            for col in 0..nc {
                let rel = (left[iz][r][col] - right[iz][r][col]).norm() / scale;
                if worst.map_or(true, |w| rel > w.3) {
                    worst = Some((z, r, col, rel));
                }
            }
        }
    }
    Ok(ComparisonReport { d, points: z_grid.len(), max_discrepancy: worst.map_or(0.0, |w| w.3), worst })
}

/// Result of [`digamma_connection_check`].
#[derive(Clone, Debug, Serialize)]
pub struct ConnectionReport {
    pub lambda: Complex64,
    pub d: f64,
    /// After removing `branch_offset · 2πiλ/z²`.
    pub max_rel_error: f64,
    /// For `d′ ∈ I′_λ`: the integer `n` with `κ_numeric − κ_printed ≈ 2πiλn/z²`.
    pub branch_offset: Option<i64>,
    /// Largest gap between `z²κ(z)` and its expansion through `z³`, divided by `|z|⁴`.
    pub expansion_gap: f64,
}

/// `κ = −d/dz log ∫ e^{−f/z} dx/x` by centered differences on the traced thimble, versus the digamma form.
pub fn digamma_connection_check(lambda: Complex64, d: f64, z_grid: &[Complex64], cfg: &TraceConfig) -> Result<ConnectionReport> {
    if lambda.norm() == 0.0 {
        return Err(Error::Invalid("λ must be nonzero".into()));
    }
    let lam = ComplexScalar::from_c64(lambda, crate::scalar::working_precision());
    let form = gamma_form(&lam)?;
    let pl = period_lattice(&form)?;
    let crit = critical_values(&form, &pl.lattice, None, &[])?;
    let traced = trace_all(&form, &crit, &pl.lattice, d, cfg)?;
    let reps = [FormRep::dx_over_x(form.prec)];
    let prime = in_i_prime(lambda, d);
    let mut worst: f64 = 0.0;
    let mut offsets: Vec<i64> = Vec::new();
    for &z in z_grid {
        let delta = 1e-4 * z;
        let pts = [z - 2.0 * delta, z - delta, z + delta, z + 2.0 * delta];
        let (_, raw) = raw_matrix(&form, &traced, &reps, &pts)?;
        let l: Vec<Complex64> = raw.iter().map(|m| m[0][0].ln()).collect();
        // Fourth-order centered difference; branch jumps of the log are removed first.
        let mut l = l;
        for i in 1..4 {
            l[i].im += 2.0 * PI * ((l[i - 1].im - l[i].im) / (2.0 * PI)).round();
        }
        let deriv = (l[0] - 8.0 * l[1] + 8.0 * l[2] - l[3]) / (12.0 * delta);
        let kappa = if prime { crate::gamma::connection_d_prime(lambda, z) } else { crate::gamma::connection_d(lambda, z) };
        let got = -deriv - crit.values[0] / (z * z);
        // κ = −d/dz log ∫ e^{−f/z}ω; the sampled integral carries e^{c/z}.
        let unit = Complex64::new(0.0, 2.0 * PI) * lambda / (z * z);
        let n = if prime { ((got - kappa) / unit).re.round() as i64 } else { 0 };
        if prime {
            offsets.push(n);
        }
        worst = worst.max((got - kappa - unit * n as f64).norm() / kappa.norm());
    }
    let expansion_gap = if lambda.im == 0.0 && lambda.re > 0.0 {
        let series = crate::gamma::connection_formal(lambda.re, 3);
        [0.05, 0.08, 0.1]
            .iter()
            .map(|&r| {
                let z = Complex64::from_polar(r, d.clamp(-1.0, 1.0));
                let exact = crate::gamma::connection_d(lambda, z) * z * z;
                let approx = series.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
                (exact - approx).norm() / r.powi(4)
            })
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    offsets.dedup();
    let branch_offset = match offsets.as_slice() {
        [] => None,
        [n] => Some(*n),
        _ => return Err(Error::Invalid(format!("inconsistent 2πiλ/z² offsets {offsets:?} across the grid"))),
    };
    Ok(ConnectionReport { lambda, d, max_rel_error: worst, branch_offset, expansion_gap })
}

/// Whether `d` lies in `I′_λ = (arg λ, arg λ + 3π/2)` rather than `I_λ`.
pub fn in_i_prime(lambda: Complex64, d: f64) -> bool {
    let a = lambda.arg();
    let t = (d - a + FRAC_PI_2).rem_euclid(2.0 * PI) - FRAC_PI_2;
    !(t > -FRAC_PI_2 && t < FRAC_PI_2)
}

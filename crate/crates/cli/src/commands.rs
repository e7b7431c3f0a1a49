use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use num_complex::Complex64;
use serde_json::{json, Value};
use stokeswb::acceptance::{self, summability_grid, Params};
use stokeswb::betti::{flow_check, trace_thimble, TraceConfig};
use stokeswb::derham::*;
use stokeswb::gamma;
use stokeswb::gevrey::check_asymptotic;
use stokeswb::invariants::{self, CheckContext};
use stokeswb::lattice::{non_generic_directions, support_radius};
use stokeswb::scalar::{working_precision, ComplexScalar, MIN_PRECISION};
use stokeswb::stokes::{digamma_connection_check, stokes_factor, xi_matrix};
use stokeswb::summation::{borel_sum_with, strategy_names, SumOptions};

use crate::input::{self, GridSpec};
use crate::{Common, Failure};

/// Resolved settings for one run.
pub struct Context {
    pub prec: u32,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(c: &Common) -> Result<Self, Failure> {
        let prec = c.precision.unwrap_or_else(working_precision);
        if prec < MIN_PRECISION {
            return Err(Failure::Usage(format!("precision must be at least {MIN_PRECISION} bits")));
        }
        Ok(Context { prec, out: c.out.clone(), seed: c.seed })
    }

    fn path(&self, name: &str) -> Result<PathBuf, Failure> {
        fs::create_dir_all(&self.out)?;
        Ok(self.out.join(name))
    }

    fn write_json(&self, name: &str, v: &Value) -> Result<PathBuf, Failure> {
        let p = self.path(name)?;
        let mut w = BufWriter::new(File::create(&p)?);
        serde_json::to_writer_pretty(&mut w, v).map_err(|e| Failure::Io(e.to_string()))?;
        writeln!(w)?;
        Ok(p)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
        let p = self.path(name)?;
        let f = File::create(&p)?;
        Ok((p, BufWriter::new(f)))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::Usage(format!("{name} must be positive")))
    }
}

fn announce(p: &Path) {
    println!("{}", p.display());
}

fn load_form(ctx: &Context, spec: &Path) -> Result<OneForm, Failure> {
    let (p, q) = input::form_spec(spec, ctx.prec)?;
    Ok(analyze(&p, &q)?)
}

/// Rows of the sampled matrices: one per `(zero, k)` pair.
fn basis(form: &OneForm) -> Vec<FormRep> {
    let n: usize = form.zeros.iter().map(|z| z.order).sum();
    FormRep::default_basis(form, n.max(1))
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// JSON with "numerator" and "denominator" coefficient arrays, ascending degree.
    pub spec: PathBuf,
    /// Search radius for non-generic directions.
    #[arg(long, default_value_t = 20.0)]
    pub radius: f64,
}

pub fn cmd_analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<(), Failure> {
    let radius = positive("--radius", a.radius)?;
    let form = load_form(ctx, &a.spec)?;
    let pl = period_lattice(&form)?;
    let sr = support_radius(&pl.lattice, 8)?;
    let cd = critical_values(&form, &pl.lattice, None, &[])?;
    let dirs = non_generic_directions(&cd.c_f, &pl.lattice, radius)?;
    let report = json!({
        "form": form.to_json(),
        "lattice": pl.lattice.to_json(),
        "loops": pl.loops,
        "loop_coords": pl.loop_coords,
        "ambiguous": pl.ambiguous,
        "support_radius": {
            "radius": if sr.radius.is_finite() { json!(sr.radius) } else { Value::Null },
            "witness": sr.witness,
            "exact": sr.exact,
            "interior": sr.interior,
        },
        "critical_values": cd.to_json(),
        "search_radius": radius,
        "non_generic_directions": dirs,
    });
    announce(&ctx.write_json("report.json", &report)?);
    Ok(())
}

#[derive(Args, Debug)]
pub struct SumArgs {
    /// Series JSON: a serialized series or {"coefficients": [...]}.
    pub series: PathBuf,
    /// Direction d of the Laplace ray.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub direction: f64,
    /// z-grid as r_min,r_max,n_radial,n_angular, centred on the direction.
    #[arg(long, default_value = "0.05,0.5,4,5")]
    pub grid: GridSpec,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = 1e-13)]
    pub tolerance: f64,
    /// Truncate the series to this order before summing.
    #[arg(long)]
    pub order: Option<usize>,
    /// Continuation of the Borel transform.
    #[arg(long, default_value = "pade")]
    pub continuation: String,
}

pub fn cmd_sum(ctx: &Context, a: &SumArgs) -> Result<(), Failure> {
    let tol = positive("--tolerance", a.tolerance)?;
    if !strategy_names().contains(&a.continuation.as_str()) {
        return Err(Failure::Usage(format!("unknown continuation {:?}; expected one of {:?}", a.continuation, strategy_names())));
    }
    let mut s = input::series(&a.series, ctx.prec)?;
    if let Some(n) = a.order {
        s = s.truncate(n);
    }
    let grid = a.grid.points(a.direction);
    let mut opts = SumOptions { method: a.continuation.clone(), ..Default::default() };
    opts.laplace.quad_tol = tol;
    let f = borel_sum_with(&s, a.direction, &grid, &opts)?;
    let asy = check_asymptotic(&f.points, &s, s.trunc_order().min(10), 2.0)?;
    let (p, mut w) = ctx.create("samples.csv")?;
    f.write_csv(&mut w)?;
    w.flush()?;
    announce(&p);
    let mut side = f.sidecar();
    side["continuation"] = json!(a.continuation);
    side["asymptotic_check"] = serde_json::to_value(&asy).map_err(|e| Failure::Io(e.to_string()))?;
    announce(&ctx.write_json("samples.json", &side)?);
    Ok(())
}

#[derive(Args, Debug)]
pub struct FormalXiArgs {
    pub spec: PathBuf,
    /// Index of the zero.
    #[arg(long, default_value_t = 0)]
    pub zero: usize,
    /// Truncation order in z.
    #[arg(long, default_value_t = 20)]
    pub order: usize,
}

pub fn cmd_formal_xi(ctx: &Context, a: &FormalXiArgs) -> Result<(), Failure> {
    let form = load_form(ctx, &a.spec)?;
    if a.zero >= form.zeros.len() {
        return Err(Failure::Usage(format!("the form has {} zeros", form.zeros.len())));
    }
    let mut cols = Vec::new();
    for (i, w) in basis(&form).iter().enumerate() {
        let xi = formal_xi(w, &form, a.zero, a.order)?;
        let series: Vec<Value> = xi.g.iter().map(|g| serde_json::to_value(g.to_json()).expect("serializable")).collect();
        cols.push(json!({ "form": format!("x^{i} dx / Q"), "m": xi.m, "series": series }));
    }
    let v = json!({ "zero": a.zero, "order": a.order, "precision": ctx.prec, "columns": cols });
    announce(&ctx.write_json("formal_xi.json", &v)?);
    Ok(())
}

#[derive(Args, Debug)]
pub struct ThimbleArgs {
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub direction: f64,
    #[arg(long, default_value_t = 0)]
    pub zero: usize,
    /// Which of the m+1 local paths.
    #[arg(long, default_value_t = 0)]
    pub ell: usize,
    /// Relative tolerance of the flow integrator.
    #[arg(long, default_value_t = 1e-11)]
    pub tolerance: f64,
}

#[allow(clippy::too_many_arguments)]
fn write_thimble(ctx: &Context, form: &OneForm, crit: &CriticalData, pl: &PeriodLattice, j: usize, ell: usize, d: f64, cfg: &TraceConfig, stem: &str) -> Result<(), Failure> {
    let t = trace_thimble(form, crit, &pl.lattice, j, ell, d, cfg)?;
    let (p, mut w) = ctx.create(&format!("{stem}.csv"))?;
    t.write_csv(&mut w)?;
    w.flush()?;
    announce(&p);
    let mut h = t.header_json();
    h["columns"] = json!(["t", "x_re", "x_im", "f_re", "f_im"]);
    h["flow_check"] = json!({ "forward": flow_check(form, &t.forward), "backward": flow_check(form, &t.backward) });
    announce(&ctx.write_json(&format!("{stem}.json"), &h)?);
    Ok(())
}

pub fn cmd_thimble(ctx: &Context, a: &ThimbleArgs) -> Result<(), Failure> {
    let cfg = TraceConfig { rtol: positive("--tolerance", a.tolerance)?, ..Default::default() };
    let form = load_form(ctx, &a.spec)?;
    if a.zero >= form.zeros.len() {
        return Err(Failure::Usage(format!("the form has {} zeros", form.zeros.len())));
    }
    let pl = period_lattice(&form)?;
    let cd = critical_values(&form, &pl.lattice, None, &[])?;
    write_thimble(ctx, &form, &cd, &pl, a.zero, a.ell, a.direction, &cfg, &format!("thimble_j{}_l{}", a.zero, a.ell))
}

#[derive(Args, Debug)]
pub struct StokesArgs {
    pub spec: PathBuf,
    /// The two directions d and d′, given as --direction d --direction d′.
    #[arg(long, num_args = 1, required = true, allow_negative_numbers = true)]
    pub direction: Vec<f64>,
    /// Shared z-grid, centred between the two directions and narrowed to fit both half-planes.
    #[arg(long, default_value = "0.3,1.5,5,5")]
    pub grid: GridSpec,
    /// Order of the asymptotic expansions stored with each sample.
    #[arg(long, default_value_t = 10)]
    pub order: usize,
    /// Largest accepted fit residual.
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
}

pub fn cmd_stokes(ctx: &Context, a: &StokesArgs) -> Result<(), Failure> {
    let [d0, d1] = a.direction[..] else {
        return Err(Failure::Usage("give exactly two --direction values".into()));
    };
    let tol = positive("--tolerance", a.tolerance)?;
    let form = load_form(ctx, &a.spec)?;
    let pl = period_lattice(&form)?;
    let cd = critical_values(&form, &pl.lattice, None, &[])?;
    let reps = basis(&form);
    let cfg = TraceConfig::default();
    // Both Laplace half-planes must contain the grid with some room for decay.
    let room = FRAC_PI_2 - 0.5 * (d1 - d0).abs();
    if room <= 0.5 {
        return Err(Failure::Usage("the two directions must be less than π − 1 apart".into()));
    }
    let grid = a.grid.points_within(0.5 * (d0 + d1), (room - 0.45).min(FRAC_PI_4));
    let before = xi_matrix(&form, &cd, &pl.lattice, d0, &grid, &reps, &cfg, a.order)?;
    let after = xi_matrix(&form, &cd, &pl.lattice, d1, &grid, &reps, &cfg, a.order)?;
    announce(&ctx.write_json("xi_before.json", &before.to_json())?);
    announce(&ctx.write_json("xi_after.json", &after.to_json())?);
    let s = stokes_factor(&before, &after, &pl.lattice, 3.0, tol)?;
    let mut v = s.to_json();
    v["lattice"] = pl.lattice.to_json();
    announce(&ctx.write_json("stokes.json", &v)?);
    Ok(())
}

#[derive(Args, Debug)]
pub struct GammaDemoArgs {
    /// The parameter λ of α = −(λ − x) dx/x.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    /// Order of the Stirling table.
    #[arg(long, default_value_t = 12)]
    pub order: usize,
}

const STIRLING_TABLE: [f64; 4] = [1.0, -1.0 / 12.0, 1.0 / 288.0, 139.0 / 51840.0];

pub fn cmd_gamma_demo(ctx: &Context, a: &GammaDemoArgs) -> Result<(), Failure> {
    let lambda = a.lambda;
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Failure::Usage("--lambda must be a nonzero real number".into()));
    }
    if lambda < 0.0 {
        return Err(Failure::Usage("--lambda must be positive".into()));
    }
    let lam = Complex64::new(lambda, 0.0);
    let prec = ctx.prec;

    // Stirling coefficients against the closed form and the reference table.
    let st = stirling_check(&ComplexScalar::from_f64(lambda, 0.0, prec), a.order)?;
    let (p, mut w) = ctx.create("stirling.csv")?;
    writeln!(w, "n,formal_re,formal_im,closed_re,closed_im,reference")?;
    for n in 0..=a.order {
        let reference = STIRLING_TABLE.get(n).map(|t| format!("{:.17e}", t * lambda.powi(-(n as i32)) / lambda.sqrt())).unwrap_or_default();
        let (f, cf) = (st.formal_xi[n], st.closed_form[n]);
        writeln!(w, "{n},{:.17e},{:.17e},{:.17e},{:.17e},{reference}", f.re, f.im, cf.re, cf.im)?;
    }
    w.flush()?;
    announce(&p);

    let form = gamma_form(&ComplexScalar::from_f64(lambda, 0.0, prec))?;
    let pl = period_lattice(&form)?;
    let cd = critical_values(&form, &pl.lattice, None, &[])?;
    let reps = [FormRep::dx_over_x(prec)];
    let cfg = TraceConfig::default();

    // Sampled Ξ at d = 0 against the closed form.
    let grid = summability_grid(lambda);
    let xi = xi_matrix(&form, &cd, &pl.lattice, 0.0, &grid, &reps, &cfg, 10)?;
    let (p, mut w) = ctx.create("xi_samples.csv")?;
    writeln!(w, "z_re,z_im,xi_re,xi_im,closed_re,closed_im,rel_err")?;
    for (iz, z) in grid.iter().enumerate() {
        let (v, want) = (xi.entries[iz][0][0], gamma::xi_closed(lam, *z));
        writeln!(w, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.3e}", z.re, z.im, v.re, v.im, want.re, want.im, (v - want).norm() / want.norm())?;
    }
    w.flush()?;
    announce(&p);

    // Stokes factor across π/2.
    let overlap: Vec<Complex64> = (0..25).map(|i| Complex64::from_polar((0.3 + 0.3 * (i / 5) as f64) * lambda, FRAC_PI_2 - 0.5 + 0.25 * (i % 5) as f64)).collect();
    let before = xi_matrix(&form, &cd, &pl.lattice, FRAC_PI_2 - 0.6, &overlap, &reps, &cfg, 10)?;
    let after = xi_matrix(&form, &cd, &pl.lattice, FRAC_PI_2 + 0.6, &overlap, &reps, &cfg, 10)?;
    let s = stokes_factor(&before, &after, &pl.lattice, 3.0, 1e-6)?;
    let mut sv = s.to_json();
    sv["lattice"] = pl.lattice.to_json();
    sv["expected"] = json!("1 - u with u = exp(-2πiλ/z)");
    announce(&ctx.write_json("stokes_factor.json", &sv)?);

    // Digamma connection residuals at d = 0 and on the other side of the Stokes ray.
    let mut conn = Vec::new();
    for d in [0.0, 2.0] {
        let g: Vec<Complex64> = [0.2, 0.4, 0.6].iter().flat_map(|&r| [-0.3, 0.0, 0.3].map(|t| Complex64::from_polar(r * lambda, d + t))).collect();
        let r = digamma_connection_check(lam, d, &g, &cfg)?;
        conn.push(serde_json::to_value(&r).map_err(|e| Failure::Io(e.to_string()))?);
    }
    announce(&ctx.write_json("digamma_connection.json", &json!(conn))?);

    for (d, stem) in [(0.0, "thimble_d0"), (2.0, "thimble_d2")] {
        write_thimble(ctx, &form, &cd, &pl, 0, 0, d, &cfg, stem)?;
    }

    let params = Params { lambda, seed: ctx.seed, prec };
    let outcomes = acceptance::run(&params, |_| true);
    let all = outcomes.iter().all(|o| o.pass);
    for o in &outcomes {
        eprintln!("[{}] criterion {:>2} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
    }
    let summary = json!({ "lambda": lambda, "seed": ctx.seed, "precision": prec, "all_pass": all, "criteria": outcomes });
    announce(&ctx.write_json("summary.json", &summary)?);
    if all {
        Ok(())
    } else {
        let failed: Vec<String> = outcomes.iter().filter(|o| !o.pass).map(|o| format!("{} ({})", o.id, o.name)).collect();
        Err(Failure::Check(format!("criteria failed: {}", failed.join(", "))))
    }
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Run only invariants of this module, or whose id starts with this prefix.
    #[arg(long)]
    pub filter: Option<String>,
    /// Perturb a reference coefficient so that an invariant fails.
    #[arg(long, hide = true)]
    pub inject_corruption: bool,
}

pub fn cmd_check(ctx: &Context, a: &CheckArgs) -> Result<(), Failure> {
    let cc = CheckContext { seed: ctx.seed, corrupt_stirling: a.inject_corruption };
    let r = invariants::run(&cc, a.filter.as_deref());
    if r.is_empty() {
        return Err(Failure::Usage(format!("no invariant matches {:?}", a.filter.as_deref().unwrap_or(""))));
    }
    print!("{}", invariants::tap(&r));
    let failed: Vec<&str> = r.iter().filter(|x| x.1.is_err()).map(|x| x.0.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed invariants: {}", failed.join(", "))))
    }
}

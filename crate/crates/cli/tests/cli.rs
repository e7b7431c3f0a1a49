use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use num_complex::Complex64;
use serde_json::Value;
use stokeswb::stokes::StokesFactor;

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes-wb")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn json(p: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const GAMMA: &str = r#"{"numerator": [-1, 1], "denominator": [0, 1]}"#;

#[test]
fn analyze_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "gamma.json", GAMMA);
    let o = run(dir.path(), &["analyze", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(dir.path().join("report.json"));
    let dirs: Vec<f64> = r["non_generic_directions"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(dirs.len(), 2);
    assert!((dirs[0] - FRAC_PI_2).abs() < 1e-12 && (dirs[1] - 3.0 * FRAC_PI_2).abs() < 1e-12);
    assert_eq!(r["lattice"]["rank"], 1);
    assert!((r["support_radius"]["radius"].as_f64().unwrap() - std::f64::consts::TAU).abs() < 1e-12);
    assert_eq!(r["form"]["degree_sum"], -2);
}

#[test]
fn analyze_polynomial_form() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "x.json", r#"{"numerator": [0, 1], "denominator": [1]}"#);
    assert_eq!(code(&run(dir.path(), &["analyze", spec.to_str().unwrap()])), 0);
    let r = json(dir.path().join("report.json"));
    assert_eq!(r["lattice"]["rank"], 0);
    assert!(r["support_radius"]["radius"].is_null());
    assert_eq!(r["non_generic_directions"].as_array().unwrap().len(), 0);
}

#[test]
fn analyze_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"numerator": [1, 1"#);
    let o = run(dir.path(), &["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed JSON"));
    let zero = write(dir.path(), "zero.json", r#"{"numerator": [0], "denominator": [1]}"#);
    assert_eq!(code(&run(dir.path(), &["analyze", zero.to_str().unwrap()])), 2);
    // Residues 1 and 1 + 1e-20 give a lattice with a vanishing period in double precision.
    let deg = write(dir.path(), "deg.json", r#"{"numerator": [-1, "2.00000000000000000001"], "denominator": [0, -1, 1]}"#);
    assert_eq!(code(&run(dir.path(), &["analyze", deg.to_str().unwrap()])), 3);
    assert_eq!(code(&run(dir.path(), &["analyze", "/nonexistent/spec.json"])), 1);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&run(dir.path(), &["--precision", "32", "check"])), 1);
    assert_eq!(code(&run(dir.path(), &["gamma-demo", "--lambda", "0"])), 1);
    let s = write(dir.path(), "s.json", r#"{"coefficients": [1, 1]}"#);
    assert_eq!(code(&run(dir.path(), &["sum", s.to_str().unwrap(), "--grid", "0.1,0.2,0,3"])), 1);
    assert_eq!(code(&run(dir.path(), &["sum", s.to_str().unwrap(), "--tolerance", "-1"])), 1);
}

fn euler_json(n: u32) -> String {
    let mut f: u128 = 1;
    let mut c = Vec::new();
    for k in 0..=n {
        if k > 0 {
            f *= k as u128;
        }
        c.push(format!("\"{}{f}\"", if k % 2 == 1 { "-" } else { "" }));
    }
    format!("{{\"coefficients\": [{}]}}", c.join(", "))
}

/// `∫_0^∞ e^{−t}/(1 + zt) dt` by composite Simpson on `[0, 50]`.
fn euler_oracle(z: Complex64) -> Complex64 {
    let n = 200_000;
    let h = 50.0 / n as f64;
    let f = |t: f64| (-t).exp() / (1.0 + z * t);
    let mut s = f(0.0) + f(50.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn read_samples(p: &Path) -> Vec<(Complex64, Complex64)> {
    let text = fs::read_to_string(p).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]))
        })
        .collect()
}

#[test]
fn sum_euler_series() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "euler.json", &euler_json(30));
    let o = run(dir.path(), &["sum", s.to_str().unwrap(), "--direction", "0", "--grid", "0.05,0.5,4,5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pts = read_samples(&dir.path().join("samples.csv"));
    assert_eq!(pts.len(), 20);
    for (z, v) in pts {
        let want = euler_oracle(z);
        assert!((v - want).norm() <= 1e-10 * want.norm(), "{z}: {v} vs {want}");
    }
    let side = json(dir.path().join("samples.json"));
    assert_eq!(side["points"], 20);
    assert_eq!(side["asymptotic_check"]["pass"], true);
}

#[test]
fn sum_polynomial_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "p.json", r#"{"coefficients": [1, [2, -1], 3]}"#);
    assert_eq!(code(&run(dir.path(), &["sum", s.to_str().unwrap(), "--direction=-0.4"])), 0);
    for (z, v) in read_samples(&dir.path().join("samples.csv")) {
        let want = 1.0 + Complex64::new(2.0, -1.0) * z + 3.0 * z * z;
        assert!((v - want).norm() < 1e-13, "{z}");
    }
}

#[test]
fn sum_on_a_singular_ray() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "euler.json", &euler_json(20));
    let o = run(dir.path(), &["sum", s.to_str().unwrap(), "--direction", "3.141592653589793"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sum_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "euler.json", &euler_json(24));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(code(&run(out, &["sum", s.to_str().unwrap(), "--grid", "0.05,0.2,2,3"])), 0);
    }
    assert_eq!(fs::read(a.join("samples.csv")).unwrap(), fs::read(b.join("samples.csv")).unwrap());
    // Twenty-five terms cannot be stepped along the whole Laplace ray; the sum is refused, not guessed.
    let o = run(&dir.path().join("c"), &["sum", s.to_str().unwrap(), "--continuation", "taylor_stepping"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("continuation diverged"));
}

#[test]
fn formal_xi_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "gamma.json", GAMMA);
    assert_eq!(code(&run(dir.path(), &["formal-xi", spec.to_str().unwrap(), "--order", "6"])), 0);
    let v = json(dir.path().join("formal_xi.json"));
    let s = &v["columns"][0]["series"][0];
    let series = serde_json::from_value::<stokeswb::gevrey::SeriesJson>(s.clone()).unwrap();
    let g = stokeswb::gevrey::GevreySeries::from_json(&series).unwrap();
    assert_eq!(g.to_json(), series);
    assert!((g.coeff(1).to_c64() + 1.0 / 12.0).norm() < 1e-15);
    // The series feeds straight back into `sum`.
    let p = write(dir.path(), "xi.json", &s.to_string());
    assert_eq!(code(&run(&dir.path().join("sum"), &["sum", p.to_str().unwrap()])), 0);
}

#[test]
fn thimble_follows_the_direction() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "gamma.json", GAMMA);
    assert_eq!(code(&run(dir.path(), &["thimble", spec.to_str().unwrap(), "--direction", "2.0"])), 0);
    let e = Complex64::from_polar(1.0, -2.0);
    for (t, x, f) in fs::read_to_string(dir.path().join("thimble_j0_l0.csv")).unwrap().lines().skip(1).map(|l| {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        (v[0], Complex64::new(v[1], v[2]), Complex64::new(v[3], v[4]))
    }) {
        assert!(x.is_finite());
        assert!((e * f).im.abs() <= 1e-8 * (1.0 + f.norm()), "t = {t}");
    }
    let h = json(dir.path().join("thimble_j0_l0.json"));
    assert_eq!(h["flow_check"]["forward"]["monotone"], true);
    let o = run(dir.path(), &["thimble", spec.to_str().unwrap(), "--direction", "1.5707963267948966"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn stokes_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "gamma.json", GAMMA);
    let o = run(dir.path(), &["stokes", spec.to_str().unwrap(), "--direction", "0.97", "--direction", "2.17"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = StokesFactor::from_json(&json(dir.path().join("stokes.json"))).unwrap();
    let e = &s.entries[0][0];
    assert_eq!(e.terms.len(), 2);
    assert!((e.terms[&vec![0]] - 1.0).norm() < 1e-10);
    assert!((e.terms[&vec![1]] + 1.0).norm() < 1e-10);
    let xi = json(dir.path().join("xi_before.json"));
    assert_eq!(xi["entries"].as_array().unwrap().len(), 25);
    assert_eq!(code(&run(dir.path(), &["stokes", spec.to_str().unwrap(), "--direction", "1"])), 1);
}

#[test]
fn check_passes_and_filters() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check"]);
    assert_eq!(code(&o), 0);
    let tap = String::from_utf8(o.stdout).unwrap();
    assert!(tap.starts_with("TAP version 13\n"));
    assert!(!tap.contains("not ok"));
    let o = run(dir.path(), &["check", "--filter", "lattice"]);
    assert_eq!(code(&o), 0);
    let tap = String::from_utf8(o.stdout).unwrap();
    let ids: Vec<&str> = tap.lines().filter(|l| l.starts_with("ok ")).map(|l| l.split(" - ").nth(1).unwrap()).collect();
    assert_eq!(ids.len(), 5);
    assert!(ids.iter().all(|id| id.starts_with("lattice.")));
}

#[test]
fn check_reports_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check", "--inject-corruption"]);
    assert_eq!(code(&o), 5);
    let tap = String::from_utf8(o.stdout).unwrap();
    assert!(tap.contains("not ok 12 - derham.stirling_formal_xi"));
    assert_eq!(tap.matches("not ok").count(), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("derham.stirling_formal_xi"));
}

#[test]
fn gamma_demo_lambda_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gamma-demo", "--lambda", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(dir.path().join("summary.json"));
    assert_eq!(s["all_pass"], true);
    assert_eq!(s["criteria"].as_array().unwrap().len(), 12);
    for f in ["stirling.csv", "xi_samples.csv", "stokes_factor.json", "digamma_connection.json", "thimble_d0.csv", "thimble_d2.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let xi = fs::read_to_string(dir.path().join("xi_samples.csv")).unwrap();
    for l in xi.lines().skip(1) {
        let err: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err < 1e-8, "{l}");
    }
}

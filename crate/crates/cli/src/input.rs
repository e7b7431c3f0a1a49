//! Parsing of JSON inputs and grid specifications.

use std::f64::consts::FRAC_PI_4;
use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;
use stokeswb::gevrey::{GevreySeries, SeriesJson};
use stokeswb::poly::Poly;
use stokeswb::scalar::ComplexScalar;

use crate::Failure;

fn usage(m: impl Into<String>) -> Failure {
    Failure::Usage(m.into())
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: malformed JSON: {e}", path.display())))
}

fn part(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => n.as_f64().map(|x| format!("{x:e}")),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// A coefficient is a number, a decimal string, or a pair `[re, im]` of either.
pub fn scalar(v: &Value, prec: u32) -> Result<ComplexScalar, Failure> {
    let bad = || usage(format!("cannot read {v} as a complex coefficient"));
    let (re, im) = match v {
        Value::Array(a) if a.len() == 2 => (part(&a[0]).ok_or_else(bad)?, part(&a[1]).ok_or_else(bad)?),
        _ => (part(v).ok_or_else(bad)?, "0".to_string()),
    };
    ComplexScalar::parse(&re, &im, prec).map_err(|e| usage(format!("{v}: {e}")))
}

fn poly(v: &Value, key: &str, prec: u32) -> Result<Poly, Failure> {
    let a = v.get(key).and_then(Value::as_array).ok_or_else(|| usage(format!("missing array \"{key}\"")))?;
    if a.is_empty() {
        return Err(usage(format!("\"{key}\" is empty")));
    }
    let c = a.iter().map(|c| scalar(c, prec)).collect::<Result<Vec<_>, _>>()?;
    Ok(Poly::new(c, prec))
}

/// `{"numerator": [...], "denominator": [...]}`, coefficients in ascending degree.
pub fn form_spec(path: &Path, prec: u32) -> Result<(Poly, Poly), Failure> {
    let v = read_json(path)?;
    Ok((poly(&v, "numerator", prec)?, poly(&v, "denominator", prec)?))
}

/// A serialized series, or `{"coefficients": [...]}` in the coefficient syntax of [`scalar`].
pub fn series(path: &Path, prec: u32) -> Result<GevreySeries, Failure> {
    let v = read_json(path)?;
    if let Some(a) = v.get("coefficients").and_then(Value::as_array) {
        let c = a.iter().map(|c| scalar(c, prec)).collect::<Result<Vec<_>, _>>()?;
        if c.is_empty() {
            return Err(usage("\"coefficients\" is empty"));
        }
        return Ok(GevreySeries::new(c));
    }
    let j: SeriesJson = serde_json::from_value(v).map_err(|e| usage(format!("{}: not a series: {e}", path.display())))?;
    Ok(GevreySeries::from_json(&j)?)
}

/// `r_min,r_max,n_radial,n_angular`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl std::str::FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let p: Vec<&str> = s.split(',').map(str::trim).collect();
        if p.len() != 4 {
            return Err("expected r_min,r_max,n_radial,n_angular".into());
        }
        let f = |x: &str| x.parse::<f64>().map_err(|e| format!("{x}: {e}"));
        let n = |x: &str| x.parse::<usize>().map_err(|e| format!("{x}: {e}"));
        let g = GridSpec { r_min: f(p[0])?, r_max: f(p[1])?, n_radial: n(p[2])?, n_angular: n(p[3])? };
        if !(g.r_min > 0.0 && g.r_min <= g.r_max && g.r_max.is_finite()) {
            return Err("need 0 < r_min ≤ r_max".into());
        }
        if g.n_radial == 0 || g.n_angular == 0 {
            return Err("the grid must be nonempty".into());
        }
        Ok(g)
    }
}

fn spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![(a + b) / 2.0];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl GridSpec {
    /// Points with radii in `[r_min, r_max]` and `|arg z − center| ≤ π/4`.
    pub fn points(&self, center: f64) -> Vec<Complex64> {
        self.points_within(center, FRAC_PI_4)
    }

    pub fn points_within(&self, center: f64, half_width: f64) -> Vec<Complex64> {
        let radii = if self.n_radial == 1 { vec![self.r_min] } else { spaced(self.r_min, self.r_max, self.n_radial) };
        let mut out = Vec::with_capacity(self.n_radial * self.n_angular);
        for r in radii {
            for a in spaced(center - half_width, center + half_width, self.n_angular) {
                out.push(Complex64::from_polar(r, a));
            }
        }
        out
    }
}

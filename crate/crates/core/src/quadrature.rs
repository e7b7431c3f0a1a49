//! Gauss–Legendre rules and adaptive panel integration of complex-valued integrands.

use num_complex::Complex64;
use once_cell::sync::Lazy;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

static GL32: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(32));
static GL16: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| gauss_legendre(16));

pub fn gl32() -> &'static (Vec<f64>, Vec<f64>) {
    &GL32
}

pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    &GL16
}

/// One 32-point panel on `[a, b]`.
pub fn panel<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Complex64 {
    panel_with_mass(f, a, b).0
}

/// Panel value together with `∫|f|`, which sets the rounding floor.
fn panel_with_mass<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let (x, w) = gl32();
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    let mut s = Complex64::new(0.0, 0.0);
    let mut mass = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let v = f(m + h * xi);
        s += v * *wi;
        mass += v.norm() * wi;
    }
    (s * h, mass * h.abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Panels accepted before the adaptive pass gives up.
pub const MAX_PANELS: usize = 1 << 16;

/// Adaptive panel Gauss–Legendre with 32 nodes per panel.
///
/// A panel is accepted when its estimate and the sum of its two halves agree within
/// `0.1·tol` (absolute, scaled by the panel's share of the interval), or within the
/// rounding level of `∫|f|` over the panel.
pub fn integrate<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    let total = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, panel(&mut f, a, b), 0usize)];
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut panels = 0;
    let mut converged = true;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, ml) = panel_with_mass(&mut f, lo, mid);
        let (right, mr) = panel_with_mass(&mut f, mid, hi);
        let diff = (left + right - whole).norm();
        let share = 0.1 * tol * (hi - lo).abs() / total;
        let floor = 1e-14 * (ml + mr);
        let give_up = depth >= 40 || panels + stack.len() >= MAX_PANELS || !diff.is_finite();
        if diff <= share.max(floor) || give_up {
            if give_up && diff > share.max(floor) {
                converged = false;
            }
            value += left + right;
            error += diff;
            panels += 1;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    QuadResult { value, error, panels, converged }
}

/// Integrates `f(x)·dx` along the polyline through `pts`, `x` complex.
pub fn integrate_polyline<F: FnMut(Complex64) -> Complex64>(mut f: F, pts: &[Complex64], tol: f64) -> QuadResult {
    let mut out = QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, panels: 0, converged: true };
    for seg in pts.windows(2) {
        let (p, q) = (seg[0], seg[1]);
        let dx = q - p;
        let r = integrate(|t| f(p + dx * t) * dx, 0.0, 1.0, tol / (pts.len() as f64));
        out.value += r.value;
        out.error += r.error;
        out.panels += r.panels;
        out.converged &= r.converged;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(32);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let r = integrate(|t| Complex64::new(1.0 / (1e-4 + t * t), 0.0), -1.0, 1.0, 1e-10);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value.re - exact).abs() < 1e-8 * exact);
    }
}

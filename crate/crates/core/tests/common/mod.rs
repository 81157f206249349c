//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `ξ(R₀)` of the blended shell (index 4 on `[1, 2)`, quintic blends of
/// width 0.1, `R₀ = 3`), from 50-digit quadrature.
pub const BLENDED_XI_OUTER: f64 = 4.007278917063215;

/// Regular `l = 0` solution `y` and `y'` at `r` for index `n0` on
/// `[lo, hi]` and 1 elsewhere, by matching sines and cosines.
pub fn shell_solution(n0: f64, lo: f64, hi: f64, k: Complex64, r: f64) -> (Complex64, Complex64) {
    let free = |y0: Complex64, dy0: Complex64, x: f64| {
        let (s, co) = ((k * x).sin(), (k * x).cos());
        (y0 * co + dy0 * s / k, -y0 * k * s + dy0 * co)
    };
    if r <= lo {
        return ((k * r).sin() / k, (k * r).cos());
    }
    let (ya, dya) = ((k * lo).sin() / k, (k * lo).cos());
    let m = n0.sqrt() * k;
    let inner = |x: f64| {
        let (s, co) = ((m * x).sin(), (m * x).cos());
        (ya * co + dya * s / m, -ya * m * s + dya * co)
    };
    if r <= hi {
        return inner(r - lo);
    }
    let (yb, dyb) = inner(hi - lo);
    free(yb, dyb, r - hi)
}

/// `D(k; r)` for `l = 0` from the matched solution: `(y u' − u y')/r²`
/// with `u = sin(kr)/k`.
pub fn shell_determinant(n0: f64, lo: f64, hi: f64, k: Complex64, r: f64) -> Complex64 {
    let (y, dy) = shell_solution(n0, lo, hi, k, r);
    let (u, du) = ((k * r).sin() / k, (k * r).cos());
    (y * du - u * dy) / (r * r)
}

/// Closed form for index 4 on `[1, 2]`, `R₀ = 3`:
/// `D = −(3/8 sin 5k − 1/8 sin 3k − 3/2 sin k)/(9k)`.
pub fn sharp_shell_closed_form(k: Complex64) -> Complex64 {
    -((5.0 * k).sin() * 0.375 - (3.0 * k).sin() * 0.125 - k.sin() * 1.5) / (9.0 * k)
}

/// The bracket above equals `sin³k (6 sin²k − 7)`, so its zeros are
/// `nπ` (triple) and `π/2 + nπ ± i·acosh√(7/6)` (simple).
pub fn sharp_shell_roots(re0: f64, re1: f64, im0: f64, im1: f64) -> Vec<(Complex64, u32)> {
    let y = (7.0f64 / 6.0).sqrt().acosh();
    let inside = |k: Complex64| k.re > re0 && k.re < re1 && k.im > im0 && k.im < im1;
    let mut out = Vec::new();
    for n in 0..200 {
        let t = c(n as f64 * std::f64::consts::PI, 0.0);
        if n > 0 && inside(t) {
            out.push((t, 3));
        }
        let h = (n as f64 + 0.5) * std::f64::consts::PI;
        for s in [-1.0, 1.0] {
            let k = c(h, s * y);
            if inside(k) {
                out.push((k, 1));
            }
        }
    }
    out
}

/// Winding number of `f` on the rectangle boundary with `n` uniform samples
/// per side, summing wrapped phase differences.
pub fn dense_winding<F: Fn(Complex64) -> Complex64>(f: &F, re0: f64, re1: f64, im0: f64, im1: f64, n: usize) -> i64 {
    let corners = [c(re0, im0), c(re1, im0), c(re1, im1), c(re0, im1), c(re0, im0)];
    let mut total = 0.0;
    let mut prev = f(corners[0]);
    for w in corners.windows(2) {
        for i in 1..=n {
            let z = w[0] + (w[1] - w[0]) * (i as f64 / n as f64);
            let v = f(z);
            total += (v / prev).arg();
            prev = v;
        }
    }
    (total / std::f64::consts::TAU).round() as i64
}

/// Newton on `f` with a central-difference derivative.
pub fn newton<F: Fn(Complex64) -> Complex64>(f: &F, mut z: Complex64) -> Option<Complex64> {
    for _ in 0..100 {
        let h = 1e-7 * z.norm().max(1.0);
        let d = (f(z + h) - f(z - h)) / (2.0 * h);
        let step = f(z) / d;
        if !step.re.is_finite() {
            return None;
        }
        z -= step;
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            return Some(z);
        }
    }
    None
}

/// Simple roots of `f` in the rectangle from Newton started on a seed grid
/// of spacing `h`, deduplicated at `1e-8`.
pub fn newton_roots<F: Fn(Complex64) -> Complex64>(f: &F, re0: f64, re1: f64, im0: f64, im1: f64, h: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    let nx = ((re1 - re0) / h).ceil() as usize;
    let ny = ((im1 - im0) / h).ceil() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            let seed = c(re0 + i as f64 * h, im0 + j as f64 * h);
            if let Some(z) = newton(f, seed) {
                if z.re > re0 && z.re < re1 && z.im > im0 && z.im < im1 && !out.iter().any(|w| (w - z).norm() < 1e-8) {
                    out.push(z);
                }
            }
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

//! Spherical Bessel functions of the first kind for complex argument,
//! associated Legendre functions and spherical harmonics.
//!
//! The `_scaled` variants return `j_l(z)·e^{-|Im z|}`, which stays O(1/|z|)
//! anywhere in the plane; the plain variants multiply the factor back.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest order the accuracy tests cover.
pub const DEFAULT_L_MAX: u32 = 40;

const TAYLOR_RADIUS: f64 = 0.5;
const TAYLOR_TERMS: usize = 25;
const MILLER_EXTRA: usize = 60;
const RESCALE_AT: f64 = 1e100;

/// Angular quantum numbers `(l, m)` with `|m| ≤ l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SphericalOrder {
    l: u32,
    m: i32,
}

impl SphericalOrder {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::OutOfRange {
                value: m as f64,
                lo: -(l as f64),
                hi: l as f64,
            });
        }
        Ok(Self { l, m })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> i32 {
        self.m
    }
}

/// `(sin z, cos z)` times `e^{-|Im z|}`.
pub fn sin_cos_scaled(z: Complex64) -> (Complex64, Complex64) {
    let (sx, cx) = z.re.sin_cos();
    let e = (-2.0 * z.im.abs()).exp();
    let ch = 0.5 * (1.0 + e);
    let sh = 0.5 * (1.0 - e) * z.im.signum();
    (
        Complex64::new(sx * ch, cx * sh),
        Complex64::new(cx * ch, -sx * sh),
    )
}

fn scale_factor(z: Complex64) -> f64 {
    (-z.im.abs()).exp()
}

fn taylor_scaled(l: u32, z: Complex64) -> Complex64 {
    let mut lead = Complex64::new(1.0, 0.0);
    for j in 1..=l {
        lead *= z / (2 * j + 1) as f64;
    }
    let w = -0.5 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..TAYLOR_TERMS {
        term *= w / (k as f64 * (2 * l as usize + 2 * k + 1) as f64);
        sum += term;
    }
    lead * sum * scale_factor(z)
}

fn j01_scaled(z: Complex64) -> (Complex64, Complex64) {
    let (s, c) = sin_cos_scaled(z);
    let j0 = s / z;
    (j0, (j0 - c) / z)
}

/// Scaled `j_0 … j_lmax` at `z`.
pub fn sph_bessel_j_array_scaled(lmax: u32, z: Complex64) -> Vec<Complex64> {
    let n = lmax as usize + 1;
    let az = z.norm();
    if az < TAYLOR_RADIUS {
        return (0..=lmax).map(|l| taylor_scaled(l, z)).collect();
    }
    let (j0, j1) = j01_scaled(z);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    out[0] = j0;
    if n == 1 {
        return out;
    }
    out[1] = j1;
    if (lmax as f64) <= 0.5 * az {
        for l in 1..lmax as usize {
            out[l + 1] = (2 * l + 1) as f64 / z * out[l] - out[l - 1];
        }
        return out;
    }

    // Miller's downward recurrence from well above both lmax and |z|.
    let top = lmax as usize + az.ceil() as usize + MILLER_EXTRA;
    let mut next = Complex64::new(0.0, 0.0);
    let mut cur = Complex64::new(1.0, 0.0);
    for l in (1..=top).rev() {
        let prev = (2 * l + 1) as f64 / z * cur - next;
        next = cur;
        cur = prev;
        if l - 1 < n {
            out[l - 1] = cur;
        }
        if cur.norm() > RESCALE_AT {
            let s = 1.0 / RESCALE_AT;
            cur *= s;
            next *= s;
            for v in out.iter_mut().skip(l - 1) {
                *v *= s;
            }
        }
    }
    let (exact, raw) = if j0.norm() >= j1.norm() {
        (j0, out[0])
    } else {
        (j1, out[1])
    };
    // Divide in two steps so the squared modulus never leaves f64 range.
    let size = raw.norm();
    let norm = exact / (raw / size) / size;
    for v in &mut out {
        *v *= norm;
    }
    out
}

/// `j_l(z)·e^{-|Im z|}`.
pub fn sph_bessel_j_scaled(l: u32, z: Complex64) -> Complex64 {
    sph_bessel_j_array_scaled(l, z)[l as usize]
}

/// Spherical Bessel function of the first kind, `j_l(z)`.
pub fn sph_bessel_j(l: u32, z: Complex64) -> Complex64 {
    sph_bessel_j_scaled(l, z) * z.im.abs().exp()
}

/// `(j_l(z), j_l'(z))`, both times `e^{-|Im z|}`.
pub fn sph_bessel_j_and_prime_scaled(l: u32, z: Complex64) -> (Complex64, Complex64) {
    let js = sph_bessel_j_array_scaled(l + 1, z);
    let l_us = l as usize;
    let d = if l == 0 {
        -js[1]
    } else {
        (l as f64 * js[l_us - 1] - (l + 1) as f64 * js[l_us + 1]) / (2 * l + 1) as f64
    };
    (js[l_us], d)
}

/// `j_l'(z)·e^{-|Im z|}`.
pub fn sph_bessel_j_prime_scaled(l: u32, z: Complex64) -> Complex64 {
    sph_bessel_j_and_prime_scaled(l, z).1
}

/// Derivative `d/dz j_l(z)`.
pub fn sph_bessel_j_prime(l: u32, z: Complex64) -> Complex64 {
    sph_bessel_j_prime_scaled(l, z) * z.im.abs().exp()
}

/// `ln|j_l(z)|`, finite even where `j_l(z)` itself would overflow.
pub fn ln_abs_sph_bessel_j(l: u32, z: Complex64) -> f64 {
    sph_bessel_j_scaled(l, z).norm().ln() + z.im.abs()
}

/// `ln|j_l'(z)|`.
pub fn ln_abs_sph_bessel_j_prime(l: u32, z: Complex64) -> f64 {
    sph_bessel_j_prime_scaled(l, z).norm().ln() + z.im.abs()
}

/// Associated Legendre function `P_l^m(x)` for `0 ≤ m ≤ l`, without the
/// Condon–Shortley phase.
pub fn assoc_legendre(l: u32, m: u32, x: f64) -> f64 {
    if m > l {
        return 0.0;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for i in 1..=m {
        pmm *= (2 * i - 1) as f64 * s;
    }
    if l == m {
        return pmm;
    }
    let mut p_prev = pmm;
    let mut p = x * (2 * m + 1) as f64 * pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * x * p - (ll + m - 1) as f64 * p_prev) / (ll - m) as f64;
        p_prev = p;
        p = next;
    }
    p
}

/// Orthonormal spherical harmonic `Y_l^m(θ, φ)` with `Y_l^{-m} = conj(Y_l^m)`.
pub fn sph_harmonic(order: SphericalOrder, theta: f64, phi: f64) -> Complex64 {
    let l = order.l;
    let m = order.m.unsigned_abs();
    let mut ratio = 1.0;
    for i in (l - m + 1)..=(l + m) {
        ratio /= i as f64;
    }
    let norm = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
    let y = Complex64::from_polar(norm * assoc_legendre(l, m, theta.cos()), m as f64 * phi);
    if order.m < 0 {
        y.conj()
    } else {
        y
    }
}

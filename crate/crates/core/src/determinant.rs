//! The eigenvalue determinant
//!
//! ```text
//! D(k; r) = | j_l(kr)      y(r)/r    |
//!           | k j_l'(kr)   (y(r)/r)' |   with the sign  (y/r)·k j_l' − j_l·(y/r)'
//! ```
//!
//! where `y` is the regular radial solution. Its zeros in `k` are the
//! transmission eigenvalues of order `l`.

use std::path::Path;
use std::sync::Arc;

use dashmap::DashMap;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{RadialProfile, TransformedPotential};
use crate::radial::{
    integrate_transformed, interface_ic_from_matching, solve_regular_from_origin_at, solve_scattered, Direction,
    SolveOptions,
};
use crate::specfun::sph_bessel_j_and_prime_scaled;
use crate::zerofind::{AnalyticFunction, Rect, ScaledComplex};

/// How the regular solution is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    /// `y = r j_l(kr) + δ` with `δ` integrated across the support only.
    #[default]
    Interface,
    /// Outward from a small radius with a Frobenius start.
    Origin,
    /// Liouville-transformed equation from the cavity boundary; needs a
    /// `C²` profile.
    Liouville,
}

/// Rounded key for the memo.
fn memo_key(k: Complex64) -> (i64, i64) {
    ((k.re * 1e14).round() as i64, (k.im * 1e14).round() as i64)
}

/// Determinant of order `l` for one profile, evaluated at `r_eval`.
#[derive(Debug, Clone)]
pub struct DeterminantFn {
    profile: Arc<RadialProfile>,
    potential: Option<Arc<TransformedPotential>>,
    l: u32,
    r_eval: f64,
    route: Route,
    opts: SolveOptions,
    memo: Option<Arc<DashMap<(i64, i64), ScaledComplex>>>,
}

/// Determinant at one point with its matrix entries, all unscaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterminantParts {
    pub j: Complex64,
    pub dj: Complex64,
    pub y: Complex64,
    pub dy: Complex64,
    pub value: ScaledComplex,
}

impl DeterminantFn {
    pub fn new(profile: RadialProfile, l: u32) -> Self {
        Self::from_arc(Arc::new(profile), l)
    }

    pub fn from_arc(profile: Arc<RadialProfile>, l: u32) -> Self {
        let r_eval = profile.outer_radius();
        Self {
            profile,
            potential: None,
            l,
            r_eval,
            route: Route::Interface,
            opts: SolveOptions::default(),
            memo: Some(Arc::new(DashMap::new())),
        }
    }

    pub fn with_r_eval(mut self, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::OutOfRange {
                value: r,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        self.r_eval = r;
        self.reset_memo();
        Ok(self)
    }

    pub fn with_route(mut self, route: Route) -> Result<Self> {
        if route == Route::Liouville && self.potential.is_none() {
            self.potential = Some(Arc::new(TransformedPotential::new(&self.profile)?));
        }
        self.route = route;
        self.reset_memo();
        Ok(self)
    }

    pub fn with_options(mut self, opts: SolveOptions) -> Self {
        self.opts = opts;
        self.reset_memo();
        self
    }

    /// Turns the memo off (or back on with an empty map).
    pub fn with_memo(mut self, enabled: bool) -> Self {
        self.memo = enabled.then(|| Arc::new(DashMap::new()));
        self
    }

    fn reset_memo(&mut self) {
        if self.memo.is_some() {
            self.memo = Some(Arc::new(DashMap::new()));
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn r_eval(&self) -> f64 {
        self.r_eval
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn options(&self) -> &SolveOptions {
        &self.opts
    }

    pub fn memo_len(&self) -> usize {
        self.memo.as_ref().map_or(0, |m| m.len())
    }

    /// `D(k)` as mantissa and log scale. The value is computed at `k`
    /// rounded to the memo grid, so results do not depend on evaluation
    /// order.
    pub fn eval_scaled(&self, k: Complex64) -> Result<ScaledComplex> {
        if !(k.re.is_finite() && k.im.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        let key = memo_key(k);
        if let Some(m) = &self.memo {
            if let Some(v) = m.get(&key) {
                return Ok(*v);
            }
        }
        let kq = if k.norm() < 1e4 {
            Complex64::new(key.0 as f64 / 1e14, key.1 as f64 / 1e14)
        } else {
            k
        };
        let v = self.compute(kq)?;
        if let Some(m) = &self.memo {
            m.insert(key, v);
        }
        Ok(v)
    }

    /// `D(k)`; overflows to infinity for very large `|Im k|`.
    pub fn eval(&self, k: Complex64) -> Result<Complex64> {
        Ok(self.eval_scaled(k)?.value())
    }

    /// Radius where the matrix entries are formed. Beyond the support
    /// `r² D(k; r)` is constant, and forming it at the support edge avoids
    /// the cancellation between entries that grow like `e^{|Im k|(ξ(r)+r)}`.
    fn stable_radius(&self) -> f64 {
        let s_hi = self.profile.support_hi();
        if self.profile.is_trivial() || self.r_eval <= s_hi {
            self.r_eval
        } else {
            s_hi
        }
    }

    fn compute(&self, k: Complex64) -> Result<ScaledComplex> {
        let r = self.stable_radius();
        let v = match self.route {
            Route::Interface => self.along_scattered(k, &[r])?[0],
            Route::Origin | Route::Liouville => self.parts_at(k, r)?.value,
        };
        let ratio = r / self.r_eval;
        Ok(ScaledComplex::new(v.mantissa * (ratio * ratio), v.log_scale))
    }

    /// Matrix entries and the determinant formed directly at `r_eval`
    /// through the configured route. The perturbative route reconstructs
    /// `y` as `r j_l + δ`, so this is not cancellation-free; use
    /// [`Self::eval_scaled`] for the value itself.
    pub fn parts(&self, k: Complex64) -> Result<DeterminantParts> {
        self.parts_at(k, self.r_eval)
    }

    fn parts_at(&self, k: Complex64, r: f64) -> Result<DeterminantParts> {
        let (y_s, dy_s, ln_y) = self.regular_at(k, r)?;
        let (js, djs) = sph_bessel_j_and_prime_scaled(self.l, k * r);
        let ln_j = (k * r).im.abs();
        let mant = (y_s / r) * k * djs - js * (dy_s * r - y_s) / (r * r);
        let value = ScaledComplex::new(mant, ln_y + ln_j);
        let ey = ln_y.exp();
        let ej = ln_j.exp();
        Ok(DeterminantParts {
            j: js * ej,
            dj: djs * ej,
            y: y_s * ey,
            dy: dy_s * ey,
            value,
        })
    }

    /// `(y, y', ln scale)` of the regular solution at `r`.
    pub fn regular_at(&self, k: Complex64, r: f64) -> Result<(Complex64, Complex64, f64)> {
        match self.route {
            Route::Interface => {
                let tr = solve_scattered(&self.profile, self.l, k, Direction::Outward, &[r], &self.opts)?;
                if r <= self.profile.support_lo() {
                    let (js, djs) = sph_bessel_j_and_prime_scaled(self.l, k * r);
                    return Ok((r * js, js + k * r * djs, (k * r).im.abs()));
                }
                let i = tr.index_of(r).ok_or_else(|| Error::NoConvergence(format!("radius {r} missing")))?;
                let (y, dy) = tr.total_scaled(i);
                Ok((y, dy, tr.gamma * r))
            }
            Route::Origin => {
                let tr = solve_regular_from_origin_at(&self.profile, self.l, k, &[r], &self.opts)?;
                let i = tr.index_of(r).ok_or_else(|| Error::NoConvergence(format!("radius {r} missing")))?;
                Ok((tr.y[i], tr.dy[i], tr.log_scale[i]))
            }
            Route::Liouville => {
                let pot = self
                    .potential
                    .as_ref()
                    .ok_or_else(|| Error::job("route", "Liouville route needs a potential"))?;
                let map = pot.map();
                let r_cav = self.profile.cavity_radius();
                let outer = self.profile.outer_radius();
                if r < r_cav || r > outer {
                    return Err(Error::OutOfRange {
                        value: r,
                        lo: r_cav,
                        hi: outer,
                    });
                }
                let (a, b) = interface_ic_from_matching(self.l, k, r_cav);
                let xi = map.eval_xi(r)?;
                let tr = integrate_transformed(pot, self.l, k, r_cav, -b, a, xi.max(r_cav), &[xi], &self.opts)?;
                let i = tr
                    .liouville
                    .as_ref()
                    .and_then(|lv| lv.xi.iter().position(|&x| (x - xi).abs() <= 1e-12 * xi.max(1.0)))
                    .ok_or_else(|| Error::NoConvergence(format!("radius {r} missing")))?;
                Ok((tr.y[i], tr.dy[i], tr.log_scale[i]))
            }
        }
    }

    /// Perturbative determinant at each radius, in the order given.
    fn along_scattered(&self, k: Complex64, radii: &[f64]) -> Result<Vec<ScaledComplex>> {
        let s_lo = self.profile.support_lo();
        let inside: Vec<f64> = radii.iter().copied().filter(|&r| r > s_lo).collect();
        let tr = if inside.is_empty() {
            None
        } else {
            Some(solve_scattered(&self.profile, self.l, k, Direction::Outward, &inside, &self.opts)?)
        };
        let gamma = k.im.abs();
        radii
            .iter()
            .map(|&r| {
                if !(r > 0.0) {
                    return Err(Error::OutOfRange {
                        value: r,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                let Some(tr) = tr.as_ref().filter(|_| r > s_lo) else {
                    return Ok(ScaledComplex::new(Complex64::new(0.0, 0.0), 0.0));
                };
                let i = tr.index_of(r).ok_or_else(|| Error::NoConvergence(format!("radius {r} missing")))?;
                let (d, dd) = tr.delta_scaled(i);
                let (js, djs) = sph_bessel_j_and_prime_scaled(self.l, k * r);
                // The r j_l(kr) part of y cancels exactly.
                let mant = (d / r) * k * djs - js * (dd * r - d) / (r * r);
                Ok(ScaledComplex::new(mant, 2.0 * gamma * r))
            })
            .collect()
    }

    /// `D(k; r)` formed directly at each `r` in `radii` from a single
    /// solve. Uses the perturbative route regardless of the configured one.
    pub fn eval_along(&self, k: Complex64, radii: &[f64]) -> Result<Vec<ScaledComplex>> {
        self.along_scattered(k, radii)
    }

    /// Factorization `D = (k j_l' y / r)(α + j_l/(k j_l' r))` at `r_eval`.
    pub fn eval_alpha(&self, k: Complex64) -> Result<FactorDiag> {
        const EXCLUSION: f64 = 1e-3;
        let r = self.r_eval;
        let z = k * r;
        let l = self.l as f64;
        let (js, djs) = sph_bessel_j_and_prime_scaled(self.l, z);
        // Newton distance to the nearest zero of k ↦ j_l'(kr).
        let d2js = -(2.0 / z) * djs - (1.0 - l * (l + 1.0) / (z * z)) * js;
        let dist_j = if djs.norm() == 0.0 { 0.0 } else { (djs / (r * d2js)).norm() };
        if dist_j < EXCLUSION {
            return Err(Error::NearPole {
                k,
                distance: dist_j,
                which: "j_l'",
            });
        }
        let (y, dy, ln_y) = self.regular_at(k, r)?;
        let h = 1e-6 * k.norm().max(1.0);
        let (y_p, _, ln_p) = self.regular_at(k + h, r)?;
        let (y_m, _, ln_m) = self.regular_at(k - h, r)?;
        let dy_dk = (y_p * (ln_p - ln_y).exp() - y_m * (ln_m - ln_y).exp()) / (2.0 * h);
        let dist_y = if y.norm() == 0.0 { 0.0 } else { (y / dy_dk).norm() };
        if dist_y < EXCLUSION {
            return Err(Error::NearPole {
                k,
                distance: dist_y,
                which: "y",
            });
        }
        let ratio_j = js / djs;
        let alpha = 1.0 - ratio_j * (dy / y) / k;
        let remainder = ratio_j / (k * r);
        let ln_pref = ln_y + z.im.abs();
        let prefactor = ScaledComplex::new(k * djs * y / r, ln_pref);
        Ok(FactorDiag {
            k,
            alpha,
            prefactor,
            remainder,
            pole_distance: dist_j.min(dist_y),
        })
    }
}

impl AnalyticFunction for DeterminantFn {
    fn eval_scaled(&self, k: Complex64) -> Result<ScaledComplex> {
        DeterminantFn::eval_scaled(self, k)
    }
}

/// `k ↦ y(r_eval; k)`, the regular solution at the evaluation radius.
#[derive(Debug, Clone, Copy)]
pub struct RegularSolutionFn<'a> {
    df: &'a DeterminantFn,
}

impl DeterminantFn {
    pub fn regular_fn(&self) -> RegularSolutionFn<'_> {
        RegularSolutionFn { df: self }
    }
}

impl AnalyticFunction for RegularSolutionFn<'_> {
    fn eval_scaled(&self, k: Complex64) -> Result<ScaledComplex> {
        let (y, _, ln) = self.df.regular_at(k, self.df.r_eval)?;
        Ok(ScaledComplex::new(y, ln))
    }
}

/// Factorization diagnostic at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorDiag {
    pub k: Complex64,
    /// `1 − (1/k)(j_l/j_l')(y'/y)`.
    pub alpha: Complex64,
    /// `k j_l'(kr) y(r)/r`.
    pub prefactor: ScaledComplex,
    /// `j_l/(k j_l' r)`, the exact remainder so that `D = prefactor·(α + remainder)`.
    pub remainder: Complex64,
    /// Estimated distance in `k` to the nearest zero of `j_l'` or `y`.
    pub pole_distance: f64,
}

impl FactorDiag {
    /// `prefactor·(α + remainder)`, which equals the determinant.
    pub fn reassembled(&self) -> ScaledComplex {
        ScaledComplex::new(self.prefactor.mantissa * (self.alpha + self.remainder), self.prefactor.log_scale)
    }

    /// `prefactor·α`, the leading term.
    pub fn leading(&self) -> ScaledComplex {
        ScaledComplex::new(self.prefactor.mantissa * self.alpha, self.prefactor.log_scale)
    }
}

/// Determinant values on a rectangular grid, row-major with the real part
/// varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantGrid {
    pub nx: usize,
    pub ny: usize,
    pub k: Vec<Complex64>,
    pub values: Vec<Complex64>,
}

impl DeterminantGrid {
    pub fn get(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.nx + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["re(k)", "im(k)", "re(D)", "im(D)", "|D|"])?;
        for (k, v) in self.k.iter().zip(&self.values) {
            w.write_record([
                k.re.to_string(),
                k.im.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                v.norm().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Evaluates `df` on an `nx × ny` grid spanning `rect`. An axis with a
/// single point uses the lower bound of that axis.
pub fn grid_eval(df: &DeterminantFn, rect: &Rect, nx: usize, ny: usize) -> Result<DeterminantGrid> {
    if nx == 0 || ny == 0 {
        return Err(Error::job("grid", "nx and ny must be positive"));
    }
    let xs = axis(rect.re0, rect.re1, nx);
    let ys = axis(rect.im0, rect.im1, ny);
    let k: Vec<Complex64> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Complex64::new(x, y)))
        .collect();
    let values = k.par_iter().map(|&kk| df.eval(kk)).collect::<Result<Vec<_>>>()?;
    Ok(DeterminantGrid { nx, ny, k, values })
}

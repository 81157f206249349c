//! Spectrum jobs and the experiments built on them: eigenvalue sets per
//! order, locality of the determinant in its evaluation radius, vanishing
//! of the interior mismatch at eigenvalues, zero-density reports and the
//! comparison of two profiles' spectra.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cartwright::{
    density_from_zeros, estimate_density, estimate_indicator, radius_ladder, width_and_prediction, DensityEstimate,
    IndicatorEstimate, IndicatorWidth, Sector, LADDER_RATIO,
};
use crate::determinant::{DeterminantFn, Route};
use crate::error::{Error, Result};
use crate::profile::{LiouvilleMap, ProfileConfig, RadialProfile};
use crate::radial::{solve_scattered, Direction, SolveOptions};
use crate::specfun::sph_bessel_j_and_prime_scaled;
use crate::zerofind::{conjugate_mismatch, locate_zeros, refine_zero, Rect, ZeroFindOptions, ZeroSet};

/// Largest `|k|` the solvers are trusted for.
pub const MAX_MODULUS: f64 = 200.0;
pub const MAX_ORDER: u32 = 40;

fn default_rect() -> [f64; 4] {
    [0.3, 30.0, -3.0, 3.0]
}

fn default_tol() -> f64 {
    1e-10
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Settings of the density report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityOptions {
    pub r_min: f64,
    pub r_max: f64,
    pub ratio: f64,
    /// Half-opening of the sector around the positive real axis.
    pub half_width: f64,
    pub inner_radius: f64,
    /// Angles for the indicator; `±π/2` are always added.
    pub thetas: Vec<f64>,
}

impl Default for DensityOptions {
    fn default() -> Self {
        Self {
            r_min: 1.0,
            r_max: 150.0,
            ratio: LADDER_RATIO,
            half_width: 0.1,
            inner_radius: 0.25,
            thetas: vec![-FRAC_PI_2, -PI / 4.0, 0.0, PI / 4.0, FRAC_PI_2],
        }
    }
}

/// A spectrum computation, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumJob {
    pub profile: ProfileConfig,
    #[serde(default)]
    pub l_min: u32,
    #[serde(default)]
    pub l_max: u32,
    /// `[re0, re1, im0, im1]`.
    #[serde(default = "default_rect")]
    pub rect: [f64; 4],
    #[serde(default = "default_tol")]
    pub target_tol: f64,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub route: Route,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub density: DensityOptions,
}

impl SpectrumJob {
    pub fn new(profile: ProfileConfig) -> Self {
        Self {
            profile,
            l_min: 0,
            l_max: 0,
            rect: default_rect(),
            target_tol: default_tol(),
            solver: SolveOptions::default(),
            route: Route::default(),
            out_dir: default_out(),
            seed: 0,
            format: OutputFormat::default(),
            density: DensityOptions::default(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn rect(&self) -> Result<Rect> {
        let [a, b, c, d] = self.rect;
        Rect::new(a, b, c, d)
    }

    pub fn zerofind_options(&self) -> ZeroFindOptions {
        ZeroFindOptions {
            target_tol: self.target_tol,
            seed: self.seed,
            ..ZeroFindOptions::default()
        }
    }

    /// Checks every field and builds the profile.
    pub fn validate(&self) -> Result<RadialProfile> {
        let profile = RadialProfile::new(self.profile.clone())?;
        let rect = self.rect()?;
        if rect.max_modulus() > MAX_MODULUS {
            return Err(Error::job(
                "rect",
                format!("|k| reaches {:.1}, beyond the supported {MAX_MODULUS}", rect.max_modulus()),
            ));
        }
        if self.l_min > self.l_max {
            return Err(Error::job("l_min", format!("l_min = {} exceeds l_max = {}", self.l_min, self.l_max)));
        }
        if self.l_max > MAX_ORDER {
            return Err(Error::job("l_max", format!("at most {MAX_ORDER}, got {}", self.l_max)));
        }
        if !(self.target_tol > 0.0 && self.target_tol < 1e-2) {
            return Err(Error::job("target_tol", format!("must lie in (0, 1e-2), got {}", self.target_tol)));
        }
        let s = &self.solver;
        if !(s.atol > 0.0 && s.rtol > 0.0 && s.origin_start > 0.0 && s.xi_min > 0.0) {
            return Err(Error::job("solver", "tolerances and start radii must be positive"));
        }
        let d = &self.density;
        if !(d.r_min > d.inner_radius && d.r_max > d.r_min && d.r_max <= MAX_MODULUS && d.ratio > 1.0) {
            return Err(Error::job("density", "need inner_radius < r_min < r_max ≤ 200 and ratio > 1"));
        }
        if !(d.half_width > 0.0 && d.half_width < FRAC_PI_2) {
            return Err(Error::job("density.half_width", "must lie in (0, π/2)"));
        }
        if self.route == Route::Liouville && !profile.is_smooth() {
            return Err(Error::job("route", "the Liouville route needs a C² profile"));
        }
        Ok(profile)
    }

    fn determinant(&self, profile: &Arc<RadialProfile>, l: u32) -> Result<DeterminantFn> {
        DeterminantFn::from_arc(profile.clone(), l)
            .with_options(self.solver)
            .with_route(self.route)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Ok,
    /// The determinant vanishes identically: every `k` is a zero.
    Degenerate,
    Failed,
}

/// Result for one order `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub l: u32,
    pub status: Status,
    pub zeros: Option<ZeroSet>,
    pub error: Option<String>,
    /// Largest distance between a zero and its conjugate partner; `None`
    /// when some zero has no partner.
    pub conjugate_mismatch: Option<f64>,
    /// Counts near the positive real axis from the zeros found.
    pub density: Option<DensityEstimate>,
}

/// A zero of the merged spectrum with the orders it occurs in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedZero {
    pub k: Complex64,
    pub multiplicity: u32,
    pub orders: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum JobStatus {
    Ok,
    Degenerate,
    /// Some orders failed; the others are reported.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub status: JobStatus,
    pub rect: Rect,
    pub target_tol: f64,
    pub orders: Vec<OrderResult>,
    pub merged: Vec<MergedZero>,
}

impl SpectrumReport {
    pub fn order(&self, l: u32) -> Option<&OrderResult> {
        self.orders.iter().find(|o| o.l == l)
    }

    /// Zeros of order `l` with multiplicities.
    pub fn zeros_of(&self, l: u32) -> Vec<(Complex64, u32)> {
        self.order(l)
            .and_then(|o| o.zeros.as_ref())
            .map(|z| z.zeros.iter().map(|z| (z.k, z.multiplicity)).collect())
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn probe_points(rect: &Rect) -> [Complex64; 3] {
    let c = rect.center();
    [
        c,
        Complex64::new(rect.re0 + 0.27 * rect.width(), rect.im0 + 0.61 * rect.height()),
        Complex64::new(rect.re0 + 0.83 * rect.width(), rect.im0 + 0.19 * rect.height()),
    ]
}

fn run_order(job: &SpectrumJob, profile: &Arc<RadialProfile>, rect: &Rect, l: u32) -> OrderResult {
    let failed = |e: Error| OrderResult {
        l,
        status: Status::Failed,
        zeros: None,
        error: Some(e.to_string()),
        conjugate_mismatch: None,
        density: None,
    };
    let df = match job.determinant(profile, l) {
        Ok(d) => d,
        Err(e) => return failed(e),
    };
    let mut all_zero = true;
    for k in probe_points(rect) {
        match df.eval(k) {
            Ok(v) => all_zero &= v == Complex64::new(0.0, 0.0),
            Err(e) => return failed(e),
        }
    }
    if all_zero {
        return OrderResult {
            l,
            status: Status::Degenerate,
            zeros: None,
            error: None,
            conjugate_mismatch: None,
            density: None,
        };
    }
    match locate_zeros(&df, rect, &job.zerofind_options()) {
        Ok(zs) => {
            let symmetric_rect = (rect.im0 + rect.im1).abs() < 1e-12;
            let inner: Vec<_> = zs
                .zeros
                .iter()
                .filter(|z| !symmetric_rect || rect.contains(z.k, -1e-6))
                .copied()
                .collect();
            let conj = if symmetric_rect {
                conjugate_mismatch(&inner, (1e3 * job.target_tol).max(1e-7))
            } else {
                None
            };
            let list: Vec<(Complex64, u32)> = zs.zeros.iter().map(|z| (z.k, z.multiplicity)).collect();
            let density = radius_ladder(rect.re0.max(0.25) + 0.5, rect.re1.max(rect.re0 + 1.0), LADDER_RATIO)
                .ok()
                .map(|ladder| {
                    density_from_zeros(&list, Sector::about_real_axis(job.density.half_width).unwrap(), &ladder, 0.25)
                })
                .filter(|_| job.density.half_width > 0.0);
            OrderResult {
                l,
                status: Status::Ok,
                zeros: Some(zs),
                error: None,
                conjugate_mismatch: conj,
                density,
            }
        }
        Err(e) => failed(e),
    }
}

fn merge_orders(orders: &[OrderResult], radius: f64) -> Vec<MergedZero> {
    let mut all: Vec<(Complex64, u32, u32)> = orders
        .iter()
        .filter_map(|o| o.zeros.as_ref().map(|z| (o.l, z)))
        .flat_map(|(l, z)| z.zeros.iter().map(move |z| (z.k, z.multiplicity, l)))
        .collect();
    all.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)).then(a.2.cmp(&b.2)));
    let mut out: Vec<MergedZero> = Vec::new();
    for (k, m, l) in all {
        if let Some(prev) = out.iter_mut().find(|p| (p.k - k).norm() <= radius) {
            prev.multiplicity += m;
            if !prev.orders.contains(&l) {
                prev.orders.push(l);
            }
        } else {
            out.push(MergedZero {
                k,
                multiplicity: m,
                orders: vec![l],
            });
        }
    }
    out
}

/// Zeros of the determinant for every order in the job. Failures of single
/// orders are recorded in the report instead of aborting the job.
pub fn run_spectrum_job(job: &SpectrumJob) -> Result<SpectrumReport> {
    let profile = Arc::new(job.validate()?);
    let rect = job.rect()?;
    if profile.is_trivial() {
        return Ok(SpectrumReport {
            status: JobStatus::Degenerate,
            rect,
            target_tol: job.target_tol,
            orders: (job.l_min..=job.l_max)
                .map(|l| OrderResult {
                    l,
                    status: Status::Degenerate,
                    zeros: None,
                    error: None,
                    conjugate_mismatch: None,
                    density: None,
                })
                .collect(),
            merged: Vec::new(),
        });
    }
    let orders: Vec<OrderResult> = (job.l_min..=job.l_max)
        .into_par_iter()
        .map(|l| run_order(job, &profile, &rect, l))
        .collect();
    let status = if orders.iter().all(|o| o.status == Status::Degenerate) {
        JobStatus::Degenerate
    } else if orders.iter().any(|o| o.status == Status::Failed) {
        JobStatus::Partial
    } else {
        JobStatus::Ok
    };
    let merged = merge_orders(&orders, 10.0 * job.target_tol);
    Ok(SpectrumReport {
        status,
        rect,
        target_tol: job.target_tol,
        orders,
        merged,
    })
}

/// Writes `zeros_l{l}.csv` (or `.json`) per order and `spectrum.json`.
pub fn export_spectrum(report: &SpectrumReport, dir: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for o in &report.orders {
        if let Some(z) = &o.zeros {
            let path = match format {
                OutputFormat::Csv => {
                    let p = dir.join(format!("zeros_l{}.csv", o.l));
                    z.save_csv(&p)?;
                    p
                }
                OutputFormat::Json => {
                    let p = dir.join(format!("zeros_l{}.json", o.l));
                    fs::write(&p, z.to_json()?)?;
                    p
                }
            };
            written.push(path);
        }
    }
    let p = dir.join("spectrum.json");
    fs::write(&p, report.to_json()?)?;
    written.push(p);
    Ok(written)
}

/// Variation of `D(k; r)` over a range of evaluation radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub l: u32,
    pub k: Complex64,
    pub radii: Vec<f64>,
    /// `ln|D(k; r)|` at each radius.
    pub ln_abs: Vec<f64>,
    /// `max_r |D(r) − D(r₀)| / max_r |D(r)|`.
    pub variation: f64,
    /// The same for `r² D(r)`.
    pub normalized_variation: f64,
    /// Smallest radius from which `r² D(r)` stays within `1e-6` of its
    /// value at the top of the range.
    pub transition_radius: f64,
}

fn relative_variation(values: &[Complex64]) -> f64 {
    let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    values.iter().map(|v| (v - values[0]).norm()).fold(0.0, f64::max) / scale
}

/// Evaluates `D(k; r)` at `n` radii spanning `[r_lo, r_hi]`, all from one
/// solve, and measures its variation.
pub fn locality_scan(profile: &RadialProfile, l: u32, k: Complex64, r_lo: f64, r_hi: f64, n: usize) -> Result<LocalityReport> {
    locality_scan_with(profile, l, k, r_lo, r_hi, n, &SolveOptions::default())
}

pub fn locality_scan_with(
    profile: &RadialProfile,
    l: u32,
    k: Complex64,
    r_lo: f64,
    r_hi: f64,
    n: usize,
    opts: &SolveOptions,
) -> Result<LocalityReport> {
    if !(r_lo > 0.0 && r_hi > r_lo && n >= 2) {
        return Err(Error::job("r_range", format!("need 0 < r_lo < r_hi and n ≥ 2, got [{r_lo}, {r_hi}], {n}")));
    }
    let radii: Vec<f64> = (0..n).map(|i| r_lo + (r_hi - r_lo) * i as f64 / (n - 1) as f64).collect();
    let df = DeterminantFn::new(profile.clone(), l).with_options(*opts);
    let vals = df.eval_along(k, &radii)?;
    // Bring everything to the largest scale before differencing.
    let top = vals.iter().map(|v| v.log_scale).fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<Complex64> = vals.iter().map(|v| v.mantissa * (v.log_scale - top).exp()).collect();
    let dn: Vec<Complex64> = d.iter().zip(&radii).map(|(v, r)| v * (r * r)).collect();
    let last = *dn.last().unwrap();
    let mut transition = radii[n - 1];
    for i in (0..n).rev() {
        if (dn[i] - last).norm() <= 1e-6 * last.norm() {
            transition = radii[i];
        } else {
            break;
        }
    }
    Ok(LocalityReport {
        l,
        k,
        radii,
        ln_abs: vals.iter().map(|v| v.ln_abs()).collect(),
        variation: relative_variation(&d),
        normalized_variation: relative_variation(&dn),
        transition_radius: transition,
    })
}

/// Agreement of the solution that equals `r j_l(kr)` beyond the support,
/// continued inward, with a multiple of `r j_l(kr)` inside the cavity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorReport {
    pub l: u32,
    pub k: Complex64,
    pub radii: Vec<f64>,
    /// Relative residual of the least-squares fit `Y ≈ c·r j_l(kr)` over
    /// the interior grid.
    pub fit_mismatch: f64,
    /// `max |uY' − u'Y| / max (|uY'| + |u'Y|)` over the interior grid.
    pub wronskian_mismatch: f64,
    /// Larger of the two.
    pub mismatch: f64,
}

/// Interior mismatch on `n` radii in `[0.1R, R]`; it vanishes exactly when
/// `k` is an eigenvalue of order `l`.
pub fn interior_vanishing_check(profile: &RadialProfile, l: u32, k_eig: Complex64, n: usize) -> Result<InteriorReport> {
    let r_cav = profile.cavity_radius();
    let n = n.max(2);
    let radii: Vec<f64> = (0..n)
        .map(|i| r_cav * (0.1 + 0.9 * i as f64 / (n - 1) as f64))
        .rev()
        .collect();
    if profile.is_trivial() {
        return Ok(InteriorReport {
            l,
            k: k_eig,
            radii,
            fit_mismatch: 0.0,
            wronskian_mismatch: 0.0,
            mismatch: 0.0,
        });
    }
    let tr = solve_scattered(profile, l, k_eig, Direction::Inward, &radii, &SolveOptions::default())?;
    let mut ys = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    let mut w_max: f64 = 0.0;
    let mut w_scale: f64 = 0.0;
    for &r in &radii {
        let i = tr
            .index_of(r)
            .ok_or_else(|| Error::NoConvergence(format!("radius {r} missing")))?;
        let (y, dy) = tr.total_scaled(i);
        let (j, dj) = sph_bessel_j_and_prime_scaled(l, k_eig * r);
        let (u, du) = (r * j, j + k_eig * r * dj);
        let (a, b) = (u * dy, du * y);
        w_max = w_max.max((a - b).norm());
        w_scale = w_scale.max(a.norm() + b.norm());
        ys.push(y);
        us.push(u);
    }
    let uu: f64 = us.iter().map(|u| u.norm_sqr()).sum();
    let c: Complex64 = us.iter().zip(&ys).map(|(u, y)| u.conj() * y).sum::<Complex64>() / uu;
    let res: f64 = us.iter().zip(&ys).map(|(u, y)| (y - c * u).norm_sqr()).sum();
    let yy: f64 = ys.iter().map(|y| y.norm_sqr()).sum();
    let fit = if yy == 0.0 { 0.0 } else { (res / yy).sqrt() };
    let wr = if w_scale == 0.0 { 0.0 } else { w_max / w_scale };
    Ok(InteriorReport {
        l,
        k: k_eig,
        radii,
        fit_mismatch: fit,
        wronskian_mismatch: wr,
        mismatch: fit.max(wr),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "DISTINGUISHABLE")]
    Distinguishable,
    #[serde(rename = "INDISTINGUISHABLE-AT-SCALE")]
    IndistinguishableAtScale,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Distinguishable => "DISTINGUISHABLE",
            Verdict::IndistinguishableAtScale => "INDISTINGUISHABLE-AT-SCALE",
        })
    }
}

/// Matching of one order's zero sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderComparison {
    pub l: u32,
    pub matched: usize,
    /// Zeros (with multiplicity) of the first profile with no partner.
    pub unmatched_first: usize,
    pub unmatched_second: usize,
    pub unmatched: Vec<Complex64>,
    /// Zeros per unit of `Re k` in the rectangle, first minus second.
    pub density_gap: f64,
    /// `(ξ₁(R₀) − ξ₂(R₀))/π`, the gap the indicator widths predict.
    pub predicted_gap: f64,
    /// Either side degenerate or failed.
    pub incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub verdict: Verdict,
    pub match_radius: f64,
    pub symmetric_difference: usize,
    pub orders: Vec<OrderComparison>,
    pub first: SpectrumReport,
    pub second: SpectrumReport,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn unmatched(a: &[(Complex64, u32)], b: &[(Complex64, u32)], radius: f64) -> (usize, usize, Vec<Complex64>) {
    let mut matched = 0;
    let mut missing = 0;
    let mut pts = Vec::new();
    for (k, m) in a {
        let best = b.iter().map(|(w, _)| (w - k).norm()).fold(f64::INFINITY, f64::min);
        if best <= radius {
            matched += *m as usize;
        } else {
            missing += *m as usize;
            pts.push(*k);
        }
    }
    (matched, missing, pts)
}

fn xi_outer(config: &ProfileConfig) -> f64 {
    RadialProfile::new(config.clone())
        .and_then(|p| LiouvilleMap::new(&p))
        .map(|m| m.xi_outer())
        .unwrap_or(f64::NAN)
}

/// Compares two spectrum reports computed on the same rectangle and orders.
pub fn compare_reports(
    first: SpectrumReport,
    second: SpectrumReport,
    xi_first: f64,
    xi_second: f64,
) -> Result<ComparisonReport> {
    if first.rect != second.rect {
        return Err(Error::job("rect", "both jobs must search the same rectangle"));
    }
    let l1: Vec<u32> = first.orders.iter().map(|o| o.l).collect();
    let l2: Vec<u32> = second.orders.iter().map(|o| o.l).collect();
    if l1 != l2 {
        return Err(Error::job("l_min", "both jobs must cover the same orders"));
    }
    let radius = 10.0 * first.target_tol.max(second.target_tol);
    let width = first.rect.width();
    let mut orders = Vec::new();
    let mut total = 0;
    for (o1, o2) in first.orders.iter().zip(&second.orders) {
        let a = first.zeros_of(o1.l);
        let b = second.zeros_of(o2.l);
        let incomplete = o1.status != Status::Ok || o2.status != Status::Ok;
        let (m1, u1, mut p1) = unmatched(&a, &b, radius);
        let (_, u2, p2) = unmatched(&b, &a, radius);
        p1.extend(p2);
        let n1: u32 = a.iter().map(|z| z.1).sum();
        let n2: u32 = b.iter().map(|z| z.1).sum();
        // One degenerate side (every k a zero) against a discrete spectrum.
        let degenerate_mismatch = (o1.status == Status::Degenerate) != (o2.status == Status::Degenerate);
        total += u1 + u2 + usize::from(degenerate_mismatch);
        orders.push(OrderComparison {
            l: o1.l,
            matched: m1,
            unmatched_first: u1,
            unmatched_second: u2,
            unmatched: p1,
            density_gap: (n1 as f64 - n2 as f64) / width,
            predicted_gap: (xi_first - xi_second) / PI,
            incomplete,
        });
    }
    Ok(ComparisonReport {
        verdict: if total > 0 {
            Verdict::Distinguishable
        } else {
            Verdict::IndistinguishableAtScale
        },
        match_radius: radius,
        symmetric_difference: total,
        orders,
        first,
        second,
    })
}

/// Runs both jobs and compares their spectra order by order.
pub fn compare_profiles(job1: &SpectrumJob, job2: &SpectrumJob) -> Result<ComparisonReport> {
    if job1.rect != job2.rect || job1.l_min != job2.l_min || job1.l_max != job2.l_max {
        return Err(Error::job("rect", "both jobs must share the rectangle and the l-range"));
    }
    let first = run_spectrum_job(job1)?;
    let second = if job1 == job2 {
        first.clone()
    } else {
        run_spectrum_job(job2)?
    };
    compare_reports(first, second, xi_outer(&job1.profile), xi_outer(&job2.profile))
}

/// Growth and zero-density analysis of one order's determinant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderDensity {
    pub l: u32,
    pub indicator: IndicatorEstimate,
    pub width: IndicatorWidth,
    pub density: DensityEstimate,
    /// `(ξ(R₀) + R₀)/(2π)`.
    pub outer_prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub xi_outer: f64,
    pub outer_radius: f64,
    pub orders: Vec<OrderDensity>,
}

impl DensityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Indicator, indicator width and sector zero counts of the determinant
/// for every order in the job.
pub fn density_report(job: &SpectrumJob) -> Result<DensityReport> {
    let profile = Arc::new(job.validate()?);
    if profile.is_trivial() {
        return Err(Error::job("profile", "the determinant vanishes identically"));
    }
    let d = &job.density;
    let ladder = radius_ladder(d.r_min, d.r_max, d.ratio)?;
    let mut thetas = d.thetas.clone();
    for t in [-FRAC_PI_2, FRAC_PI_2] {
        if !thetas.iter().any(|x| (x - t).abs() < 1e-9) {
            thetas.push(t);
        }
    }
    thetas.sort_by(f64::total_cmp);
    let xi = LiouvilleMap::new(&profile)?.xi_outer();
    let r0 = profile.outer_radius();
    let opts = job.zerofind_options();
    let orders = (job.l_min..=job.l_max)
        .map(|l| {
            let df = job.determinant(&profile, l)?;
            let indicator = estimate_indicator(&df, &thetas, &ladder)?;
            let width = width_and_prediction(&indicator)?;
            let density = estimate_density(&df, Sector::about_real_axis(d.half_width)?, &ladder, d.inner_radius, &opts)?;
            Ok(OrderDensity {
                l,
                indicator,
                width,
                density,
                outer_prediction: (xi + r0) / (2.0 * PI),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityReport {
        xi_outer: xi,
        outer_radius: r0,
        orders,
    })
}

/// Writes `indicator_l{l}.csv`, `density_l{l}.csv` and `density.json`.
pub fn export_density(report: &DensityReport, dir: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format == OutputFormat::Csv {
        for o in &report.orders {
            let p = dir.join(format!("indicator_l{}.csv", o.l));
            o.indicator.write_csv(fs::File::create(&p)?)?;
            written.push(p);
            let p = dir.join(format!("density_l{}.csv", o.l));
            o.density.save_csv(&p)?;
            written.push(p);
        }
    }
    let p = dir.join("density.json");
    fs::write(&p, report.to_json()?)?;
    written.push(p);
    Ok(written)
}

/// One invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn check(name: impl Into<String>, value: f64, threshold: f64, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed: value <= threshold,
        value,
        threshold,
        detail: detail.into(),
    }
}

/// Invariant suite for a job: conjugate symmetry, agreement of the
/// solution constructions, constancy of `r² D` beyond the support,
/// analyticity on a small circle, count conservation, conjugate closure
/// of the zero set and stability of the zeros under tighter tolerances.
pub fn validate(job: &SpectrumJob) -> Result<ValidationReport> {
    let profile = Arc::new(job.validate()?);
    let rect = job.rect()?;
    let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
    let mut checks = Vec::new();
    if profile.is_trivial() {
        for l in job.l_min..=job.l_max {
            let df = job.determinant(&profile, l)?;
            let mut worst: f64 = 0.0;
            for _ in 0..8 {
                let k = Complex64::new(rng.gen_range(rect.re0..rect.re1), rng.gen_range(rect.im0..rect.im1));
                worst = worst.max(df.eval(k)?.norm());
            }
            checks.push(check(format!("l={l} trivial profile gives D = 0"), worst, 0.0, "max |D| at 8 random k"));
        }
        return Ok(ValidationReport { checks });
    }
    let samples: Vec<Complex64> = (0..6)
        .map(|_| Complex64::new(rng.gen_range(rect.re0..rect.re1), rng.gen_range(rect.im0..rect.im1)))
        .collect();
    let report = run_spectrum_job(job)?;
    for l in job.l_min..=job.l_max {
        let df = job.determinant(&profile, l)?;
        let mut conj: f64 = 0.0;
        let mut routes: f64 = 0.0;
        let mut locality: f64 = 0.0;
        let origin = DeterminantFn::from_arc(profile.clone(), l)
            .with_options(job.solver)
            .with_route(Route::Origin)?;
        let reference = DeterminantFn::from_arc(profile.clone(), l)
            .with_options(job.solver)
            .with_route(Route::Interface)?;
        let r_range = (profile.support_hi(), profile.outer_radius() + 1.0);
        for &k in &samples {
            let a = df.eval(k)?;
            let b = df.eval(k.conj())?;
            conj = conj.max((a - b.conj()).norm() / a.norm().max(f64::MIN_POSITIVE));
            let x = reference.eval(k)?;
            let y = origin.eval(k)?;
            routes = routes.max((x - y).norm() / x.norm().max(f64::MIN_POSITIVE));
            let loc = locality_scan_with(&profile, l, k, r_range.0, r_range.1, 6, &job.solver.tightened(10.0))?;
            locality = locality.max(loc.normalized_variation);
        }
        checks.push(check(format!("l={l} conjugate symmetry"), conj, 1e-10, "max |D(k̄) − conj D(k)| / |D(k)|"));
        checks.push(check(
            format!("l={l} origin and perturbative constructions agree"),
            routes,
            1e-6,
            "max relative difference at 6 random k",
        ));
        checks.push(check(
            format!("l={l} r² D constant beyond the support"),
            locality,
            1e-8,
            format!(
                "relative variation over [{:.3}, {:.3}], solver tolerances tightened 10x",
                r_range.0, r_range.1
            ),
        ));
        // ∮ D dk on a small circle around a sample point.
        let c0 = samples[0];
        let rho = 0.05;
        let n = 32;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut peak: f64 = 0.0;
        for i in 0..n {
            let w = Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64);
            let v = df.eval(c0 + rho * w)?;
            peak = peak.max(v.norm());
            acc += v * w * rho;
        }
        let cauchy = (acc / n as f64).norm() / peak.max(f64::MIN_POSITIVE);
        checks.push(check(format!("l={l} Cauchy integral on a small circle"), cauchy, 1e-8, "|∮D dk| / (2πρ max|D|)"));

        let Some(order) = report.order(l) else { continue };
        match (&order.status, &order.zeros) {
            (Status::Ok, Some(zs)) => {
                let diff = (zs.total_multiplicity() as f64 - zs.winding as f64).abs() + zs.unresolved.len() as f64;
                checks.push(check(
                    format!("l={l} zero count equals winding number"),
                    diff,
                    0.0,
                    format!("winding {} over {} zeros", zs.winding, zs.zeros.len()),
                ));
                checks.push(Check {
                    name: format!("l={l} zero set closed under conjugation"),
                    passed: order.conjugate_mismatch.is_some() || (rect.im0 + rect.im1).abs() > 1e-12,
                    value: order.conjugate_mismatch.unwrap_or(f64::INFINITY),
                    threshold: (1e3 * job.target_tol).max(1e-7),
                    detail: "largest distance to the conjugate partner".into(),
                });
                let tight = DeterminantFn::from_arc(profile.clone(), l)
                    .with_options(job.solver.tightened(10.0))
                    .with_route(job.route)?;
                let mut moved: f64 = 0.0;
                for z in zs.zeros.iter().filter(|z| z.multiplicity == 1) {
                    let (k2, _) = refine_zero(&tight, z.k, job.target_tol)?;
                    moved = moved.max((k2 - z.k).norm());
                }
                checks.push(check(
                    format!("l={l} zeros stable under 10x tighter tolerances"),
                    moved,
                    10.0 * job.solver.rtol.max(job.target_tol),
                    "largest displacement of a simple zero",
                ));
            }
            (Status::Degenerate, _) => checks.push(check(format!("l={l} determinant not identically zero"), 1.0, 0.0, "DEGENERATE")),
            _ => checks.push(check(
                format!("l={l} spectrum computed"),
                1.0,
                0.0,
                order.error.clone().unwrap_or_default(),
            )),
        }
    }
    Ok(ValidationReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shell_job() -> SpectrumJob {
        let p = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap();
        let mut job = SpectrumJob::new(p.config().clone());
        job.rect = [0.5, 6.0, -1.0, 1.0];
        job
    }

    #[test]
    fn job_defaults_from_json() {
        let s = r#"{"profile": {"R": 1.0, "R0": 3.0, "pieces": [{"from": 1.0, "to": 2.0, "coeffs": [4.0]}]}}"#;
        let job = SpectrumJob::from_json_str(s).unwrap();
        assert_eq!(job.rect, [0.3, 30.0, -3.0, 3.0]);
        assert_eq!(job.target_tol, 1e-10);
        job.validate().unwrap();
    }

    #[test]
    fn job_rejects_large_rect() {
        let mut job = shell_job();
        job.rect = [0.3, 250.0, -3.0, 3.0];
        assert!(matches!(job.validate(), Err(Error::InvalidJob { ref field, .. }) if field == "rect"));
        let mut job = shell_job();
        job.l_max = 41;
        assert!(job.validate().is_err());
    }

    #[test]
    fn trivial_job_is_degenerate() {
        let p = RadialProfile::homogeneous(1.0, 3.0).unwrap();
        let job = SpectrumJob::new(p.config().clone());
        let r = run_spectrum_job(&job).unwrap();
        assert_eq!(r.status, JobStatus::Degenerate);
        assert!(r.merged.is_empty());
    }

    #[test]
    fn shell_spectrum_small_rect() {
        let r = run_spectrum_job(&shell_job()).unwrap();
        assert_eq!(r.status, JobStatus::Ok);
        let zs = r.order(0).unwrap().zeros.as_ref().unwrap();
        // π/2 ± 0.3977i, 3π/2 ± 0.3977i and the triple zero at π.
        assert_eq!(zs.winding, 7);
        assert!(r.order(0).unwrap().conjugate_mismatch.is_some());
    }

    #[test]
    fn locality_of_normalized_determinant() {
        let p = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.1).unwrap();
        let rep = locality_scan(&p, 0, Complex64::new(3.0, 0.5), p.support_hi(), 4.0, 8).unwrap();
        assert!(rep.normalized_variation < 1e-8, "{}", rep.normalized_variation);
        let rep = locality_scan(&p, 0, Complex64::new(3.0, 0.5), 1.5, 4.0, 26).unwrap();
        assert!((rep.transition_radius - p.support_hi()).abs() <= 0.1 + 1e-12, "{}", rep.transition_radius);
    }

    #[test]
    fn self_comparison_is_indistinguishable() {
        let job = shell_job();
        let c = compare_profiles(&job, &job).unwrap();
        assert_eq!(c.verdict, Verdict::IndistinguishableAtScale);
        assert_eq!(c.symmetric_difference, 0);
    }
}

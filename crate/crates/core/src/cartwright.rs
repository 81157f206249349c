//! Growth and zero distribution of entire functions of exponential type:
//! the indicator `h(θ) = lim ln|f(re^{iθ})|/r`, zero counts in angular
//! sectors, and the width `d = h(π/2) + h(−π/2)` whose `d/2π` predicts the
//! zero density near the real axis for functions of Cartwright class.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::zerofind::{winding_number, AnalyticFunction, Contour, ZeroFindOptions};

pub const LADDER_RATIO: f64 = 1.15;
pub const WINDOW: usize = 10;

/// Geometric radii from `r_min` up to and including `r_max`.
pub fn radius_ladder(r_min: f64, r_max: f64, ratio: f64) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && ratio > 1.0) {
        return Err(Error::job("ladder", format!("need 0 < r_min < r_max and ratio > 1, got {r_min}, {r_max}, {ratio}")));
    }
    let mut out = Vec::new();
    let mut r = r_min;
    while r < r_max * (1.0 - 1e-12) {
        out.push(r);
        r *= ratio;
    }
    out.push(r_max);
    Ok(out)
}

/// Least-squares line `y = a + b x`; returns `(a, b, max |residual|)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let res = x.iter().zip(y).map(|(u, v)| (v - a - b * u).abs()).fold(0.0, f64::max);
    (a, b, res)
}

/// Indicator estimate along one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySeries {
    pub theta: f64,
    pub r: Vec<f64>,
    /// `ln|f(re^{iθ})|/r` at each ladder radius.
    pub growth: Vec<f64>,
    /// Sliding-window maxima and the radius each was attained at.
    pub window_r: Vec<f64>,
    pub window_max: Vec<f64>,
    /// Intercept of the fit `h + c/r` over the upper half of the windows.
    pub h: f64,
    /// Largest residual of that fit.
    pub oscillation: f64,
    /// `|last window value − h|`.
    pub tail: f64,
}

/// Indicator estimates over a grid of angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorEstimate {
    pub rays: Vec<RaySeries>,
}

impl IndicatorEstimate {
    pub fn thetas(&self) -> Vec<f64> {
        self.rays.iter().map(|r| r.theta).collect()
    }

    pub fn h(&self) -> Vec<f64> {
        self.rays.iter().map(|r| r.h).collect()
    }

    /// Estimate at the grid angle closest to `theta` (within `1e-9`).
    pub fn at(&self, theta: f64) -> Option<f64> {
        self.rays.iter().find(|r| (r.theta - theta).abs() < 1e-9).map(|r| r.h)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["theta", "h", "oscillation"])?;
        for r in &self.rays {
            w.write_record([r.theta.to_string(), r.h.to_string(), r.oscillation.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn ray_series<F: AnalyticFunction + ?Sized>(f: &F, theta: f64, ladder: &[f64]) -> Result<RaySeries> {
    let growth: Vec<f64> = ladder
        .par_iter()
        .map(|&r| Ok(f.eval_scaled(Complex64::from_polar(r, theta))?.ln_abs() / r))
        .collect::<Result<_>>()?;
    let win = WINDOW.min(ladder.len());
    let mut window_r = Vec::new();
    let mut window_max = Vec::new();
    for end in win..=ladder.len() {
        let (i, v) = (end - win..end)
            .map(|i| (i, growth[i]))
            .fold((end - win, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        window_r.push(ladder[i]);
        window_max.push(v);
    }
    let (h, oscillation, tail) = if window_max.iter().all(|v| *v == f64::NEG_INFINITY) {
        (f64::NEG_INFINITY, 0.0, 0.0)
    } else {
        let half = window_max.len() / 2;
        let (xs, ys): (Vec<f64>, Vec<f64>) = window_r[half..]
            .iter()
            .zip(&window_max[half..])
            .filter(|(_, v)| v.is_finite())
            .map(|(r, v)| (1.0 / r, *v))
            .unzip();
        if xs.len() < 2 {
            let v = *window_max.last().unwrap();
            (v, 0.0, 0.0)
        } else {
            let (a, _, res) = fit_line(&xs, &ys);
            (a, res, (window_max.last().unwrap() - a).abs())
        }
    };
    Ok(RaySeries {
        theta,
        r: ladder.to_vec(),
        growth,
        window_r,
        window_max,
        h,
        oscillation,
        tail,
    })
}

/// Estimates `h(θ)` for each angle from evaluations along the ladder.
/// A function that vanishes identically gets `h = −∞`.
pub fn estimate_indicator<F: AnalyticFunction + ?Sized>(f: &F, thetas: &[f64], ladder: &[f64]) -> Result<IndicatorEstimate> {
    if ladder.len() < 2 {
        return Err(Error::job("ladder", "need at least two radii"));
    }
    let rays = thetas
        .par_iter()
        .map(|&t| ray_series(f, t, ladder))
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorEstimate { rays })
}

/// Width of the indicator diagram and the density it predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorWidth {
    pub h_up: f64,
    pub h_down: f64,
    pub d: f64,
    /// `d/(2π)`.
    pub prediction: f64,
}

/// `d = h(π/2) + h(−π/2)`; both angles must be on the grid.
pub fn width_and_prediction(ind: &IndicatorEstimate) -> Result<IndicatorWidth> {
    let up = ind
        .at(FRAC_PI_2)
        .ok_or_else(|| Error::job("thetas", "indicator grid must contain π/2"))?;
    let down = ind
        .at(-FRAC_PI_2)
        .ok_or_else(|| Error::job("thetas", "indicator grid must contain −π/2"))?;
    let d = up + down;
    Ok(IndicatorWidth {
        h_up: up,
        h_down: down,
        d,
        prediction: d / std::f64::consts::TAU,
    })
}

/// Angular sector `alpha ≤ arg k ≤ beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub alpha: f64,
    pub beta: f64,
}

impl Sector {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha < beta && beta - alpha <= std::f64::consts::TAU) {
            return Err(Error::job("sector", format!("need alpha < beta, got [{alpha}, {beta}]")));
        }
        Ok(Self { alpha, beta })
    }

    /// `|arg k| ≤ half_width`.
    pub fn about_real_axis(half_width: f64) -> Result<Self> {
        Self::new(-half_width, half_width)
    }

    pub fn contains(&self, k: Complex64) -> bool {
        let mut a = k.arg();
        while a < self.alpha {
            a += std::f64::consts::TAU;
        }
        a <= self.beta
    }
}

/// Zero counts in a sector along a ladder of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub sector: Sector,
    pub inner_radius: f64,
    pub radii: Vec<f64>,
    /// `N(r)`: zeros with `inner_radius < |k| ≤ r` in the sector.
    pub counts: Vec<usize>,
    /// Slope of `N` against `r` over the upper half of the ladder.
    pub slope: f64,
}

impl DensityEstimate {
    fn from_counts(sector: Sector, inner_radius: f64, radii: Vec<f64>, counts: Vec<usize>) -> Self {
        let half = radii.len() / 2;
        let xs = &radii[half..];
        let ys: Vec<f64> = counts[half..].iter().map(|&c| c as f64).collect();
        let slope = if xs.len() >= 2 { fit_line(xs, &ys).1 } else { 0.0 };
        Self {
            sector,
            inner_radius,
            radii,
            counts,
            slope,
        }
    }

    /// `N(r)/r` at the top of the ladder.
    pub fn top_ratio(&self) -> f64 {
        match (self.radii.last(), self.counts.last()) {
            (Some(r), Some(n)) => *n as f64 / r,
            _ => 0.0,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "N", "N/r"])?;
        for (r, n) in self.radii.iter().zip(&self.counts) {
            w.write_record([r.to_string(), n.to_string(), (*n as f64 / r).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Counts zeros of `f` in the sector between consecutive ladder radii by
/// winding numbers over annular sectors. A zero on a circle moves that
/// radius by a small seeded amount.
pub fn estimate_density<F: AnalyticFunction + ?Sized>(
    f: &F,
    sector: Sector,
    ladder: &[f64],
    inner_radius: f64,
    opts: &ZeroFindOptions,
) -> Result<DensityEstimate> {
    if ladder.first().is_none_or(|&r| r <= inner_radius) {
        return Err(Error::job("ladder", "radii must exceed the inner radius"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xD1CE);
    let mut edges = Vec::with_capacity(ladder.len() + 1);
    edges.push(inner_radius);
    edges.extend_from_slice(ladder);
    let mut actual = edges.clone();
    let mut counts = Vec::with_capacity(ladder.len());
    let mut total = 0usize;
    let mut i = 1;
    while i < edges.len() {
        let mut attempts = 0;
        loop {
            let c = Contour::annular_sector(actual[i - 1], actual[i], sector.alpha, sector.beta);
            match winding_number(f, &c, opts) {
                Ok(w) if w >= 0 => {
                    total += w as usize;
                    counts.push(total);
                    break;
                }
                Ok(w) => return Err(Error::NoConvergence(format!("negative sector count {w}"))),
                Err(Error::BoundaryZero { .. }) if attempts < opts.jitter_attempts => {
                    attempts += 1;
                    let step = 1e-4 * edges[i] * rng.gen_range(0.5..1.5);
                    actual[i] = edges[i] + step;
                }
                Err(Error::BoundaryZero { .. }) => {
                    return Err(Error::BoundaryZero {
                        attempts: opts.jitter_attempts,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        i += 1;
    }
    Ok(DensityEstimate::from_counts(sector, inner_radius, ladder.to_vec(), counts))
}

/// Density estimate from an explicit list of zeros with multiplicities.
pub fn density_from_zeros(zeros: &[(Complex64, u32)], sector: Sector, ladder: &[f64], inner_radius: f64) -> DensityEstimate {
    let counts = ladder
        .iter()
        .map(|&r| {
            zeros
                .iter()
                .filter(|(k, _)| k.norm() > inner_radius && k.norm() <= r && sector.contains(*k))
                .map(|(_, m)| *m as usize)
                .sum()
        })
        .collect();
    DensityEstimate::from_counts(sector, inner_radius, ladder.to_vec(), counts)
}

/// One angle of the indicator inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraRow {
    pub theta: f64,
    pub h_f: f64,
    pub h_g: f64,
    pub h_fg: f64,
    pub h_fplusg: f64,
    /// `h_fg ≤ h_f + h_g + slack`.
    pub product_ok: bool,
    /// `h_{f+g} ≤ max(h_f, h_g) + slack`.
    pub sum_ok: bool,
    /// `h_f + h_g − h_fg`; zero when the product is additive.
    pub product_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub slack: f64,
    pub rows: Vec<AlgebraRow>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.product_ok && r.sum_ok)
    }

    /// Largest `|product_gap|` over angles where it is finite.
    pub fn max_product_gap(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.product_gap)
            .filter(|g| g.is_finite())
            .fold(0.0, |a, g| a.max(g.abs()))
    }
}

fn le_with_slack(lhs: f64, rhs: f64, slack: f64) -> bool {
    // −∞ ≤ anything; an identically zero function has h = −∞.
    lhs == f64::NEG_INFINITY || lhs <= rhs + slack
}

/// Checks `h_{fg} ≤ h_f + h_g` and `h_{f+g} ≤ max(h_f, h_g)` angle by angle.
pub fn check_indicator_algebra(
    h_f: &IndicatorEstimate,
    h_g: &IndicatorEstimate,
    h_fg: &IndicatorEstimate,
    h_fplusg: &IndicatorEstimate,
    slack: f64,
) -> Result<AlgebraReport> {
    let n = h_f.rays.len();
    if h_g.rays.len() != n || h_fg.rays.len() != n || h_fplusg.rays.len() != n {
        return Err(Error::job("thetas", "indicator estimates must share one angle grid"));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let theta = h_f.rays[i].theta;
        for other in [&h_g.rays[i], &h_fg.rays[i], &h_fplusg.rays[i]] {
            if (other.theta - theta).abs() > 1e-12 {
                return Err(Error::job("thetas", "indicator estimates must share one angle grid"));
            }
        }
        let (a, b, p, s) = (h_f.rays[i].h, h_g.rays[i].h, h_fg.rays[i].h, h_fplusg.rays[i].h);
        rows.push(AlgebraRow {
            theta,
            h_f: a,
            h_g: b,
            h_fg: p,
            h_fplusg: s,
            product_ok: le_with_slack(p, a + b, slack),
            sum_ok: le_with_slack(s, a.max(b), slack),
            product_gap: a + b - p,
        });
    }
    Ok(AlgebraReport { slack, rows })
}

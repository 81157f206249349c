//! Zeros of analytic functions in a rectangle by the argument principle.
//!
//! Boundary phase is tracked adaptively: consecutive samples are refined
//! until every phase step is below π/2, agrees with the two half steps
//! through the midpoint and sees `|f|` change by at most a factor `e`. Cells are quadrisected at slightly jittered split
//! lines until each holds one zero, which is then refined by Newton's
//! method, or a cluster whose multiplicity is confirmed on a cascade of
//! shrinking circles.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A complex number stored as `mantissa·e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledComplex {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl ScaledComplex {
    pub fn new(mantissa: Complex64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn from_value(v: Complex64) -> Self {
        Self::new(v, 0.0)
    }

    pub fn value(&self) -> Complex64 {
        self.mantissa * self.log_scale.exp()
    }

    /// `ln|·|`; `−∞` for an exact zero.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa == Complex64::new(0.0, 0.0)
    }
}

/// An entire function that can be evaluated concurrently.
pub trait AnalyticFunction: Sync {
    /// `f(k)` in scaled form; only the phase and `ln|f|` are used for
    /// counting, so the mantissa may carry any positive factor.
    fn eval_scaled(&self, k: Complex64) -> Result<ScaledComplex>;

    fn eval(&self, k: Complex64) -> Result<Complex64> {
        Ok(self.eval_scaled(k)?.value())
    }
}

impl<F> AnalyticFunction for F
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    fn eval_scaled(&self, k: Complex64) -> Result<ScaledComplex> {
        let v = self(k);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite(k));
        }
        Ok(ScaledComplex::from_value(v))
    }
}

/// Axis-aligned rectangle `[re0, re1] × [im0, im1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Result<Self> {
        let ok = [re0, re1, im0, im1].iter().all(|v| v.is_finite()) && re1 > re0 && im1 > im0;
        if !ok {
            return Err(Error::DegenerateRect { re0, re1, im0, im1 });
        }
        Ok(Self { re0, re1, im0, im1 })
    }

    /// Parses `re0,re1,im0,im1`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::job("rect", format!("expected re0,re1,im0,im1, got `{s}`")))?;
        if v.len() != 4 {
            return Err(Error::job("rect", format!("expected 4 numbers, got {}", v.len())));
        }
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    pub fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.width().hypot(self.height())
    }

    pub fn contains(&self, k: Complex64, margin: f64) -> bool {
        k.re >= self.re0 - margin && k.re <= self.re1 + margin && k.im >= self.im0 - margin && k.im <= self.im1 + margin
    }

    pub fn dilate(&self, d: f64) -> Self {
        Self {
            re0: self.re0 - d,
            re1: self.re1 + d,
            im0: self.im0 - d,
            im1: self.im1 + d,
        }
    }

    /// Largest `|k|` over the rectangle.
    pub fn max_modulus(&self) -> f64 {
        let x = self.re0.abs().max(self.re1.abs());
        let y = self.im0.abs().max(self.im1.abs());
        x.hypot(y)
    }

    /// Four children split at fractions `fx`, `fy` of the sides.
    pub fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re0 + fx * self.width();
        let ym = self.im0 + fy * self.height();
        [
            Rect { re0: self.re0, re1: xm, im0: self.im0, im1: ym },
            Rect { re0: xm, re1: self.re1, im0: self.im0, im1: ym },
            Rect { re0: self.re0, re1: xm, im0: ym, im1: self.im1 },
            Rect { re0: xm, re1: self.re1, im0: ym, im1: self.im1 },
        ]
    }

    pub fn contour(&self) -> Contour {
        let c = |x, y| Complex64::new(x, y);
        Contour {
            segments: vec![
                Segment::Line(c(self.re0, self.im0), c(self.re1, self.im0)),
                Segment::Line(c(self.re1, self.im0), c(self.re1, self.im1)),
                Segment::Line(c(self.re1, self.im1), c(self.re0, self.im1)),
                Segment::Line(c(self.re0, self.im1), c(self.re0, self.im0)),
            ],
        }
    }
}

/// Piece of a closed contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    Line(Complex64, Complex64),
    /// Centre, radius, start and end angle.
    Arc(Complex64, f64, f64, f64),
}

impl Segment {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            Segment::Line(a, b) => a + (b - a) * t,
            Segment::Arc(c, r, t0, t1) => c + Complex64::from_polar(r, t0 + (t1 - t0) * t),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Segment::Line(a, b) => (b - a).norm(),
            Segment::Arc(_, r, t0, t1) => r * (t1 - t0).abs(),
        }
    }
}

/// Closed, positively oriented contour.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self {
            segments: vec![Segment::Arc(center, radius, 0.0, TAU)],
        }
    }

    /// Boundary of `{r_in ≤ |k| ≤ r_out, alpha ≤ arg k ≤ beta}`.
    pub fn annular_sector(r_in: f64, r_out: f64, alpha: f64, beta: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            segments: vec![
                Segment::Line(Complex64::from_polar(r_in, alpha), Complex64::from_polar(r_out, alpha)),
                Segment::Arc(z, r_out, alpha, beta),
                Segment::Line(Complex64::from_polar(r_out, beta), Complex64::from_polar(r_in, beta)),
                Segment::Arc(z, r_in, beta, alpha),
            ],
        }
    }
}

/// Settings for counting and locating zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroFindOptions {
    /// Newton stops once the step is below this.
    pub target_tol: f64,
    /// Seed for the deterministic jitter of split lines and contours.
    pub seed: u64,
    pub jitter_attempts: usize,
    /// Initial samples per unit of phase-tracking work on each segment.
    pub base_samples: usize,
    /// Bisection depth allowed between two boundary samples.
    pub max_refine_depth: u32,
    pub multiplicity_cap: u32,
    /// Cells smaller than this (relative to the search rectangle) are
    /// reported unresolved instead of split further.
    pub min_cell_fraction: f64,
    /// Points on each moment circle.
    pub circle_points: usize,
}

impl Default for ZeroFindOptions {
    fn default() -> Self {
        Self {
            target_tol: 1e-10,
            seed: 0,
            jitter_attempts: 8,
            base_samples: 24,
            max_refine_depth: 36,
            multiplicity_cap: 4,
            min_cell_fraction: 1e-7,
            circle_points: 128,
        }
    }
}

/// Outcome of one contour pass: a winding number or a near-boundary zero.
enum Winding {
    Count(i64),
    BoundaryHit,
}

/// Unit phase and `ln|f|` of a sample.
#[derive(Clone, Copy)]
struct Sample {
    phase: Complex64,
    ln_abs: f64,
}

fn sample(v: ScaledComplex) -> Option<Sample> {
    let m = v.mantissa.norm();
    if m == 0.0 || !m.is_finite() || !v.log_scale.is_finite() {
        None
    } else {
        Some(Sample {
            phase: v.mantissa / m,
            ln_abs: m.ln() + v.log_scale,
        })
    }
}

fn eval_sample<F: AnalyticFunction + ?Sized>(f: &F, k: Complex64) -> Result<Option<Sample>> {
    Ok(sample(f.eval_scaled(k)?))
}

/// Largest change of `ln|f|` accepted across one interval. A zero much
/// closer to the contour than the interval length makes `|f|` differ by a
/// factor of at least 3 between the three samples, so such intervals are
/// always split before their phase step is trusted.
const MAX_LN_VARIATION: f64 = 1.0;

/// Phase increment along `seg` between parameters `ta`, `tb`.
fn refine_phase<F: AnalyticFunction + ?Sized>(
    f: &F,
    seg: &Segment,
    ta: f64,
    a: Sample,
    tb: f64,
    b: Sample,
    depth: u32,
) -> Result<Option<f64>> {
    let d = (b.phase * a.phase.conj()).arg();
    let tm = 0.5 * (ta + tb);
    let Some(m) = eval_sample(f, seg.point(tm))? else {
        return Ok(None);
    };
    let d1 = (m.phase * a.phase.conj()).arg();
    let d2 = (b.phase * m.phase.conj()).arg();
    let hi = a.ln_abs.max(b.ln_abs).max(m.ln_abs);
    let lo = a.ln_abs.min(b.ln_abs).min(m.ln_abs);
    if d.abs() < FRAC_PI_2
        && d1.abs() < FRAC_PI_2
        && d2.abs() < FRAC_PI_2
        && (d1 + d2 - d).abs() < 1e-3
        && hi - lo <= MAX_LN_VARIATION
    {
        return Ok(Some(d1 + d2));
    }
    if depth == 0 {
        return Ok(None);
    }
    let Some(left) = refine_phase(f, seg, ta, a, tm, m, depth - 1)? else {
        return Ok(None);
    };
    let Some(right) = refine_phase(f, seg, tm, m, tb, b, depth - 1)? else {
        return Ok(None);
    };
    Ok(Some(left + right))
}

fn segment_phase<F: AnalyticFunction + ?Sized>(f: &F, seg: &Segment, samples: usize, depth: u32) -> Result<Option<f64>> {
    let n = samples.max(4);
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let vals: Vec<Option<Sample>> = ts
        .par_iter()
        .map(|&t| eval_sample(f, seg.point(t)))
        .collect::<Result<_>>()?;
    if vals.iter().any(|v| v.is_none()) {
        return Ok(None);
    }
    let vals: Vec<Sample> = vals.into_iter().flatten().collect();
    let parts: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| refine_phase(f, seg, ts[i], vals[i], ts[i + 1], vals[i + 1], depth))
        .collect::<Result<_>>()?;
    if parts.iter().any(|p| p.is_none()) {
        return Ok(None);
    }
    Ok(Some(parts.into_iter().flatten().sum()))
}

fn winding_once<F: AnalyticFunction + ?Sized>(f: &F, contour: &Contour, opts: &ZeroFindOptions) -> Result<Winding> {
    let total_len: f64 = contour.segments.iter().map(Segment::length).sum();
    let mut last_err = 0.0;
    for pass in 0..3u32 {
        let mut total = 0.0;
        for seg in &contour.segments {
            let share = seg.length() / total_len.max(f64::MIN_POSITIVE);
            let samples = ((4 * opts.base_samples) as f64 * share).ceil() as usize * (1 << (2 * pass));
            match segment_phase(f, seg, samples.max(opts.base_samples / 2), opts.max_refine_depth)? {
                Some(d) => total += d,
                None => return Ok(Winding::BoundaryHit),
            }
        }
        let w = total / TAU;
        last_err = (w - w.round()).abs();
        if last_err < 0.05 {
            return Ok(Winding::Count(w.round() as i64));
        }
    }
    Err(Error::NoConvergence(format!(
        "winding number not integral (off by {last_err:.3})"
    )))
}

/// Winding number of `f` along a closed contour.
pub fn winding_number<F: AnalyticFunction + ?Sized>(f: &F, contour: &Contour, opts: &ZeroFindOptions) -> Result<i64> {
    match winding_once(f, contour, opts)? {
        Winding::Count(w) => Ok(w),
        Winding::BoundaryHit => Err(Error::BoundaryZero { attempts: 1 }),
    }
}

fn rng_for(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ id.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Counts zeros in `rect`, dilating it by a small seeded jitter when a zero
/// sits on the boundary. Returns the count and the rectangle actually used.
pub fn count_zeros_rect_jittered<F: AnalyticFunction + ?Sized>(
    f: &F,
    rect: &Rect,
    opts: &ZeroFindOptions,
) -> Result<(usize, Rect)> {
    let mut rng = rng_for(opts.seed, 0);
    let size = rect.width().min(rect.height());
    let mut current = *rect;
    for _ in 0..=opts.jitter_attempts {
        match winding_once(f, &current.contour(), opts)? {
            Winding::Count(w) if w >= 0 => return Ok((w as usize, current)),
            Winding::Count(w) => {
                return Err(Error::NoConvergence(format!("negative winding {w} for an entire function")))
            }
            Winding::BoundaryHit => {
                current = rect.dilate(size * rng.gen_range(1e-4..1e-3));
            }
        }
    }
    Err(Error::BoundaryZero {
        attempts: opts.jitter_attempts,
    })
}

/// Number of zeros in `rect`, counted with multiplicity.
pub fn count_zeros_rect<F: AnalyticFunction + ?Sized>(f: &F, rect: &Rect, opts: &ZeroFindOptions) -> Result<usize> {
    Rect::new(rect.re0, rect.re1, rect.im0, rect.im1)?;
    Ok(count_zeros_rect_jittered(f, rect, opts)?.0)
}

fn count_cell<F: AnalyticFunction + ?Sized>(f: &F, cell: &Rect, opts: &ZeroFindOptions) -> Result<Option<usize>> {
    match winding_once(f, &cell.contour(), opts)? {
        Winding::Count(w) if w >= 0 => Ok(Some(w as usize)),
        Winding::Count(w) => Err(Error::NoConvergence(format!("negative winding {w}"))),
        Winding::BoundaryHit => Ok(None),
    }
}

/// Derivative by the four-point Cauchy formula on a circle of radius `h`.
pub fn cauchy_derivative<F: AnalyticFunction + ?Sized>(f: &F, z: Complex64, h: f64) -> Result<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut w = Complex64::new(1.0, 0.0);
    for _ in 0..4 {
        acc += f.eval(z + h * w)? / w;
        w *= i;
    }
    Ok(acc / (4.0 * h))
}

/// Newton's method with backtracking from `seed`. Returns the zero and
/// `|f|` there.
pub fn refine_zero<F: AnalyticFunction + ?Sized>(f: &F, seed: Complex64, tol: f64) -> Result<(Complex64, f64)> {
    refine_zero_scaled(f, seed, tol, 1e-3)
}

/// As [`refine_zero`] with derivative radius `h`.
pub fn refine_zero_scaled<F: AnalyticFunction + ?Sized>(
    f: &F,
    seed: Complex64,
    tol: f64,
    h: f64,
) -> Result<(Complex64, f64)> {
    let mut z = seed;
    let mut fz = f.eval(z)?;
    for _ in 0..80 {
        if fz.norm() == 0.0 {
            return Ok((z, 0.0));
        }
        let hz = h.min(0.5 * (1.0 + z.norm()));
        let d = cauchy_derivative(f, z, hz)?;
        if d.norm() == 0.0 || !d.re.is_finite() {
            return Err(Error::NoConvergence(format!("vanishing derivative at {z}")));
        }
        let step = fz / d;
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let cand = z - step * lambda;
            let fc = f.eval(cand)?;
            if fc.norm() < fz.norm() {
                accepted = Some((cand, fc));
                break;
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((cand, fc)) => {
                let moved = (cand - z).norm();
                z = cand;
                fz = fc;
                if moved < tol {
                    return Ok((z, fz.norm()));
                }
            }
            None => {
                // Residual at the evaluation noise floor.
                if step.norm() < 1e-6 * z.norm().max(1.0) {
                    return Ok((z, fz.norm()));
                }
                return Err(Error::NoConvergence(format!("Newton stalled at {z}")));
            }
        }
    }
    Err(Error::NoConvergence(format!("Newton did not converge from {seed}")))
}

/// `(1/2πi)∮ z^p f'/f dz` for `p = 0, 1, 2` on a circle, with `f'` from the
/// discrete Fourier series of the samples.
pub fn circle_moments<F: AnalyticFunction + ?Sized>(
    f: &F,
    center: Complex64,
    radius: f64,
    points: usize,
) -> Result<[Complex64; 3]> {
    let n = points.max(8);
    let zs: Vec<Complex64> = (0..n)
        .map(|j| center + Complex64::from_polar(radius, TAU * j as f64 / n as f64))
        .collect();
    let raw: Vec<ScaledComplex> = zs.par_iter().map(|&z| f.eval_scaled(z)).collect::<Result<_>>()?;
    let ref_scale = raw.iter().map(|v| v.log_scale).fold(f64::NEG_INFINITY, f64::max);
    let mut vals: Vec<Complex64> = raw
        .iter()
        .map(|v| v.mantissa * (v.log_scale - ref_scale).exp())
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let mut coeffs = vals.clone();
    planner.plan_fft_forward(n).process(&mut coeffs);
    for (m, c) in coeffs.iter_mut().enumerate() {
        let freq = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        *c *= freq / n as f64;
    }
    // ρ e^{iθ} f'(z) = Σ n a_n e^{inθ}
    planner.plan_fft_inverse(n).process(&mut coeffs);
    let mut moments = [Complex64::new(0.0, 0.0); 3];
    for j in 0..n {
        if vals[j].norm() == 0.0 {
            return Err(Error::BoundaryZero { attempts: 1 });
        }
        let ratio = coeffs[j] / vals[j] / n as f64;
        let z = zs[j];
        moments[0] += ratio;
        moments[1] += ratio * z;
        moments[2] += ratio * z * z;
    }
    vals.clear();
    Ok(moments)
}

/// One located zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub k: Complex64,
    pub multiplicity: u32,
    /// `|f(k)|` at the reported point.
    pub residual: f64,
    /// Cell the zero was resolved in.
    pub cell: Rect,
    /// Root-mean-square distance of the cluster members from `k`, from
    /// the second moment; 0 for Newton-refined zeros.
    pub spread: f64,
}

/// A cell whose zeros could not be separated or confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnresolvedCell {
    pub cell: Rect,
    pub count: usize,
}

/// Zeros found in a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSet {
    pub rect: Rect,
    /// Rectangle whose boundary was used for the total count.
    pub contour_rect: Rect,
    pub winding: usize,
    pub zeros: Vec<Zero>,
    pub unresolved: Vec<UnresolvedCell>,
}

#[derive(Serialize)]
struct ZeroRow {
    re: f64,
    im: f64,
    multiplicity: u32,
    residual: f64,
}

impl ZeroSet {
    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity as usize).sum()
    }

    pub fn is_complete(&self) -> bool {
        self.unresolved.is_empty() && self.total_multiplicity() == self.winding
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for z in &self.zeros {
            w.serialize(ZeroRow {
                re: z.k.re,
                im: z.k.im,
                multiplicity: z.multiplicity,
                residual: z.residual,
            })?;
        }
        if self.zeros.is_empty() {
            w.write_record(["re", "im", "multiplicity", "residual"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Locator<'a, F: AnalyticFunction + ?Sized> {
    f: &'a F,
    opts: ZeroFindOptions,
    min_cell: f64,
}

#[derive(Default)]
struct Found {
    zeros: Vec<Zero>,
    unresolved: Vec<UnresolvedCell>,
}

impl Found {
    fn merge(mut self, other: Found) -> Found {
        self.zeros.extend(other.zeros);
        self.unresolved.extend(other.unresolved);
        self
    }
}

impl<F: AnalyticFunction + ?Sized> Locator<'_, F> {
    fn cell_scale(cell: &Rect) -> f64 {
        cell.width().max(cell.height())
    }

    fn process(&self, cell: Rect, count: usize, id: u64) -> Result<Found> {
        if count == 0 {
            return Ok(Found::default());
        }
        let tol = self.opts.target_tol;
        if count == 1 {
            let h = (0.1 * cell.half_diagonal()).min(1e-3);
            if let Ok((k, res)) = refine_zero_scaled(self.f, cell.center(), tol, h) {
                if cell.contains(k, 10.0 * tol) {
                    return Ok(Found {
                        zeros: vec![Zero {
                            k,
                            multiplicity: 1,
                            residual: res,
                            cell,
                            spread: 0.0,
                        }],
                        unresolved: Vec::new(),
                    });
                }
            }
            if let Some(z) = self.try_circle(&cell, 1)? {
                return Ok(Found {
                    zeros: vec![z],
                    unresolved: Vec::new(),
                });
            }
        } else if count as u32 <= self.opts.multiplicity_cap {
            if let Some(z) = self.try_circle(&cell, count)? {
                return Ok(Found {
                    zeros: vec![z],
                    unresolved: Vec::new(),
                });
            }
        }
        if Self::cell_scale(&cell) < self.min_cell {
            return Ok(Found {
                zeros: Vec::new(),
                unresolved: vec![UnresolvedCell { cell, count }],
            });
        }
        let children = self.split(&cell, count, id)?;
        let results: Vec<Result<Found>> = children
            .into_par_iter()
            .enumerate()
            .map(|(q, (child, c))| self.process(child, c, id.wrapping_mul(4).wrapping_add(q as u64 + 1)))
            .collect();
        let mut acc = Found::default();
        for r in results {
            acc = acc.merge(r?);
        }
        Ok(acc)
    }

    fn split(&self, cell: &Rect, count: usize, id: u64) -> Result<Vec<(Rect, usize)>> {
        let mut rng = rng_for(self.opts.seed, id.wrapping_add(0x5151));
        for _ in 0..=self.opts.jitter_attempts {
            let fx = 0.5 + rng.gen_range(-0.05..0.05);
            let fy = 0.5 + rng.gen_range(-0.05..0.05);
            let kids = cell.split(fx, fy);
            let counts: Vec<Option<usize>> = kids
                .par_iter()
                .map(|k| count_cell(self.f, k, &self.opts))
                .collect::<Result<_>>()?;
            if counts.iter().any(|c| c.is_none()) {
                continue;
            }
            let counts: Vec<usize> = counts.into_iter().flatten().collect();
            if counts.iter().sum::<usize>() == count {
                return Ok(kids.into_iter().zip(counts).collect());
            }
        }
        Err(Error::BoundaryZero {
            attempts: self.opts.jitter_attempts,
        })
    }

    /// Recomputes the cluster centroid on the confirmed circle, recentred at
    /// each step, so that the quadrature no longer feels the zeros outside
    /// the cell. The radius is kept: on smaller circles a multiple zero
    /// drives `|f|` down to its evaluation noise. Stops when the centroid
    /// settles or the moment count stops matching.
    fn recenter(&self, mut c: Complex64, radius: f64, count: usize, mut spread: f64) -> (Complex64, f64) {
        let m = count as f64;
        for _ in 0..8 {
            let Ok(mom) = circle_moments(self.f, c, radius, self.opts.circle_points) else { break };
            if (mom[0].re - m).abs() > 0.05 || mom[0].im.abs() > 0.05 {
                break;
            }
            let next = mom[1] / m;
            if (next - c).norm() > radius {
                break;
            }
            let step = (next - c).norm();
            c = next;
            spread = (mom[2] / m - c * c).norm().sqrt();
            if step <= self.opts.target_tol * c.norm().max(1.0) {
                break;
            }
        }
        (c, spread)
    }

    /// Centroid of the zeros in the circumscribed circle and confirmation of
    /// their multiplicity on circles of radius ρ/4, ρ/16, ρ/64.
    fn try_circle(&self, cell: &Rect, count: usize) -> Result<Option<Zero>> {
        let rho = cell.half_diagonal() * 1.02;
        let center = cell.center();
        let circle = Contour::circle(center, rho);
        match winding_once(self.f, &circle, &self.opts)? {
            Winding::Count(w) if w == count as i64 => {}
            _ => return Ok(None),
        }
        let m = count as f64;
        let moments = match circle_moments(self.f, center, rho, self.opts.circle_points) {
            Ok(v) => v,
            Err(Error::BoundaryZero { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        if (moments[0].re - m).abs() > 0.05 || moments[0].im.abs() > 0.05 {
            return Ok(None);
        }
        let c = moments[1] / m;
        let var = moments[2] / m - c * c;
        let spread = var.norm().sqrt();
        if !cell.contains(c, 10.0 * self.opts.target_tol) {
            return Ok(None);
        }
        if count == 1 {
            let (k, res) = match refine_zero_scaled(self.f, c, self.opts.target_tol, (0.1 * rho).min(1e-3)) {
                Ok(v) => v,
                Err(_) => return Ok(None),
            };
            if !cell.contains(k, 10.0 * self.opts.target_tol) {
                return Ok(None);
            }
            return Ok(Some(Zero {
                k,
                multiplicity: 1,
                residual: res,
                cell: *cell,
                spread: 0.0,
            }));
        }
        let mut radius = rho;
        for _ in 0..3 {
            radius /= 4.0;
            match winding_once(self.f, &Contour::circle(c, radius), &self.opts)? {
                Winding::Count(w) if w == count as i64 => {}
                _ => return Ok(None),
            }
        }
        let (c, spread) = self.recenter(c, radius, count, spread);
        let residual = self.f.eval(c).map(|v| v.norm()).unwrap_or(f64::NAN);
        Ok(Some(Zero {
            k: c,
            multiplicity: count as u32,
            residual,
            cell: *cell,
            spread,
        }))
    }
}

fn dedup(mut zeros: Vec<Zero>, radius: f64) -> Vec<Zero> {
    zeros.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    let mut out: Vec<Zero> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if let Some(prev) = out.iter_mut().find(|p| (p.k - z.k).norm() <= radius) {
            prev.multiplicity += z.multiplicity;
        } else {
            out.push(z);
        }
    }
    out
}

/// All zeros in `rect`, with multiplicities.
pub fn locate_zeros<F: AnalyticFunction + ?Sized>(f: &F, rect: &Rect, opts: &ZeroFindOptions) -> Result<ZeroSet> {
    Rect::new(rect.re0, rect.re1, rect.im0, rect.im1)?;
    let (winding, contour_rect) = count_zeros_rect_jittered(f, rect, opts)?;
    let locator = Locator {
        f,
        opts: *opts,
        min_cell: opts.min_cell_fraction * rect.width().max(rect.height()),
    };
    let found = locator.process(contour_rect, winding, 1)?;
    let mut zeros = dedup(found.zeros, 10.0 * opts.target_tol);
    zeros.retain(|z| contour_rect.contains(z.k, 10.0 * opts.target_tol));
    Ok(ZeroSet {
        rect: *rect,
        contour_rect,
        winding,
        zeros,
        unresolved: found.unresolved,
    })
}

/// Pairs each zero with its conjugate partner; returns the largest
/// mismatch, or `None` if some zero has no partner within `tol`.
pub fn conjugate_mismatch(zeros: &[Zero], tol: f64) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for z in zeros {
        let best = zeros
            .iter()
            .filter(|w| w.multiplicity == z.multiplicity)
            .map(|w| (w.k - z.k.conj()).norm())
            .fold(f64::INFINITY, f64::min);
        if best > tol {
            return None;
        }
        worst = worst.max(best);
    }
    Some(worst)
}

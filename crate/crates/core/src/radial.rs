//! Radial solutions of `y'' + (k² n(r) − l(l+1)/r²) y = 0`.
//!
//! Three constructions are provided:
//!
//! * the regular solution integrated outward from a small radius with a
//!   two-term Frobenius start ([`solve_regular_from_origin`]);
//! * the Liouville-transformed equation `z'' + (k² − l(l+1)/ξ² − q) z = 0`
//!   integrated from the cavity boundary `ξ = R` in either direction
//!   ([`solve_from_interface`]);
//! * a perturbative form `y = r j_l(kr) + δ`, where `δ` solves the radial
//!   equation forced by `−k²(n − 1) r j_l(kr)` and vanishes on one side of
//!   the support ([`solve_scattered`]). It is exact (zero) for `n ≡ 1`.
//!
//! Values that can grow like `e^{|Im k| r}` are stored with a log scale.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate, OdeOptions, State};
use crate::profile::{LiouvilleMap, RadialProfile, TransformedPotential};
use crate::quad::adaptive_simpson;
use crate::specfun::{sph_bessel_j, sph_bessel_j_and_prime_scaled, sph_bessel_j_prime};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Integrator settings shared by all radial solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Starting radius of the regular solution.
    pub origin_start: f64,
    /// Smallest `ξ` reached by inward interface solves and envelopes.
    pub xi_min: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            atol: 1e-11,
            rtol: 1e-9,
            origin_start: 1e-6,
            xi_min: 1e-3,
        }
    }
}

impl SolveOptions {
    pub(crate) fn ode(&self, renormalize: bool) -> OdeOptions {
        OdeOptions {
            atol: self.atol,
            rtol: self.rtol,
            renormalize,
            ..OdeOptions::default()
        }
    }

    /// Same settings with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            atol: self.atol / factor,
            rtol: self.rtol / factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    FromOrigin,
    Outward,
    Inward,
}

/// How a trace was started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    RegularOrigin,
    Interface { a: Complex64, b: Complex64 },
    /// Equal to `r j_l(kr)` on the far side of the support.
    Scattered,
    Custom { xi0: f64, z0: Complex64, dz0: Complex64 },
}

/// `z`, `dz/dξ` of a Liouville-space solve, aligned with the `r` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleData {
    pub xi: Vec<f64>,
    pub z: Vec<Complex64>,
    pub dz: Vec<Complex64>,
}

/// A radial solution on a grid. The value at index `i` is
/// `y[i]·e^{log_scale[i]}`, likewise for `dy` (derivative in `r`) and,
/// when present, the Liouville data.
#[derive(Debug, Clone)]
pub struct SolutionTrace {
    pub l: u32,
    pub k: Complex64,
    pub direction: Direction,
    pub ic: InitialData,
    pub r: Vec<f64>,
    pub y: Vec<Complex64>,
    pub dy: Vec<Complex64>,
    pub log_scale: Vec<f64>,
    pub liouville: Option<LiouvilleData>,
}

impl SolutionTrace {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Grid index of radius `r`, matched to 1e-12 relative.
    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.r
            .iter()
            .position(|&x| (x - r).abs() <= 1e-12 * r.abs().max(1.0))
    }

    /// `(y, dy)` at index `i`, unscaled.
    pub fn value(&self, i: usize) -> (Complex64, Complex64) {
        let s = self.log_scale[i].exp();
        (self.y[i] * s, self.dy[i] * s)
    }

    /// `(y, dy)` at radius `r` if it is a grid point.
    pub fn value_at(&self, r: f64) -> Option<(Complex64, Complex64)> {
        self.index_of(r).map(|i| self.value(i))
    }

    pub fn ln_abs_y(&self, i: usize) -> f64 {
        self.y[i].norm().ln() + self.log_scale[i]
    }

    /// `(z, dz)` at index `i`, unscaled.
    pub fn z_value(&self, i: usize) -> Option<(Complex64, Complex64)> {
        let d = self.liouville.as_ref()?;
        let s = self.log_scale[i].exp();
        Some((d.z[i] * s, d.dz[i] * s))
    }
}

/// `sin(kx)/k`, continuous through `k = 0`.
pub fn sin_over_k(k: Complex64, x: f64) -> Complex64 {
    let kx = k * x;
    if kx.norm() < 1e-4 {
        let w = kx * kx;
        x * (1.0 - w / 6.0 + w * w / 120.0)
    } else {
        kx.sin() / k
    }
}

fn centrifugal(l: u32) -> f64 {
    (l * (l + 1)) as f64
}

fn profile_stops(profile: &RadialProfile, from: f64, to: f64, extra: &[f64]) -> Vec<f64> {
    let (lo, hi) = (from.min(to), from.max(to));
    let mut stops: Vec<f64> = profile
        .breakpoints()
        .iter()
        .chain(extra)
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    stops.push(to);
    if to > from {
        stops.sort_by(f64::total_cmp);
    } else {
        stops.sort_by(|a, b| b.total_cmp(a));
    }
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    stops
}

/// `((2l+1)!!)` as a logarithm.
fn ln_double_factorial_odd(l: u32) -> f64 {
    (1..=l).map(|j| ((2 * j + 1) as f64).ln()).sum()
}

/// Regular solution with `y/r → j_l(kr)` as `r → 0`, integrated to `r_max`.
pub fn solve_regular_from_origin(
    profile: &RadialProfile,
    l: u32,
    k: Complex64,
    r_max: f64,
    opts: &SolveOptions,
) -> Result<SolutionTrace> {
    solve_regular_from_origin_at(profile, l, k, &[r_max], opts)
}

/// As [`solve_regular_from_origin`], guaranteeing grid points at `radii`;
/// integration ends at the largest of them.
pub fn solve_regular_from_origin_at(
    profile: &RadialProfile,
    l: u32,
    k: Complex64,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<SolutionTrace> {
    let r0 = opts.origin_start;
    let r_max = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(r_max > r0) {
        return Err(Error::OutOfRange {
            value: r_max,
            lo: r0,
            hi: f64::INFINITY,
        });
    }
    if profile.eval_n(r0) != 1.0 {
        return Err(Error::profile("pieces", "index must equal 1 near the origin"));
    }
    let ll = centrifugal(l);
    let lf = l as f64;

    // y = c r^{l+1} (1 − k² r² / (2(2l+3))) with c = k^l/(2l+1)!!, carried as
    // phase × exp(log magnitude).
    let eps = k * k * r0 * r0 / (2.0 * (2.0 * lf + 3.0));
    let (phase, ln_mag) = if k == ZERO && l > 0 {
        (ZERO, 0.0)
    } else {
        let phase = if l == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, lf * k.arg())
        };
        let ln_c = if l == 0 { 0.0 } else { lf * k.norm().ln() } - ln_double_factorial_odd(l);
        (phase, ln_c + (lf + 1.0) * r0.ln())
    };
    let y0 = phase * (1.0 - eps);
    let dy0 = phase * ((lf + 1.0) - (lf + 3.0) * eps) / r0;

    let k2 = k * k;
    let rhs = |r: f64, s: &State| -> State {
        let n = profile.eval_n(r);
        [s[1], -(k2 * n - ll / (r * r)) * s[0]]
    };
    let stops = profile_stops(profile, r0, r_max, radii);
    let out = integrate(rhs, r0, [y0, dy0], &stops, &opts.ode(true))?;
    Ok(SolutionTrace {
        l,
        k,
        direction: Direction::FromOrigin,
        ic: InitialData::RegularOrigin,
        r: out.t,
        y: out.y.iter().map(|s| s[0]).collect(),
        dy: out.y.iter().map(|s| s[1]).collect(),
        log_scale: out.log_scale.iter().map(|s| s + ln_mag).collect(),
        liouville: None,
    })
}

/// Matching data at the cavity boundary: `a = j_l(Rk) + Rk j_l'(Rk)`,
/// `b = −R j_l(Rk)`, so that `z(R) = −b = R j_l(Rk)` and `z'(R) = a`.
pub fn interface_ic_from_matching(l: u32, k: Complex64, cavity_radius: f64) -> (Complex64, Complex64) {
    let z = k * cavity_radius;
    let j = sph_bessel_j(l, z);
    let dj = sph_bessel_j_prime(l, z);
    (j + z * dj, -cavity_radius * j)
}

/// Liouville-space solve from `ξ = R` with `z(R) = −b`, `z'(R) = a`.
/// Outward solves end at `ξ(R₀)`, inward ones at `opts.xi_min`.
pub fn solve_from_interface(
    pot: &TransformedPotential,
    l: u32,
    k: Complex64,
    a: Complex64,
    b: Complex64,
    direction: Direction,
    opts: &SolveOptions,
) -> Result<SolutionTrace> {
    let map = pot.map();
    let r_cav = map.profile().cavity_radius();
    let xi_end = match direction {
        Direction::Outward => map.xi_outer(),
        Direction::Inward => opts.xi_min.min(r_cav),
        Direction::FromOrigin => {
            return Err(Error::job("direction", "interface solves run inward or outward"))
        }
    };
    let mut trace = integrate_transformed(pot, l, k, r_cav, -b, a, xi_end, &[], opts)?;
    trace.direction = direction;
    trace.ic = InitialData::Interface { a, b };
    Ok(trace)
}

/// Integrates the Liouville-space equation from `xi0` to `xi_end`,
/// guaranteeing grid points at `extra` (given in `ξ`).
#[allow(clippy::too_many_arguments)]
pub fn integrate_transformed(
    pot: &TransformedPotential,
    l: u32,
    k: Complex64,
    xi0: f64,
    z0: Complex64,
    dz0: Complex64,
    xi_end: f64,
    extra: &[f64],
    opts: &SolveOptions,
) -> Result<SolutionTrace> {
    let map = pot.map();
    let profile = map.profile();
    let ll = centrifugal(l);
    let k2 = k * k;
    let rhs = |xi: f64, s: &State| -> State {
        // l(l+1)/ξ² + q = l(l+1)/(r² n) + curvature terms.
        let v = match map.invert_xi(xi) {
            Ok(r) => {
                let t = pot.terms_at(r, xi, 0);
                let n = profile.eval_n(r);
                t.curvature + t.gradient + ll / (r * r * n)
            }
            Err(_) => f64::NAN,
        };
        [s[1], (v - k2) * s[0]]
    };
    let xi_breaks = pot.xi_breakpoints()?;
    let (lo, hi) = (xi0.min(xi_end), xi0.max(xi_end));
    let mut stops: Vec<f64> = xi_breaks
        .iter()
        .chain(extra)
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    stops.push(xi_end);
    if xi_end > xi0 {
        stops.sort_by(f64::total_cmp);
    } else {
        stops.sort_by(|a, b| b.total_cmp(a));
    }
    stops.dedup();
    let out = integrate(rhs, xi0, [z0, dz0], &stops, &opts.ode(true))?;

    let mut r = Vec::with_capacity(out.t.len());
    let mut y = Vec::with_capacity(out.t.len());
    let mut dy = Vec::with_capacity(out.t.len());
    for (&xi, s) in out.t.iter().zip(&out.y) {
        let ri = map.invert_xi(xi)?;
        let d = profile.derivs(ri);
        let q4 = d.n.powf(-0.25);
        r.push(ri);
        y.push(s[0] * q4);
        dy.push(q4 * (s[1] * d.n.sqrt() - s[0] * d.dn / (4.0 * d.n)));
    }
    Ok(SolutionTrace {
        l,
        k,
        direction: if xi_end >= xi0 {
            Direction::Outward
        } else {
            Direction::Inward
        },
        ic: InitialData::Custom { xi0, z0, dz0 },
        r,
        y,
        dy,
        log_scale: out.log_scale,
        liouville: Some(LiouvilleData {
            xi: out.t,
            z: out.y.iter().map(|s| s[0]).collect(),
            dz: out.y.iter().map(|s| s[1]).collect(),
        }),
    })
}

/// Leading-order large-`k` form of the regular solution beyond the cavity:
/// `a sin(k[ξ(r)−R])/k + R j_l(Rk) cos(k[ξ(r)−R])`.
pub fn asymptotic_y(map: &LiouvilleMap, l: u32, k: Complex64, r: f64) -> Result<Complex64> {
    let r_cav = map.profile().cavity_radius();
    let (a, b) = interface_ic_from_matching(l, k, r_cav);
    let x = map.eval_xi(r)? - r_cav;
    Ok(a * sin_over_k(k, x) - b * (k * x).cos())
}

/// Perturbation `δ = y − r j_l(kr)` on a grid, stored as
/// `w = δ·e^{−γ r}` with `γ = |Im k|`.
#[derive(Debug, Clone)]
pub struct ScatteredTrace {
    pub l: u32,
    pub k: Complex64,
    pub direction: Direction,
    pub gamma: f64,
    pub r: Vec<f64>,
    pub w: Vec<Complex64>,
    pub dw: Vec<Complex64>,
}

impl ScatteredTrace {
    pub fn index_of(&self, r: f64) -> Option<usize> {
        self.r
            .iter()
            .position(|&x| (x - r).abs() <= 1e-12 * r.abs().max(1.0))
    }

    /// `(δ, δ')·e^{−γ r}` at index `i`.
    pub fn delta_scaled(&self, i: usize) -> (Complex64, Complex64) {
        (self.w[i], self.dw[i] + self.gamma * self.w[i])
    }

    /// `(y, y')·e^{−γ r}` at index `i`, with `y = r j_l(kr) + δ`.
    pub fn total_scaled(&self, i: usize) -> (Complex64, Complex64) {
        let r = self.r[i];
        let kr = self.k * r;
        let (j, dj) = sph_bessel_j_and_prime_scaled(self.l, kr);
        let (d, dd) = self.delta_scaled(i);
        (r * j + d, j + kr * dj + dd)
    }

    /// The full solution as a [`SolutionTrace`].
    pub fn to_trace(&self) -> SolutionTrace {
        let (y, dy): (Vec<_>, Vec<_>) = (0..self.r.len()).map(|i| self.total_scaled(i)).unzip();
        SolutionTrace {
            l: self.l,
            k: self.k,
            direction: self.direction,
            ic: InitialData::Scattered,
            r: self.r.clone(),
            y,
            dy,
            log_scale: self.r.iter().map(|r| self.gamma * r).collect(),
            liouville: None,
        }
    }
}

/// Solves for `δ = y − r j_l(kr)` forced by `−k²(n−1) r j_l(kr)`.
///
/// Outward solves start with `δ = 0` at the lower support edge, which gives
/// the regular solution. Inward solves start with `δ = 0` at the upper edge,
/// which gives the solution equal to `r j_l(kr)` outside the support.
/// The grid contains every radius in `radii`; the solve ends at the one
/// farthest from its start.
pub fn solve_scattered(
    profile: &RadialProfile,
    l: u32,
    k: Complex64,
    direction: Direction,
    radii: &[f64],
    opts: &SolveOptions,
) -> Result<ScatteredTrace> {
    let gamma = k.im.abs();
    let ll = centrifugal(l);
    let k2 = k * k;
    let (start, end) = match direction {
        Direction::Outward => (
            profile.support_lo(),
            radii.iter().copied().fold(profile.support_lo(), f64::max),
        ),
        Direction::Inward => (
            profile.support_hi(),
            radii.iter().copied().fold(profile.support_hi(), f64::min),
        ),
        Direction::FromOrigin => {
            return Err(Error::job("direction", "scattered solves run inward or outward"))
        }
    };
    if !(end > 0.0) {
        return Err(Error::OutOfRange {
            value: end,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let rhs = |r: f64, s: &State| -> State {
        let n = profile.eval_n(r);
        let forcing = if n == 1.0 {
            ZERO
        } else {
            let (j, _) = sph_bessel_j_and_prime_scaled(l, k * r);
            -k2 * (n - 1.0) * r * j
        };
        let a = gamma * gamma + k2 * n - ll / (r * r);
        [s[1], -2.0 * gamma * s[1] - a * s[0] + forcing]
    };
    let mut stops = profile_stops(profile, start, end, radii);
    if stops.is_empty() {
        stops.push(end);
    }
    // δ starts from zero, so errors are measured against the size of the
    // free solution over the support.
    let (s_lo, s_hi) = (profile.support_lo(), profile.support_hi());
    let mut u_scale: f64 = 0.0;
    for j in 0..=8 {
        let r = s_lo + (s_hi - s_lo) * j as f64 / 8.0;
        if r > 0.0 {
            let (jl, djl) = sph_bessel_j_and_prime_scaled(l, k * r);
            u_scale = u_scale.max((r * jl).norm()).max((jl + k * r * djl).norm());
        }
    }
    let ode_opts = OdeOptions {
        abs_floor: opts.atol * u_scale,
        ..opts.ode(false)
    };
    let out = integrate(rhs, start, [ZERO, ZERO], &stops, &ode_opts)?;
    Ok(ScatteredTrace {
        l,
        k,
        direction,
        gamma,
        r: out.t,
        w: out.y.iter().map(|s| s[0]).collect(),
        dw: out.y.iter().map(|s| s[1]).collect(),
    })
}

/// Side of the cavity boundary an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `ξ ≤ R`, inward solves.
    Interior,
    /// `ξ ≥ R`, outward solves.
    Exterior,
}

/// `∫ |q|` over `[ξ(r_a), ξ(r_b)]` written as an `r` integral, split at
/// profile breakpoints.
fn q_l1_between(pot: &TransformedPotential, l: u32, r_a: f64, r_b: f64, tol: f64) -> Result<f64> {
    let map = pot.map();
    let profile = map.profile();
    let (lo, hi) = (r_a.min(r_b), r_a.max(r_b));
    let mut cuts: Vec<f64> = profile
        .breakpoints()
        .iter()
        .copied()
        .filter(|&x| x > lo && x < hi)
        .collect();
    cuts.insert(0, lo);
    cuts.push(hi);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        if l == 0 && profile.eval_n(mid) == 1.0 && profile.derivs(mid).d2n == 0.0 {
            let inside = profile.derivs(a + 0.25 * (b - a)).n != 1.0 || profile.derivs(a + 0.75 * (b - a)).n != 1.0;
            if !inside {
                continue;
            }
        }
        let f = |r: f64| -> f64 {
            let xi = if l == 0 { r } else { map.eval_xi(r).unwrap_or(f64::NAN) };
            let n = profile.eval_n(r);
            pot.terms_at(r, xi, l).total().abs() * n.sqrt()
        };
        total += adaptive_simpson(f, a, b, tol)?;
    }
    Ok(total)
}

/// `K = exp{∫ |l(l+1)|/t² + |q(t)| dt}` between `xi_a` and `xi_b`.
/// Infinite when the interval reaches below `xi_min` for `l ≥ 1`.
pub fn error_envelope(pot: &TransformedPotential, l: u32, xi_a: f64, xi_b: f64, xi_min: f64) -> Result<f64> {
    let (lo, hi) = (xi_a.min(xi_b), xi_a.max(xi_b));
    if !(lo > 0.0) || hi > pot.map().xi_outer() * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::OutOfRange {
            value: lo,
            lo: 0.0,
            hi: pot.map().xi_outer(),
        });
    }
    let ll = centrifugal(l);
    if ll > 0.0 && lo < xi_min {
        return Ok(f64::INFINITY);
    }
    let cent = ll * (1.0 / lo - 1.0 / hi);
    let map = pot.map();
    let q = q_l1_between(pot, l, map.invert_xi(lo)?, map.invert_xi(hi)?, 1e-10)?;
    Ok((cent + q).exp())
}

/// Envelope values `K(ξ)` (or `K̃(ξ)`) along a grid, accumulated from `ξ = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub l: u32,
    pub side: Side,
    pub xi: Vec<f64>,
    pub value: Vec<f64>,
}

impl ErrorEnvelope {
    pub fn along(pot: &TransformedPotential, l: u32, side: Side, xi: &[f64], xi_min: f64) -> Result<Self> {
        let map = pot.map();
        let r_cav = map.profile().cavity_radius();
        let ll = centrifugal(l);
        let mut order: Vec<usize> = (0..xi.len()).collect();
        order.sort_by(|&i, &j| (xi[i] - r_cav).abs().total_cmp(&(xi[j] - r_cav).abs()));
        let mut value = vec![f64::INFINITY; xi.len()];
        let mut acc_q = 0.0;
        let mut last_r = r_cav;
        for i in order {
            let x = xi[i];
            let on_side = match side {
                Side::Interior => x <= r_cav,
                Side::Exterior => x >= r_cav,
            };
            if !on_side {
                return Err(Error::OutOfRange {
                    value: x,
                    lo: if side == Side::Exterior { r_cav } else { 0.0 },
                    hi: if side == Side::Exterior { f64::INFINITY } else { r_cav },
                });
            }
            if ll > 0.0 && x < xi_min {
                continue;
            }
            let r = map.invert_xi(x)?;
            acc_q += q_l1_between(pot, l, last_r, r, 1e-11)?;
            last_r = r;
            let cent = if x == r_cav { 0.0 } else { ll * (1.0 / x.min(r_cav) - 1.0 / x.max(r_cav)) };
            value[i] = (cent + acc_q).exp();
        }
        Ok(Self {
            l,
            side,
            xi: xi.to_vec(),
            value,
        })
    }
}

/// Worst ratio of the remainder in the two-way estimate to its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub max_ratio: f64,
    pub worst_xi: f64,
    pub samples: usize,
    pub passed: bool,
}

/// Compares a Liouville-space trace started from `(a, b)` with
/// `|z + b cos k(R−ξ) + a sin k(R−ξ)/k| ≤ K(ξ)/|k|·e^{|Im k|(R−ξ)}` (interior)
/// or `|z + b cos k(ξ−R) − a sin k(ξ−R)/k| ≤ K̃(ξ)/|k|·e^{|Im k|(ξ−R)}`
/// (exterior). The bound is meaningful for `|k| ≥ 1`.
pub fn check_estimate(
    trace: &SolutionTrace,
    envelope: &ErrorEnvelope,
    r_cav: f64,
    a: Complex64,
    b: Complex64,
    tol: f64,
) -> Result<EstimateReport> {
    let data = trace
        .liouville
        .as_ref()
        .ok_or_else(|| Error::job("trace", "estimate needs a Liouville-space trace"))?;
    if data.xi != envelope.xi {
        return Err(Error::job("envelope", "envelope grid differs from trace grid"));
    }
    let k = trace.k;
    let mut worst = (0.0f64, r_cav);
    let mut samples = 0;
    for i in 0..data.xi.len() {
        let bound_k = envelope.value[i];
        if !bound_k.is_finite() {
            continue;
        }
        let xi = data.xi[i];
        let (z, _) = trace.z_value(i).expect("liouville data present");
        let lhs = match envelope.side {
            Side::Interior => {
                let x = r_cav - xi;
                z + b * (k * x).cos() + a * sin_over_k(k, x)
            }
            Side::Exterior => {
                let x = xi - r_cav;
                z + b * (k * x).cos() - a * sin_over_k(k, x)
            }
        }
        .norm();
        let rhs = bound_k / k.norm() * (k.im.abs() * (xi - r_cav).abs()).exp();
        let ratio = lhs / rhs;
        samples += 1;
        if ratio > worst.0 {
            worst = (ratio, xi);
        }
    }
    Ok(EstimateReport {
        max_ratio: worst.0,
        worst_xi: worst.1,
        samples,
        passed: worst.0 <= 1.0 + tol,
    })
}

//! Radial refractive index `n(r)` along a fixed direction, the Liouville
//! change of variable `ξ(r) = ∫₀ʳ √n`, and the transformed potential `q(ξ)`.
//!
//! A profile is built from polynomial pieces given in the local variable
//! `t = r - from`. Outside every piece the index is the background value 1.
//! With a positive `blend_width` each change of formula at a boundary `x` is
//! replaced on `[x, x + blend_width]` by a quintic smoothstep blend, which is
//! C² by construction. With `blend_width = 0` the profile may have jumps; such
//! "sharp" profiles are accepted (they serve as closed-form oracles) but have
//! no Liouville potential.
//!
//! Derivatives of `n` are taken with respect to `r` and evaluated at `r(ξ)`
//! when `q(ξ)` is formed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;

/// Tolerance for the C² continuity check at breakpoints.
const C2_REL_TOL: f64 = 1e-9;
/// Default absolute tolerance for the Liouville integral.
pub const XI_TOL: f64 = 1e-10;
const PANELS_PER_SEGMENT: usize = 16;
const POSITIVITY_SAMPLES: usize = 64;

/// One polynomial piece of the JSON profile document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceConfig {
    pub from: f64,
    pub to: f64,
    /// Ascending coefficients in `t = r - from`; at most 6 (degree 5).
    pub coeffs: Vec<f64>,
}

/// JSON document describing a radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileConfig {
    /// Cavity radius `R` along the direction.
    #[serde(rename = "R")]
    pub cavity_radius: f64,
    /// Matching radius `R₀`.
    #[serde(rename = "R0")]
    pub outer_radius: f64,
    #[serde(default)]
    pub pieces: Vec<PieceConfig>,
    #[serde(default)]
    pub blend_width: f64,
}

/// `n` and its first two `r`-derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexDerivs {
    pub n: f64,
    pub dn: f64,
    pub d2n: f64,
}

impl IndexDerivs {
    const BACKGROUND: IndexDerivs = IndexDerivs {
        n: 1.0,
        dn: 0.0,
        d2n: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq)]
enum Formula {
    Background,
    Poly { origin: f64, coeffs: Vec<f64> },
}

impl Formula {
    fn derivs(&self, r: f64) -> IndexDerivs {
        match self {
            Formula::Background => IndexDerivs::BACKGROUND,
            Formula::Poly { origin, coeffs } => {
                let t = r - origin;
                let (mut p, mut dp, mut d2p) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    d2p = d2p * t + 2.0 * dp;
                    dp = dp * t + p;
                    p = p * t + c;
                }
                IndexDerivs {
                    n: p,
                    dn: dp,
                    d2n: d2p,
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
enum SegmentKind {
    Plain(Formula),
    Blend {
        left: Formula,
        right: Formula,
        start: f64,
        width: f64,
    },
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    hi: f64,
    kind: SegmentKind,
}

/// Quintic smoothstep `s(t) = 10t³ − 15t⁴ + 6t⁵` and its first two derivatives.
pub fn smoothstep5(t: f64) -> (f64, f64, f64) {
    let t = t.clamp(0.0, 1.0);
    let t2 = t * t;
    let s = t2 * t * (10.0 + t * (-15.0 + 6.0 * t));
    let ds = 30.0 * t2 * (1.0 - t) * (1.0 - t);
    let d2s = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (s, ds, d2s)
}

impl Segment {
    fn derivs(&self, r: f64) -> IndexDerivs {
        match &self.kind {
            SegmentKind::Plain(f) => f.derivs(r),
            SegmentKind::Blend {
                left,
                right,
                start,
                width,
            } => {
                let a = left.derivs(r);
                let b = right.derivs(r);
                let (s, ds, d2s) = smoothstep5((r - start) / width);
                let (ds, d2s) = (ds / width, d2s / (width * width));
                let (d0, d1, d2) = (b.n - a.n, b.dn - a.dn, b.d2n - a.d2n);
                IndexDerivs {
                    n: a.n + s * d0,
                    dn: a.dn + ds * d0 + s * d1,
                    d2n: a.d2n + d2s * d0 + 2.0 * ds * d1 + s * d2,
                }
            }
        }
    }
}

/// Refractive index `n(r)` along one direction.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    config: ProfileConfig,
    segments: Vec<Segment>,
    breakpoints: Vec<f64>,
    support_lo: f64,
    support_hi: f64,
    smooth: bool,
}

impl RadialProfile {
    pub fn new(config: ProfileConfig) -> Result<Self> {
        let r_cav = config.cavity_radius;
        let r_out = config.outer_radius;
        let w = config.blend_width;
        if !(r_cav.is_finite() && r_cav > 0.0) {
            return Err(Error::profile("R", "must be a positive finite radius"));
        }
        if !(r_out.is_finite() && r_out > r_cav) {
            return Err(Error::profile("R0", "must be finite and larger than R"));
        }
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::profile("blend_width", "must be finite and >= 0"));
        }

        let mut pieces = config.pieces.clone();
        for (i, p) in pieces.iter().enumerate() {
            if !(p.from.is_finite() && p.to.is_finite() && p.from < p.to) {
                return Err(Error::profile(
                    format!("pieces[{i}]"),
                    "requires finite from < to",
                ));
            }
            if p.coeffs.is_empty() || p.coeffs.len() > 6 {
                return Err(Error::profile(
                    format!("pieces[{i}].coeffs"),
                    "needs 1 to 6 coefficients (degree <= 5)",
                ));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::profile(
                    format!("pieces[{i}].coeffs"),
                    "coefficients must be finite",
                ));
            }
        }
        pieces.sort_by(|a, b| a.from.total_cmp(&b.from));
        for i in 1..pieces.len() {
            if pieces[i].from < pieces[i - 1].to {
                return Err(Error::profile(
                    format!("pieces[{i}]"),
                    "pieces overlap",
                ));
            }
        }

        let (segments, support_lo, support_hi) = if pieces.is_empty() {
            (Vec::new(), r_cav, r_cav)
        } else {
            let lo = pieces[0].from;
            if lo < r_cav {
                return Err(Error::profile(
                    "pieces[0].from",
                    format!("support of 1 - n starts at {lo}, inside the cavity R = {r_cav}"),
                ));
            }
            let segs = build_segments(&pieces, w)?;
            let hi = segs.last().map(|s| s.hi).unwrap_or(lo);
            if hi > r_out {
                return Err(Error::profile(
                    "R0",
                    format!("support of 1 - n extends to {hi}, beyond R0 = {r_out}"),
                ));
            }
            (segs, lo, hi)
        };

        let mut breakpoints: Vec<f64> = segments.iter().map(|s| s.lo).collect();
        if let Some(last) = segments.last() {
            breakpoints.push(last.hi);
        }

        let mut profile = Self {
            config,
            segments,
            breakpoints,
            support_lo,
            support_hi,
            smooth: true,
        };
        profile.check_positive()?;
        profile.smooth = profile.c2_defect() <= C2_REL_TOL;
        Ok(profile)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::new(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// The background profile `n ≡ 1`.
    pub fn homogeneous(cavity_radius: f64, outer_radius: f64) -> Result<Self> {
        Self::new(ProfileConfig {
            cavity_radius,
            outer_radius,
            pieces: Vec::new(),
            blend_width: 0.0,
        })
    }

    /// Constant shell `n = n0` on `[lo, hi)`, optionally blended.
    pub fn shell(
        cavity_radius: f64,
        outer_radius: f64,
        lo: f64,
        hi: f64,
        n0: f64,
        blend_width: f64,
    ) -> Result<Self> {
        Self::new(ProfileConfig {
            cavity_radius,
            outer_radius,
            pieces: vec![PieceConfig {
                from: lo,
                to: hi,
                coeffs: vec![n0],
            }],
            blend_width,
        })
    }

    pub fn config(&self) -> &ProfileConfig {
        &self.config
    }

    pub fn cavity_radius(&self) -> f64 {
        self.config.cavity_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.config.outer_radius
    }

    pub fn support_lo(&self) -> f64 {
        self.support_lo
    }

    pub fn support_hi(&self) -> f64 {
        self.support_hi
    }

    /// Radii where the formula for `n` changes, ascending.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// No perturbation at all: `n ≡ 1`.
    pub fn is_trivial(&self) -> bool {
        self.segments.is_empty()
    }

    /// True when `n` is C² at every breakpoint.
    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    fn segment_at(&self, r: f64) -> Option<&Segment> {
        if self.segments.is_empty() || r < self.support_lo || r >= self.support_hi {
            return None;
        }
        let idx = self.segments.partition_point(|s| s.lo <= r);
        self.segments.get(idx.saturating_sub(1))
    }

    /// `n(r)`; 1 outside all pieces.
    pub fn eval_n(&self, r: f64) -> f64 {
        self.derivs(r).n
    }

    /// `n`, `n'`, `n''` at `r`, right-continuous at breakpoints.
    pub fn derivs(&self, r: f64) -> IndexDerivs {
        match self.segment_at(r) {
            Some(seg) => seg.derivs(r),
            None => IndexDerivs::BACKGROUND,
        }
    }

    /// Largest relative jump of `n`, `n'`, `n''` across any breakpoint.
    pub fn c2_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.segments.len();
        for i in 0..=n {
            let left = if i == 0 {
                IndexDerivs::BACKGROUND
            } else {
                self.segments[i - 1].derivs(self.segments[i - 1].hi)
            };
            let (x, right) = if i == n {
                (self.support_hi, IndexDerivs::BACKGROUND)
            } else {
                (self.segments[i].lo, self.segments[i].derivs(self.segments[i].lo))
            };
            let _ = x;
            for (a, b) in [
                (left.n, right.n),
                (left.dn, right.dn),
                (left.d2n, right.d2n),
            ] {
                let scale = 1f64.max(a.abs()).max(b.abs());
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }

    fn check_positive(&self) -> Result<()> {
        for seg in &self.segments {
            for j in 0..=POSITIVITY_SAMPLES {
                let r = seg.lo + (seg.hi - seg.lo) * j as f64 / POSITIVITY_SAMPLES as f64;
                let v = seg.derivs(r).n;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::profile(
                        "pieces",
                        format!("n must stay positive, found n({r}) = {v}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn build_segments(pieces: &[PieceConfig], w: f64) -> Result<Vec<Segment>> {
    // Regions in order: pieces with background gaps between them.
    let mut regions: Vec<(f64, f64, Formula, String)> = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        if let Some(prev) = regions.last() {
            if p.from > prev.1 {
                regions.push((prev.1, p.from, Formula::Background, format!("gap before pieces[{i}]")));
            }
        }
        regions.push((
            p.from,
            p.to,
            Formula::Poly {
                origin: p.from,
                coeffs: p.coeffs.clone(),
            },
            format!("pieces[{i}]"),
        ));
    }

    let mut segments = Vec::new();
    if w == 0.0 {
        for (lo, hi, f, _) in regions {
            segments.push(Segment {
                lo,
                hi,
                kind: SegmentKind::Plain(f),
            });
        }
        return Ok(segments);
    }

    let mut left = Formula::Background;
    for (lo, hi, f, name) in regions {
        if hi - lo <= w {
            return Err(Error::profile(
                "blend_width",
                format!("{w} is not smaller than the length of {name}"),
            ));
        }
        segments.push(Segment {
            lo,
            hi: lo + w,
            kind: SegmentKind::Blend {
                left: left.clone(),
                right: f.clone(),
                start: lo,
                width: w,
            },
        });
        segments.push(Segment {
            lo: lo + w,
            hi,
            kind: SegmentKind::Plain(f.clone()),
        });
        left = f;
    }
    let end = segments.last().map(|s| s.hi).unwrap_or(0.0);
    segments.push(Segment {
        lo: end,
        hi: end + w,
        kind: SegmentKind::Blend {
            left,
            right: Formula::Background,
            start: end,
            width: w,
        },
    });
    Ok(segments)
}

/// The Liouville map `r ↦ ξ(r) = ∫₀ʳ √n(ρ) dρ`, cached on a panel grid.
#[derive(Debug, Clone)]
pub struct LiouvilleMap {
    profile: RadialProfile,
    nodes_r: Vec<f64>,
    nodes_xi: Vec<f64>,
    panel_tol: f64,
    tol: f64,
    offset: f64,
}

impl LiouvilleMap {
    pub fn new(profile: &RadialProfile) -> Result<Self> {
        Self::with_tolerance(profile, XI_TOL)
    }

    pub fn with_tolerance(profile: &RadialProfile, tol: f64) -> Result<Self> {
        let mut nodes_r = Vec::new();
        for seg in &profile.segments {
            for j in 0..PANELS_PER_SEGMENT {
                nodes_r.push(seg.lo + (seg.hi - seg.lo) * j as f64 / PANELS_PER_SEGMENT as f64);
            }
        }
        if let Some(last) = profile.segments.last() {
            nodes_r.push(last.hi);
        }
        let panel_tol = tol / (nodes_r.len().max(1) as f64);
        let mut nodes_xi = Vec::with_capacity(nodes_r.len());
        let mut acc = profile.support_lo;
        for (i, &r) in nodes_r.iter().enumerate() {
            if i > 0 {
                let a = nodes_r[i - 1];
                acc += adaptive_simpson(|x| profile.eval_n(x).sqrt(), a, r, panel_tol)?;
            }
            nodes_xi.push(acc);
        }
        let offset = nodes_xi.last().copied().unwrap_or(profile.support_hi) - profile.support_hi;
        Ok(Self {
            profile: profile.clone(),
            nodes_r,
            nodes_xi,
            panel_tol,
            tol,
            offset,
        })
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `ξ(r) - r` beyond the support, i.e. `∫ (√n − 1)`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Cached `(r, ξ(r))` pairs.
    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes_r.iter().copied().zip(self.nodes_xi.iter().copied())
    }

    pub fn eval_xi(&self, r: f64) -> Result<f64> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::OutOfRange {
                value: r,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let p = &self.profile;
        if p.is_trivial() || r <= p.support_lo {
            return Ok(r);
        }
        if r >= p.support_hi {
            return Ok(r + self.offset);
        }
        let i = self.nodes_r.partition_point(|&x| x <= r) - 1;
        let a = self.nodes_r[i];
        Ok(self.nodes_xi[i] + adaptive_simpson(|x| p.eval_n(x).sqrt(), a, r, self.panel_tol)?)
    }

    /// `ξ(R₀)`.
    pub fn xi_outer(&self) -> f64 {
        self.profile.outer_radius() + if self.profile.is_trivial() { 0.0 } else { self.offset }
    }

    /// Inverse map `ξ ↦ r` by bracketed Newton iteration.
    pub fn invert_xi(&self, xi: f64) -> Result<f64> {
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(Error::OutOfRange {
                value: xi,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let p = &self.profile;
        if p.is_trivial() || xi <= p.support_lo {
            return Ok(xi);
        }
        let xi_hi = p.support_hi + self.offset;
        if xi >= xi_hi {
            return Ok(xi - self.offset);
        }
        let i = (self.nodes_xi.partition_point(|&x| x <= xi) - 1).min(self.nodes_xi.len() - 2);
        let (mut lo, mut hi) = (self.nodes_r[i], self.nodes_r[i + 1]);
        let (xlo, xhi) = (self.nodes_xi[i], self.nodes_xi[i + 1]);
        let mut r = lo + (hi - lo) * (xi - xlo) / (xhi - xlo);
        for _ in 0..100 {
            let f = self.nodes_xi[i] + adaptive_simpson(|x| p.eval_n(x).sqrt(), lo.min(self.nodes_r[i]), r, self.panel_tol)? - xi;
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let step = f / p.eval_n(r).sqrt();
            let mut next = r - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() <= 1e-15 * r.max(1.0) || hi - lo <= 1e-15 * r.max(1.0) {
                return Ok(next);
            }
            r = next;
        }
        Err(Error::NoConvergence(format!("invert_xi({xi})")))
    }
}

/// Terms of the Liouville potential at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialTerms {
    /// `n'' / (4 n²)`
    pub curvature: f64,
    /// `−(5/16) n'² / n³`
    pub gradient: f64,
    /// `l(l+1)/(r² n) − l(l+1)/ξ²`
    pub centrifugal: f64,
}

impl PotentialTerms {
    pub fn total(&self) -> f64 {
        self.curvature + self.gradient + self.centrifugal
    }
}

/// Potential `q(ξ)` of the Liouville-transformed radial equation, with
/// `z = n^{1/4} y`. Only defined for C² profiles.
#[derive(Debug, Clone)]
pub struct TransformedPotential {
    map: LiouvilleMap,
}

impl TransformedPotential {
    pub fn new(profile: &RadialProfile) -> Result<Self> {
        if !profile.is_smooth() {
            return Err(Error::NotSmooth);
        }
        Ok(Self {
            map: LiouvilleMap::new(profile)?,
        })
    }

    pub fn from_map(map: LiouvilleMap) -> Result<Self> {
        if !map.profile().is_smooth() {
            return Err(Error::NotSmooth);
        }
        Ok(Self { map })
    }

    pub fn map(&self) -> &LiouvilleMap {
        &self.map
    }

    pub fn profile(&self) -> &RadialProfile {
        self.map.profile()
    }

    pub fn terms(&self, xi: f64, l: u32) -> Result<PotentialTerms> {
        if !(xi > 0.0) {
            return Err(Error::OutOfRange {
                value: xi,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        let r = self.map.invert_xi(xi)?;
        Ok(self.terms_at(r, xi, l))
    }

    /// Terms with `r` and `ξ(r)` both already known.
    pub fn terms_at(&self, r: f64, xi: f64, l: u32) -> PotentialTerms {
        let d = self.profile().derivs(r);
        let ll = (l * (l + 1)) as f64;
        let centrifugal = if ll == 0.0 || r == xi {
            0.0
        } else {
            ll * (1.0 / (r * r * d.n) - 1.0 / (xi * xi))
        };
        PotentialTerms {
            curvature: d.d2n / (4.0 * d.n * d.n),
            gradient: -5.0 / 16.0 * d.dn * d.dn / (d.n * d.n * d.n),
            centrifugal,
        }
    }

    pub fn eval_q(&self, xi: f64, l: u32) -> Result<f64> {
        Ok(self.terms(xi, l)?.total())
    }

    /// Breakpoints of the profile mapped to the `ξ` axis.
    pub fn xi_breakpoints(&self) -> Result<Vec<f64>> {
        self.profile()
            .breakpoints()
            .iter()
            .map(|&r| self.map.eval_xi(r))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blended_shell() -> RadialProfile {
        RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.1).unwrap()
    }

    #[test]
    fn constant_profile_is_background() {
        let p = RadialProfile::homogeneous(1.0, 3.0).unwrap();
        assert_eq!(p.eval_n(0.7), 1.0);
        assert!(p.is_trivial());
        assert!(p.is_smooth());
    }

    #[test]
    fn shell_values() {
        let p = blended_shell();
        assert_eq!(p.eval_n(1.5), 4.0);
        assert_eq!(p.eval_n(0.5), 1.0);
        assert_eq!(p.eval_n(2.5), 1.0);
        assert!((p.eval_n(1.05) - 2.5).abs() < 1e-14);
        assert_eq!(p.support_lo(), 1.0);
        assert!((p.support_hi() - 2.1).abs() < 1e-15);
        assert!(p.is_smooth());
    }

    #[test]
    fn sharp_shell_is_not_smooth() {
        let p = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap();
        assert!(!p.is_smooth());
        assert!(matches!(TransformedPotential::new(&p), Err(Error::NotSmooth)));
    }

    #[test]
    fn support_inside_cavity_rejected() {
        let err = RadialProfile::shell(1.2, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("pieces[0].from"), "{err}");
    }

    #[test]
    fn support_beyond_r0_rejected() {
        let err = RadialProfile::shell(1.0, 2.05, 1.0, 2.0, 4.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("R0"), "{err}");
    }

    #[test]
    fn nonpositive_index_rejected() {
        let err = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, -0.5, 0.0).unwrap_err();
        assert!(err.to_string().contains("positive"), "{err}");
    }

    #[test]
    fn too_wide_blend_rejected() {
        let err = RadialProfile::shell(1.0, 3.0, 1.0, 1.05, 4.0, 0.1).unwrap_err();
        assert!(err.to_string().contains("blend_width"), "{err}");
    }

    #[test]
    fn degree_six_rejected() {
        let cfg = ProfileConfig {
            cavity_radius: 1.0,
            outer_radius: 3.0,
            pieces: vec![PieceConfig {
                from: 1.0,
                to: 2.0,
                coeffs: vec![1.0; 7],
            }],
            blend_width: 0.0,
        };
        let err = RadialProfile::new(cfg).unwrap_err();
        assert!(err.to_string().contains("pieces[0].coeffs"), "{err}");
    }

    #[test]
    fn xi_identity_and_sharp_closed_form() {
        let p = RadialProfile::homogeneous(1.0, 3.0).unwrap();
        let m = LiouvilleMap::new(&p).unwrap();
        assert_eq!(m.eval_xi(3.0).unwrap(), 3.0);
        assert_eq!(m.invert_xi(2.5).unwrap(), 2.5);

        let s = RadialProfile::shell(1.0, 3.0, 1.0, 2.0, 4.0, 0.0).unwrap();
        let m = LiouvilleMap::new(&s).unwrap();
        assert!((m.eval_xi(2.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((m.invert_xi(3.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m.xi_outer() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn blend_is_c2() {
        let p = blended_shell();
        assert!(p.c2_defect() < 1e-12);
        let h = 1e-6;
        for &r in &[1.02, 1.05, 1.08, 2.03, 2.07] {
            let d = p.derivs(r);
            let fd = (p.eval_n(r + h) - p.eval_n(r - h)) / (2.0 * h);
            assert!((d.dn - fd).abs() < 1e-5 * (1.0 + fd.abs()), "r = {r}");
        }
    }

    #[test]
    fn q_vanishes_for_background() {
        let p = RadialProfile::homogeneous(1.0, 3.0).unwrap();
        let pot = TransformedPotential::new(&p).unwrap();
        for l in 0..4 {
            for i in 1..50 {
                let xi = 0.1 * i as f64;
                assert_eq!(pot.eval_q(xi, l).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn q_rejects_nonpositive_xi() {
        let pot = TransformedPotential::new(&blended_shell()).unwrap();
        assert!(matches!(pot.eval_q(0.0, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn config_round_trips_through_json() {
        let p = blended_shell();
        let s = serde_json::to_string(p.config()).unwrap();
        assert!(s.contains("\"R\":1.0") && s.contains("\"R0\":3.0"), "{s}");
        let q = RadialProfile::from_json_str(&s).unwrap();
        assert_eq!(q.config(), p.config());
    }
}

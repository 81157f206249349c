//! Adaptive Dormand–Prince 5(4) integration of a complex second-order
//! system written as the state `[y, y']`.
//!
//! The integrator never steps across a requested stop: every stop is hit
//! exactly and recorded, so right-hand sides may jump there. Stage times at
//! the two ends of a step are nudged into the step so that a piecewise
//! coefficient is always evaluated on the correct side of a jump.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 2];

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Rescale the state when it grows past `1e150` and track the factor
    /// in `log_scale`. Only valid for homogeneous linear systems.
    pub renormalize: bool,
    /// Record every accepted step, not only the stops.
    pub dense: bool,
    /// Lower bound on the per-component error scale, for solutions that
    /// start from zero.
    pub abs_floor: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-11,
            rtol: 1e-9,
            max_steps: 2_000_000,
            renormalize: false,
            dense: true,
            abs_floor: 0.0,
        }
    }
}

/// Accepted points of an integration. The true state at index `i` is
/// `y[i] * exp(log_scale[i])`.
#[derive(Debug, Clone, Default)]
pub struct OdeOutput {
    pub t: Vec<f64>,
    pub y: Vec<State>,
    pub log_scale: Vec<f64>,
    /// Index into `t` of each requested stop, in order.
    pub stop_index: Vec<usize>,
    pub steps: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const RENORM_AT: f64 = 1e150;

fn axpy(y: &State, h: f64, coeffs: &[f64], ks: &[State]) -> State {
    let mut out = *y;
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out[0] += k[0] * (h * c);
            out[1] += k[1] * (h * c);
        }
    }
    out
}

fn modulus(s: &State) -> f64 {
    s[0].norm().max(s[1].norm())
}

/// Integrates `y' = rhs(t, y)` from `t0` through each stop in `stops`
/// (monotone, all on the same side of `t0`), ending at the last one.
pub fn integrate<F>(rhs: F, t0: f64, y0: State, stops: &[f64], opts: &OdeOptions) -> Result<OdeOutput>
where
    F: Fn(f64, &State) -> State,
{
    let mut out = OdeOutput::default();
    out.t.push(t0);
    out.y.push(y0);
    out.log_scale.push(0.0);
    let Some(&t_end) = stops.last() else {
        return Ok(out);
    };
    if t_end == t0 {
        out.stop_index = vec![0; stops.len()];
        return Ok(out);
    }
    let dir = (t_end - t0).signum();
    for w in stops.windows(2) {
        if (w[1] - w[0]) * dir < 0.0 {
            return Err(Error::NoConvergence("integration stops are not monotone".into()));
        }
    }

    let mut t = t0;
    let mut y = y0;
    let mut log_scale = 0.0;
    let mut peak = modulus(&y);
    let mut h = dir * (t_end - t0).abs().min(0.05);
    let mut stop_i = 0;
    while stop_i < stops.len() && (stops[stop_i] - t) * dir <= 0.0 {
        out.stop_index.push(0);
        stop_i += 1;
    }

    let mut ks = [[Complex64::new(0.0, 0.0); 2]; 7];
    while stop_i < stops.len() {
        if out.steps + out.rejected >= opts.max_steps {
            return Err(Error::NoConvergence(format!("step limit reached at t = {t}")));
        }
        let target = stops[stop_i];
        let mut hits_stop = false;
        let proposed = h;
        if (t + h - target) * dir >= 0.0 || (target - t - h).abs() < 1e-12 * h.abs() {
            h = target - t;
            hits_stop = true;
        }
        let nudge = 1e-14 * t.abs().max(1.0) * dir;
        for s in 0..7 {
            let mut ts = t + C[s] * h;
            if s == 0 {
                ts = t + nudge.abs().min(0.5 * h.abs()) * dir;
            } else if C[s] == 1.0 {
                ts = t + h - nudge.abs().min(0.5 * h.abs()) * dir;
            }
            let ys = axpy(&y, h, &A[s][..s], &ks[..s]);
            ks[s] = rhs(ts, &ys);
        }
        let y_new = axpy(&y, h, &B, &ks);
        let mut err_sq = 0.0;
        for c in 0..2 {
            let mut delta = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                delta += ks[s][c] * E[s];
            }
            delta *= h;
            let sc = (opts.atol * peak + opts.rtol * y[c].norm().max(y_new[c].norm()))
                .max(opts.abs_floor)
                .max(1e-300);
            err_sq += (delta.norm() / sc).powi(2);
        }
        let err = (0.5 * err_sq).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            out.rejected += 1;
            h *= 0.25;
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StiffnessFailure { at: t });
            }
            continue;
        }
        if err <= 1.0 {
            t = if hits_stop { target } else { t + h };
            y = y_new;
            out.steps += 1;
            peak = peak.max(modulus(&y));
            if opts.renormalize && peak > RENORM_AT {
                let m = modulus(&y).max(peak * 1e-300);
                y[0] /= m;
                y[1] /= m;
                peak /= m;
                log_scale += m.ln();
            }
            if opts.dense || hits_stop {
                out.t.push(t);
                out.y.push(y);
                out.log_scale.push(log_scale);
            }
            if hits_stop {
                let idx = out.t.len() - 1;
                out.stop_index.push(idx);
                stop_i += 1;
                while stop_i < stops.len() && (stops[stop_i] - t) * dir <= 0.0 {
                    out.stop_index.push(idx);
                    stop_i += 1;
                }
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = if hits_stop {
                proposed * factor.min(1.0)
            } else {
                h * factor
            };
        } else {
            out.rejected += 1;
            h *= (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StiffnessFailure { at: t });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn harmonic_oscillator_complex_frequency() {
        let k = c(3.0, 0.5);
        let k2 = k * k;
        let out = integrate(
            |_, s| [s[1], -k2 * s[0]],
            0.0,
            [c(0.0, 0.0), c(1.0, 0.0)],
            &[1.0, 2.5],
            &OdeOptions::default(),
        )
        .unwrap();
        for (i, &t) in [1.0, 2.5].iter().enumerate() {
            let idx = out.stop_index[i];
            assert_eq!(out.t[idx], t);
            let exact = (k * t).sin() / k;
            assert!((out.y[idx][0] - exact).norm() < 1e-9 * exact.norm().max(1.0));
        }
    }

    #[test]
    fn backward_integration() {
        let out = integrate(
            |_, s| [s[1], -s[0]],
            2.0,
            [c(2f64.sin(), 0.0), c(2f64.cos(), 0.0)],
            &[0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(out.y.last().unwrap()[0].norm() < 1e-10);
    }

    #[test]
    fn renormalization_tracks_growth() {
        let opts = OdeOptions {
            renormalize: true,
            ..OdeOptions::default()
        };
        let out = integrate(|_, s| [s[1], s[0] * 400.0], 0.0, [c(1.0, 0.0), c(20.0, 0.0)], &[40.0], &opts).unwrap();
        let i = *out.stop_index.last().unwrap();
        let ln = out.y[i][0].norm().ln() + out.log_scale[i];
        assert!((ln - 800.0).abs() < 1e-6, "{ln}");
    }

    #[test]
    fn stops_bracket_a_jump() {
        // y' = 1 for t < 1, 3 beyond; exact at t = 2 is 4.
        let out = integrate(
            |t, _| [c(if t < 1.0 { 1.0 } else { 3.0 }, 0.0), c(0.0, 0.0)],
            0.0,
            [c(0.0, 0.0), c(0.0, 0.0)],
            &[1.0, 2.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((out.y.last().unwrap()[0].re - 4.0).abs() < 1e-13);
    }
}

//! Adaptive Dormand–Prince 5(4) integration of small real systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    /// Local relative tolerance per component.
    pub rtol: f64,
    /// First trial step, as a fraction of the first output interval.
    pub first_step: f64,
    pub max_steps: usize,
    /// For linear homogeneous systems only: when max|y_i| exceeds this the
    /// state is divided down to unit size and the log of the divisor is
    /// accumulated in [`Trajectory::ln_scale`].
    pub rescale_above: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, first_step: 1e-3, max_steps: 2_000_000, rescale_above: None }
    }
}

/// Accepted steps (t, y) in integration order, plus the states at the
/// requested output points (hit exactly, never interpolated).
#[derive(Debug, Clone)]
pub struct Trajectory<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub outputs: Vec<[f64; N]>,
    /// True state = stored state · e^{ln_scale}; parallel to `t`.
    pub ln_scale: Vec<f64>,
    pub output_ln_scale: Vec<f64>,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights are the last row of A (FSAL); these are 5th − 4th
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates y′ = f(t, y) from (t0, y0) through the monotone output points
/// (increasing or decreasing). Component error scale is
/// rtol·max(|y_i|, |y_i,new|, running max |y_i|), so oscillating components
/// are controlled relative to their amplitude near zeros.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], outputs: &[f64], opts: OdeOptions) -> Result<Trajectory<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let mut traj = Trajectory {
        t: vec![t0],
        y: vec![y0],
        outputs: Vec::with_capacity(outputs.len()),
        ln_scale: vec![0.0],
        output_ln_scale: Vec::with_capacity(outputs.len()),
    };
    let mut ln_scale = 0.0;
    let Some(&last) = outputs.last() else {
        return Ok(traj);
    };
    let dir = if last >= t0 { 1.0 } else { -1.0 };
    if outputs.iter().any(|&o| (o - t0) * dir < 0.0) || outputs.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) {
        return Err(Error::Domain("output points must be monotone in the integration direction".into()));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k0 = f(t, &y);
    let mut runmax = y.map(f64::abs);
    let span = (last - t0).abs();
    let mut h = (opts.first_step * span).max(1e-12 * span.max(t0.abs()));
    let mut steps = 0usize;
    for &target in outputs {
        while (target - t) * dir > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::StepCollapse { r: t });
            }
            let remaining = (target - t).abs();
            let hh = h.min(remaining);
            let last_step = hh == remaining;
            let step = dir * hh;
            let mut k = [[0.0; N]; 7];
            k[0] = k0;
            for s in 1..7 {
                let mut ys = y;
                for i in 0..N {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    ys[i] += step * acc;
                }
                k[s] = f(t + C[s] * step, &ys);
            }
            let mut y_new = y;
            for i in 0..N {
                let mut acc = 0.0;
                for j in 0..6 {
                    acc += A[6][j] * k[j][i];
                }
                y_new[i] += step * acc;
            }
            // k[6] already holds f(t + step, y_new)
            let mut err: f64 = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for j in 0..7 {
                    e += E[j] * k[j][i];
                }
                let sc = opts.rtol * y[i].abs().max(y_new[i].abs()).max(runmax[i]);
                let r = if sc > 0.0 { (step * e).abs() / sc } else { 0.0 };
                err = err.max(r);
            }
            if !err.is_finite() {
                h *= 0.1;
            } else if err <= 1.0 {
                t = if last_step { target } else { t + step };
                y = y_new;
                k0 = k[6];
                for i in 0..N {
                    runmax[i] = runmax[i].max(y[i].abs());
                }
                if let Some(limit) = opts.rescale_above {
                    let m = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if m > limit {
                        for i in 0..N {
                            y[i] /= m;
                            k0[i] /= m;
                            runmax[i] /= m;
                        }
                        ln_scale += m.ln();
                    }
                }
                traj.t.push(t);
                traj.y.push(y);
                traj.ln_scale.push(ln_scale);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last_step || fac < 1.0 {
                    h = hh * fac;
                }
                continue;
            } else {
                h = hh * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h <= 1e-14 * t.abs().max(span) {
                return Err(Error::StepCollapse { r: t });
            }
        }
        traj.outputs.push(y);
        traj.output_ln_scale.push(ln_scale);
    }
    Ok(traj)
}

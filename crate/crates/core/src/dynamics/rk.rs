//! Adaptive Dormand-Prince 5(4) on flat complex buffers.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::protocols::Segment;

use super::driver::{emit_due, Leg};
use super::IntegratorConfig;

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
/// Fifth minus fourth order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn scaled_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], config: &IntegratorConfig) -> f64 {
    let mut acc = 0.0;
    for i in 0..err.len() {
        let sc = config.atol + config.rtol * y0[i].norm().max(y1[i].norm());
        acc += (err[i].norm() / sc).powi(2);
    }
    (acc / err.len().max(1) as f64).sqrt()
}

/// Integrates `dy/dt = f(seg, t, y)` across `legs`, backwards when a leg
/// runs from later to earlier times.
pub(crate) fn dopri5<F, O>(
    legs: &[Leg],
    mut y: Vec<Complex64>,
    outputs: &[f64],
    config: &IntegratorConfig,
    mut rhs: F,
    mut on_output: O,
) -> Result<(Vec<Complex64>, usize)>
where
    F: FnMut(&Segment, f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]) -> Result<()>,
{
    let n = y.len();
    let mut next = 0;
    let mut steps = 0usize;
    let Some(first) = legs.first() else {
        return Ok((y, 0));
    };
    emit_due(outputs, &mut next, first.from, &y[..], &mut |t, s: &[Complex64]| on_output(t, s))?;

    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); n]; 7];
    let mut stage = vec![Complex64::new(0.0, 0.0); n];
    let mut y_new = vec![Complex64::new(0.0, 0.0); n];
    let mut err = vec![Complex64::new(0.0, 0.0); n];
    let mut h = f64::NAN;

    for leg in legs {
        let dir = if leg.to >= leg.from { 1.0 } else { -1.0 };
        let length = (leg.to - leg.from).abs();
        let max_step = config.max_step.unwrap_or(f64::INFINITY).min(length);
        let mut t = leg.from;
        rhs(&leg.seg, t, &y, &mut k[0]);
        if !h.is_finite() {
            let d0 = scaled_norm(&y, &y, &y, config);
            let d1 = scaled_norm(&k[0], &y, &y, config);
            h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        }
        h = h.min(max_step);
        let mut rejected_last = false;
        while dir * (leg.to - t) > 0.0 {
            let target = if next < outputs.len() && dir * (outputs[next] - t) > 0.0 && dir * (outputs[next] - leg.to) <= 0.0 {
                outputs[next]
            } else {
                leg.to
            };
            let remaining = (target - t).abs();
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_try = if landing { remaining } else { h };
            let signed = dir * h_try;

            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for j in 0..s {
                        if A[s][j] != 0.0 {
                            acc += k[j][i] * (signed * A[s][j]);
                        }
                    }
                    stage[i] = acc;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                rhs(&leg.seg, t + C[s] * signed, &stage, &mut tail[0]);
            }
            // stage 7 was evaluated at the fifth-order solution
            y_new.copy_from_slice(&stage);
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..7 {
                    if E[j] != 0.0 {
                        acc += k[j][i] * E[j];
                    }
                }
                err[i] = acc * signed;
            }
            let e = scaled_norm(&err, &y, &y_new, config);
            if !e.is_finite() {
                return Err(Error::Integrator {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if e <= 1.0 {
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                t = if landing { target } else { t + signed };
                steps += 1;
                if steps > config.max_steps {
                    return Err(Error::Integrator {
                        t,
                        reason: format!("exceeded {} steps", config.max_steps),
                    });
                }
                emit_due(outputs, &mut next, t, &y[..], &mut |t, s: &[Complex64]| on_output(t, s))?;
                let mut factor = if e == 0.0 { 10.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 10.0) };
                if rejected_last {
                    factor = factor.min(1.0);
                }
                rejected_last = false;
                let proposal = (h_try * factor).min(max_step);
                h = if landing { h.max(proposal) } else { proposal };
            } else {
                rejected_last = true;
                h = h_try * (0.9 * e.powf(-0.2)).clamp(0.1, 1.0);
                if h < 1e-14 * length.max(1.0) {
                    return Err(Error::Integrator {
                        t,
                        reason: format!("step size underflow (scaled error {e:e})"),
                    });
                }
            }
        }
    }
    Ok((y, steps))
}

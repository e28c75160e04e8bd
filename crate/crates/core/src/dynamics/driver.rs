//! Adaptive step-doubling driver shared by the Magnus-type engines.

use crate::error::{Error, Result};
use crate::protocols::Segment;

use super::IntegratorConfig;

/// A one-step method on a smooth piece of the schedule. `h` may be negative
/// for backward (adjoint) propagation.
pub(crate) trait Stepper {
    type State: Clone;
    /// Global order; the local error scales as `h^(ORDER + 1)`.
    const ORDER: i32;
    fn step(&mut self, seg: &Segment, t: f64, h: f64, state: &Self::State) -> Result<Self::State>;
    fn distance(&self, a: &Self::State, b: &Self::State) -> f64;
}

/// Portion of a segment traversed from `from` to `to`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub seg: Segment,
    pub from: f64,
    pub to: f64,
}

/// Legs covering `[from, to]` (or `[to, from]` backwards) in travel order.
pub(crate) fn legs(segments: &[Segment], from: f64, to: f64) -> Vec<Leg> {
    let mut out = Vec::new();
    if to >= from {
        for seg in segments {
            let (lo, hi) = (seg.start.max(from), seg.end.min(to));
            if hi > lo {
                out.push(Leg { seg: *seg, from: lo, to: hi });
            }
        }
    } else {
        for seg in segments.iter().rev() {
            let (lo, hi) = (seg.start.max(to), seg.end.min(from));
            if hi > lo {
                out.push(Leg { seg: *seg, from: hi, to: lo });
            }
        }
    }
    out
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Emits all outputs that coincide with `t`; `next` indexes the first pending one.
pub(crate) fn emit_due<St, F>(outputs: &[f64], next: &mut usize, t: f64, state: &St, on_output: &mut F) -> Result<()>
where
    St: ?Sized,
    F: FnMut(f64, &St) -> Result<()>,
{
    while *next < outputs.len() && same_time(outputs[*next], t) {
        on_output(outputs[*next], state)?;
        *next += 1;
    }
    Ok(())
}

/// Integrates across `legs`, calling `on_output` at each time in `outputs`
/// (sorted in travel order). Returns the final state and the accepted step count.
pub(crate) fn integrate<S, F>(
    stepper: &mut S,
    legs: &[Leg],
    state: S::State,
    outputs: &[f64],
    config: &IntegratorConfig,
    mut on_output: F,
) -> Result<(S::State, usize)>
where
    S: Stepper,
    F: FnMut(f64, &S::State) -> Result<()>,
{
    let mut state = state;
    let mut next = 0;
    let mut steps = 0usize;
    let Some(first) = legs.first() else {
        return Ok((state, 0));
    };
    emit_due(outputs, &mut next, first.from, &state, &mut on_output)?;
    let total: f64 = legs.iter().map(|l| (l.to - l.from).abs()).sum();
    let mut h = (total / 100.0).min(config.max_step.unwrap_or(f64::INFINITY));
    let richardson = 2f64.powi(S::ORDER) - 1.0;
    let exponent = 1.0 / (S::ORDER as f64 + 1.0);

    for leg in legs {
        let dir = if leg.to >= leg.from { 1.0 } else { -1.0 };
        let length = (leg.to - leg.from).abs();
        let max_step = config.max_step.unwrap_or(f64::INFINITY).min(length / 8.0);
        let h_min = 1e-14 * length.max(1.0);
        let mut t = leg.from;
        h = h.min(max_step);
        while dir * (leg.to - t) > 0.0 {
            let target = if next < outputs.len() && dir * (outputs[next] - t) > 0.0 && dir * (outputs[next] - leg.to) <= 0.0 {
                outputs[next]
            } else {
                leg.to
            };
            let remaining = (target - t).abs();
            let landing = h >= remaining * (1.0 - 1e-12);
            let h_try = if landing { remaining } else { h };

            let big = stepper.step(&leg.seg, t, dir * h_try, &state)?;
            let half = stepper.step(&leg.seg, t, dir * h_try / 2.0, &state)?;
            let small = stepper.step(&leg.seg, t + dir * h_try / 2.0, dir * h_try / 2.0, &half)?;
            let err = stepper.distance(&big, &small) / richardson;
            let tol = config.atol + config.rtol;
            if !err.is_finite() {
                return Err(Error::Integrator {
                    t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * (tol / err).powf(exponent)).clamp(0.2, 5.0)
            };
            if err <= tol {
                state = small;
                t = if landing { target } else { t + dir * h_try };
                steps += 1;
                if steps > config.max_steps {
                    return Err(Error::Integrator {
                        t,
                        reason: format!("exceeded {} steps", config.max_steps),
                    });
                }
                emit_due(outputs, &mut next, t, &state, &mut on_output)?;
                let proposal = (h_try * factor).min(max_step);
                h = if landing { h.max(proposal) } else { proposal };
            } else {
                if h_try <= h_min {
                    return Err(Error::Integrator {
                        t,
                        reason: format!("step size underflow (error {err:e} > tolerance {tol:e})"),
                    });
                }
                h = h_try * factor;
            }
        }
    }
    Ok((state, steps))
}

//! Quantitative anchors for plain linear annealing at N = 5.

use dqa_core::dynamics::{evolve_unitary, initial_state, IntegratorConfig, OutputGrid};
use dqa_core::hamiltonian::build_reduced;
use dqa_core::observables::{gap_trace, refine_gap_minimum};
use dqa_core::protocols::Protocol;
use dqa_core::Result;

use crate::{instance, Outcome};

/// Final fidelity after `T = 10` sits near the uniform overlap `1/2^N`.
pub fn short_anneal_fidelity() -> Result<Outcome> {
    let ops = build_reduced(&instance(5)?, 0.0)?;
    let traj = evolve_unitary(
        &ops,
        &Protocol::qa(10.0)?,
        &initial_state(&ops)?,
        &IntegratorConfig::unitary().with_output(OutputGrid::Final),
    )?;
    let f = traj.final_fidelity();
    let target = 1.0 / 32.0;
    let rel = (f - target).abs() / target;
    Ok(Outcome::new(
        rel <= 0.30,
        format!("F = {f:.6}, 1/32 = {target:.6}, relative deviation {:.1}% (limit 30%)", rel * 100.0),
    ))
}

/// Minimum gap along the QA path: magnitude in `(1e-5, 1e-3)`, location `s > 0.9`.
pub fn qa_gap() -> Result<Outcome> {
    let ops = build_reduced(&instance(5)?, 0.0)?;
    let protocol = Protocol::qa(1.0)?;
    let times = OutputGrid::Uniform { points: 1001 }.times(1.0)?;
    let trace = gap_trace(&ops, &protocol, &times)?;
    let i = trace.argmin;
    let lo = times[i.saturating_sub(1)];
    let hi = times[(i + 1).min(times.len() - 1)];
    let min = refine_gap_minimum(&ops, &protocol, lo, hi)?;
    let magnitude = min.gap > 1e-5 && min.gap < 1e-3;
    let late = min.s > 0.9;
    Ok(Outcome::new(
        magnitude && late,
        format!(
            "min gap {:.4e} (in (1e-5, 1e-3): {magnitude}) at s = {:.5} (> 0.9: {late})",
            min.gap, min.s
        ),
    ))
}

//! Reduced engines against direct integration on the full `2^N` space.

use dqa_core::dynamics::{
    evolve_full_oracle, evolve_lindblad, evolve_unitary, gamma_rate, initial_state, symmetric_embedding, BlockDensity,
    DissipatorSpec, IntegratorConfig, LindbladEngine, Method, OutputGrid, PureState, State, Trajectory,
};
use dqa_core::hamiltonian::{build_full, build_reduced};
use dqa_core::protocols::Protocol;
use dqa_core::Result;

use crate::{catalyst, instance, max_deviation, Outcome};

const LIMIT: f64 = 1e-6;
const OUTPUT_POINTS: usize = 101;

fn oracle_config(base: IntegratorConfig) -> IntegratorConfig {
    base.with_output(OutputGrid::Uniform { points: OUTPUT_POINTS })
        .with_method(Method::DormandPrince)
        .with_tolerances(1e-12, 1e-14)
}

fn protocols(n: usize, t: f64) -> Result<Vec<Protocol>> {
    Ok(vec![
        Protocol::qa(t)?,
        Protocol::nsdqa(t, catalyst(n)?.jxx)?,
        // quench at 80% of the sweep to a field below the crossing
        Protocol::sqs(t, 0.8, 6.0, 0.3)?,
    ])
}

fn fidelity_deviation(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.records.len(), b.records.len());
    max_deviation(a.records.iter().map(|r| r.fid_gs), b.records.iter().map(|r| r.fid_gs))
}

/// Ground-state population along QA, NSDQA and SQS at N = 5, 7 and
/// `T` = 10, 100, 1000.
pub fn unitary_equivalence() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for n in [5, 7] {
        let inst = instance(n)?;
        for t in [10.0, 100.0, 1000.0] {
            for p in protocols(n, t)? {
                let ops = build_reduced(&inst, p.jxx())?;
                let full = build_full(&inst, p.jxx())?;
                let psi = initial_state(&ops)?;
                let psi_full = PureState::new(symmetric_embedding(&inst, &psi.amplitudes)?);
                let grid = OutputGrid::Uniform { points: OUTPUT_POINTS };
                let reduced = evolve_unitary(&ops, &p, &psi, &IntegratorConfig::unitary().with_output(grid))?;
                let direct = evolve_full_oracle(
                    &full,
                    &p,
                    &DissipatorSpec::None,
                    &State::Pure(psi_full),
                    &oracle_config(IntegratorConfig::unitary()),
                )?;
                let dev = fidelity_deviation(&reduced, &direct);
                worst = worst.max(dev);
                lines.push(format!("N={n} T={t} {}: {dev:.1e}", p.name()));
            }
        }
    }
    Ok(Outcome::new(
        worst < LIMIT,
        format!("max deviation {worst:.2e} (limit 1e-6); {}", lines.join(", ")),
    ))
}

/// Block-Liouville evolution against the full density matrix at N = 5 with
/// dephasing and with gain and loss at `beta = 1`.
pub fn dissipative_equivalence() -> Result<Outcome> {
    let n = 5;
    let inst = instance(n)?;
    let gamma = gamma_rate(n, 50.0)?;
    let baths = [
        DissipatorSpec::Dephasing { gamma },
        DissipatorSpec::GainLoss {
            gamma,
            beta: 1.0,
            omega: 1.0,
        },
    ];
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for spec in baths {
        for p in protocols(n, 100.0)? {
            let engine = LindbladEngine::new(&inst, p.jxx(), spec)?;
            let psi = initial_state(engine.symmetric_ops())?;
            let rho = BlockDensity::from_symmetric(engine.layout.clone(), &psi)?;
            let grid = OutputGrid::Uniform { points: OUTPUT_POINTS };
            let reduced = evolve_lindblad(&engine, &p, &rho, &IntegratorConfig::lindblad().with_output(grid))?;
            let full = build_full(&inst, p.jxx())?;
            let psi_full = PureState::new(symmetric_embedding(&inst, &psi.amplitudes)?);
            let direct = evolve_full_oracle(
                &full,
                &p,
                &spec,
                &State::Pure(psi_full),
                &oracle_config(IntegratorConfig::lindblad()),
            )?;
            let dev = fidelity_deviation(&reduced, &direct);
            let purity = max_deviation(
                reduced.records.iter().map(|r| r.purity),
                direct.records.iter().map(|r| r.purity),
            );
            worst = worst.max(dev).max(purity);
            lines.push(format!(
                "{} {}: population {dev:.1e}, purity {purity:.1e}",
                spec.name(),
                p.name()
            ));
        }
    }
    Ok(Outcome::new(
        worst < LIMIT,
        format!("max deviation {worst:.2e} (limit 1e-6); {}", lines.join(", ")),
    ))
}

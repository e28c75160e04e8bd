//! Bath fixed points and the hot-bath sweep.

use dqa_core::dynamics::{
    evolve_full_oracle, gain_loss_rates, gamma_rate, initial_state, relax_frozen, BlockDensity, DensityState,
    DissipatorSpec, IntegratorConfig, LindbladEngine, Method, OutputGrid, State,
};
use dqa_core::hamiltonian::build_full;
use dqa_core::optimize::{sweep_infidelity, Family, SqsChoice, SqsGrids, SweepCase};
use dqa_core::Result;

use crate::{catalyst, instance, Outcome};

/// Sweep times of the dissipative sweeps.
pub const DISSIPATIVE_TIMES: [f64; 8] = [100.0, 200.0, 400.0, 700.0, 1000.0, 1500.0, 2000.0, 3000.0];

/// Frozen-Hamiltonian dephasing drives the initial state to `1/D`. Deep in
/// the problem regime `Hz` commutes with the jump operators and mixing is
/// slow, so the frozen points sit where the transverse field dominates.
pub fn dephasing_steady_state() -> Result<Outcome> {
    let inst = instance(5)?;
    let engine = LindbladEngine::new(&inst, 0.0, DissipatorSpec::Dephasing { gamma: 1.0 })?;
    let psi = initial_state(engine.symmetric_ops())?;
    let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi)?;
    let target = BlockDensity::maximally_mixed(engine.layout.clone());
    let config = IntegratorConfig::lindblad().with_tolerances(1e-10, 1e-12);
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for b in [0.0, 0.1, 0.25] {
        let rho = relax_frozen(&engine, b, 200.0, &rho0, &config)?;
        let d = rho.trace_distance(&target);
        worst = worst.max(d);
        lines.push(format!("B={b}: {d:.2e}"));
    }
    Ok(Outcome::new(
        worst < 1e-6,
        format!(
            "trace distance to 1/32 after t = 200 at gamma = 1: {} (limit 1e-6)",
            lines.join(", ")
        ),
    ))
}

fn populations(state: &State) -> Vec<f64> {
    match state {
        State::Density(DensityState::Full(m)) => m.diagonal().iter().map(|z| z.re).collect(),
        _ => unreachable!("the oracle returns full density matrices under a bath"),
    }
}

/// Rate ratio `gamma_up / gamma_down = exp(-beta Omega)`, and the
/// stationary state with the Hamiltonian switched off.
pub fn detailed_balance() -> Result<Outcome> {
    let mut rate_err: f64 = 0.0;
    for beta in [0.1, 0.5, 1.0, 2.0, 5.0] {
        for omega in [0.5, 1.0, 2.0] {
            let (up, down) = gain_loss_rates(0.3, beta, omega)?;
            rate_err = rate_err.max((up / down / (-beta * omega).exp() - 1.0).abs());
        }
    }

    let beta = 1.0;
    let spec = DissipatorSpec::GainLoss {
        gamma: 0.5,
        beta,
        omega: 1.0,
    };
    let ratio = (-beta).exp();

    // each site of a full N = 3 register is a two-level system
    let inst = instance(3)?;
    let mut full = build_full(&inst, 0.0)?;
    let psi = initial_state(&full)?;
    for m in [&mut full.hx, &mut full.hz, &mut full.hc] {
        m.fill(0.0);
    }
    let config = IntegratorConfig::lindblad()
        .with_method(Method::DormandPrince)
        .with_tolerances(1e-12, 1e-14)
        .with_output(OutputGrid::Final);
    let traj = evolve_full_oracle(
        &full,
        &dqa_core::protocols::Protocol::qa(40.0)?,
        &spec,
        &State::Pure(psi),
        &config,
    )?;
    let pop = populations(&traj.final_state);
    let mut site_err: f64 = 0.0;
    for site in 0..3 {
        let bit = 1usize << (2 - site);
        let up: f64 = (0..8).filter(|k| k & bit != 0).map(|k| pop[k]).sum();
        site_err = site_err.max((up / (1.0 - up) - ratio).abs());
    }

    // block representation at N = 5: spectrum of the product of thermal spins
    let inst = instance(5)?;
    let mut engine = LindbladEngine::new(&inst, 0.0, spec)?;
    for ops in &mut engine.sectors {
        ops.hx.fill(0.0);
        ops.hz.fill(0.0);
        ops.hc.fill(0.0);
    }
    let psi = initial_state(&dqa_core::hamiltonian::build_reduced(&inst, 0.0)?)?;
    let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi)?;
    let rho = relax_frozen(
        &engine,
        0.5,
        40.0,
        &rho0,
        &IntegratorConfig::lindblad().with_tolerances(1e-11, 1e-13),
    )?;
    let p_up = ratio / (1.0 + ratio);
    let mut expected = Vec::new();
    for k in 0..=5usize {
        let weight = p_up.powi(k as i32) * (1.0 - p_up).powi(5 - k as i32);
        let mult = (0..k).fold(1usize, |acc, i| acc * (5 - i) / (i + 1));
        expected.extend(std::iter::repeat_n(weight, mult));
    }
    expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spectrum = rho.dense_spectrum();
    let block_err = crate::max_deviation(spectrum, expected);

    let pass = rate_err < 1e-14 && site_err < 1e-8 && block_err < 1e-8;
    Ok(Outcome::new(
        pass,
        format!(
            "rate ratio relative error {rate_err:.1e} (limit 1e-14); two-level population ratio error {site_err:.1e}, \
             block stationary spectrum error {block_err:.1e} (limit 1e-8)"
        ),
    ))
}

/// Gain and loss at `beta = 0.1`, N = 5: infidelity above 0.9 for every
/// protocol and every `T'`.
pub fn hot_bath_failure() -> Result<Outcome> {
    let n = 5;
    let inst = instance(n)?;
    let spec = DissipatorSpec::GainLoss {
        gamma: gamma_rate(n, 1400.0)?,
        beta: 0.1,
        omega: 1.0,
    };
    let cases = vec![
        SweepCase {
            instance: inst.clone(),
            family: Family::Qa,
        },
        SweepCase {
            instance: inst.clone(),
            family: Family::Nsdqa { jxx: catalyst(n)?.jxx },
        },
        SweepCase {
            instance: inst,
            family: Family::Sqs {
                choice: SqsChoice::Search {
                    grids: SqsGrids::default(),
                },
            },
        },
    ];
    let table = sweep_infidelity(&cases, &DISSIPATIVE_TIMES, &spec, &IntegratorConfig::lindblad())?;
    let worst = table
        .rows
        .iter()
        .min_by(|a, b| a.infidelity.partial_cmp(&b.infidelity).unwrap())
        .expect("non-empty sweep");
    let below: Vec<String> = table
        .rows
        .iter()
        .filter(|r| r.infidelity <= 0.9)
        .map(|r| format!("{} T'={}: {:.3}", r.family(), r.t_prime, r.infidelity))
        .collect();
    Ok(Outcome::new(
        below.is_empty(),
        format!(
            "T_ref = 1400, T' from 100 to ~3000; lowest infidelity {:.4} ({} at T' = {}); at or below 0.9: [{}]",
            worst.infidelity,
            worst.family(),
            worst.t_prime,
            below.join(", ")
        ),
    ))
}

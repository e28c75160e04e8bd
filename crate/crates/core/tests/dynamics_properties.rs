use proptest::prelude::*;

use dqa_core::dynamics::{
    evolve_lindblad, evolve_unitary, initial_state, BlockDensity, DensityState, DissipatorSpec, IntegratorConfig,
    LindbladEngine, OutputGrid, State,
};
use dqa_core::hamiltonian::build_reduced;
use dqa_core::problem::{build_instance, RawParams};
use dqa_core::protocols::Protocol;

fn protocol() -> impl Strategy<Value = Protocol> {
    let t = 1.0..30.0f64;
    prop_oneof![
        t.clone().prop_map(|t| Protocol::qa(t).unwrap()),
        (t.clone(), 0.0..3.0f64).prop_map(|(t, j)| Protocol::nsdqa(t, j).unwrap()),
        (t, 0.0..=1.0f64, 0.0..8.0f64, 0.0..=1.0f64).prop_map(|(t, tau, dt, bq)| Protocol::sqs(t, tau, dt, bq).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unitary_runs_keep_the_norm(p in protocol(), n in prop::sample::select(vec![3usize, 5, 7])) {
        let inst = build_instance(n, RawParams::default()).unwrap();
        let ops = build_reduced(&inst, p.jxx()).unwrap();
        let cfg = IntegratorConfig::unitary().with_output(OutputGrid::Uniform { points: 9 });
        let traj = evolve_unitary(&ops, &p, &initial_state(&ops).unwrap(), &cfg).unwrap();
        for r in &traj.records {
            prop_assert!((r.norm_or_trace - 1.0).abs() < 1e-9);
            prop_assert!(r.fid_gs > -1e-12 && r.fid_gs < 1.0 + 1e-9);
            prop_assert!((r.a + r.b - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lindblad_runs_stay_physical(
        p in protocol(),
        gamma in 1e-4..0.2f64,
        beta in prop::option::of(0.05..5.0f64),
    ) {
        let inst = build_instance(3, RawParams::default()).unwrap();
        let spec = match beta {
            Some(beta) => DissipatorSpec::GainLoss { gamma, beta, omega: 1.0 },
            None => DissipatorSpec::Dephasing { gamma },
        };
        let engine = LindbladEngine::new(&inst, p.jxx(), spec).unwrap();
        let psi = initial_state(engine.symmetric_ops()).unwrap();
        let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi).unwrap();
        let mut cfg = IntegratorConfig::lindblad().with_output(OutputGrid::Uniform { points: 6 });
        cfg.keep_states = true;
        let traj = evolve_lindblad(&engine, &p, &rho0, &cfg).unwrap();
        let mut purity = f64::INFINITY;
        for state in &traj.states {
            let State::Density(DensityState::Blocks(rho)) = state else { unreachable!() };
            prop_assert!((rho.trace() - 1.0).abs() < 1e-9);
            prop_assert!(rho.max_anti_hermitian() < 1e-10);
            prop_assert!(rho.min_eigenvalue() > -1e-8);
            purity = rho.purity();
            prop_assert!(purity <= 1.0 + 1e-9);
        }
        prop_assert!(purity >= 1.0 / 8.0 - 1e-9);
    }
}

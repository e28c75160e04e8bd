use dqa_core::dynamics::{evolve_unitary, initial_state, IntegratorConfig, OutputGrid};
use dqa_core::hamiltonian::build_reduced;
use dqa_core::optimize::optimize_jxx;
use dqa_core::problem::{build_instance, RawParams};
use dqa_core::protocols::Protocol;

#[test]
fn optimized_catalyst_gap_sits_before_the_mwis_crossing() {
    let inst = build_instance(5, RawParams::default()).unwrap();
    let r = optimize_jxx(&inst, (0.0, 4.0), 17).unwrap();
    assert!(r.s_c < r.s_min, "{} vs {}", r.s_c, r.s_min);
    // minimizing the secondary gap drives it onto a near-exact crossing
    assert!(r.delta_c <= 10.0 * r.delta_min, "{} vs {}", r.delta_c, r.delta_min);
    assert!(r.delta_min > 1e-5 && r.delta_min < 1e-3);
    assert!((r.jxx - 1.9281907184743696).abs() < 1e-6, "{}", r.jxx);
}

#[test]
fn nsdqa_drops_between_the_crossings_and_revives_at_n11() {
    let inst = build_instance(11, RawParams::default()).unwrap();
    let r = optimize_jxx(&inst, (0.0, 4.0), 17).unwrap();
    let t = 100.0;
    let ops = build_reduced(&inst, r.jxx).unwrap();
    let cfg = IntegratorConfig::unitary().with_output(OutputGrid::Uniform { points: 201 });
    let traj = evolve_unitary(&ops, &Protocol::nsdqa(t, r.jxx).unwrap(), &initial_state(&ops).unwrap(), &cfg).unwrap();
    let before = traj
        .records
        .iter()
        .filter(|rec| rec.t / t < r.s_c - 0.02)
        .map(|rec| rec.fid_gs)
        .fold(f64::INFINITY, f64::min);
    let between = traj
        .records
        .iter()
        .filter(|rec| rec.t / t > r.s_c && rec.t / t < r.s_min)
        .map(|rec| rec.fid_gs)
        .fold(f64::INFINITY, f64::min);
    let last = traj.final_fidelity();
    assert!(before > 0.9, "{before}");
    assert!(between < 0.1, "{between}");
    assert!(last > 0.5, "{last}");
}

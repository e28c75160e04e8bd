//! Algebraic and dynamical invariants that hold for every instance.

use nalgebra::DMatrix;

use dqa_core::dynamics::{
    evolve_lindblad, evolve_unitary, gamma_rate, initial_state, BlockDensity, DensityState, DissipatorSpec,
    IntegratorConfig, LindbladEngine, OutputGrid, State,
};
use dqa_core::hamiltonian::build_reduced;
use dqa_core::protocols::Protocol;
use dqa_core::spinspace::{allowed_twice_j, collective_operator, degeneracy, BlockLayout, DickeBasis, SpinOp};
use dqa_core::Result;

use crate::{instance, Outcome};

struct Report {
    failures: Vec<String>,
    checks: usize,
}

impl Report {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn spin_algebra(r: &mut Report) {
    for twice_j in 0..=12 {
        let basis = DickeBasis::new(twice_j);
        let sz = collective_operator(basis, SpinOp::Sz);
        let sx = collective_operator(basis, SpinOp::Sx);
        let sp = collective_operator(basis, SpinOp::Splus);
        let sm = collective_operator(basis, SpinOp::Sminus);
        let sx2 = collective_operator(basis, SpinOp::Sx2);
        // 2i Sy = S+ - S-, so [Sx, Sy] = i Sz reads [Sx, S+ - S-] = -2 Sz
        let d = &sp - &sm;
        let e1 = max_abs(&(&sx * &d - &d * &sx + &sz * 2.0));
        let e2 = max_abs(&(&sz * &sp - &sp * &sz - &sp));
        let e3 = max_abs(&(&sp * &sm - &sm * &sp - &sz * 2.0));
        let e4 = max_abs(&(&sx * &sx - &sx2));
        // S^2 = Sz^2 + (S+ S- + S- S+) / 2 = j (j + 1)
        let j = twice_j as f64 / 2.0;
        let casimir = &sz * &sz + (&sp * &sm + &sm * &sp) * 0.5;
        let e5 = max_abs(&(casimir - DMatrix::identity(basis.dim(), basis.dim()) * (j * (j + 1.0))));
        let worst = e1.max(e2).max(e3).max(e4).max(e5);
        r.check(worst < 1e-12, || format!("spin algebra at 2j={twice_j}: {worst:.1e}"));
        r.check(max_abs(&(&sz - sz.transpose())) == 0.0, || format!("Sz not symmetric at 2j={twice_j}"));
    }
}

fn sum_rules(r: &mut Report) -> Result<()> {
    for n in 1..=20usize {
        let total: u64 = allowed_twice_j(n)
            .iter()
            .map(|&tj| degeneracy(n, tj).map(|d| d * (tj as u64 + 1)))
            .sum::<Result<u64>>()?;
        r.check(total == 1 << n, || format!("sum d_j (2j+1) = {total} at n={n}"));
    }
    for n in [3, 5, 7, 9, 11] {
        let layout = BlockLayout::new(n)?;
        let dim: u64 = layout
            .sectors
            .iter()
            .zip(&layout.degeneracies)
            .map(|(s, &d)| d * s.dim() as u64)
            .sum();
        r.check(dim == 1 << n, || format!("block dimensions sum to {dim} at N={n}"));
    }
    Ok(())
}

fn hermiticity(r: &mut Report) -> Result<()> {
    for n in [5, 7, 9, 11] {
        let inst = instance(n)?;
        for jxx in [0.0, 1.5] {
            let ops = build_reduced(&inst, jxx)?;
            for (a, b, c) in [(1.0, 0.0, 0.0), (0.3, 0.7, 0.21), (0.0, 1.0, 0.0), (-0.4, 2.0, 1.3)] {
                let h = ops.assemble(a, b, c);
                let asym = max_abs(&(&h - h.transpose()));
                r.check(asym == 0.0, || format!("H not symmetric at N={n}: {asym:.1e}"));
            }
        }
    }
    Ok(())
}

fn schedules(r: &mut Report) -> Result<()> {
    let t = 40.0;
    let quenches = [(0.5, 0.0, 0.2), (0.8, 6.0, 0.3), (1.0, 11.0, 0.0), (0.65, 3.5, 1.0)];
    let mut protocols = vec![Protocol::qa(t)?, Protocol::nsdqa(t, 1.7)?];
    for (tau, dt, bq) in quenches {
        protocols.push(Protocol::sqs(t, tau, dt, bq)?);
    }
    for p in &protocols {
        let total = p.total_time();
        for k in 0..=2000 {
            let time = total * k as f64 / 2000.0;
            let c = p.coefficients(time)?;
            r.check((c.a + c.b - 1.0).abs() < 1e-15, || format!("{} A+B at t={time}", p.name()));
            let c_expected = if matches!(p, Protocol::Nsdqa { .. }) { c.a * c.b } else { 0.0 };
            r.check((c.c - c_expected).abs() < 1e-15, || format!("{} C at t={time}", p.name()));
            let b_expected = match *p {
                Protocol::Qa { t } | Protocol::Nsdqa { t, .. } => time / t,
                Protocol::Sqs { t, t_q, delta_t, b_q } => {
                    if time < t_q {
                        time / t
                    } else if time < t_q + delta_t {
                        b_q
                    } else {
                        (time - delta_t) / t
                    }
                }
            };
            r.check((c.b - b_expected).abs() < 1e-14, || {
                format!("{} B({time}) = {} expected {b_expected}", p.name(), c.b)
            });
        }
        let end = p.coefficients(total)?;
        r.check(end.b == 1.0 && end.a == 0.0, || format!("{} does not end at B = 1", p.name()));
        r.check(p.coefficients(0.0)?.b == 0.0, || format!("{} does not start at B = 0", p.name()));
    }
    Ok(())
}

fn unitary_norm(r: &mut Report) -> Result<()> {
    let inst = instance(7)?;
    for p in [Protocol::nsdqa(50.0, 1.6)?, Protocol::sqs(50.0, 0.8, 6.0, 0.3)?] {
        let ops = build_reduced(&inst, p.jxx())?;
        let cfg = IntegratorConfig::unitary().with_output(OutputGrid::Uniform { points: 51 });
        let traj = evolve_unitary(&ops, &p, &initial_state(&ops)?, &cfg)?;
        let drift = traj
            .records
            .iter()
            .map(|rec| (rec.norm_or_trace - 1.0).abs())
            .fold(0.0, f64::max);
        r.check(drift < 1e-8, || format!("{} norm drift {drift:.1e}", p.name()));
    }
    Ok(())
}

fn lindblad_physicality(r: &mut Report) -> Result<()> {
    let n = 5;
    let inst = instance(n)?;
    let gamma = gamma_rate(n, 50.0)?;
    let baths = [
        DissipatorSpec::Dephasing { gamma },
        DissipatorSpec::GainLoss {
            gamma,
            beta: 0.1,
            omega: 1.0,
        },
    ];
    let p = Protocol::sqs(50.0, 0.8, 6.0, 0.3)?;
    for spec in baths {
        let engine = LindbladEngine::new(&inst, p.jxx(), spec)?;
        let psi = initial_state(engine.symmetric_ops())?;
        let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi)?;
        let mut cfg = IntegratorConfig::lindblad().with_output(OutputGrid::Uniform { points: 41 });
        cfg.keep_states = true;
        let traj = evolve_lindblad(&engine, &p, &rho0, &cfg)?;
        for state in &traj.states {
            let State::Density(DensityState::Blocks(rho)) = state else {
                r.check(false, || "Lindblad run returned a non-block state".into());
                continue;
            };
            let (tr, herm, min_ev) = (rho.trace(), rho.max_anti_hermitian(), rho.min_eigenvalue());
            r.check((tr - 1.0).abs() < 1e-8, || format!("{} trace {tr}", spec.name()));
            r.check(herm < 1e-10, || format!("{} anti-Hermitian part {herm:.1e}", spec.name()));
            r.check(min_ev >= -1e-8, || format!("{} eigenvalue {min_ev:.1e}", spec.name()));
        }
    }
    Ok(())
}

/// Spin algebra, sum rules, Hermiticity, schedules, norm and trace
/// conservation and positivity.
pub fn structural_invariants() -> Result<Outcome> {
    let mut r = Report {
        failures: Vec::new(),
        checks: 0,
    };
    spin_algebra(&mut r);
    sum_rules(&mut r)?;
    hermiticity(&mut r)?;
    schedules(&mut r)?;
    unitary_norm(&mut r)?;
    lindblad_physicality(&mut r)?;
    let detail = if r.failures.is_empty() {
        format!("{} checks", r.checks)
    } else {
        format!("{} of {} checks failed: {}", r.failures.len(), r.checks, r.failures.join("; "))
    };
    Ok(Outcome::new(r.failures.is_empty(), detail))
}

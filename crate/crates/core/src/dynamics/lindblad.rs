//! Lindblad evolution of block-diagonal density matrices.
//!
//! The default scheme is Dormand-Prince on the flattened blocks. The
//! alternative is Strang splitting: half a dissipator step, the
//! commutator-free Magnus unitary on every block, and another half dissipator
//! step. Either scheme run backwards in time with the adjoint generator
//! propagates observables (Heisenberg picture).

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_sector, OperatorSet};
use crate::observables::spectrum_at;
use crate::problem::MwisInstance;
use crate::protocols::{Protocol, Segment, SegmentRule};
use crate::spinspace::BlockLayout;

use super::driver::{integrate, legs, Stepper};
use super::unitary::{check_operator_coupling, magnus_coefficients, Propagator};
use super::{
    make_record, BlockDensity, BlockDissipator, DensityState, DissipatorSpec, IntegratorConfig, Method, State,
    Trajectory, DRIFT_TOLERANCE, HERMITICITY_TOLERANCE, POSITIVITY_TOLERANCE,
};

/// Per-sector Hamiltonians plus the dissipator for one instance.
#[derive(Debug, Clone)]
pub struct LindbladEngine {
    pub layout: Arc<BlockLayout>,
    /// One operator set per sector, in layout order.
    pub sectors: Vec<OperatorSet>,
    pub dissipator: BlockDissipator,
    pub spec: DissipatorSpec,
}

impl LindbladEngine {
    pub fn new(instance: &MwisInstance, jxx: f64, spec: DissipatorSpec) -> Result<Self> {
        let layout = Arc::new(BlockLayout::new(instance.n)?);
        let sectors = layout
            .sectors
            .iter()
            .map(|s| build_sector(instance, jxx, *s))
            .collect::<Result<Vec<_>>>()?;
        let dissipator = BlockDissipator::new(layout.clone(), &spec.channels()?)?;
        Ok(Self {
            layout,
            sectors,
            dissipator,
            spec,
        })
    }

    /// Operators on the fully symmetric sector.
    pub fn symmetric_ops(&self) -> &OperatorSet {
        &self.sectors[0]
    }

    /// `-i [H, x] + D(x)` for coefficients `(a, b, c)`, or its adjoint
    /// `i [H, x] + D^dagger(x)` under the Euclidean pairing.
    pub fn generator(&self, a: f64, b: f64, c: f64, x: &BlockDensity, adjoint: bool) -> BlockDensity {
        let mut out = self.dissipator.apply(x, adjoint);
        let sign = if adjoint { -1.0 } else { 1.0 };
        for ((o, xb), ops) in out.blocks.iter_mut().zip(&x.blocks).zip(&self.sectors) {
            if xb.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let h = ops.assemble(a, b, c);
            let xr = xb.map(|z| z.re);
            let xi = xb.map(|z| z.im);
            let cr = &h * &xr - &xr * &h;
            let ci = &h * &xi - &xi * &h;
            // -i (cr + i ci) = ci - i cr
            for ((z, r), i) in o.iter_mut().zip(cr.iter()).zip(ci.iter()) {
                *z += Complex64::new(sign * i, -sign * r);
            }
        }
        out
    }
}

/// `x -> exp(-i tau H) x exp(i tau H)` with `H = V diag(lambda) V^T`.
fn conjugate(prop: &Propagator, tau: f64, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let v = &prop.vectors;
    let xr = x.map(|z| z.re);
    let xi = x.map(|z| z.im);
    let wr = v.tr_mul(&xr) * v;
    let wi = v.tr_mul(&xi) * v;
    let d = x.nrows();
    let phases: Vec<(f64, f64)> = prop.values.iter().map(|&l| (-tau * l).sin_cos()).collect();
    let mut pr = DMatrix::<f64>::zeros(d, d);
    let mut pi = DMatrix::<f64>::zeros(d, d);
    for c in 0..d {
        for r in 0..d {
            // exp(-i tau (l_r - l_c))
            let (sr, cr) = phases[r];
            let (sc, cc) = phases[c];
            let (s, co) = (sr * cc - cr * sc, cr * cc + sr * sc);
            let (a, b) = (wr[(r, c)], wi[(r, c)]);
            pr[(r, c)] = a * co - b * s;
            pi[(r, c)] = a * s + b * co;
        }
    }
    let yr = v * pr * v.transpose();
    let yi = v * pi * v.transpose();
    DMatrix::from_fn(d, d, |r, c| Complex64::new(yr[(r, c)], yi[(r, c)]))
}

pub(crate) struct StrangMagnus<'a> {
    pub engine: &'a LindbladEngine,
    pub adjoint: bool,
}

impl Stepper for StrangMagnus<'_> {
    type State = BlockDensity;
    const ORDER: i32 = 2;

    fn step(&mut self, seg: &Segment, t: f64, h: f64, state: &BlockDensity) -> Result<BlockDensity> {
        let half = h.abs() / 2.0;
        let dissipator = &self.engine.dissipator;
        let mut x = dissipator.exp_apply(state, half, self.adjoint);
        let coefficients = magnus_coefficients(seg, t, h);
        for (block, ops) in x.blocks.iter_mut().zip(&self.engine.sectors) {
            if block.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                continue;
            }
            for c in &coefficients {
                let prop = Propagator::new(ops.assemble(c.a, c.b, c.c));
                *block = conjugate(&prop, h, block);
            }
        }
        Ok(dissipator.exp_apply(&x, half, self.adjoint))
    }

    fn distance(&self, a: &BlockDensity, b: &BlockDensity) -> f64 {
        a.distance(b)
    }
}

fn flatten(x: &BlockDensity) -> Vec<Complex64> {
    x.blocks.iter().flat_map(|b| b.iter().cloned()).collect()
}

fn unflatten(layout: &Arc<BlockLayout>, data: &[Complex64]) -> BlockDensity {
    let mut out = BlockDensity::zeros(layout.clone());
    let mut offset = 0;
    for b in &mut out.blocks {
        let len = b.len();
        b.as_mut_slice().copy_from_slice(&data[offset..offset + len]);
        offset += len;
    }
    out
}

/// Propagates a block state from `from` to `to`. Backward propagation
/// (`to < from`) applies the adjoint map to an observable.
#[allow(clippy::too_many_arguments)]
pub(crate) fn propagate_blocks<F>(
    engine: &LindbladEngine,
    segments: &[Segment],
    from: f64,
    to: f64,
    x: BlockDensity,
    outputs: &[f64],
    config: &IntegratorConfig,
    on_output: F,
) -> Result<(BlockDensity, usize)>
where
    F: FnMut(f64, &BlockDensity) -> Result<()>,
{
    let legs = legs(segments, from, to);
    let adjoint = to < from;
    match config.method {
        Method::Magnus => {
            let mut stepper = StrangMagnus { engine, adjoint };
            integrate(&mut stepper, &legs, x, outputs, config, on_output)
        }
        Method::DormandPrince => {
            let layout = engine.layout.clone();
            let mut on_output = on_output;
            let (y, steps) = super::rk::dopri5(
                &legs,
                flatten(&x),
                outputs,
                config,
                |seg, t, y, dy| {
                    let c = seg.coefficients(t);
                    let g = engine.generator(c.a, c.b, c.c, &unflatten(&layout, y), adjoint);
                    // backwards in time the observable obeys dX/dt = -L^dagger(X)
                    let sign = if adjoint { -1.0 } else { 1.0 };
                    let mut offset = 0;
                    for b in &g.blocks {
                        for (d, v) in dy[offset..offset + b.len()].iter_mut().zip(b.iter()) {
                            *d = v * sign;
                        }
                        offset += b.len();
                    }
                },
                |t, y| on_output(t, &unflatten(&layout, y)),
            )?;
            Ok((unflatten(&layout, &y), steps))
        }
    }
}

/// Checks trace, Hermiticity and positivity of a block state.
pub fn check_physical(t: f64, x: &BlockDensity) -> Result<()> {
    let trace = x.trace();
    if (trace - 1.0).abs() > DRIFT_TOLERANCE {
        return Err(Error::Integrator {
            t,
            reason: format!("trace drifted to {trace}"),
        });
    }
    let anti = x.max_anti_hermitian();
    if anti > HERMITICITY_TOLERANCE {
        return Err(Error::Integrator {
            t,
            reason: format!("anti-Hermitian part {anti:e}"),
        });
    }
    let min_eigenvalue = x.min_eigenvalue();
    if min_eigenvalue < -POSITIVITY_TOLERANCE {
        return Err(Error::Positivity { t, min_eigenvalue });
    }
    Ok(())
}

/// Evolves `rho0` for `duration` under the fixed Hamiltonian `(1 - b) Hx + b Hz`.
pub fn relax_frozen(
    engine: &LindbladEngine,
    b: f64,
    duration: f64,
    rho0: &BlockDensity,
    config: &IntegratorConfig,
) -> Result<BlockDensity> {
    config.validate()?;
    if !(0.0..=1.0).contains(&b) || !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            reason: format!("need b in [0, 1] and a finite duration, got {duration}"),
        });
    }
    let hold = Segment {
        start: 0.0,
        end: duration,
        rule: SegmentRule::Hold { b },
    };
    let (rho, _) = propagate_blocks(engine, &[hold], 0.0, duration, rho0.clone(), &[duration], config, |t, x| {
        check_physical(t, x)
    })?;
    Ok(rho)
}

/// Integrates the Lindblad equation over the whole protocol.
pub fn evolve_lindblad(
    engine: &LindbladEngine,
    protocol: &Protocol,
    rho0: &BlockDensity,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    protocol.validate()?;
    config.validate()?;
    let ops = engine.symmetric_ops();
    check_operator_coupling(ops, protocol)?;
    if rho0.layout != engine.layout {
        return Err(Error::Shape("initial state uses a different block layout".into()));
    }
    check_physical(0.0, rho0)?;
    let total = protocol.total_time();
    let outputs = config.output.times(total)?;
    let mut records = Vec::with_capacity(outputs.len());
    let mut states = Vec::new();
    let (rho, steps) = propagate_blocks(
        engine,
        &protocol.segments(),
        0.0,
        total,
        rho0.clone(),
        &outputs,
        config,
        |t, x| {
            check_physical(t, x)?;
            let state = State::Density(DensityState::Blocks(x.clone()));
            let slice = spectrum_at(ops, protocol, t, 2)?;
            records.push(make_record(t, protocol.coefficients(t)?, &slice, &state));
            if config.keep_states {
                states.push(state);
            }
            Ok(())
        },
    )?;
    Ok(Trajectory {
        records,
        states,
        final_state: State::Density(DensityState::Blocks(rho)),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_unitary, initial_state, OutputGrid, PureState};
    use crate::problem::{build_instance, RawParams};
    use crate::protocols::SegmentRule;

    fn engine(n: usize, spec: DissipatorSpec) -> LindbladEngine {
        LindbladEngine::new(&build_instance(n, RawParams::default()).unwrap(), 0.0, spec).unwrap()
    }

    fn start(engine: &LindbladEngine) -> (PureState, BlockDensity) {
        let psi = initial_state(engine.symmetric_ops()).unwrap();
        let rho = BlockDensity::from_symmetric(engine.layout.clone(), &psi).unwrap();
        (psi, rho)
    }

    #[test]
    fn closed_system_matches_unitary_engine() {
        let e = engine(5, DissipatorSpec::None);
        let (psi, rho) = start(&e);
        let p = Protocol::sqs(40.0, 0.8, 5.0, 0.3).unwrap();
        let grid = OutputGrid::Uniform { points: 9 };
        let cfg = IntegratorConfig::lindblad().with_output(grid.clone()).with_tolerances(1e-8, 1e-10);
        let a = evolve_lindblad(&e, &p, &rho, &cfg).unwrap();
        let cfg = IntegratorConfig::unitary().with_output(grid).with_tolerances(1e-8, 1e-10);
        let b = evolve_unitary(e.symmetric_ops(), &p, &psi, &cfg).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.fid_gs - y.fid_gs).abs() < 1e-8, "{x:?} {y:?}");
        }
    }

    #[test]
    fn strang_matches_dormand_prince_with_dephasing() {
        let e = engine(5, DissipatorSpec::Dephasing { gamma: 0.01 });
        let (_, rho) = start(&e);
        let p = Protocol::qa(20.0).unwrap();
        let grid = OutputGrid::Uniform { points: 5 };
        let strang = IntegratorConfig::lindblad()
            .with_output(grid.clone())
            .with_method(Method::Magnus)
            .with_tolerances(1e-8, 1e-10);
        let a = evolve_lindblad(&e, &p, &rho, &strang).unwrap();
        let cfg = IntegratorConfig::lindblad()
            .with_output(grid)
            .with_tolerances(1e-10, 1e-12);
        let b = evolve_lindblad(&e, &p, &rho, &cfg).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!((x.fid_gs - y.fid_gs).abs() < 1e-7, "{x:?} {y:?}");
            assert!((x.purity - y.purity).abs() < 1e-7);
        }
    }

    #[test]
    fn adjoint_propagation_matches_forward_expectation() {
        let e = engine(
            5,
            DissipatorSpec::GainLoss {
                gamma: 0.02,
                beta: 1.0,
                omega: 1.0,
            },
        );
        let (_, rho) = start(&e);
        let p = Protocol::qa(10.0).unwrap();
        let segs = p.segments();
        let mut obs = BlockDensity::zeros(e.layout.clone());
        obs.blocks[0][(0, 0)] = Complex64::new(1.0, 0.0);
        obs.blocks[1][(2, 2)] = Complex64::new(0.5, 0.0);
        for method in [Method::DormandPrince, Method::Magnus] {
            let cfg = IntegratorConfig::lindblad().with_method(method).with_tolerances(1e-9, 1e-11);
            let (fwd, _) = propagate_blocks(&e, &segs, 0.0, 10.0, rho.clone(), &[], &cfg, |_, _| Ok(())).unwrap();
            let (back, _) = propagate_blocks(&e, &segs, 10.0, 0.0, obs.clone(), &[], &cfg, |_, _| Ok(())).unwrap();
            let lhs = obs.pairing(&fwd);
            let rhs = back.pairing(&rho);
            assert!((lhs - rhs).norm() < 1e-8, "{method:?}: {lhs} {rhs}");
        }
    }

    #[test]
    fn frozen_dephasing_relaxes_to_identity() {
        let e = engine(5, DissipatorSpec::Dephasing { gamma: 0.5 });
        let (_, rho) = start(&e);
        let seg = Segment {
            start: 0.0,
            end: 60.0,
            rule: SegmentRule::Hold { b: 0.0 },
        };
        let cfg = IntegratorConfig::lindblad();
        let (out, _) = propagate_blocks(&e, &[seg], 0.0, 60.0, rho, &[], &cfg, |_, _| Ok(())).unwrap();
        let mixed = BlockDensity::maximally_mixed(e.layout.clone());
        assert!(out.trace_distance(&mixed) < 1e-6);
    }

    #[test]
    fn trajectory_stays_physical() {
        let e = engine(
            7,
            DissipatorSpec::GainLoss {
                gamma: 0.01,
                beta: 0.1,
                omega: 1.0,
            },
        );
        let (_, rho) = start(&e);
        let p = Protocol::qa(30.0).unwrap();
        let cfg = IntegratorConfig::lindblad().with_output(OutputGrid::Uniform { points: 6 });
        let traj = evolve_lindblad(&e, &p, &rho, &cfg).unwrap();
        for r in &traj.records {
            assert!((r.norm_or_trace - 1.0).abs() < 1e-8);
            assert!(r.purity <= 1.0 + 1e-12);
        }
    }
}

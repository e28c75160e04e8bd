//! Schrödinger evolution with a fourth-order commutator-free Magnus scheme.
//!
//! One step from `t` to `t + h` is
//! `exp(-i h (w1 H1 + w2 H2)) exp(-i h (w2 H1 + w1 H2))` with `H1`, `H2` taken
//! at the two Gauss nodes. The scheme is time-symmetric, so a step with
//! negative `h` is the exact inverse of the matching forward step.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::OperatorSet;
use crate::observables::spectrum_at;
use crate::protocols::{Coefficients, Protocol, Segment};

use super::driver::{integrate, legs, Leg, Stepper};
use super::{make_record, IntegratorConfig, Method, PureState, State, Trajectory, DRIFT_TOLERANCE};

const SQRT3: f64 = 1.732_050_807_568_877_2;
pub(crate) const NODES: [f64; 2] = [0.5 - SQRT3 / 6.0, 0.5 + SQRT3 / 6.0];
const W1: f64 = (3.0 - 2.0 * SQRT3) / 12.0;
const W2: f64 = (3.0 + 2.0 * SQRT3) / 12.0;

fn combine(x: Coefficients, y: Coefficients, wx: f64, wy: f64) -> Coefficients {
    Coefficients {
        a: wx * x.a + wy * y.a,
        b: wx * x.b + wy * y.b,
        c: wx * x.c + wy * y.c,
    }
}

/// Averaged coefficients of the two exponentials, in the order applied. The
/// first one leans on the earlier node.
pub(crate) fn magnus_coefficients(seg: &Segment, t: f64, h: f64) -> [Coefficients; 2] {
    let c1 = seg.coefficients(t + NODES[0] * h);
    let c2 = seg.coefficients(t + NODES[1] * h);
    [combine(c1, c2, W2, W1), combine(c1, c2, W1, W2)]
}

/// Eigendecomposition `H = V diag(lambda) V^T` of a real symmetric matrix.
pub(crate) struct Propagator {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl Propagator {
    pub fn new(h: DMatrix<f64>) -> Self {
        let eig = h.symmetric_eigen();
        Self {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues,
        }
    }

    /// `exp(-i tau H) psi`.
    pub fn apply(&self, tau: f64, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let re = psi.map(|z| z.re);
        let im = psi.map(|z| z.im);
        let mut yr = self.vectors.tr_mul(&re);
        let mut yi = self.vectors.tr_mul(&im);
        for k in 0..yr.len() {
            let (s, c) = (-tau * self.values[k]).sin_cos();
            let (a, b) = (yr[k], yi[k]);
            yr[k] = a * c - b * s;
            yi[k] = a * s + b * c;
        }
        let out_r = &self.vectors * yr;
        let out_i = &self.vectors * yi;
        DVector::from_iterator(out_r.len(), out_r.iter().zip(out_i.iter()).map(|(&r, &i)| Complex64::new(r, i)))
    }
}

pub(crate) struct PureMagnus<'a> {
    pub ops: &'a OperatorSet,
}

impl Stepper for PureMagnus<'_> {
    type State = DVector<Complex64>;
    const ORDER: i32 = 4;

    fn step(&mut self, seg: &Segment, t: f64, h: f64, state: &Self::State) -> Result<Self::State> {
        let mut psi = state.clone();
        for c in magnus_coefficients(seg, t, h) {
            let prop = Propagator::new(self.ops.assemble(c.a, c.b, c.c));
            psi = prop.apply(h, &psi);
        }
        Ok(psi)
    }

    fn distance(&self, a: &Self::State, b: &Self::State) -> f64 {
        (a - b).norm()
    }
}

pub(crate) fn check_operator_coupling(ops: &OperatorSet, protocol: &Protocol) -> Result<()> {
    if let Protocol::Nsdqa { jxx, .. } = *protocol {
        if jxx != ops.jxx {
            return Err(Error::InvalidParameter {
                name: "j_xx",
                value: jxx,
                reason: format!("protocol coupling differs from the operator set's {}", ops.jxx),
            });
        }
    }
    Ok(())
}

/// Propagates `psi` from `from` to `to` (either direction), calling
/// `on_output` at every time in `outputs`.
pub(crate) fn propagate_pure<F>(
    ops: &OperatorSet,
    segments: &[Segment],
    from: f64,
    to: f64,
    psi: DVector<Complex64>,
    outputs: &[f64],
    config: &IntegratorConfig,
    on_output: F,
) -> Result<(DVector<Complex64>, usize)>
where
    F: FnMut(f64, &DVector<Complex64>) -> Result<()>,
{
    let legs: Vec<Leg> = legs(segments, from, to);
    match config.method {
        Method::Magnus => {
            let mut stepper = PureMagnus { ops };
            integrate(&mut stepper, &legs, psi, outputs, config, on_output)
        }
        Method::DormandPrince => {
            let dim = psi.len();
            let mut on_output = on_output;
            let (y, steps) = super::rk::dopri5(
                &legs,
                psi.as_slice().to_vec(),
                outputs,
                config,
                |seg, t, y, dy| {
                    let c = seg.coefficients(t);
                    let h = ops.assemble(c.a, c.b, c.c);
                    for r in 0..dim {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in 0..dim {
                            acc += y[k] * h[(r, k)];
                        }
                        dy[r] = Complex64::new(acc.im, -acc.re);
                    }
                },
                |t, y| on_output(t, &DVector::from_column_slice(y)),
            )?;
            Ok((DVector::from_vec(y), steps))
        }
    }
}

/// Integrates the Schrödinger equation over the whole protocol.
pub fn evolve_unitary(
    ops: &OperatorSet,
    protocol: &Protocol,
    psi0: &PureState,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    protocol.validate()?;
    config.validate()?;
    check_operator_coupling(ops, protocol)?;
    if psi0.dim() != ops.dim() {
        return Err(Error::Shape(format!(
            "state has dimension {}, operators have {}",
            psi0.dim(),
            ops.dim()
        )));
    }
    let total = protocol.total_time();
    let outputs = config.output.times(total)?;
    let mut records = Vec::with_capacity(outputs.len());
    let mut states = Vec::new();
    let (psi, steps) = propagate_pure(
        ops,
        &protocol.segments(),
        0.0,
        total,
        psi0.amplitudes.clone(),
        &outputs,
        config,
        |t, psi| {
            let state = State::Pure(PureState::new(psi.clone()));
            let norm = state.norm_or_trace();
            if (norm - 1.0).abs() > DRIFT_TOLERANCE {
                return Err(Error::Integrator {
                    t,
                    reason: format!("norm drifted to {norm}"),
                });
            }
            let slice = spectrum_at(ops, protocol, t, 2)?;
            let coefficients = protocol.coefficients(t)?;
            records.push(make_record(t, coefficients, &slice, &state));
            if config.keep_states {
                states.push(state);
            }
            Ok(())
        },
    )?;
    Ok(Trajectory {
        records,
        states,
        final_state: State::Pure(PureState::new(psi)),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{initial_state, OutputGrid};
    use crate::hamiltonian::build_reduced;
    use crate::problem::{build_instance, RawParams};

    fn setup(n: usize, jxx: f64) -> (OperatorSet, PureState) {
        let ops = build_reduced(&build_instance(n, RawParams::default()).unwrap(), jxx).unwrap();
        let psi = initial_state(&ops).unwrap();
        (ops, psi)
    }

    #[test]
    fn constant_hamiltonian_is_exact() {
        let (ops, psi) = setup(5, 0.0);
        let h = ops.assemble(0.3, 0.7, 0.0);
        let prop = Propagator::new(h.clone());
        let out = prop.apply(2.0, &psi.amplitudes);
        // compare with a Taylor series of exp(-2iH) applied in small pieces
        let hc = h.map(|x| Complex64::new(x, 0.0));
        let mut v = psi.amplitudes.clone();
        let pieces = 2000;
        let dt = 2.0 / pieces as f64;
        for _ in 0..pieces {
            let mut term = v.clone();
            let mut sum = v.clone();
            for k in 1..30 {
                term = (&hc * term) * Complex64::new(0.0, -dt / k as f64);
                sum += &term;
            }
            v = sum;
        }
        assert!((out - v).norm() < 1e-10);
    }

    #[test]
    fn backward_step_inverts_forward_step() {
        let (ops, psi) = setup(5, 1.2);
        let p = Protocol::nsdqa(20.0, 1.2).unwrap();
        let seg = p.segments()[0];
        let mut stepper = PureMagnus { ops: &ops };
        let fwd = stepper.step(&seg, 3.0, 0.7, &psi.amplitudes).unwrap();
        let back = stepper.step(&seg, 3.7, -0.7, &fwd).unwrap();
        assert!((back - &psi.amplitudes).norm() < 1e-12);
    }

    #[test]
    fn magnus_matches_dormand_prince() {
        let (ops, psi) = setup(5, 0.0);
        for p in [
            Protocol::qa(30.0).unwrap(),
            Protocol::sqs(30.0, 0.6, 4.0, 0.2).unwrap(),
        ] {
            let grid = OutputGrid::Uniform { points: 7 };
            let magnus = IntegratorConfig::unitary()
                .with_output(grid.clone())
                .with_tolerances(1e-8, 1e-10);
            let a = evolve_unitary(&ops, &p, &psi, &magnus).unwrap();
            let cfg = IntegratorConfig::unitary()
                .with_output(grid)
                .with_method(Method::DormandPrince)
                .with_tolerances(1e-12, 1e-14);
            let b = evolve_unitary(&ops, &p, &psi, &cfg).unwrap();
            for (x, y) in a.records.iter().zip(&b.records) {
                assert_eq!(x.t, y.t);
                assert!((x.fid_gs - y.fid_gs).abs() < 1e-8, "{x:?} vs {y:?}");
            }
        }
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let (ops, psi) = setup(5, 0.0);
        let p = Protocol::nsdqa(10.0, 1.0).unwrap();
        assert!(evolve_unitary(&ops, &p, &psi, &IntegratorConfig::unitary()).is_err());
        let (ops7, _) = setup(7, 0.0);
        let p = Protocol::qa(10.0).unwrap();
        assert!(matches!(
            evolve_unitary(&ops7, &p, &psi, &IntegratorConfig::unitary()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn norm_is_conserved() {
        let (ops, psi) = setup(7, 0.0);
        let p = Protocol::qa(50.0).unwrap();
        let cfg = IntegratorConfig::unitary().with_output(OutputGrid::Uniform { points: 11 });
        let traj = evolve_unitary(&ops, &p, &psi, &cfg).unwrap();
        assert_eq!(traj.records.len(), 11);
        for r in &traj.records {
            assert!((r.norm_or_trace - 1.0).abs() < 1e-10);
        }
        assert!((traj.records[0].fid_gs - 1.0).abs() < 1e-12);
    }
}

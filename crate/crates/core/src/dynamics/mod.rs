//! Time evolution in the reduced space (pure states and block-diagonal
//! density matrices) and in the full `2^N` space for cross-checks.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{OperatorSet, Space};
use crate::observables::SpectrumSlice;
use crate::protocols::Coefficients;
use crate::spinspace::{BlockLayout, DickeBasis};

pub mod channels;
mod driver;
pub mod lindblad;
pub mod oracle;
mod rk;
pub mod unitary;

pub use channels::BlockDissipator;
pub use lindblad::{evolve_lindblad, relax_frozen, LindbladEngine};
pub use oracle::{evolve_full_oracle, symmetric_embedding, SymmetricReference};
pub use unitary::evolve_unitary;

/// Largest `N` accepted by the full-space density-matrix oracle.
pub const MAX_DENSITY_ORACLE_N: usize = 9;

/// Allowed norm or trace drift along a trajectory.
pub const DRIFT_TOLERANCE: f64 = 1e-8;
/// Most negative eigenvalue tolerated in a density block.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;
/// Allowed anti-Hermitian part of a density block.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `|<v|psi>|^2` for a real vector `v`.
    pub fn overlap_sq(&self, v: &DVector<f64>) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, &w) in self.amplitudes.iter().zip(v.iter()) {
            acc += a * w;
        }
        acc.norm_sqr()
    }

    pub fn to_density(&self) -> DMatrix<Complex64> {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

/// Density matrix stored as `rho = (+)_J rho_J (x) 1_{d_J}` over the sectors of
/// a [`BlockLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensity {
    pub layout: Arc<BlockLayout>,
    pub blocks: Vec<DMatrix<Complex64>>,
}

impl BlockDensity {
    pub fn zeros(layout: Arc<BlockLayout>) -> Self {
        let blocks = layout
            .sectors
            .iter()
            .map(|s| DMatrix::zeros(s.dim(), s.dim()))
            .collect();
        Self { layout, blocks }
    }

    /// Pure state living in the symmetric sector.
    pub fn from_symmetric(layout: Arc<BlockLayout>, psi: &PureState) -> Result<Self> {
        let mut out = Self::zeros(layout);
        if psi.dim() != out.blocks[0].nrows() {
            return Err(Error::Shape(format!(
                "state has dimension {}, symmetric block has {}",
                psi.dim(),
                out.blocks[0].nrows()
            )));
        }
        out.blocks[0] = psi.to_density();
        Ok(out)
    }

    /// `1 / 2^N` on every block.
    pub fn maximally_mixed(layout: Arc<BlockLayout>) -> Self {
        let scale = 1.0 / layout.hilbert_dimension() as f64;
        let blocks = layout
            .sectors
            .iter()
            .map(|s| DMatrix::identity(s.dim(), s.dim()) * Complex64::new(scale, 0.0))
            .collect();
        Self { layout, blocks }
    }

    fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.layout.degeneracies.iter().map(|&d| d as f64)
    }

    pub fn trace(&self) -> f64 {
        self.blocks
            .iter()
            .zip(self.weights())
            .map(|(b, d)| d * b.trace().re)
            .sum()
    }

    pub fn purity(&self) -> f64 {
        self.blocks
            .iter()
            .zip(self.weights())
            .map(|(b, d)| d * b.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Frobenius norm of the full-space matrix this block state represents.
    pub fn full_norm(&self) -> f64 {
        self.purity().sqrt()
    }

    /// Full-space Frobenius distance.
    pub fn distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .zip(self.weights())
            .map(|((a, b), d)| d * (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Trace distance `0.5 ||a - b||_1` of the represented full-space states.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let mut total = 0.0;
        for ((a, b), d) in self.blocks.iter().zip(&other.blocks).zip(self.weights()) {
            let diff = a - b;
            let ev = diff.symmetric_eigenvalues();
            total += d * ev.iter().map(|x| x.abs()).sum::<f64>();
        }
        0.5 * total
    }

    /// Euclidean pairing `sum_J tr(a_J^dagger b_J)` without degeneracy weights.
    pub fn pairing(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b.iter()) {
                acc += x.conj() * y;
            }
        }
        acc
    }

    pub fn max_anti_hermitian(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let n = b.nrows();
            for r in 0..n {
                for c in r..n {
                    worst = worst.max((b[(r, c)] - b[(c, r)].conj()).norm());
                }
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
                h.symmetric_eigenvalues()
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Expand to the full `2^N` space in a basis adapted to the sectors.
    pub fn dense_spectrum(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (b, &d) in self.blocks.iter().zip(&self.layout.degeneracies) {
            let h = (b + b.adjoint()) * Complex64::new(0.5, 0.0);
            for ev in h.symmetric_eigenvalues().iter() {
                for _ in 0..d {
                    out.push(*ev);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityState {
    Full(DMatrix<Complex64>),
    Blocks(BlockDensity),
}

impl DensityState {
    pub fn trace(&self) -> f64 {
        match self {
            DensityState::Full(m) => m.trace().re,
            DensityState::Blocks(b) => b.trace(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            DensityState::Full(m) => m.iter().map(|z| z.norm_sqr()).sum(),
            DensityState::Blocks(b) => b.purity(),
        }
    }

    /// `<v| rho |v>` for a real vector on the full space or on the symmetric
    /// block.
    pub fn population(&self, v: &DVector<f64>) -> f64 {
        let m = match self {
            DensityState::Full(m) => m,
            DensityState::Blocks(b) => &b.blocks[0],
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..m.ncols() {
            if v[c] == 0.0 {
                continue;
            }
            let mut col = Complex64::new(0.0, 0.0);
            for r in 0..m.nrows() {
                col += m[(r, c)] * v[r];
            }
            acc += col * v[c];
        }
        acc.re
    }
}

/// State handed to integrators and returned in trajectories.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(PureState),
    Density(DensityState),
}

impl State {
    /// Norm for pure states, trace for density matrices.
    pub fn norm_or_trace(&self) -> f64 {
        match self {
            State::Pure(p) => p.norm(),
            State::Density(d) => d.trace(),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            State::Pure(p) => p.norm().powi(4),
            State::Density(d) => d.purity(),
        }
    }

    pub fn population(&self, v: &DVector<f64>) -> f64 {
        match self {
            State::Pure(p) => p.overlap_sq(v),
            State::Density(d) => d.population(v),
        }
    }
}

/// Local single-spin jump operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalOp {
    /// `sigma^z`
    Dephase,
    /// `sigma^+`
    Raise,
    /// `sigma^-`
    Lower,
}

/// A local channel `L = sqrt(rate) op` applied on every site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub op: LocalOp,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DissipatorSpec {
    #[default]
    None,
    Dephasing {
        gamma: f64,
    },
    GainLoss {
        gamma: f64,
        beta: f64,
        omega: f64,
    },
}

impl DissipatorSpec {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, value: f64, strict: bool| -> Result<()> {
            let ok = value.is_finite() && if strict { value > 0.0 } else { value >= 0.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: if strict {
                        "must be finite and positive".into()
                    } else {
                        "must be finite and non-negative".into()
                    },
                })
            }
        };
        match *self {
            DissipatorSpec::None => Ok(()),
            DissipatorSpec::Dephasing { gamma } => check("gamma", gamma, false),
            DissipatorSpec::GainLoss { gamma, beta, omega } => {
                check("gamma", gamma, false)?;
                check("beta", beta, true)?;
                check("omega", omega, true)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DissipatorSpec::None => "none",
            DissipatorSpec::Dephasing { .. } => "dephasing",
            DissipatorSpec::GainLoss { .. } => "gainloss",
        }
    }

    pub fn channels(&self) -> Result<Vec<Channel>> {
        self.validate()?;
        Ok(match *self {
            DissipatorSpec::None => Vec::new(),
            DissipatorSpec::Dephasing { gamma } => vec![Channel {
                op: LocalOp::Dephase,
                rate: gamma,
            }],
            DissipatorSpec::GainLoss { gamma, beta, omega } => {
                let (up, down) = gain_loss_rates(gamma, beta, omega)?;
                vec![
                    Channel {
                        op: LocalOp::Raise,
                        rate: up,
                    },
                    Channel {
                        op: LocalOp::Lower,
                        rate: down,
                    },
                ]
            }
        })
    }

    pub fn is_none(&self) -> bool {
        match *self {
            DissipatorSpec::None => true,
            DissipatorSpec::Dephasing { gamma } | DissipatorSpec::GainLoss { gamma, .. } => gamma == 0.0,
        }
    }
}

/// `gamma = 1 / (T_ref N)`.
pub fn gamma_rate(n: usize, t_ref: f64) -> Result<f64> {
    if !(t_ref.is_finite() && t_ref > 0.0) {
        return Err(Error::InvalidParameter {
            name: "T_ref",
            value: t_ref,
            reason: "must be finite and positive".into(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidSize {
            n,
            reason: "at least one spin is required",
        });
    }
    Ok(1.0 / (t_ref * n as f64))
}

/// Bose occupation `1 / (exp(beta omega) - 1)`.
pub fn thermal_occupation(beta: f64, omega: f64) -> Result<f64> {
    let x = beta * omega;
    if !(x > 0.0) || x.is_nan() {
        return Err(Error::InvalidParameter {
            name: "beta*omega",
            value: x,
            reason: "must be positive".into(),
        });
    }
    Ok(1.0 / x.exp_m1())
}

/// Absorption and emission rates `(gamma N_T, gamma (N_T + 1))`.
pub fn gain_loss_rates(gamma: f64, beta: f64, omega: f64) -> Result<(f64, f64)> {
    let nt = thermal_occupation(beta, omega)?;
    Ok((gamma * nt, gamma * (nt + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Adaptive fourth-order commutator-free Magnus; for density matrices
    /// combined with Strang splitting of the dissipator.
    #[default]
    Magnus,
    /// Adaptive Dormand-Prince 5(4) on the flattened state.
    DormandPrince,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OutputGrid {
    /// Only the final time.
    Final,
    /// `points` equally spaced times including both ends.
    Uniform { points: usize },
    /// Explicit times within the protocol window.
    Times { times: Vec<f64> },
}

impl OutputGrid {
    pub fn times(&self, total: f64) -> Result<Vec<f64>> {
        let mut times = match self {
            OutputGrid::Final => vec![total],
            OutputGrid::Uniform { points } => {
                if *points < 2 {
                    return Err(Error::InvalidParameter {
                        name: "points",
                        value: *points as f64,
                        reason: "a uniform grid needs at least 2 points".into(),
                    });
                }
                // the endpoint is pinned; total * k / k can round past total
                (0..*points)
                    .map(|k| if k + 1 == *points { total } else { total * k as f64 / (*points - 1) as f64 })
                    .collect()
            }
            OutputGrid::Times { times } => times.clone(),
        };
        if let Some(&bad) = times.iter().find(|t| !(**t >= 0.0 && **t <= total)) {
            return Err(Error::TimeOutOfRange { t: bad, total });
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        Ok(times)
    }
}

/// Step-size control. The Magnus engines compare one full step against two
/// half steps and keep the local error estimate (2-norm of the state, or
/// Frobenius norm of the density matrix) below `atol + rtol`; their global
/// error is far below that bound, so the defaults are loose. Dormand-Prince
/// uses the usual scaled RMS norm with `atol + rtol |y|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step; `None` leaves it to the controller.
    pub max_step: Option<f64>,
    pub output: OutputGrid,
    /// Store the state at every output time, not only the last one.
    pub keep_states: bool,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn unitary() -> Self {
        Self {
            method: Method::Magnus,
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            output: OutputGrid::Final,
            keep_states: false,
            max_steps: 50_000_000,
        }
    }

    pub fn lindblad() -> Self {
        Self {
            rtol: 1e-7,
            atol: 1e-9,
            ..Self::unitary()
        }
    }

    pub fn with_output(mut self, output: OutputGrid) -> Self {
        self.output = output;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "tolerances must be positive".into(),
                });
            }
        }
        if let Some(step) = self.max_step.filter(|s| !(*s > 0.0)) {
            return Err(Error::InvalidParameter {
                name: "max_step",
                value: step,
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// One output row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub fid_gs: f64,
    pub fid_e1: f64,
    pub norm_or_trace: f64,
    pub purity: f64,
}

impl TrajectoryRecord {
    pub const COLUMNS: [&'static str; 8] = ["t", "A", "B", "C", "fid_gs", "fid_e1", "norm_or_trace", "purity"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.t,
            self.a,
            self.b,
            self.c,
            self.fid_gs,
            self.fid_e1,
            self.norm_or_trace,
            self.purity,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    /// States at the output times when requested, else empty.
    pub states: Vec<State>,
    pub final_state: State,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_record(&self) -> &TrajectoryRecord {
        self.records.last().expect("trajectory has at least one record")
    }

    pub fn final_fidelity(&self) -> f64 {
        self.final_record().fid_gs
    }
}

/// Builds the output row for a state, using `reference` for the eigenbasis.
pub(crate) fn make_record(
    t: f64,
    coefficients: Coefficients,
    slice: &SpectrumSlice,
    state: &State,
) -> TrajectoryRecord {
    TrajectoryRecord {
        t,
        a: coefficients.a,
        b: coefficients.b,
        c: coefficients.c,
        fid_gs: crate::observables::level_fidelity(state, slice, 0),
        fid_e1: crate::observables::level_fidelity(state, slice, 1),
        norm_or_trace: state.norm_or_trace(),
        purity: state.purity(),
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `|+>^N` written in the basis of `space`.
pub fn analytic_plus_state(space: Space, n: usize) -> Vec<f64> {
    match space {
        Space::Full { n } => vec![(0.5f64).powf(n as f64 / 2.0); 1 << n],
        Space::Sector(sector) => {
            let split = crate::spinspace::SubgraphSplit::new(n).expect("valid size");
            let sizes = split.sizes();
            let factor = |a: usize| -> Vec<f64> {
                let basis = DickeBasis::new(sector.twice_j[a]);
                (0..basis.dim())
                    .map(|k| binomial(sizes[a], k).sqrt() * 0.5f64.powf(sizes[a] as f64 / 2.0))
                    .collect()
            };
            let (f0, f1, fc) = (factor(0), factor(1), factor(2));
            let mut out = Vec::with_capacity(f0.len() * f1.len() * fc.len());
            for x in &f0 {
                for y in &f1 {
                    for z in &fc {
                        out.push(x * y * z);
                    }
                }
            }
            out
        }
    }
}

/// Ground state of `Hx`, phase-aligned with the analytic `|+>^N`.
pub fn initial_state(ops: &OperatorSet) -> Result<PureState> {
    if let Space::Sector(sector) = ops.space {
        if sector.twice_j != sector_sizes(ops.instance.n) {
            return Err(Error::Shape(
                "the initial state lives in the fully symmetric sector".into(),
            ));
        }
    }
    let slice = crate::observables::spectrum(ops, Coefficients { a: 1.0, b: 0.0, c: 0.0 }, 1);
    let v = slice.vectors.column(0);
    let analytic = analytic_plus_state(ops.space, ops.instance.n);
    let overlap: f64 = v.iter().zip(&analytic).map(|(a, b)| a * b).sum();
    if (overlap.abs() - 1.0).abs() > 1e-10 {
        return Err(Error::Integrator {
            t: 0.0,
            reason: format!("driver ground state has overlap {overlap} with |+>"),
        });
    }
    let sign = overlap.signum();
    Ok(PureState::new(DVector::from_iterator(
        v.len(),
        v.iter().map(|&x| Complex64::new(sign * x, 0.0)),
    )))
}

fn sector_sizes(n: usize) -> [usize; 3] {
    crate::spinspace::SubgraphSplit::new(n)
        .map(|s| s.sizes())
        .unwrap_or([0, 0, 0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_full, build_reduced};
    use crate::problem::{build_instance, RawParams};
    use crate::spinspace::{collective_operator, embed, SpinOp};

    #[test]
    fn gamma_examples() {
        assert!((gamma_rate(5, 1400.0).unwrap() - 1.0 / 7000.0).abs() < 1e-18);
        assert!((gamma_rate(5, 50.0).unwrap() - 4e-3).abs() < 1e-15);
        assert_eq!(gamma_rate(10, 50.0).unwrap(), gamma_rate(5, 50.0).unwrap() / 2.0);
        assert!(gamma_rate(5, 0.0).is_err());
    }

    #[test]
    fn occupation_examples() {
        let e = std::f64::consts::E;
        assert!((thermal_occupation(1.0, 1.0).unwrap() - 1.0 / (e - 1.0)).abs() < 1e-15);
        assert!((thermal_occupation(1.0, 1.0).unwrap() - 0.581977).abs() < 1e-6);
        assert!((thermal_occupation(0.1, 1.0).unwrap() - 9.50833).abs() < 1e-5);
        assert!(thermal_occupation(800.0, 1.0).unwrap() < 1e-300);
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn detailed_balance_of_rates() {
        for (beta, omega) in [(1.0, 1.0), (0.1, 1.0), (2.5, 0.3)] {
            let (up, down) = gain_loss_rates(0.01, beta, omega).unwrap();
            let ratio: f64 = up / down;
            assert!((ratio - (-beta * omega).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_state_properties() {
        for n in [5, 7, 9] {
            let inst = build_instance(n, RawParams::default()).unwrap();
            let ops = build_reduced(&inst, 0.0).unwrap();
            let psi = initial_state(&ops).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-12);
            let hx = ops.hx.map(|x| Complex64::new(x, 0.0));
            let e = (psi.amplitudes.adjoint() * &hx * &psi.amplitudes)[(0, 0)].re;
            assert!((e + n as f64).abs() < 1e-10);
            let sector = match ops.space {
                Space::Sector(s) => s,
                _ => unreachable!(),
            };
            let dims = sector.dims();
            let bases = sector.bases();
            let sz: DMatrix<f64> = (0..3)
                .map(|a| {
                    let op = collective_operator(bases[a], SpinOp::Sz);
                    let mut slots = [None, None, None];
                    slots[a] = Some(&op);
                    embed(slots, dims).unwrap()
                })
                .fold(DMatrix::zeros(ops.dim(), ops.dim()), |acc, m| acc + m);
            let szc = sz.map(|x| Complex64::new(x, 0.0));
            let m = (psi.amplitudes.adjoint() * &szc * &psi.amplitudes)[(0, 0)].re;
            assert!(m.abs() < 1e-12);
        }
        let inst = build_instance(5, RawParams::default()).unwrap();
        let full = build_full(&inst, 0.0).unwrap();
        let psi = initial_state(&full).unwrap();
        assert!(psi.amplitudes.iter().all(|z| (z.re - 32f64.powf(-0.5)).abs() < 1e-10));
    }

    #[test]
    fn block_density_bookkeeping() {
        let layout = Arc::new(BlockLayout::new(5).unwrap());
        let mixed = BlockDensity::maximally_mixed(layout.clone());
        assert!((mixed.trace() - 1.0).abs() < 1e-15);
        assert!((mixed.purity() - 1.0 / 32.0).abs() < 1e-15);
        let spec = mixed.dense_spectrum();
        assert_eq!(spec.len(), 32);
        assert!(spec.iter().all(|x| (x - 1.0 / 32.0).abs() < 1e-15));
    }

    #[test]
    fn output_grids() {
        assert_eq!(OutputGrid::Final.times(5.0).unwrap(), vec![5.0]);
        assert_eq!(
            OutputGrid::Uniform { points: 3 }.times(10.0).unwrap(),
            vec![0.0, 5.0, 10.0]
        );
        assert!(OutputGrid::Times { times: vec![11.0] }.times(10.0).is_err());
        assert!(OutputGrid::Uniform { points: 1 }.times(10.0).is_err());
        let total = 26.521773935888834;
        assert_eq!(*OutputGrid::Uniform { points: 6 }.times(total).unwrap().last().unwrap(), total);
    }

    #[test]
    fn dissipator_validation() {
        assert!(DissipatorSpec::Dephasing { gamma: -1.0 }.validate().is_err());
        assert!(DissipatorSpec::GainLoss {
            gamma: 0.1,
            beta: 0.0,
            omega: 1.0
        }
        .validate()
        .is_err());
        assert!(DissipatorSpec::None.channels().unwrap().is_empty());
    }
}

//! Catalyst strength search, sweep-quench-sweep grid search and infidelity
//! sweeps over families of instances and sweep times.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::lindblad::{check_physical, propagate_blocks};
use crate::dynamics::unitary::propagate_pure;
use crate::dynamics::{
    evolve_lindblad, evolve_unitary, initial_state, BlockDensity, DissipatorSpec, IntegratorConfig, LindbladEngine,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_reduced, OperatorSet};
use crate::observables::{gap_trace, golden_section, refine_gap_minimum, spectrum, GapPoint};
use crate::problem::MwisInstance;
use crate::protocols::{Coefficients, Protocol, Segment, SegmentRule};

/// Samples of `s` used to locate gap minima along the catalyst schedule.
pub const LANDSCAPE_POINTS: usize = 1001;
/// Smallest accepted coarse `j_xx` grid.
pub const MIN_RESOLUTION: usize = 16;

/// Gap minima of the catalyst schedule at one `j_xx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalystSample {
    pub jxx: f64,
    /// Smallest gap minimum before the MWIS crossing, if there is one.
    pub delta_c: Option<f64>,
    pub s_c: Option<f64>,
    /// Gap minimum at the MWIS crossing.
    pub delta_min: f64,
    pub s_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalystResult {
    pub jxx: f64,
    pub delta_c: f64,
    pub s_c: f64,
    pub delta_min: f64,
    pub s_min: f64,
    /// Every objective evaluation in the order performed.
    pub trace: Vec<CatalystSample>,
}

fn landscape_times() -> Vec<f64> {
    (0..LANDSCAPE_POINTS)
        .map(|k| k as f64 / (LANDSCAPE_POINTS - 1) as f64)
        .collect()
}

/// Refined local gap minima of `protocol` (with `T = 1`, so `t = s`).
fn refined_minima(ops: &OperatorSet, protocol: &Protocol, times: &[f64]) -> Result<Vec<GapPoint>> {
    let trace = gap_trace(ops, protocol, times)?;
    let mut minima = trace
        .local_minima
        .iter()
        .map(|&i| refine_gap_minimum(ops, protocol, times[i - 1], times[i + 1]))
        .collect::<Result<Vec<_>>>()?;
    if minima.is_empty() {
        // monotone landscape: the minimum sits on the boundary
        minima.push(trace.points[trace.argmin]);
    }
    Ok(minima)
}

/// Location of the QA gap minimum, which marks the MWIS crossing.
pub fn mwis_crossing(instance: &MwisInstance) -> Result<GapPoint> {
    let ops = build_reduced(instance, 0.0)?;
    let protocol = Protocol::qa(1.0)?;
    let minima = refined_minima(&ops, &protocol, &landscape_times())?;
    Ok(minima
        .into_iter()
        .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap())
        .expect("at least one minimum"))
}

/// Gap minima of the catalyst schedule at `jxx`. The MWIS minimum is the one
/// closest to `crossing_s`; the secondary one is the smallest earlier minimum.
pub fn catalyst_landscape(instance: &MwisInstance, jxx: f64, crossing_s: f64) -> Result<CatalystSample> {
    let ops = build_reduced(instance, jxx)?;
    let protocol = Protocol::nsdqa(1.0, jxx)?;
    let minima = refined_minima(&ops, &protocol, &landscape_times())?;
    let mwis = *minima
        .iter()
        .min_by(|a, b| {
            (a.s - crossing_s)
                .abs()
                .partial_cmp(&(b.s - crossing_s).abs())
                .unwrap()
        })
        .expect("at least one minimum");
    let secondary = minima
        .iter()
        .filter(|p| p.s < mwis.s)
        .min_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap());
    Ok(CatalystSample {
        jxx,
        delta_c: secondary.map(|p| p.gap),
        s_c: secondary.map(|p| p.s),
        delta_min: mwis.gap,
        s_min: mwis.s,
    })
}

/// `j_xx` in `interval` minimizing the secondary gap minimum: a coarse scan
/// with `resolution` points, then golden-section refinement around the best
/// admissible grid point.
pub fn optimize_jxx(instance: &MwisInstance, interval: (f64, f64), resolution: usize) -> Result<CatalystResult> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidParameter {
            name: "interval",
            value: hi - lo,
            reason: format!("bounds [{lo}, {hi}] must be finite and increasing"),
        });
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidParameter {
            name: "resolution",
            value: resolution as f64,
            reason: format!("need at least {MIN_RESOLUTION} grid points"),
        });
    }
    let crossing = mwis_crossing(instance)?;
    let grid: Vec<f64> = (0..resolution)
        .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
        .collect();
    let mut trace = grid
        .par_iter()
        .map(|&j| catalyst_landscape(instance, j, crossing.s))
        .collect::<Result<Vec<_>>>()?;

    let best = (0..trace.len())
        .filter(|&k| trace[k].delta_c.is_some())
        .min_by(|&a, &b| trace[a].delta_c.partial_cmp(&trace[b].delta_c).unwrap());
    let Some(best) = best else {
        let landscape: Vec<String> = trace
            .iter()
            .map(|p| format!("j_xx={:.4}: gap {:.3e} at s={:.4}", p.jxx, p.delta_min, p.s_min))
            .collect();
        return Err(Error::NoSecondaryMinimum(landscape.join("; ")));
    };

    let bracket = (grid[best.saturating_sub(1)], grid[(best + 1).min(grid.len() - 1)]);
    let mut refined = Vec::new();
    golden_section(bracket.0, bracket.1, 1e-10 * (hi - lo), |j| {
        let sample = catalyst_landscape(instance, j, crossing.s)?;
        refined.push(sample);
        Ok(sample.delta_c.unwrap_or(f64::INFINITY))
    })?;
    trace.extend(refined);

    let optimum = *trace
        .iter()
        .filter(|p| p.delta_c.is_some())
        .min_by(|a, b| a.delta_c.partial_cmp(&b.delta_c).unwrap())
        .expect("the coarse optimum is admissible");
    Ok(CatalystResult {
        jxx: optimum.jxx,
        delta_c: optimum.delta_c.unwrap(),
        s_c: optimum.s_c.unwrap(),
        delta_min: optimum.delta_min,
        s_min: optimum.s_min,
        trace,
    })
}

/// `start, start + step, ...` up to `stop` inclusive; the last point is
/// snapped onto `stop` when within rounding.
pub fn range_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: step,
            reason: format!("cannot build a grid from {start} to {stop}"),
        });
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|k| {
            let v = start + step * k as f64;
            if (v - stop).abs() < 1e-9 * step {
                stop
            } else {
                v
            }
        })
        .collect())
}

/// Axes of the sweep-quench-sweep search; each strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqsGrids {
    pub b_q: Vec<f64>,
    /// `t_q / T`.
    pub tau_q: Vec<f64>,
    pub delta_t: Vec<f64>,
}

impl Default for SqsGrids {
    fn default() -> Self {
        Self {
            b_q: range_grid(0.0, 1.0, 0.05).unwrap(),
            tau_q: range_grid(0.5, 1.0, 0.025).unwrap(),
            delta_t: range_grid(0.0, 20.0, 0.5).unwrap(),
        }
    }
}

impl SqsGrids {
    pub fn validate(&self) -> Result<()> {
        let axes: [(&'static str, &Vec<f64>, f64, f64); 3] = [
            ("b_q", &self.b_q, 0.0, 1.0),
            ("tau_q", &self.tau_q, 0.0, 1.0),
            ("delta_t", &self.delta_t, 0.0, f64::INFINITY),
        ];
        for (name, values, min, max) in axes {
            if values.is_empty() {
                return Err(Error::InvalidParameter {
                    name,
                    value: 0.0,
                    reason: "grid is empty".into(),
                });
            }
            if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= min && **v <= max)) {
                return Err(Error::InvalidParameter {
                    name,
                    value: bad,
                    reason: format!("must lie in [{min}, {max}]"),
                });
            }
            if values.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidParameter {
                    name,
                    value: values.len() as f64,
                    reason: "grid must be strictly increasing".into(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqsParams {
    pub b_q: f64,
    pub tau_q: f64,
    pub delta_t: f64,
}

impl SqsParams {
    pub fn protocol(&self, t: f64) -> Result<Protocol> {
        Protocol::sqs(t, self.tau_q, self.delta_t, self.b_q)
    }
}

/// Final ground-state fidelity over the whole `(B_q, tau_q, dT_q)` cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqsGrid {
    pub t: f64,
    pub grids: SqsGrids,
    /// Row-major `[b][tau][dt]`.
    pub fidelity: Vec<f64>,
}

impl SqsGrid {
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.grids.b_q.len(), self.grids.tau_q.len(), self.grids.delta_t.len())
    }

    pub fn at(&self, ib: usize, it: usize, id: usize) -> f64 {
        let (_, nt, nd) = self.shape();
        self.fidelity[(ib * nt + it) * nd + id]
    }

    /// Index of the best `dT_q` in a cell; ties go to the smaller one.
    pub fn best_delta_index(&self, ib: usize, it: usize) -> usize {
        let nd = self.shape().2;
        (0..nd).fold(0, |best, id| if self.at(ib, it, id) > self.at(ib, it, best) { id } else { best })
    }

    /// `|B_q| x |tau_q|` heatmap of the best fidelity per cell.
    pub fn heatmap(&self) -> Vec<Vec<f64>> {
        let (nb, nt, _) = self.shape();
        (0..nb)
            .map(|ib| (0..nt).map(|it| self.at(ib, it, self.best_delta_index(ib, it))).collect())
            .collect()
    }

    /// `|B_q| x |tau_q|` table of the maximizing `dT_q`.
    pub fn best_delta_t(&self) -> Vec<Vec<f64>> {
        let (nb, nt, _) = self.shape();
        (0..nb)
            .map(|ib| (0..nt).map(|it| self.grids.delta_t[self.best_delta_index(ib, it)]).collect())
            .collect()
    }

    /// Best triple; ties go to the first in lexicographic grid order.
    pub fn best(&self) -> (SqsParams, f64) {
        let (nb, nt, nd) = self.shape();
        let mut best = (0, 0, 0);
        for ib in 0..nb {
            for it in 0..nt {
                for id in 0..nd {
                    if self.at(ib, it, id) > self.at(best.0, best.1, best.2) {
                        best = (ib, it, id);
                    }
                }
            }
        }
        let params = SqsParams {
            b_q: self.grids.b_q[best.0],
            tau_q: self.grids.tau_q[best.1],
            delta_t: self.grids.delta_t[best.2],
        };
        (params, self.at(best.0, best.1, best.2))
    }

    /// Fraction of cells of the heatmap whose best fidelity exceeds `value`.
    pub fn fraction_above(&self, value: f64) -> f64 {
        let cells: Vec<f64> = self.heatmap().into_iter().flatten().collect();
        cells.iter().filter(|&&f| f > value).count() as f64 / cells.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqsSearch {
    pub grid: SqsGrid,
    pub best: SqsParams,
    pub best_fidelity: f64,
    pub dissipator: DissipatorSpec,
}

fn ground_vectors(ops: &OperatorSet) -> Vec<DVector<f64>> {
    let slice = spectrum(ops, Coefficients { a: 0.0, b: 1.0, c: 0.0 }, ops.dim());
    slice.degenerate_group(0).into_iter().map(|k| slice.vector(k)).collect()
}

fn complexify(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

fn hold_segment(b_q: f64, duration: f64) -> Segment {
    Segment {
        start: 0.0,
        end: duration,
        rule: SegmentRule::Hold { b: b_q },
    }
}

/// Quench start times `tau_q T`, clipped onto the sweep window.
fn quench_times(t: f64, grids: &SqsGrids) -> Vec<f64> {
    grids.tau_q.iter().map(|tau| (tau * t).min(t)).collect()
}

/// Fills the fidelity cube for every `(B_q, tau_q, dT_q)` of `grids` at sweep
/// time `t`. Without dissipation the pre-quench states and the post-quench
/// pullbacks of the target are computed once and the hold is applied
/// analytically; with dissipation each cell runs one hold and pairs it with
/// the adjoint-propagated target projector.
pub fn grid_search_sqs(
    instance: &MwisInstance,
    t: f64,
    grids: &SqsGrids,
    dissipator: &DissipatorSpec,
    config: &IntegratorConfig,
) -> Result<SqsSearch> {
    grids.validate()?;
    config.validate()?;
    dissipator.validate()?;
    Protocol::qa(t)?;
    let fidelity = if dissipator.is_none() {
        unitary_cube(instance, t, grids, config)?
    } else {
        dissipative_cube(instance, t, grids, dissipator, config)?
    };
    let grid = SqsGrid {
        t,
        grids: grids.clone(),
        fidelity,
    };
    let (best, best_fidelity) = grid.best();
    Ok(SqsSearch {
        grid,
        best,
        best_fidelity,
        dissipator: *dissipator,
    })
}

fn unitary_cube(instance: &MwisInstance, t: f64, grids: &SqsGrids, config: &IntegratorConfig) -> Result<Vec<f64>> {
    let ops = build_reduced(instance, 0.0)?;
    let segments = Protocol::qa(t)?.segments();
    let quench = quench_times(t, grids);

    let mut before = Vec::with_capacity(quench.len());
    propagate_pure(
        &ops,
        &segments,
        0.0,
        t,
        initial_state(&ops)?.amplitudes,
        &quench,
        config,
        |_, psi| {
            before.push(psi.clone());
            Ok(())
        },
    )?;

    let descending: Vec<f64> = quench.iter().rev().cloned().collect();
    // pullbacks[g][tau] = U_post^dagger |g>
    let mut pullbacks = Vec::new();
    for g in ground_vectors(&ops) {
        let mut back = Vec::with_capacity(quench.len());
        propagate_pure(&ops, &segments, t, 0.0, complexify(&g), &descending, config, |_, phi| {
            back.push(phi.clone());
            Ok(())
        })?;
        back.reverse();
        pullbacks.push(back);
    }
    if before.len() != quench.len() || pullbacks.iter().any(|b| b.len() != quench.len()) {
        return Err(Error::Integrator {
            t,
            reason: "missed a quench output time".into(),
        });
    }

    let rows = grids
        .b_q
        .par_iter()
        .map(|&b| {
            let eig = SymmetricEigen::new(ops.assemble(1.0 - b, b, 0.0));
            let basis: DMatrix<Complex64> = eig.eigenvectors.map(|x| Complex64::new(x, 0.0)).transpose();
            let mut row = Vec::with_capacity(quench.len() * grids.delta_t.len());
            for (k, psi) in before.iter().enumerate() {
                let a = &basis * psi;
                let targets: Vec<DVector<Complex64>> = pullbacks.iter().map(|p| &basis * &p[k]).collect();
                for &dt in &grids.delta_t {
                    let mut f = 0.0;
                    for phi in &targets {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for ((x, y), &e) in a.iter().zip(phi.iter()).zip(eig.eigenvalues.iter()) {
                            acc += y.conj() * x * Complex64::from_polar(1.0, -e * dt);
                        }
                        f += acc.norm_sqr();
                    }
                    row.push(f);
                }
            }
            row
        })
        .collect::<Vec<_>>();
    Ok(rows.into_iter().flatten().collect())
}

fn dissipative_cube(
    instance: &MwisInstance,
    t: f64,
    grids: &SqsGrids,
    dissipator: &DissipatorSpec,
    config: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let engine = LindbladEngine::new(instance, 0.0, *dissipator)?;
    let ops = engine.symmetric_ops();
    let segments = Protocol::qa(t)?.segments();
    let quench = quench_times(t, grids);
    let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &initial_state(ops)?)?;

    let mut before = Vec::with_capacity(quench.len());
    propagate_blocks(&engine, &segments, 0.0, t, rho0, &quench, config, |at, x| {
        check_physical(at, x)?;
        before.push(x.clone());
        Ok(())
    })?;

    let mut projector = BlockDensity::zeros(engine.layout.clone());
    for g in ground_vectors(ops) {
        let g = complexify(&g);
        projector.blocks[0] += &g * g.transpose();
    }
    let descending: Vec<f64> = quench.iter().rev().cloned().collect();
    let mut pullbacks = Vec::with_capacity(quench.len());
    propagate_blocks(&engine, &segments, t, 0.0, projector, &descending, config, |_, x| {
        pullbacks.push(x.clone());
        Ok(())
    })?;
    pullbacks.reverse();
    if before.len() != quench.len() || pullbacks.len() != quench.len() {
        return Err(Error::Integrator {
            t,
            reason: "missed a quench output time".into(),
        });
    }

    let longest = *grids.delta_t.last().unwrap();
    let cells: Vec<(usize, usize)> = (0..grids.b_q.len())
        .flat_map(|ib| (0..quench.len()).map(move |it| (ib, it)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(ib, it)| {
            let target = &pullbacks[it];
            let mut row = Vec::with_capacity(grids.delta_t.len());
            if longest == 0.0 {
                row.push(target.pairing(&before[it]).re);
                return Ok(row);
            }
            let hold = [hold_segment(grids.b_q[ib], longest)];
            propagate_blocks(&engine, &hold, 0.0, longest, before[it].clone(), &grids.delta_t, config, |dt, x| {
                check_physical(quench[it] + dt, x)?;
                row.push(target.pairing(x).re);
                Ok(())
            })?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

/// Final ground-state fidelity of one protocol run from `|+>^N`.
pub fn final_fidelity(
    instance: &MwisInstance,
    protocol: &Protocol,
    dissipator: &DissipatorSpec,
    config: &IntegratorConfig,
) -> Result<f64> {
    let jxx = protocol.jxx();
    if dissipator.is_none() {
        let ops = build_reduced(instance, jxx)?;
        let psi0 = initial_state(&ops)?;
        Ok(evolve_unitary(&ops, protocol, &psi0, config)?.final_fidelity())
    } else {
        let engine = LindbladEngine::new(instance, jxx, *dissipator)?;
        let psi0 = initial_state(engine.symmetric_ops())?;
        let rho0 = BlockDensity::from_symmetric(engine.layout.clone(), &psi0)?;
        Ok(evolve_lindblad(&engine, protocol, &rho0, config)?.final_fidelity())
    }
}

/// How the quench parameters of a sweep are chosen for each sweep time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SqsChoice {
    Fixed { params: SqsParams },
    /// Parameters keyed by sweep time.
    PerTime { table: Vec<(f64, SqsParams)> },
    /// Unitary grid search at every sweep time; the optimum is reused
    /// unchanged under dissipation.
    Search { grids: SqsGrids },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Qa,
    Nsdqa { jxx: f64 },
    Sqs { choice: SqsChoice },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Qa => "qa",
            Family::Nsdqa { .. } => "nsdqa",
            Family::Sqs { .. } => "sqs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCase {
    pub instance: MwisInstance,
    pub family: Family,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    /// Sweep time `T`.
    pub t: f64,
    /// Total duration `T'`, which includes the quench for SQS.
    pub t_prime: f64,
    pub protocol: Protocol,
    pub bath: String,
    pub infidelity: f64,
}

impl SweepRow {
    pub fn family(&self) -> &'static str {
        self.protocol.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `(T', 1 - F)` of one size and protocol family, ordered by `T`.
    pub fn series(&self, n: usize, family: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.n == n && r.family() == family)
            .map(|r| (r.t_prime, r.infidelity))
            .collect()
    }
}

fn resolve_protocol(case: &SweepCase, t: f64, config: &IntegratorConfig) -> Result<Protocol> {
    match &case.family {
        Family::Qa => Protocol::qa(t),
        Family::Nsdqa { jxx } => Protocol::nsdqa(t, *jxx),
        Family::Sqs { choice } => match choice {
            SqsChoice::Fixed { params } => params.protocol(t),
            SqsChoice::PerTime { table } => {
                let params = table
                    .iter()
                    .find(|(time, _)| (time - t).abs() <= 1e-9 * t.max(1.0))
                    .map(|(_, p)| *p)
                    .ok_or_else(|| Error::InvalidParameter {
                        name: "T",
                        value: t,
                        reason: "no quench parameters supplied for this sweep time".into(),
                    })?;
                params.protocol(t)
            }
            SqsChoice::Search { grids } => {
                let search = grid_search_sqs(&case.instance, t, grids, &DissipatorSpec::None, config)?;
                search.best.protocol(t)
            }
        },
    }
}

/// Final infidelity of every case at every sweep time in `times`. Work
/// items are independent; rows come back in `(case, time)` order.
pub fn sweep_infidelity(
    cases: &[SweepCase],
    times: &[f64],
    dissipator: &DissipatorSpec,
    config: &IntegratorConfig,
) -> Result<SweepTable> {
    dissipator.validate()?;
    config.validate()?;
    let jobs: Vec<(&SweepCase, f64)> = cases
        .iter()
        .flat_map(|c| times.iter().map(move |&t| (c, t)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(case, t)| {
            let point = || format!("N={}, T={t}, {}, bath {}", case.instance.n, case.family.name(), dissipator.name());
            let protocol = resolve_protocol(case, t, config).map_err(|e| e.at(point()))?;
            let fidelity = final_fidelity(&case.instance, &protocol, dissipator, config).map_err(|e| e.at(point()))?;
            Ok(SweepRow {
                n: case.instance.n,
                t,
                t_prime: protocol.total_time(),
                protocol,
                bath: dissipator.name().to_string(),
                infidelity: 1.0 - fidelity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_instance, RawParams};

    fn instance(n: usize) -> MwisInstance {
        build_instance(n, RawParams::default()).unwrap()
    }

    #[test]
    fn range_grid_hits_both_ends() {
        let g = range_grid(0.5, 1.0, 0.025).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[20], 1.0);
        assert_eq!(range_grid(0.0, 20.0, 0.5).unwrap().len(), 41);
        assert_eq!(range_grid(2.0, 2.0, 1.0).unwrap(), vec![2.0]);
        assert!(range_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn default_grids_are_valid() {
        let g = SqsGrids::default();
        g.validate().unwrap();
        assert_eq!((g.b_q.len(), g.tau_q.len(), g.delta_t.len()), (21, 21, 41));
    }

    #[test]
    fn grids_out_of_bounds_are_rejected() {
        let mut g = SqsGrids::default();
        g.b_q.push(1.5);
        assert!(g.validate().is_err());
        let g = SqsGrids {
            b_q: vec![],
            ..SqsGrids::default()
        };
        assert!(g.validate().is_err());
        let g = SqsGrids {
            delta_t: vec![1.0, 0.5],
            ..SqsGrids::default()
        };
        assert!(g.validate().is_err());
    }

    #[test]
    fn catalyst_off_has_no_secondary_minimum() {
        let inst = instance(5);
        let crossing = mwis_crossing(&inst).unwrap();
        let sample = catalyst_landscape(&inst, 0.0, crossing.s).unwrap();
        assert!(sample.delta_c.is_none());
        let err = optimize_jxx(&inst, (0.0, 0.2), 16).unwrap_err();
        assert!(matches!(err, Error::NoSecondaryMinimum(_)));
    }

    #[test]
    fn optimize_jxx_checks_its_inputs() {
        let inst = instance(5);
        assert!(optimize_jxx(&inst, (0.0, 4.0), 8).is_err());
        assert!(optimize_jxx(&inst, (1.0, f64::INFINITY), 16).is_err());
    }

    #[test]
    fn optimized_catalyst_opens_an_earlier_minimum() {
        let inst = instance(5);
        let r = optimize_jxx(&inst, (0.0, 4.0), 17).unwrap();
        assert!(r.delta_c >= 0.0);
        assert!(r.s_c < r.s_min);
        assert!(r.delta_min > 1e-5 && r.delta_min < 1e-3);
        assert!(r.trace.len() > 17);
        // the optimum sits in the admissible window of the coarse scan
        assert!(r.jxx > 1.5 && r.jxx < 2.25, "j_xx = {}", r.jxx);
        let best_coarse = r.trace[..17]
            .iter()
            .filter_map(|p| p.delta_c)
            .fold(f64::INFINITY, f64::min);
        assert!(r.delta_c <= best_coarse);
    }

    fn small_grids() -> SqsGrids {
        SqsGrids {
            b_q: vec![0.3, 0.6, 0.9],
            tau_q: vec![0.5, 0.8, 1.0],
            delta_t: vec![0.0, 1.5, 4.0, 8.0],
        }
    }

    fn direct(inst: &MwisInstance, t: f64, p: SqsParams, spec: &DissipatorSpec, tol: f64) -> f64 {
        let config = IntegratorConfig::unitary().with_tolerances(tol, tol * 1e-2);
        final_fidelity(inst, &p.protocol(t).unwrap(), spec, &config).unwrap()
    }

    #[test]
    fn unitary_fast_path_matches_direct_simulation() {
        let inst = instance(5);
        let t = 15.0;
        let grids = small_grids();
        let search = grid_search_sqs(&inst, t, &grids, &DissipatorSpec::None, &IntegratorConfig::unitary()).unwrap();
        assert_eq!(search.grid.fidelity.len(), 36);
        for (ib, &b_q) in grids.b_q.iter().enumerate() {
            for (it, &tau_q) in grids.tau_q.iter().enumerate() {
                for (id, &delta_t) in grids.delta_t.iter().enumerate() {
                    let p = SqsParams { b_q, tau_q, delta_t };
                    let f = direct(&inst, t, p, &DissipatorSpec::None, 1e-10);
                    let got = search.grid.at(ib, it, id);
                    assert!((got - f).abs() < 1e-7, "{p:?}: {got} vs {f}");
                }
            }
        }
    }

    #[test]
    fn dissipative_fast_path_matches_direct_simulation() {
        let inst = instance(5);
        let t = 15.0;
        let grids = SqsGrids {
            b_q: vec![0.4, 0.9],
            tau_q: vec![0.6, 1.0],
            delta_t: vec![0.0, 2.0, 5.0],
        };
        let spec = DissipatorSpec::Dephasing {
            gamma: crate::dynamics::gamma_rate(5, 50.0).unwrap(),
        };
        let config = IntegratorConfig::lindblad().with_tolerances(1e-9, 1e-11);
        let search = grid_search_sqs(&inst, t, &grids, &spec, &config).unwrap();
        for (ib, &b_q) in grids.b_q.iter().enumerate() {
            for (it, &tau_q) in grids.tau_q.iter().enumerate() {
                for (id, &delta_t) in grids.delta_t.iter().enumerate() {
                    let p = SqsParams { b_q, tau_q, delta_t };
                    let f = direct(&inst, t, p, &spec, 1e-9);
                    let got = search.grid.at(ib, it, id);
                    assert!((got - f).abs() < 1e-6, "{p:?}: {got} vs {f}");
                }
            }
        }
    }

    #[test]
    fn singleton_grid_returns_its_triple() {
        let inst = instance(5);
        let grids = SqsGrids {
            b_q: vec![0.45],
            tau_q: vec![0.7],
            delta_t: vec![3.0],
        };
        let search = grid_search_sqs(&inst, 10.0, &grids, &DissipatorSpec::None, &IntegratorConfig::unitary()).unwrap();
        assert_eq!(
            search.best,
            SqsParams {
                b_q: 0.45,
                tau_q: 0.7,
                delta_t: 3.0
            }
        );
        assert_eq!(search.grid.heatmap(), vec![vec![search.best_fidelity]]);
    }

    #[test]
    fn heatmap_shape_and_ties() {
        let grids = small_grids();
        let grid = SqsGrid {
            t: 1.0,
            grids: grids.clone(),
            fidelity: vec![0.5; 36],
        };
        let heat = grid.heatmap();
        assert_eq!(heat.len(), 3);
        assert!(heat.iter().all(|r| r.len() == 3));
        let (best, f) = grid.best();
        assert_eq!((best.b_q, best.tau_q, best.delta_t, f), (0.3, 0.5, 0.0, 0.5));
        assert_eq!(grid.fraction_above(0.4), 1.0);
    }

    #[test]
    fn grid_search_is_deterministic() {
        let inst = instance(5);
        let grids = small_grids();
        let config = IntegratorConfig::unitary();
        let a = grid_search_sqs(&inst, 12.0, &grids, &DissipatorSpec::None, &config).unwrap();
        let b = grid_search_sqs(&inst, 12.0, &grids, &DissipatorSpec::None, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_rows_follow_case_and_time_order() {
        let inst = instance(5);
        let cases = vec![
            SweepCase {
                instance: inst.clone(),
                family: Family::Qa,
            },
            SweepCase {
                instance: inst.clone(),
                family: Family::Sqs {
                    choice: SqsChoice::Fixed {
                        params: SqsParams {
                            b_q: 0.5,
                            tau_q: 0.8,
                            delta_t: 2.0,
                        },
                    },
                },
            },
        ];
        let config = IntegratorConfig::unitary();
        let table = sweep_infidelity(&cases, &[10.0, 5.0], &DissipatorSpec::None, &config).unwrap();
        let keys: Vec<(&str, f64, f64)> = table.rows.iter().map(|r| (r.family(), r.t, r.t_prime)).collect();
        assert_eq!(
            keys,
            vec![("qa", 10.0, 10.0), ("qa", 5.0, 5.0), ("sqs", 10.0, 12.0), ("sqs", 5.0, 7.0)]
        );
        // evaluation order does not leak between points
        let single = sweep_infidelity(&cases[1..], &[5.0], &DissipatorSpec::None, &config).unwrap();
        assert_eq!(single.rows[0], table.rows[3]);
        assert!((table.rows[0].infidelity - (1.0 - 0.037086)).abs() < 1e-5);
    }

    #[test]
    fn per_time_table_needs_every_time() {
        let inst = instance(5);
        let cases = vec![SweepCase {
            instance: inst,
            family: Family::Sqs {
                choice: SqsChoice::PerTime {
                    table: vec![(
                        10.0,
                        SqsParams {
                            b_q: 0.5,
                            tau_q: 0.8,
                            delta_t: 2.0,
                        },
                    )],
                },
            },
        }];
        let config = IntegratorConfig::unitary();
        assert!(sweep_infidelity(&cases, &[10.0], &DissipatorSpec::None, &config).is_ok());
        assert!(sweep_infidelity(&cases, &[20.0], &DissipatorSpec::None, &config).is_err());
    }
}

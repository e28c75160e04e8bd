//! Instantaneous spectra, gaps, level fidelities and the infidelity
//! saturation fit.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::hamiltonian::OperatorSet;
use crate::protocols::{Coefficients, Protocol};

/// Levels closer than this are treated as one degenerate level.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Lowest eigenpairs of one instantaneous Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSlice {
    /// Anneal fraction `t / T'`; equals `B` when built from bare coefficients.
    pub s: f64,
    /// Ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `energies`.
    pub vectors: DMatrix<f64>,
}

impl SpectrumSlice {
    /// Eigendecomposition of a real symmetric matrix keeping the lowest `k`
    /// levels plus any level degenerate with the last kept one.
    pub fn from_matrix(h: DMatrix<f64>, k: usize, s: f64) -> Self {
        let dim = h.nrows();
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let mut keep = k.clamp(1, dim);
        while keep < dim
            && (eig.eigenvalues[order[keep]] - eig.eigenvalues[order[keep - 1]]).abs() < DEGENERACY_TOLERANCE
        {
            keep += 1;
        }
        let energies = order[..keep].iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(dim, keep, |r, c| eig.eigenvectors[(r, order[c])]);
        Self { s, energies, vectors }
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// `E1 - E0`, zero when only one level is stored.
    pub fn gap(&self) -> f64 {
        if self.energies.len() < 2 {
            0.0
        } else {
            (self.energies[1] - self.energies[0]).max(0.0)
        }
    }

    /// Indices of all stored levels degenerate with `level`.
    pub fn degenerate_group(&self, level: usize) -> Vec<usize> {
        let e = self.energies[level];
        (0..self.energies.len())
            .filter(|&i| (self.energies[i] - e).abs() < DEGENERACY_TOLERANCE)
            .collect()
    }

    pub fn vector(&self, level: usize) -> DVector<f64> {
        self.vectors.column(level).into_owned()
    }
}

/// Lowest `k` levels of `A Hx + B Hz + C Hc`.
pub fn spectrum(ops: &OperatorSet, coefficients: Coefficients, k: usize) -> SpectrumSlice {
    let h = ops.assemble(coefficients.a, coefficients.b, coefficients.c);
    SpectrumSlice::from_matrix(h, k, coefficients.b)
}

/// Spectrum of the fidelity reference Hamiltonian of `protocol` at `t`.
pub fn spectrum_at(ops: &OperatorSet, protocol: &Protocol, t: f64, k: usize) -> Result<SpectrumSlice> {
    let coefficients = protocol.reference_coefficients(t)?;
    let mut slice = spectrum(ops, coefficients, k);
    slice.s = protocol.fraction(t);
    Ok(slice)
}

/// Population of `level`, summed over its degenerate partners.
pub fn level_fidelity(state: &State, slice: &SpectrumSlice, level: usize) -> f64 {
    if level >= slice.energies.len() {
        return 0.0;
    }
    slice
        .degenerate_group(level)
        .into_iter()
        .map(|i| state.population(&slice.vector(i)))
        .sum()
}

/// Population of the `level`-th eigenstate of `A Hx + B Hz + C Hc`.
pub fn fidelity(state: &State, ops: &OperatorSet, coefficients: Coefficients, level: usize) -> f64 {
    let slice = spectrum(ops, coefficients, level + 2);
    level_fidelity(state, &slice, level)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub t: f64,
    pub s: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapTrace {
    pub points: Vec<GapPoint>,
    /// Index of the smallest gap on the grid.
    pub argmin: usize,
    /// Indices of interior grid points lower than both neighbours.
    pub local_minima: Vec<usize>,
}

impl GapTrace {
    pub fn min_gap(&self) -> f64 {
        self.points[self.argmin].gap
    }

    pub fn argmin_s(&self) -> f64 {
        self.points[self.argmin].s
    }
}

/// Gap of the actual instantaneous Hamiltonian.
pub fn gap_at(ops: &OperatorSet, protocol: &Protocol, t: f64) -> Result<f64> {
    let c = protocol.coefficients(t)?;
    Ok(spectrum(ops, c, 2).gap())
}

/// `E1 - E0` along `times`.
pub fn gap_trace(ops: &OperatorSet, protocol: &Protocol, times: &[f64]) -> Result<GapTrace> {
    if times.is_empty() {
        return Err(Error::Shape("gap trace needs at least one time".into()));
    }
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        points.push(GapPoint {
            t,
            s: protocol.fraction(t),
            gap: gap_at(ops, protocol, t)?,
        });
    }
    let argmin = (0..points.len())
        .min_by(|&a, &b| points[a].gap.partial_cmp(&points[b].gap).unwrap())
        .unwrap();
    let local_minima = (1..points.len().saturating_sub(1))
        .filter(|&i| points[i].gap < points[i - 1].gap && points[i].gap <= points[i + 1].gap)
        .collect();
    Ok(GapTrace {
        points,
        argmin,
        local_minima,
    })
}

/// Golden-section refinement of a gap minimum bracketed by `[lo, hi]` (times).
pub fn refine_gap_minimum(ops: &OperatorSet, protocol: &Protocol, lo: f64, hi: f64) -> Result<GapPoint> {
    let (t, gap) = golden_section(lo, hi, 1e-12 * protocol.total_time(), |t| gap_at(ops, protocol, t))?;
    Ok(GapPoint {
        t,
        s: protocol.fraction(t),
        gap,
    })
}

/// Minimizes a unimodal function on `[lo, hi]`; returns `(x, f(x))`.
pub fn golden_section<F>(mut lo: f64, mut hi: f64, tol: f64, mut f: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while hi - lo > tol && iterations < 200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        }
        iterations += 1;
    }
    Ok(if f1 <= f2 { (x1, f1) } else { (x2, f2) })
}

/// Parameters of `I(T') = y0 + (y_sat - y0)(1 - exp(-T'/tau))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub y0: f64,
    pub y_sat: f64,
    pub tau: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub points_used: usize,
}

impl FitResult {
    pub fn evaluate(&self, t: f64) -> f64 {
        saturation_model(self.y0, self.y_sat, self.tau, t)
    }
}

pub fn saturation_model(y0: f64, y_sat: f64, tau: f64, t: f64) -> f64 {
    y0 + (y_sat - y0) * (1.0 - (-t / tau).exp())
}

/// `T'` of the smallest infidelity in the table.
pub fn optimal_working_point(points: &[(f64, f64)]) -> Option<f64> {
    points
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap()))
        .map(|p| p.0)
}

fn sum_sq(points: &[(f64, f64)], y0: f64, y_sat: f64, tau: f64) -> f64 {
    points
        .iter()
        .map(|&(t, y)| (saturation_model(y0, y_sat, tau, t) - y).powi(2))
        .sum()
}

/// Best `y0` for a fixed `tau` (the model is linear in `y0`).
fn linear_y0(points: &[(f64, f64)], y_sat: f64, tau: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, y) in points {
        let e = (-t / tau).exp();
        num += e * (y - y_sat);
        den += e * e;
    }
    if den > 0.0 {
        y_sat + num / den
    } else {
        y_sat
    }
}

/// Damped Gauss-Newton fit of `(y0, tau)` with `y_sat` pinned, using the
/// points with `T' >= start`.
pub fn fit_saturation(points: &[(f64, f64)], start: f64, y_sat: f64) -> Result<FitResult> {
    let used: Vec<(f64, f64)> = points.iter().cloned().filter(|p| p.0 >= start).collect();
    if used.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points with T' >= {start}, got {}",
            used.len()
        )));
    }
    if used.iter().any(|p| !p.0.is_finite() || !p.1.is_finite() || p.0 < 0.0) {
        return Err(Error::Fit("points must be finite with T' >= 0".into()));
    }
    let y_first = used[0].1;
    let spread = used.iter().map(|p| (p.1 - y_first).abs()).fold(0.0, f64::max);
    if spread < 1e-14 {
        return Err(Error::Fit(format!(
            "all infidelities equal {y_first}; tau is not identifiable"
        )));
    }

    let t_min = used.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).max(1e-12);
    let t_max = used.iter().map(|p| p.0).fold(0.0, f64::max);
    // log-spaced initial scan over tau
    let (lo, hi) = ((t_min / 10.0).ln(), (t_max * 10.0).ln());
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in 0..=60 {
        let tau = (lo + (hi - lo) * k as f64 / 60.0).exp();
        let y0 = linear_y0(&used, y_sat, tau);
        let cost = sum_sq(&used, y0, y_sat, tau);
        if cost < best.0 {
            best = (cost, y0, tau.ln());
        }
    }
    let (mut cost, mut y0, mut u) = best;
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 500 {
        iterations += 1;
        let tau = u.exp();
        // normal equations for residual r = model - y
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for &(t, y) in &used {
            let e = (-t / tau).exp();
            let r = saturation_model(y0, y_sat, tau, t) - y;
            let j = [e, -(y_sat - y0) * (t / tau) * e];
            for a in 0..2 {
                jtr[a] += j[a] * r;
                for b in 0..2 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let grad = jtr[0].abs().max(jtr[1].abs());
        if grad < 1e-15 {
            converged = true;
            break;
        }
        let mut improved = false;
        for _ in 0..30 {
            let m00 = jtj[0][0] * (1.0 + lambda);
            let m11 = jtj[1][1] * (1.0 + lambda);
            let m01 = jtj[0][1];
            let det = m00 * m11 - m01 * m01;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let d0 = -(m11 * jtr[0] - m01 * jtr[1]) / det;
            let d1 = -(m00 * jtr[1] - m01 * jtr[0]) / det;
            let (ny0, nu) = (y0 + d0, u + d1.clamp(-2.0, 2.0));
            let ncost = sum_sq(&used, ny0, y_sat, nu.exp());
            if ncost <= cost {
                let small = d0.abs() < 1e-13 * (1.0 + y0.abs()) && d1.abs() < 1e-13;
                y0 = ny0;
                u = nu;
                let rel = (cost - ncost) / cost.max(1e-300);
                cost = ncost;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if small || rel < 1e-15 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            // no downhill step left at machine precision
            converged = true;
        }
        if converged {
            break;
        }
    }
    let tau = u.exp();
    if !converged || !tau.is_finite() || !(tau > 0.0) {
        return Err(Error::Fit(format!(
            "no convergence after {iterations} iterations: y0={y0}, tau={tau}, cost={cost}"
        )));
    }
    if tau > 1e3 * t_max || tau < 1e-3 * t_min {
        return Err(Error::Fit(format!(
            "tau = {tau} lies far outside the sampled range [{t_min}, {t_max}]"
        )));
    }
    Ok(FitResult {
        y0,
        y_sat,
        tau,
        residual_norm: cost.sqrt(),
        iterations,
        points_used: used.len(),
    })
}

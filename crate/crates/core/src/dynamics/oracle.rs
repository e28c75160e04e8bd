//! Brute-force evolution on the full `2^N` space, used to cross-check the
//! reduced-space engines.
//!
//! Pure states are integrated with Dormand-Prince on sparse matrices. Density
//! matrices are integrated the same way, with each local jump written as a
//! bit-mask permutation of matrix elements.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{OperatorSet, Space};
use crate::observables::SpectrumSlice;
use crate::problem::MwisInstance;
use crate::protocols::Protocol;
use crate::spinspace::SubgraphSplit;

use super::driver::legs;
use super::unitary::check_operator_coupling;
use super::{
    make_record, Channel, DensityState, DissipatorSpec, IntegratorConfig, LocalOp, PureState, State, Trajectory,
    DRIFT_TOLERANCE, MAX_DENSITY_ORACLE_N,
};

/// Compressed sparse rows of a real matrix.
#[derive(Debug, Clone)]
pub struct Csr {
    pub dim: usize,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl Csr {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let dim = m.nrows();
        let mut row_start = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_start.push(0);
        for r in 0..dim {
            for c in 0..dim {
                let v = m[(r, c)];
                if v != 0.0 {
                    cols.push(c);
                    values.push(v);
                }
            }
            row_start.push(cols.len());
        }
        Self {
            dim,
            row_start,
            cols,
            values,
        }
    }

    /// `y += alpha * M x` for a strided vector view.
    #[inline]
    fn mul_add(&self, alpha: Complex64, x: impl Fn(usize) -> Complex64, mut y: impl FnMut(usize, Complex64)) {
        for r in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += x(self.cols[k]) * self.values[k];
            }
            if acc != Complex64::new(0.0, 0.0) {
                y(r, acc * alpha);
            }
        }
    }
}

struct SparseOps {
    hx: Csr,
    hz: Csr,
    hc: Csr,
}

impl SparseOps {
    fn new(ops: &OperatorSet) -> Self {
        Self {
            hx: Csr::from_dense(&ops.hx),
            hz: Csr::from_dense(&ops.hz),
            hc: Csr::from_dense(&ops.hc),
        }
    }

    /// `out += alpha H x` on column-major `dim x cols` data.
    fn apply_left(&self, a: f64, b: f64, c: f64, alpha: Complex64, x: &[Complex64], out: &mut [Complex64], cols: usize) {
        let dim = self.hx.dim;
        for col in 0..cols {
            let base = col * dim;
            for (m, w) in [(&self.hx, a), (&self.hz, b), (&self.hc, c)] {
                if w == 0.0 {
                    continue;
                }
                m.mul_add(alpha * w, |k| x[base + k], |r, v| out[base + r] += v);
            }
        }
    }

    /// `out += alpha x H` on column-major square data; `H` is symmetric.
    fn apply_right(&self, a: f64, b: f64, c: f64, alpha: Complex64, x: &[Complex64], out: &mut [Complex64]) {
        let dim = self.hx.dim;
        for row in 0..dim {
            for (m, w) in [(&self.hx, a), (&self.hz, b), (&self.hc, c)] {
                if w == 0.0 {
                    continue;
                }
                // (x H)[row, j] = sum_k x[row, k] H[k, j] = (H x^T)[j, row]
                m.mul_add(alpha * w, |k| x[k * dim + row], |j, v| out[j * dim + row] += v);
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Group of every site: 0 for `G0`, 1 for `G1'`, 2 for the catalyst pair.
fn site_groups(instance: &MwisInstance) -> Vec<usize> {
    (0..instance.n)
        .map(|site| {
            if site < instance.n0 {
                0
            } else if site < instance.n0 + 2 {
                2
            } else {
                1
            }
        })
        .collect()
}

/// Columns are the full-space images of the symmetric-sector basis states.
pub fn embedding_matrix(instance: &MwisInstance) -> Result<DMatrix<f64>> {
    let split = SubgraphSplit::new(instance.n)?;
    let sizes = split.sizes();
    let n = instance.n;
    let dims = sizes.map(|s| s + 1);
    let groups = site_groups(instance);
    let full = 1usize << n;
    let mut q = DMatrix::<f64>::zeros(full, dims[0] * dims[1] * dims[2]);
    for k in 0..full {
        let mut down = [0usize; 3];
        for (site, &g) in groups.iter().enumerate() {
            if k & (1 << (n - 1 - site)) == 0 {
                down[g] += 1;
            }
        }
        let col = (down[0] * dims[1] + down[1]) * dims[2] + down[2];
        let norm: f64 = (0..3).map(|a| binomial(sizes[a], down[a])).product();
        q[(k, col)] = 1.0 / norm.sqrt();
    }
    Ok(q)
}

/// Maps a symmetric-sector vector to the full space.
pub fn symmetric_embedding(instance: &MwisInstance, psi: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    let q = embedding_matrix(instance)?;
    if psi.len() != q.ncols() {
        return Err(Error::Shape(format!(
            "vector has dimension {}, symmetric sector has {}",
            psi.len(),
            q.ncols()
        )));
    }
    let re = &q * psi.map(|z| z.re);
    let im = &q * psi.map(|z| z.im);
    Ok(DVector::from_fn(re.len(), |i, _| Complex64::new(re[i], im[i])))
}

/// Eigenstates of the full Hamiltonian restricted to the symmetric subspace.
pub struct SymmetricReference {
    q: DMatrix<f64>,
    hx: DMatrix<f64>,
    hz: DMatrix<f64>,
    hc: DMatrix<f64>,
}

impl SymmetricReference {
    pub fn new(full: &OperatorSet) -> Result<Self> {
        let q = embedding_matrix(&full.instance)?;
        if q.nrows() != full.dim() {
            return Err(Error::Shape("operators are not on the full space".into()));
        }
        let project = |m: &DMatrix<f64>| q.transpose() * (m * &q);
        Ok(Self {
            hx: project(&full.hx),
            hz: project(&full.hz),
            hc: project(&full.hc),
            q,
        })
    }

    /// Projected `A Hx + B Hz + C Hc` in the symmetric-sector basis.
    pub fn projected(&self, a: f64, b: f64, c: f64) -> DMatrix<f64> {
        &self.hx * a + &self.hz * b + &self.hc * c
    }

    /// Lowest `k` symmetric levels with full-space eigenvectors.
    pub fn slice(&self, a: f64, b: f64, c: f64, k: usize, s: f64) -> SpectrumSlice {
        let mut slice = SpectrumSlice::from_matrix(self.projected(a, b, c), k, s);
        slice.vectors = &self.q * slice.vectors;
        slice
    }
}

fn check_full(ops: &OperatorSet) -> Result<usize> {
    match ops.space {
        Space::Full { n } => Ok(n),
        Space::Sector(_) => Err(Error::Shape("the oracle needs full-space operators".into())),
    }
}

/// Adds the dissipator applied to column-major `rho` into `out`.
fn add_dissipator(n: usize, channels: &[Channel], rho: &[Complex64], out: &mut [Complex64]) {
    let dim = 1usize << n;
    for ch in channels {
        for site in 0..n {
            let bit = 1usize << (n - 1 - site);
            for c in 0..dim {
                for r in 0..dim {
                    let idx = c * dim + r;
                    let (up_r, up_c) = (r & bit != 0, c & bit != 0);
                    let delta = match ch.op {
                        LocalOp::Dephase => {
                            let s = if up_r == up_c { 1.0 } else { -1.0 };
                            rho[idx] * (s - 1.0)
                        }
                        LocalOp::Raise => {
                            // L = |up><down|, L^dagger L projects on down
                            let jump = if up_r && up_c { rho[(c ^ bit) * dim + (r ^ bit)] } else { Complex64::new(0.0, 0.0) };
                            let anti = 0.5 * ((!up_r) as u8 as f64 + (!up_c) as u8 as f64);
                            jump - rho[idx] * anti
                        }
                        LocalOp::Lower => {
                            let jump = if !up_r && !up_c { rho[(c ^ bit) * dim + (r ^ bit)] } else { Complex64::new(0.0, 0.0) };
                            let anti = 0.5 * (up_r as u8 as f64 + up_c as u8 as f64);
                            jump - rho[idx] * anti
                        }
                    };
                    out[idx] += delta * ch.rate;
                }
            }
        }
    }
}

/// Integrates a full-space pure state or density matrix over `protocol`.
/// Fidelities refer to the symmetric-subspace eigenstates.
pub fn evolve_full_oracle(
    full: &OperatorSet,
    protocol: &Protocol,
    dissipator: &DissipatorSpec,
    initial: &State,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    protocol.validate()?;
    config.validate()?;
    dissipator.validate()?;
    check_operator_coupling(full, protocol)?;
    let n = check_full(full)?;
    let dim = full.dim();
    let channels = dissipator.channels()?;
    let (y0, density) = match initial {
        State::Pure(p) if dissipator.is_none() => (p.amplitudes.as_slice().to_vec(), false),
        State::Pure(p) => (p.to_density().as_slice().to_vec(), true),
        State::Density(DensityState::Full(m)) => (m.as_slice().to_vec(), true),
        State::Density(DensityState::Blocks(_)) => {
            return Err(Error::Shape("the oracle takes full-space density matrices".into()))
        }
    };
    if density && n > MAX_DENSITY_ORACLE_N {
        return Err(Error::OracleTooLarge {
            n,
            max: MAX_DENSITY_ORACLE_N,
        });
    }
    if y0.len() != if density { dim * dim } else { dim } {
        return Err(Error::Shape(format!("initial state does not match dimension {dim}")));
    }
    let sparse = SparseOps::new(full);
    let reference = SymmetricReference::new(full)?;
    let total = protocol.total_time();
    let outputs = config.output.times(total)?;
    let to_state = |y: &[Complex64]| -> State {
        if density {
            State::Density(DensityState::Full(DMatrix::from_column_slice(dim, dim, y)))
        } else {
            State::Pure(PureState::new(DVector::from_column_slice(y)))
        }
    };
    let minus_i = Complex64::new(0.0, -1.0);
    let mut records = Vec::with_capacity(outputs.len());
    let mut states = Vec::new();
    let (y, steps) = super::rk::dopri5(
        &legs(&protocol.segments(), 0.0, total),
        y0,
        outputs.as_slice(),
        config,
        |seg, t, y, dy| {
            let c = seg.coefficients(t);
            dy.fill(Complex64::new(0.0, 0.0));
            if density {
                sparse.apply_left(c.a, c.b, c.c, minus_i, y, dy, dim);
                sparse.apply_right(c.a, c.b, c.c, -minus_i, y, dy);
                add_dissipator(n, &channels, y, dy);
            } else {
                sparse.apply_left(c.a, c.b, c.c, minus_i, y, dy, 1);
            }
        },
        |t, y| {
            let state = to_state(y);
            let norm = state.norm_or_trace();
            if (norm - 1.0).abs() > DRIFT_TOLERANCE {
                return Err(Error::Integrator {
                    t,
                    reason: format!("norm or trace drifted to {norm}"),
                });
            }
            let r = protocol.reference_coefficients(t)?;
            let slice = reference.slice(r.a, r.b, r.c, 2, protocol.fraction(t));
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
        final_state: to_state(&y),
        steps,
    })
}

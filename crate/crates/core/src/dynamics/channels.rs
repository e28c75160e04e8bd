//! Local jump channels `sum_i L_i rho L_i^dagger - 1/2 {L_i^dagger L_i, rho}`
//! written on the block-diagonal representation.
//!
//! For one subgraph of `n` spins, `sum_i a_i X b_i^dagger` maps
//! `|J M><J M'|` to the sector `j'` with matrix elements
//!
//! `(n / d_n(j')) sum_k d_{n-1}(k) f_a(k; J M -> j' mu) f_b(k; J M' -> j' mu')`,
//!
//! where `k` runs over the spins of the remaining `n - 1` sites compatible with
//! both `J` and `j'`, `d_n(j)` counts multiplicities, and `f` recouples the
//! last spin with Clebsch-Gordan coefficients. Every such map moves each
//! matrix element to exactly one target element, so channels are stored as
//! row maps with per-row weights.

use std::sync::Arc;


use crate::error::Result;
use crate::spinspace::{degeneracy, BlockLayout, SectorTriple};

use super::{BlockDensity, Channel, LocalOp};

/// `<k, m - sigma; 1/2, sigma | j, m>` with all spins doubled.
pub fn clebsch_half(twice_k: i64, twice_j: i64, twice_m: i64, twice_sigma: i64) -> f64 {
    if (twice_m - twice_sigma).abs() > twice_k || twice_m.abs() > twice_j {
        return 0.0;
    }
    let k = twice_k as f64 / 2.0;
    let m = twice_m as f64 / 2.0;
    let den = 2.0 * k + 1.0;
    let plus = ((k + m + 0.5) / den).max(0.0).sqrt();
    let minus = ((k - m + 0.5) / den).max(0.0).sqrt();
    if twice_j == twice_k + 1 {
        if twice_sigma > 0 {
            plus
        } else {
            minus
        }
    } else if twice_j == twice_k - 1 {
        if twice_sigma > 0 {
            -minus
        } else {
            plus
        }
    } else {
        0.0
    }
}

impl LocalOp {
    /// Change of `2m` produced by the operator.
    fn twice_shift(&self) -> i64 {
        match self {
            LocalOp::Dephase => 0,
            LocalOp::Raise => 2,
            LocalOp::Lower => -2,
        }
    }

    /// `<sigma'| op |sigma>` for doubled projections.
    fn element(&self, twice_out: i64, twice_in: i64) -> f64 {
        match self {
            LocalOp::Dephase if twice_out == twice_in => twice_in as f64,
            LocalOp::Raise if twice_in == -1 && twice_out == 1 => 1.0,
            LocalOp::Lower if twice_in == 1 && twice_out == -1 => 1.0,
            _ => 0.0,
        }
    }

    /// Eigenvalue of `sum_i op_i^dagger op_i` on `|j, m>` of `n` spins.
    fn decay(&self, n: usize, twice_m: i64) -> f64 {
        let half_n = n as f64 / 2.0;
        let m = twice_m as f64 / 2.0;
        match self {
            LocalOp::Dephase => n as f64,
            LocalOp::Raise => half_n - m,
            LocalOp::Lower => half_n + m,
        }
    }
}

/// Recoupling amplitude `f(k; J M -> j' mu)` of a single-spin operator.
fn recoupling(op: LocalOp, twice_k: i64, twice_j_in: i64, twice_m_in: i64, twice_j_out: i64) -> f64 {
    let shift = op.twice_shift();
    let twice_m_out = twice_m_in + shift;
    let mut acc = 0.0;
    for twice_sigma in [-1i64, 1] {
        let twice_sigma_out = twice_sigma + shift;
        if twice_sigma_out.abs() != 1 {
            continue;
        }
        let e = op.element(twice_sigma_out, twice_sigma);
        if e == 0.0 {
            continue;
        }
        acc += clebsch_half(twice_k, twice_j_out, twice_m_out, twice_sigma_out)
            * clebsch_half(twice_k, twice_j_in, twice_m_in, twice_sigma)
            * e;
    }
    acc
}

#[derive(Debug, Clone)]
struct Transfer {
    source: usize,
    target: usize,
    /// Target row for every source row.
    rows: Vec<Option<usize>>,
    /// One weight vector per recoupling channel, indexed by source row.
    weights: Vec<Vec<f64>>,
}

impl Transfer {
    #[inline]
    fn pair_weight(&self, r: usize, c: usize) -> f64 {
        self.weights.iter().map(|w| w[r] * w[c]).sum()
    }
}

/// Dissipator acting on [`BlockDensity`] states.
#[derive(Debug, Clone)]
pub struct BlockDissipator {
    layout: Arc<BlockLayout>,
    transfers: Vec<Transfer>,
    /// Diagonal of `sum L^dagger L` per block.
    decay: Vec<Vec<f64>>,
    bound: f64,
}

fn factor_indices(sector: &SectorTriple, row: usize) -> [usize; 3] {
    let d = sector.dims();
    [row / (d[1] * d[2]), (row / d[2]) % d[1], row % d[2]]
}

fn row_index(dims: [usize; 3], idx: [usize; 3]) -> usize {
    (idx[0] * dims[1] + idx[1]) * dims[2] + idx[2]
}

impl BlockDissipator {
    pub fn new(layout: Arc<BlockLayout>, channels: &[Channel]) -> Result<Self> {
        let sizes = layout.split.sizes();
        let mut transfers = Vec::new();
        let mut decay = Vec::with_capacity(layout.len());
        for (source, sector) in layout.sectors.iter().enumerate() {
            let dim = sector.dim();
            let mut kappa = vec![0.0; dim];
            for ch in channels.iter().filter(|c| c.rate > 0.0) {
                for (a, &n) in sizes.iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    let tj = sector.twice_j[a] as i64;
                    for (r, k) in kappa.iter_mut().enumerate() {
                        let i = factor_indices(sector, r)[a] as i64;
                        *k += ch.rate * ch.op.decay(n, tj - 2 * i);
                    }
                    for tj_out in [tj - 2, tj, tj + 2] {
                        if tj_out < 0 || tj_out > n as i64 {
                            continue;
                        }
                        let mut target_sector = *sector;
                        target_sector.twice_j[a] = tj_out as usize;
                        let Some(target) = layout.index_of(&target_sector) else {
                            continue;
                        };
                        if let Some(t) = Self::transfer(sector, source, &target_sector, target, a, n, ch)? {
                            transfers.push(t);
                        }
                    }
                }
            }
            decay.push(kappa);
        }
        let bound = 2.0 * decay.iter().flatten().cloned().fold(0.0, f64::max);
        Ok(Self {
            layout,
            transfers,
            decay,
            bound,
        })
    }

    fn transfer(
        sector: &SectorTriple,
        source: usize,
        target_sector: &SectorTriple,
        target: usize,
        a: usize,
        n: usize,
        ch: &Channel,
    ) -> Result<Option<Transfer>> {
        let tj = sector.twice_j[a] as i64;
        let tj_out = target_sector.twice_j[a] as i64;
        let d_out = degeneracy(n, tj_out as usize)? as f64;
        let dims_out = target_sector.dims();
        let dim = sector.dim();

        let mut ks = Vec::new();
        for tk in [tj - 1, tj + 1] {
            if tk < 0 || tk > n as i64 - 1 || (tk - tj_out).abs() != 1 {
                continue;
            }
            let d_rest = degeneracy(n - 1, tk as usize)? as f64;
            ks.push((tk, (ch.rate * n as f64 * d_rest / d_out).sqrt()));
        }
        if ks.is_empty() {
            return Ok(None);
        }
        let shift = ch.op.twice_shift();
        let mut rows = vec![None; dim];
        let mut weights = vec![vec![0.0; dim]; ks.len()];
        let mut any = false;
        for r in 0..dim {
            let mut idx = factor_indices(sector, r);
            let twice_m = tj - 2 * idx[a] as i64;
            let twice_mu = twice_m + shift;
            if twice_mu.abs() > tj_out {
                continue;
            }
            idx[a] = ((tj_out - twice_mu) / 2) as usize;
            rows[r] = Some(row_index(dims_out, idx));
            for (w, &(tk, scale)) in weights.iter_mut().zip(&ks) {
                w[r] = scale * recoupling(ch.op, tk, tj, twice_m, tj_out);
                any |= w[r] != 0.0;
            }
        }
        Ok(any.then_some(Transfer {
            source,
            target,
            rows,
            weights,
        }))
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn is_trivial(&self) -> bool {
        self.transfers.is_empty() && self.bound == 0.0
    }

    /// `D(x)`, or its Euclidean adjoint.
    pub fn apply(&self, x: &BlockDensity, adjoint: bool) -> BlockDensity {
        let mut out = BlockDensity::zeros(self.layout.clone());
        for ((o, xb), kappa) in out.blocks.iter_mut().zip(&x.blocks).zip(&self.decay) {
            let d = xb.nrows();
            for c in 0..d {
                for r in 0..d {
                    o[(r, c)] = xb[(r, c)] * (-0.5 * (kappa[r] + kappa[c]));
                }
            }
        }
        for tr in &self.transfers {
            let d = tr.rows.len();
            if adjoint {
                let src = &x.blocks[tr.target];
                let dst = &mut out.blocks[tr.source];
                for c in 0..d {
                    let Some(tc) = tr.rows[c] else { continue };
                    for r in 0..d {
                        let Some(tr_row) = tr.rows[r] else { continue };
                        let w = tr.pair_weight(r, c);
                        dst[(r, c)] += src[(tr_row, tc)] * w;
                    }
                }
            } else {
                let src = &x.blocks[tr.source];
                let dst = &mut out.blocks[tr.target];
                for c in 0..d {
                    let Some(tc) = tr.rows[c] else { continue };
                    for r in 0..d {
                        let Some(tr_row) = tr.rows[r] else { continue };
                        let w = tr.pair_weight(r, c);
                        dst[(tr_row, tc)] += src[(r, c)] * w;
                    }
                }
            }
        }
        out
    }

    /// `exp(tau D) x` (or with the adjoint generator) by a Taylor series on
    /// substeps with `tau ||D|| <= 1/2`.
    pub fn exp_apply(&self, x: &BlockDensity, tau: f64, adjoint: bool) -> BlockDensity {
        if self.is_trivial() || tau == 0.0 {
            return x.clone();
        }
        let substeps = ((self.bound * tau.abs()) / 0.5).ceil().max(1.0) as usize;
        let dt = tau / substeps as f64;
        let mut current = x.clone();
        for _ in 0..substeps {
            let mut sum = current.clone();
            let mut term = current;
            for k in 1..=40 {
                term = self.apply(&term, adjoint);
                term.scale(dt / k as f64);
                sum.add_assign(&term);
                if term.full_norm() <= 1e-17 * sum.full_norm() {
                    break;
                }
            }
            current = sum;
        }
        current
    }
}

impl BlockDensity {
    pub fn scale(&mut self, factor: f64) {
        for b in &mut self.blocks {
            for z in b.iter_mut() {
                *z *= factor;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b;
        }
    }
}

//! Driver, problem and catalyst Hamiltonians, either on one spin-sector block
//! of the reduced space or on the full `2^N` space.
//!
//! Full-space basis states are indexed like [`SpinConfig::from_index`]: site 0
//! is the most significant bit and a set bit is spin up.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::problem::{MwisInstance, SpinConfig};
use crate::spinspace::{collective_operator, embed, BlockLayout, SectorTriple, SpinOp};

/// Largest system size for which full-space matrices are built.
pub const MAX_FULL_N: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    /// One `(j0, j1', jc)` block of the permutation-reduced space.
    Sector(SectorTriple),
    Full { n: usize },
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::Sector(s) => s.dim(),
            Space::Full { n } => 1 << n,
        }
    }
}

/// `Hx`, `Hz` and `Hc` on a common space. All three are real symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSet {
    pub hx: DMatrix<f64>,
    pub hz: DMatrix<f64>,
    /// Includes the coupling `j_xx`.
    pub hc: DMatrix<f64>,
    pub space: Space,
    pub instance: MwisInstance,
    pub jxx: f64,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.hx.nrows()
    }

    /// `A Hx + B Hz + C Hc`.
    pub fn assemble(&self, a: f64, b: f64, c: f64) -> DMatrix<f64> {
        let mut h = &self.hx * a + &self.hz * b;
        if c != 0.0 {
            h += &self.hc * c;
        }
        h
    }

    /// Lowest eigenvalue of [`Self::assemble`].
    pub fn ground_energy(&self, a: f64, b: f64, c: f64) -> f64 {
        self.assemble(a, b, c)
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_jxx(jxx: f64) -> Result<()> {
    if !jxx.is_finite() {
        return Err(Error::InvalidParameter {
            name: "j_xx",
            value: jxx,
            reason: "must be finite".into(),
        });
    }
    Ok(())
}

/// Operators on the fully symmetric sector, dimension `3(N^2 - 1)/4`.
pub fn build_reduced(instance: &MwisInstance, jxx: f64) -> Result<OperatorSet> {
    let layout = BlockLayout::new(instance.n)?;
    build_sector(instance, jxx, layout.symmetric_sector())
}

/// Operators on one sector block; the collective form is the same for every
/// block, only the spin lengths change.
pub fn build_sector(instance: &MwisInstance, jxx: f64, sector: SectorTriple) -> Result<OperatorSet> {
    check_jxx(jxx)?;
    let layout = BlockLayout::new(instance.n)?;
    if layout.index_of(&sector).is_none() {
        let bad = sector
            .twice_j
            .iter()
            .zip(layout.split.sizes())
            .find(|(&tj, n)| tj > *n || (n - tj) % 2 != 0)
            .map(|(&tj, n)| (n, tj))
            .unwrap_or((instance.n, sector.twice_j[0]));
        return Err(Error::InvalidSector {
            n: bad.0,
            twice_j: bad.1,
        });
    }
    let bases = sector.bases();
    let dims = sector.dims();
    let op = |k: usize, which: SpinOp| collective_operator(bases[k], which);

    let sz = [op(0, SpinOp::Sz), op(1, SpinOp::Sz), op(2, SpinOp::Sz)];
    let sx = [op(0, SpinOp::Sx), op(1, SpinOp::Sx), op(2, SpinOp::Sx)];

    let s0z = embed([Some(&sz[0]), None, None], dims)?;
    let s1z = embed([None, Some(&sz[1]), None], dims)? + embed([None, None, Some(&sz[2])], dims)?;
    let hz = &s0z * (2.0 * instance.h0) + &s1z * (2.0 * instance.h1) + (&s0z * &s1z) * (4.0 * instance.jzz);

    let hx = (embed([Some(&sx[0]), None, None], dims)?
        + embed([None, Some(&sx[1]), None], dims)?
        + embed([None, None, Some(&sx[2])], dims)?)
        * -2.0;

    let sx2 = op(2, SpinOp::Sx2);
    let dc = dims[2];
    let pair = sx2 * 2.0 - DMatrix::<f64>::identity(dc, dc);
    let hc = embed([None, None, Some(&pair)], dims)? * jxx;

    Ok(OperatorSet {
        hx,
        hz,
        hc,
        space: Space::Sector(sector),
        instance: instance.clone(),
        jxx,
    })
}

/// Operators on the full `2^N` space built site by site. The catalyst couples
/// the first two `G1` sites, `n0` and `n0 + 1`.
pub fn build_full(instance: &MwisInstance, jxx: f64) -> Result<OperatorSet> {
    check_jxx(jxx)?;
    let n = instance.n;
    if n > MAX_FULL_N {
        return Err(Error::OracleTooLarge { n, max: MAX_FULL_N });
    }
    let dim = 1usize << n;
    let bit = |site: usize| 1usize << (n - 1 - site);

    let mut hz = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        hz[(k, k)] = instance.ising_energy(&SpinConfig::from_index(k, n))?;
    }

    let mut hx = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        for site in 0..n {
            hx[(k ^ bit(site), k)] -= 1.0;
        }
    }

    let mut hc = DMatrix::<f64>::zeros(dim, dim);
    let flip = bit(instance.n0) | bit(instance.n0 + 1);
    for k in 0..dim {
        hc[(k ^ flip, k)] = jxx;
    }

    Ok(OperatorSet {
        hx,
        hz,
        hc,
        space: Space::Full { n },
        instance: instance.clone(),
        jxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{build_instance, RawParams};
    use proptest::prelude::*;

    fn instance(n: usize) -> MwisInstance {
        build_instance(n, RawParams::default()).unwrap()
    }

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().cloned().collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn reduced_dimension() {
        for n in [3, 5, 7, 9, 11] {
            let ops = build_reduced(&instance(n), 1.0).unwrap();
            assert_eq!(ops.dim(), 3 * (n * n - 1) / 4);
        }
    }

    #[test]
    fn driver_ground_energy_is_minus_n() {
        for n in [3, 5, 7, 9, 11] {
            let ops = build_reduced(&instance(n), 0.0).unwrap();
            assert!((ops.ground_energy(1.0, 0.0, 0.0) + n as f64).abs() < 1e-10);
        }
        for n in [3, 5, 7] {
            let ops = build_full(&instance(n), 0.0).unwrap();
            assert!((ops.ground_energy(1.0, 0.0, 0.0) + n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn problem_ground_energy_matches_brute_force() {
        for n in [5, 7] {
            let inst = instance(n);
            let (_, e_min) = inst.brute_force_ground().unwrap();
            let e_gs = inst.ising_energy(&inst.ground_config()).unwrap();
            assert!((e_min - e_gs).abs() < 1e-12);
            let ops = build_reduced(&inst, 0.7).unwrap();
            let e = ops.ground_energy(0.0, 1.0, 0.0);
            assert!((e - e_min).abs() < 1e-9, "n={n}: {e} vs {e_min}");
        }
    }

    #[test]
    fn zero_coupling_gives_zero_catalyst() {
        let ops = build_reduced(&instance(7), 0.0).unwrap();
        assert_eq!(max_abs(&ops.hc), 0.0);
        let full = build_full(&instance(5), 0.0).unwrap();
        assert_eq!(max_abs(&full.hc), 0.0);
    }

    #[test]
    fn full_problem_spectrum_lists_every_configuration() {
        let inst = instance(5);
        let ops = build_full(&inst, 0.0).unwrap();
        let spectrum = sorted_eigenvalues(ops.hz.clone());
        let mut energies: Vec<f64> = (0..32)
            .map(|k| inst.ising_energy(&SpinConfig::from_index(k, 5)).unwrap())
            .collect();
        energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in spectrum.iter().zip(&energies) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn reduced_spectrum_is_subset_of_full_spectrum() {
        let inst = instance(5);
        let jxx = 1.3;
        let red = build_reduced(&inst, jxx).unwrap();
        let full = build_full(&inst, jxx).unwrap();
        let (a, b) = (0.5, 0.5);
        let c = a * b;
        let full_ev = sorted_eigenvalues(full.assemble(a, b, c));
        let red_ev = sorted_eigenvalues(red.assemble(a, b, c));
        assert_eq!(red_ev.len(), 18);
        assert_eq!(full_ev.len(), 32);
        // every reduced level appears in the full spectrum with at least the
        // same multiplicity
        let mut used = vec![false; full_ev.len()];
        for e in &red_ev {
            let slot = full_ev
                .iter()
                .enumerate()
                .position(|(i, f)| !used[i] && (e - f).abs() < 1e-9);
            let slot = slot.unwrap_or_else(|| panic!("level {e} missing"));
            used[slot] = true;
        }
    }

    #[test]
    fn all_sector_blocks_reproduce_full_spectrum() {
        let inst = instance(5);
        let jxx = 0.9;
        let layout = BlockLayout::new(5).unwrap();
        let (a, b, c) = (0.3, 0.7, 0.21);
        let mut collected = Vec::new();
        for (sector, &deg) in layout.sectors.iter().zip(&layout.degeneracies) {
            let ops = build_sector(&inst, jxx, *sector).unwrap();
            for e in sorted_eigenvalues(ops.assemble(a, b, c)) {
                for _ in 0..deg {
                    collected.push(e);
                }
            }
        }
        collected.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let full = sorted_eigenvalues(build_full(&inst, jxx).unwrap().assemble(a, b, c));
        assert_eq!(collected.len(), full.len());
        for (x, y) in collected.iter().zip(&full) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn assemble_examples() {
        let ops = build_reduced(&instance(5), 1.1).unwrap();
        assert_eq!(ops.assemble(1.0, 0.0, 0.0), ops.hx);
        assert_eq!(ops.assemble(0.0, 1.0, 0.0), ops.hz);
        let mid = ops.assemble(0.5, 0.5, 0.25);
        let direct = &ops.hx * 0.5 + &ops.hz * 0.5 + &ops.hc * 0.25;
        assert!(max_abs(&(mid - direct)) < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_reduced(&instance(5), f64::NAN).is_err());
        assert!(matches!(
            build_full(&instance(15), 0.0),
            Err(Error::OracleTooLarge { n: 15, .. })
        ));
        let bad = SectorTriple { twice_j: [1, 1, 2] };
        assert!(matches!(
            build_sector(&instance(5), 0.0, bad),
            Err(Error::InvalidSector { .. })
        ));
    }

    proptest! {
        #[test]
        fn assemble_is_symmetric(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64, jxx in -4.0..4.0f64) {
            let ops = build_reduced(&instance(7), jxx).unwrap();
            let h = ops.assemble(a, b, c);
            prop_assert!(max_abs(&(&h - h.transpose())) < 1e-12);
        }
    }
}

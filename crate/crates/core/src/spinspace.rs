//! Permutation-symmetric spaces for the three subgraphs `G0`, `G1'` and `Gc`.
//!
//! Spin quantum numbers are stored doubled (`twice_j = 2j`) so that
//! half-integer sectors stay exact. Within a sector the basis is ordered by
//! descending `m`; product indices follow the Kronecker convention
//! `(k0 * d1 + k1) * dc + kc`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Sizes of the three permutation-invariant subgraphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubgraphSplit {
    pub n0: usize,
    /// `G1` minus the two catalyst sites.
    pub n1p: usize,
    /// The catalyst pair, always 2.
    pub nc: usize,
}

impl SubgraphSplit {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::InvalidSize {
                n,
                reason: "system size must be odd and at least 3",
            });
        }
        let n1 = n.div_ceil(2);
        Ok(Self {
            n0: (n - 1) / 2,
            n1p: n1 - 2,
            nc: 2,
        })
    }

    pub fn sizes(&self) -> [usize; 3] {
        [self.n0, self.n1p, self.nc]
    }

    pub fn total(&self) -> usize {
        self.n0 + self.n1p + self.nc
    }
}

/// Allowed `2j` values for `n` spins, largest first.
pub fn allowed_twice_j(n: usize) -> Vec<usize> {
    (0..=n / 2).map(|k| n - 2 * k).collect()
}

fn check_sector(n: usize, twice_j: usize) -> Result<()> {
    if twice_j > n || !(n - twice_j).is_multiple_of(2) {
        return Err(Error::InvalidSector { n, twice_j });
    }
    Ok(())
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of times the spin-`j` irrep occurs among `n` spins-1/2,
/// `(2j+1) n! / ((n/2+j+1)! (n/2-j)!)`.
pub fn degeneracy(n: usize, twice_j: usize) -> Result<u64> {
    check_sector(n, twice_j)?;
    let lower = ((n - twice_j) / 2) as u64;
    let upper = ((n + twice_j) / 2 + 1) as u128;
    let d = binomial(n as u64, lower) * (twice_j as u128 + 1) / upper;
    Ok(d as u64)
}

/// Dimension of the fully symmetric product space, `3(N^2 - 1)/4`.
pub fn symmetric_dimension(n: usize) -> Result<usize> {
    let split = SubgraphSplit::new(n)?;
    Ok(split.sizes().iter().map(|&s| s + 1).product())
}

/// Number of density-matrix entries kept for one subgraph,
/// `sum_j (2j+1)^2 = (n+1)(n+2)(n+3)/6`.
pub fn liouville_dimension(n: usize) -> usize {
    (n + 1) * (n + 2) * (n + 3) / 6
}

/// A single spin-`j` sector with basis `|j, m>`, `m` descending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DickeBasis {
    pub twice_j: usize,
}

impl DickeBasis {
    pub fn new(twice_j: usize) -> Self {
        Self { twice_j }
    }

    /// Symmetric (maximal `j`) sector for `n` spins.
    pub fn symmetric(n: usize) -> Self {
        Self { twice_j: n }
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.twice_j + 1
    }

    /// `m` of the `k`-th basis vector.
    pub fn m(&self, k: usize) -> f64 {
        (self.twice_j as f64 - 2.0 * k as f64) / 2.0
    }

    pub fn ms(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim()).map(|k| self.m(k))
    }
}

/// Collective spin operators on one Dicke sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinOp {
    Sz,
    Sx,
    Splus,
    Sminus,
    /// Matrix square of `Sx`.
    Sx2,
}

impl FromStr for SpinOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sz" => Ok(Self::Sz),
            "sx" => Ok(Self::Sx),
            "splus" | "s+" => Ok(Self::Splus),
            "sminus" | "s-" => Ok(Self::Sminus),
            "sx2" | "sx^2" => Ok(Self::Sx2),
            _ => Err(Error::UnknownOperator(s.to_string())),
        }
    }
}

impl fmt::Display for SpinOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Sz => "sz",
            Self::Sx => "sx",
            Self::Splus => "splus",
            Self::Sminus => "sminus",
            Self::Sx2 => "sx2",
        };
        f.write_str(name)
    }
}

/// `<j, m+1| S+ |j, m> = sqrt((j - m)(j + m + 1))`.
pub fn ladder_coefficient(j: f64, m: f64) -> f64 {
    ((j - m) * (j + m + 1.0)).max(0.0).sqrt()
}

pub fn collective_operator(basis: DickeBasis, op: SpinOp) -> DMatrix<f64> {
    let d = basis.dim();
    let j = basis.j();
    match op {
        SpinOp::Sz => DMatrix::from_fn(d, d, |r, c| if r == c { basis.m(r) } else { 0.0 }),
        SpinOp::Splus => DMatrix::from_fn(d, d, |r, c| {
            // row r has m one larger than column c
            if c == r + 1 {
                ladder_coefficient(j, basis.m(c))
            } else {
                0.0
            }
        }),
        SpinOp::Sminus => collective_operator(basis, SpinOp::Splus).transpose(),
        SpinOp::Sx => {
            let sp = collective_operator(basis, SpinOp::Splus);
            (&sp + sp.transpose()) * 0.5
        }
        SpinOp::Sx2 => {
            let sx = collective_operator(basis, SpinOp::Sx);
            &sx * &sx
        }
    }
}

/// Kronecker embedding of per-subgraph operators in the order `(G0, G1', Gc)`;
/// `None` stands for the identity of the given dimension.
pub fn embed(ops: [Option<&DMatrix<f64>>; 3], dims: [usize; 3]) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::<f64>::identity(1, 1);
    for (op, &d) in ops.iter().zip(dims.iter()) {
        let factor = match op {
            Some(m) => {
                if m.nrows() != d || m.ncols() != d {
                    return Err(Error::Shape(format!(
                        "operator is {}x{}, factor dimension is {d}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                (*m).clone()
            }
            None => DMatrix::identity(d, d),
        };
        out = out.kronecker(&factor);
    }
    Ok(out)
}

/// One block of the block-diagonal density matrix: a `2j` value per subgraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorTriple {
    pub twice_j: [usize; 3],
}

impl SectorTriple {
    pub fn bases(&self) -> [DickeBasis; 3] {
        self.twice_j.map(DickeBasis::new)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.twice_j.map(|t| t + 1)
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }
}

/// Block bookkeeping for permutation-invariant density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub split: SubgraphSplit,
    /// Sectors in lexicographic order of descending `2j`; the fully symmetric
    /// sector is always first.
    pub sectors: Vec<SectorTriple>,
    /// Product of the per-subgraph degeneracies for each sector.
    pub degeneracies: Vec<u64>,
}

impl BlockLayout {
    pub fn new(n: usize) -> Result<Self> {
        let split = SubgraphSplit::new(n)?;
        let [a, b, c] = split.sizes();
        let mut sectors = Vec::new();
        let mut degeneracies = Vec::new();
        for &j0 in &allowed_twice_j(a) {
            for &j1 in &allowed_twice_j(b) {
                for &jc in &allowed_twice_j(c) {
                    sectors.push(SectorTriple {
                        twice_j: [j0, j1, jc],
                    });
                    degeneracies.push(degeneracy(a, j0)? * degeneracy(b, j1)? * degeneracy(c, jc)?);
                }
            }
        }
        Ok(Self {
            split,
            sectors,
            degeneracies,
        })
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn symmetric_sector(&self) -> SectorTriple {
        self.sectors[0]
    }

    pub fn index_of(&self, sector: &SectorTriple) -> Option<usize> {
        self.sectors.iter().position(|s| s == sector)
    }

    /// Total number of stored density-matrix entries.
    pub fn liouville_dimension(&self) -> usize {
        self.sectors.iter().map(|s| s.dim() * s.dim()).sum()
    }

    /// Dimension of the full Hilbert space, recovered from degeneracies.
    pub fn hilbert_dimension(&self) -> u64 {
        self.sectors
            .iter()
            .zip(&self.degeneracies)
            .map(|(s, &d)| d * s.dim() as u64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    #[test]
    fn symmetric_dimensions() {
        assert_eq!(symmetric_dimension(3).unwrap(), 6);
        assert_eq!(symmetric_dimension(5).unwrap(), 18);
        assert_eq!(symmetric_dimension(11).unwrap(), 90);
        for n in (3..=21).step_by(2) {
            assert_eq!(symmetric_dimension(n).unwrap(), 3 * (n * n - 1) / 4);
        }
        assert!(symmetric_dimension(4).is_err());
    }

    #[test]
    fn degeneracy_examples() {
        assert_eq!(degeneracy(2, 2).unwrap(), 1);
        assert_eq!(degeneracy(2, 0).unwrap(), 1);
        assert_eq!(degeneracy(4, 2).unwrap(), 3);
        assert_eq!(degeneracy(4, 0).unwrap(), 2);
        assert_eq!(degeneracy(1, 1).unwrap(), 1);
        assert!(degeneracy(4, 3).is_err());
        assert!(degeneracy(4, 6).is_err());
    }

    #[test]
    fn completeness_sum_rule() {
        for n in 0..=16 {
            let total: u64 = allowed_twice_j(n)
                .iter()
                .map(|&tj| degeneracy(n, tj).unwrap() * (tj as u64 + 1))
                .sum();
            assert_eq!(total, 1u64 << n, "n={n}");
        }
    }

    #[test]
    fn liouville_dimension_matches_enumeration() {
        for n in 0..=6 {
            let direct: usize = allowed_twice_j(n).iter().map(|&t| (t + 1) * (t + 1)).sum();
            assert_eq!(liouville_dimension(n), direct);
        }
    }

    #[test]
    fn spin_half_sx() {
        let sx = collective_operator(DickeBasis::new(1), SpinOp::Sx);
        assert_eq!(sx, DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn spin_one_ladder() {
        let sp = collective_operator(DickeBasis::new(2), SpinOp::Splus);
        // |1,1> is index 0, |1,0> index 1
        assert!((sp[(0, 1)] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn angular_momentum_algebra() {
        for tj in 0..=8 {
            let b = DickeBasis::new(tj);
            let sz = collective_operator(b, SpinOp::Sz);
            let sp = collective_operator(b, SpinOp::Splus);
            let sm = collective_operator(b, SpinOp::Sminus);
            let sx = collective_operator(b, SpinOp::Sx);
            let c = &sz * &sp - &sp * &sz;
            assert!(max_abs(&(c - &sp)) < 1e-12);
            let c = &sz * &sm - &sm * &sz;
            assert!(max_abs(&(c + &sm)) < 1e-12);
            // [S+, S-] = 2 Sz
            let c = &sp * &sm - &sm * &sp;
            assert!(max_abs(&(c - &sz * 2.0)) < 1e-12);
            // S^2 = Sx^2 + Sy^2 + Sz^2 with Sy^2 = -(S+ - S-)^2 / 4
            let diff = &sp - &sm;
            let sy2 = -(&diff * &diff) * 0.25;
            let s2 = collective_operator(b, SpinOp::Sx2) + sy2 + &sz * &sz;
            let j = b.j();
            let expected = DMatrix::<f64>::identity(b.dim(), b.dim()) * (j * (j + 1.0));
            assert!(max_abs(&(s2 - expected)) < 1e-12);
            assert!(max_abs(&(&sx * &sx - collective_operator(b, SpinOp::Sx2))) < 1e-15);
        }
    }

    #[test]
    fn operator_names() {
        assert_eq!("Sx2".parse::<SpinOp>().unwrap(), SpinOp::Sx2);
        assert!(matches!("sy".parse::<SpinOp>(), Err(Error::UnknownOperator(_))));
    }

    #[test]
    fn embedding() {
        let split = SubgraphSplit::new(5).unwrap();
        let bases = split.sizes().map(DickeBasis::symmetric);
        let dims = bases.map(|b| b.dim());
        let id = embed([None, None, None], dims).unwrap();
        assert_eq!(id, DMatrix::identity(18, 18));
        let sz0 = collective_operator(bases[0], SpinOp::Sz);
        let e = embed([Some(&sz0), None, None], dims).unwrap();
        assert!(e.trace().abs() < 1e-15);
        assert!(embed([None, Some(&sz0), None], dims).is_err());

        let szs: Vec<_> = bases
            .iter()
            .map(|&b| collective_operator(b, SpinOp::Sz))
            .collect();
        let total = embed([Some(&szs[0]), None, None], dims).unwrap()
            + embed([None, Some(&szs[1]), None], dims).unwrap()
            + embed([None, None, Some(&szs[2])], dims).unwrap();
        let eig = total.symmetric_eigenvalues();
        for v in eig.iter() {
            assert!(v.abs() <= 2.5 + 1e-12);
            // five spins: total m is a half-odd integer
            let twice = v * 2.0;
            assert!((twice - twice.round()).abs() < 1e-12);
            assert_eq!(twice.round().rem_euclid(2.0), 1.0);
        }
    }

    #[test]
    fn block_layout() {
        let layout = BlockLayout::new(5).unwrap();
        // n0 = 2: j in {1, 0}; n1' = 1: {1/2}; nc = 2: {1, 0}
        assert_eq!(layout.len(), 4);
        assert_eq!(layout.symmetric_sector().twice_j, [2, 1, 2]);
        assert_eq!(layout.hilbert_dimension(), 32);
        assert_eq!(
            layout.liouville_dimension(),
            liouville_dimension(2) * liouville_dimension(1) * liouville_dimension(2)
        );
        for n in (3..=13).step_by(2) {
            let l = BlockLayout::new(n).unwrap();
            assert_eq!(l.hilbert_dimension(), 1u64 << n);
            assert_eq!(l.symmetric_sector().dim(), symmetric_dimension(n).unwrap());
        }
    }
}

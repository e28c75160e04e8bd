//! MWIS instances on the complete bipartite graph `K_{n0,n1}` and their
//! classical energy functions.
//!
//! Sites are numbered `0..n0` for the heavier subgraph `G0` and `n0..N` for
//! `G1`. Every `G0` vertex is joined to every `G1` vertex, which realizes the
//! connectivities `c0 = n1` and `c1 = n0` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Size-independent, dimensionless instance parameters before scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub jzz_prime: f64,
    pub w0_prime: f64,
    pub w1_prime: f64,
    pub e_scale: f64,
}

impl Default for RawParams {
    fn default() -> Self {
        Self {
            jzz_prime: 5.33,
            w0_prime: 1.01,
            w1_prime: 1.0,
            e_scale: 15.0,
        }
    }
}

impl RawParams {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &'static str, value: f64, ok: bool, reason: &str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: reason.to_string(),
                })
            }
        };
        check("jzz_prime", self.jzz_prime, self.jzz_prime > 0.0, "must be positive")?;
        check("e_scale", self.e_scale, self.e_scale > 0.0, "must be positive")?;
        check("w1_prime", self.w1_prime, self.w1_prime > 0.0, "must be positive")?;
        check(
            "w0_prime",
            self.w0_prime,
            self.w0_prime > self.w1_prime,
            "must exceed w1_prime so that G0 is the unique MWIS",
        )
    }
}

/// Which side of the bipartition a site belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    G0,
    G1,
}

/// A fully scaled MWIS instance for one odd system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwisInstance {
    pub n: usize,
    pub n0: usize,
    pub n1: usize,
    /// Normalization constant `K`.
    pub k: f64,
    pub jzz: f64,
    pub omega0: f64,
    pub omega1: f64,
    pub w0: f64,
    pub w1: f64,
    /// Effective longitudinal field on each `G0` site.
    pub h0: f64,
    /// Effective longitudinal field on each `G1` site.
    pub h1: f64,
    pub raw: RawParams,
}

/// Build the scaled instance for `n` spins.
pub fn build_instance(n: usize, params: RawParams) -> Result<MwisInstance> {
    if n < 3 {
        return Err(Error::InvalidSize {
            n,
            reason: "need at least 3 spins",
        });
    }
    if n.is_multiple_of(2) {
        return Err(Error::InvalidSize {
            n,
            reason: "system size must be odd",
        });
    }
    params.validate()?;

    let n0 = (n - 1) / 2;
    let n1 = n.div_ceil(2);
    let (n0f, n1f) = (n0 as f64, n1 as f64);
    let denom = 4.0 * (n0f * n1f * params.jzz_prime - 1.0);
    if denom <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "jzz_prime",
            value: params.jzz_prime,
            reason: format!("n0*n1*jzz_prime must exceed 1 (N={n})"),
        });
    }
    let k = (n0f + n1f) / denom;
    let scale = params.e_scale * k;
    let jzz = scale * params.jzz_prime;
    let w0 = scale * params.w0_prime;
    let w1 = scale * params.w1_prime;
    let omega0 = w0 / n0f;
    let omega1 = w1 / n1f;

    Ok(MwisInstance {
        n,
        n0,
        n1,
        k,
        jzz,
        omega0,
        omega1,
        w0,
        w1,
        h0: n1f * jzz - 2.0 * w0 / n0f,
        h1: n0f * jzz - 2.0 * w1 / n1f,
        raw: params,
    })
}

/// A classical spin configuration, one `±1` entry per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::Shape(format!("spin value {bad} is not +1 or -1")));
        }
        Ok(Self(values))
    }

    /// Spin configuration `s_i = 2 x_i - 1` for 0/1 occupation bits.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Shape(format!("bit value {bad} is not 0 or 1")));
        }
        Ok(Self(bits.iter().map(|&b| 2 * b as i8 - 1).collect()))
    }

    /// Configuration encoded in the low `n` bits of `index`, site 0 being the
    /// most significant bit; a set bit is spin up.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self(
            (0..n)
                .map(|i| if index >> (n - 1 - i) & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl MwisInstance {
    pub fn side(&self, site: usize) -> Side {
        if site < self.n0 {
            Side::G0
        } else {
            Side::G1
        }
    }

    pub fn weight(&self, site: usize) -> f64 {
        match self.side(site) {
            Side::G0 => self.omega0,
            Side::G1 => self.omega1,
        }
    }

    /// Vertex degree in `K_{n0,n1}`.
    pub fn connectivity(&self, site: usize) -> usize {
        match self.side(site) {
            Side::G0 => self.n1,
            Side::G1 => self.n0,
        }
    }

    /// Longitudinal field `c_i j_zz - 2 w_i` of the Ising form.
    pub fn field(&self, site: usize) -> f64 {
        self.connectivity(site) as f64 * self.jzz - 2.0 * self.weight(site)
    }

    /// All edges `(i, j)` with `i` in `G0` and `j` in `G1`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n0).flat_map(move |i| (self.n0..self.n).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.n0 * self.n1
    }

    /// Lower bound the QUBO penalty must exceed, `2 max_i w_i`.
    pub fn penalty_bound(&self) -> f64 {
        2.0 * self.omega0.max(self.omega1)
    }

    /// QUBO energy `-sum w_i x_i + lambda sum_E x_i x_j`.
    pub fn qubo_energy(&self, bits: &[u8], lambda: f64) -> Result<f64> {
        if bits.len() != self.n {
            return Err(Error::Shape(format!(
                "expected {} bits, got {}",
                self.n,
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Shape("bits must be 0 or 1".into()));
        }
        let bound = self.penalty_bound();
        if !(lambda > bound) {
            return Err(Error::PenaltyTooWeak { lambda, bound });
        }
        let linear: f64 = (0..self.n).map(|i| -self.weight(i) * bits[i] as f64).sum();
        let penalty: f64 = self
            .edges()
            .map(|(i, j)| (bits[i] * bits[j]) as f64)
            .sum();
        Ok(linear + lambda * penalty)
    }

    /// Ising energy `sum_i (c_i j_zz - 2 w_i) s_i + j_zz sum_E s_i s_j`.
    pub fn ising_energy(&self, config: &SpinConfig) -> Result<f64> {
        if config.len() != self.n {
            return Err(Error::Shape(format!(
                "expected {} spins, got {}",
                self.n,
                config.len()
            )));
        }
        let s = config.values();
        let linear: f64 = (0..self.n).map(|i| self.field(i) * s[i] as f64).sum();
        let coupling: f64 = self.edges().map(|(i, j)| (s[i] * s[j]) as f64).sum();
        Ok(linear + self.jzz * coupling)
    }

    /// The MWIS configuration: spin up on `G0`, spin down on `G1`.
    pub fn ground_config(&self) -> SpinConfig {
        SpinConfig(
            (0..self.n)
                .map(|i| if i < self.n0 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Constant `c` with `qubo(x) = ising(2x - 1) / 4 + c` when `lambda = j_zz`.
    ///
    /// The Ising form carries no 1/4 prefactor, so the two energies are related
    /// by an affine map rather than a pure shift.
    pub fn qubo_ising_offset(&self) -> f64 {
        let weights: f64 = (0..self.n).map(|i| self.weight(i)).sum();
        -0.5 * weights + 0.25 * self.jzz * self.edge_count() as f64
    }

    /// Exhaustive minimizer of [`Self::ising_energy`]; ties resolve to the
    /// smallest configuration index.
    pub fn brute_force_ground(&self) -> Result<(SpinConfig, f64)> {
        if self.n > 20 {
            return Err(Error::InvalidSize {
                n: self.n,
                reason: "brute force limited to N <= 20",
            });
        }
        let mut best: Option<(SpinConfig, f64)> = None;
        for index in 0..(1usize << self.n) {
            let config = SpinConfig::from_index(index, self.n);
            let e = self.ising_energy(&config)?;
            if best.as_ref().is_none_or(|(_, b)| e < *b) {
                best = Some((config, e));
            }
        }
        Ok(best.expect("at least one configuration"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self =
            serde_json::from_str(text).map_err(|e| Error::Shape(format!("instance JSON: {e}")))?;
        // Recompute from the raw parameters so a hand-edited file cannot carry
        // inconsistent derived fields.
        let rebuilt = build_instance(inst.n, inst.raw)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        let consistent = rebuilt.n0 == inst.n0
            && rebuilt.n1 == inst.n1
            && close(rebuilt.k, inst.k)
            && close(rebuilt.jzz, inst.jzz)
            && close(rebuilt.omega0, inst.omega0)
            && close(rebuilt.omega1, inst.omega1)
            && close(rebuilt.w0, inst.w0)
            && close(rebuilt.w1, inst.w1)
            && close(rebuilt.h0, inst.h0)
            && close(rebuilt.h1, inst.h1);
        if !consistent {
            return Err(Error::Shape(
                "instance fields are inconsistent with its raw parameters".into(),
            ));
        }
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(n: usize) -> MwisInstance {
        build_instance(n, RawParams::default()).unwrap()
    }

    fn bits_of(index: usize, n: usize) -> Vec<u8> {
        (0..n).map(|i| (index >> (n - 1 - i) & 1) as u8).collect()
    }

    #[test]
    fn subgraph_sizes() {
        let i = inst(5);
        assert_eq!((i.n0, i.n1), (2, 3));
        let i = inst(3);
        assert_eq!((i.n0, i.n1), (1, 2));
    }

    #[test]
    fn scaling_constants_match_exact_rational_evaluation() {
        // Values from exact rational arithmetic of K = (n0+n1)/(4(n0 n1 j' - 1)).
        let i = inst(5);
        assert!((i.k - 0.040348612007746934).abs() < 1e-15);
        assert!((i.jzz - 3.225871530019367).abs() < 1e-13);
        assert!((i.omega0 - 0.305640735958683).abs() < 1e-14);
        assert!((i.omega1 - 0.20174306003873466).abs() < 1e-14);
        let i = inst(7);
        assert!((i.k - 0.027795425667090215).abs() < 1e-15);
        assert!((i.jzz - 2.222244282083863).abs() < 1e-13);
    }

    #[test]
    fn effective_fields() {
        let i = inst(9);
        assert!((i.h0 - (i.n1 as f64 * i.jzz - 2.0 * i.w0 / i.n0 as f64)).abs() < 1e-14);
        assert!((i.h1 - (i.n0 as f64 * i.jzz - 2.0 * i.w1 / i.n1 as f64)).abs() < 1e-14);
        assert!((i.field(0) - i.h0).abs() < 1e-14);
        assert!((i.field(i.n - 1) - i.h1).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_sizes_and_params() {
        assert!(matches!(
            build_instance(4, RawParams::default()),
            Err(Error::InvalidSize { .. })
        ));
        assert!(matches!(
            build_instance(1, RawParams::default()),
            Err(Error::InvalidSize { .. })
        ));
        let swapped = RawParams {
            w0_prime: 1.0,
            w1_prime: 1.01,
            ..RawParams::default()
        };
        assert!(build_instance(5, swapped).is_err());
    }

    #[test]
    fn graph_is_complete_bipartite() {
        let i = inst(7);
        let mut degree = vec![0usize; i.n];
        for (a, b) in i.edges() {
            degree[a] += 1;
            degree[b] += 1;
        }
        for (site, &d) in degree.iter().enumerate() {
            assert_eq!(d, i.connectivity(site));
        }
        assert_eq!(i.edges().count(), 12);
    }

    #[test]
    fn qubo_examples() {
        let i = inst(5);
        let lambda = i.jzz;
        assert_eq!(i.qubo_energy(&[0; 5], lambda).unwrap(), 0.0);
        let g0_only = [1, 1, 0, 0, 0];
        assert!((i.qubo_energy(&g0_only, lambda).unwrap() + i.w0).abs() < 1e-14);
        let one_edge = [1, 0, 1, 0, 0];
        let expected = -i.omega0 - i.omega1 + lambda;
        assert!((i.qubo_energy(&one_edge, lambda).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn qubo_rejects_weak_penalty() {
        let i = inst(5);
        let bound = i.penalty_bound();
        assert!(matches!(
            i.qubo_energy(&[1, 0, 0, 0, 0], bound * 0.5),
            Err(Error::PenaltyTooWeak { .. })
        ));
    }

    #[test]
    fn qubo_and_ising_are_affinely_related() {
        for n in (3..=13).step_by(2) {
            let i = inst(n);
            let offset = i.qubo_ising_offset();
            for index in 0..(1usize << n) {
                let bits = bits_of(index, n);
                let q = i.qubo_energy(&bits, i.jzz).unwrap();
                let s = i.ising_energy(&SpinConfig::from_bits(&bits).unwrap()).unwrap();
                assert!(
                    (q - s / 4.0 - offset).abs() < 1e-11,
                    "N={n} index={index}: {q} vs {s}/4 + {offset}"
                );
            }
        }
    }

    #[test]
    fn ground_config_is_brute_force_minimum() {
        for n in (3..=11).step_by(2) {
            let i = inst(n);
            let (best, e) = i.brute_force_ground().unwrap();
            assert_eq!(best, i.ground_config(), "N={n}");
            assert!((i.ising_energy(&i.ground_config()).unwrap() - e).abs() < 1e-12);
        }
        assert_eq!(inst(5).ground_config().values(), &[1, 1, -1, -1, -1]);
        assert_eq!(inst(3).ground_config().values(), &[1, -1, -1]);
    }

    #[test]
    fn single_g0_flip_raises_energy() {
        let i = inst(5);
        let ground = i.ground_config();
        let e0 = i.ising_energy(&ground).unwrap();
        let mut flipped = ground.values().to_vec();
        flipped[0] = -1;
        let e1 = i.ising_energy(&SpinConfig::new(flipped).unwrap()).unwrap();
        assert!(e1 > e0);
    }

    #[test]
    fn json_round_trip_and_consistency_check() {
        let i = inst(7);
        let back = MwisInstance::from_json(&i.to_json()).unwrap();
        assert_eq!(back, i);
        let mut tampered = i.clone();
        tampered.jzz *= 1.5;
        assert!(MwisInstance::from_json(&tampered.to_json()).is_err());
    }

    #[test]
    fn spin_config_validation() {
        assert!(SpinConfig::new(vec![1, 0, -1]).is_err());
        assert!(SpinConfig::from_bits(&[0, 2]).is_err());
        assert_eq!(SpinConfig::from_index(0b101, 3).values(), &[1, -1, 1]);
    }
}

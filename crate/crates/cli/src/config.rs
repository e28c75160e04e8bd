//! Experiment configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use dqa_core::dynamics::{gamma_rate, DissipatorSpec, IntegratorConfig, Method, OutputGrid};
use dqa_core::optimize::{range_grid, SqsGrids, SqsParams};
use dqa_core::problem::{build_instance, MwisInstance, RawParams};
use dqa_core::protocols::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Qa,
    Nsdqa,
    Sqs,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Qa => "qa",
            ProtocolKind::Nsdqa => "nsdqa",
            ProtocolKind::Sqs => "sqs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum BathKind {
    #[default]
    None,
    Dephasing,
    Gainloss,
}

impl BathKind {
    pub fn name(&self) -> &'static str {
        match self {
            BathKind::None => "none",
            BathKind::Dephasing => "dephasing",
            BathKind::Gainloss => "gainloss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub n: usize,
    pub jzz_prime: f64,
    pub w0_prime: f64,
    pub w1_prime: f64,
    pub e_scale: f64,
    /// JSON instance written by `dqa instance`; replaces the fields above.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        let raw = RawParams::default();
        Self {
            n: 5,
            jzz_prime: raw.jzz_prime,
            w0_prime: raw.w0_prime,
            w1_prime: raw.w1_prime,
            e_scale: raw.e_scale,
            file: None,
        }
    }
}

impl InstanceConfig {
    pub fn raw(&self) -> RawParams {
        RawParams {
            jzz_prime: self.jzz_prime,
            w0_prime: self.w0_prime,
            w1_prime: self.w1_prime,
            e_scale: self.e_scale,
        }
    }

    pub fn build(&self) -> Result<MwisInstance> {
        match &self.file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(MwisInstance::from_json(&text)?)
            }
            None => Ok(build_instance(self.n, self.raw())?),
        }
    }

    /// Same raw parameters at another size.
    pub fn build_size(&self, n: usize) -> Result<MwisInstance> {
        let raw = match &self.file {
            Some(_) => self.build()?.raw,
            None => self.raw(),
        };
        Ok(build_instance(n, raw)?)
    }
}

/// Protocol fields; the quench fields belong to `sqs` only and `jxx` to
/// `nsdqa` only. A missing `jxx` is optimized per size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    /// Sweep time `T`.
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jxx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_q: Option<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            kind: ProtocolKind::Qa,
            t: 100.0,
            jxx: None,
            tau_q: None,
            delta_t: None,
            b_q: None,
        }
    }
}

impl ProtocolConfig {
    fn validate(&self) -> Result<()> {
        let quench = [("tau_q", self.tau_q), ("delta_t", self.delta_t), ("b_q", self.b_q)];
        match self.kind {
            ProtocolKind::Sqs => {
                if let Some((name, _)) = quench.iter().find(|(_, v)| v.is_none()) {
                    bail!("protocol sqs needs `{name}`");
                }
            }
            kind => {
                if let Some((name, _)) = quench.iter().find(|(_, v)| v.is_some()) {
                    bail!("`{name}` is only valid for protocol sqs, not {}", kind.name());
                }
            }
        }
        if self.jxx.is_some() && self.kind != ProtocolKind::Nsdqa {
            bail!("`jxx` is only valid for protocol nsdqa, not {}", self.kind.name());
        }
        self.sqs_params().map(|p| p.protocol(self.t)).transpose()?;
        match self.kind {
            ProtocolKind::Nsdqa => Protocol::nsdqa(self.t, self.jxx.unwrap_or(0.0))?,
            _ => Protocol::qa(self.t)?,
        };
        Ok(())
    }

    pub fn sqs_params(&self) -> Option<SqsParams> {
        Some(SqsParams {
            b_q: self.b_q?,
            tau_q: self.tau_q?,
            delta_t: self.delta_t?,
        })
    }
}

/// The rate is given either directly (`gamma`) or as `t_ref`, with
/// `gamma = 1 / (t_ref N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DissipatorConfig {
    pub kind: BathKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ref: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Bath frequency; 1 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl DissipatorConfig {
    fn validate(&self) -> Result<()> {
        match self.kind {
            BathKind::None => {
                let given = [
                    ("gamma", self.gamma),
                    ("t_ref", self.t_ref),
                    ("beta", self.beta),
                    ("omega", self.omega),
                ];
                if let Some((name, _)) = given.iter().find(|(_, v)| v.is_some()) {
                    bail!("`{name}` given but the dissipator kind is none");
                }
            }
            kind => {
                if self.gamma.is_some() == self.t_ref.is_some() {
                    bail!("give exactly one of `gamma` and `t_ref` for the dissipator");
                }
                match (kind, self.beta.is_some()) {
                    (BathKind::Gainloss, false) => bail!("a gain-and-loss bath needs `beta`"),
                    (BathKind::Dephasing, true) => bail!("`beta` is only valid for a gain-and-loss bath"),
                    _ => {}
                }
                if kind == BathKind::Dephasing && self.omega.is_some() {
                    bail!("`omega` is only valid for a gain-and-loss bath");
                }
                self.spec(5)?.validate()?;
            }
        }
        Ok(())
    }

    pub fn spec(&self, n: usize) -> Result<DissipatorSpec> {
        let gamma = || -> Result<f64> {
            Ok(match (self.gamma, self.t_ref) {
                (Some(g), _) => g,
                (None, Some(t_ref)) => gamma_rate(n, t_ref)?,
                (None, None) => bail!("dissipator rate missing"),
            })
        };
        Ok(match self.kind {
            BathKind::None => DissipatorSpec::None,
            BathKind::Dephasing => DissipatorSpec::Dephasing { gamma: gamma()? },
            BathKind::Gainloss => DissipatorSpec::GainLoss {
                gamma: gamma()?,
                beta: self.beta.context("a gain-and-loss bath needs `beta`")?,
                omega: self.omega.unwrap_or(1.0),
            },
        })
    }
}

/// Unset fields fall back to the unitary or Lindblad defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rtol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub atol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

impl IntegratorSection {
    pub fn resolve(&self, dissipative: bool, output: OutputGrid) -> IntegratorConfig {
        let mut c = if dissipative {
            IntegratorConfig::lindblad()
        } else {
            IntegratorConfig::unitary()
        };
        c.method = self.method.unwrap_or(c.method);
        c.rtol = self.rtol.unwrap_or(c.rtol);
        c.atol = self.atol.unwrap_or(c.atol);
        c.max_step = self.max_step.or(c.max_step);
        c.max_steps = self.max_steps.unwrap_or(c.max_steps);
        c.output = output;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Times reported by `evolve` and `spectrum`.
    pub grid: OutputGrid,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            grid: OutputGrid::Uniform { points: 201 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    /// Sweep times `T`.
    pub times: Vec<f64>,
    pub protocols: Vec<ProtocolKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: vec![5],
            times: vec![10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0],
            protocols: vec![ProtocolKind::Nsdqa, ProtocolKind::Sqs],
        }
    }
}

/// `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        Ok(range_grid(self.start, self.stop, self.step)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub b_q: Axis,
    pub tau_q: Axis,
    pub delta_t: Axis,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            b_q: Axis {
                start: 0.0,
                stop: 1.0,
                step: 0.05,
            },
            tau_q: Axis {
                start: 0.5,
                stop: 1.0,
                step: 0.025,
            },
            delta_t: Axis {
                start: 0.0,
                stop: 20.0,
                step: 0.5,
            },
        }
    }
}

impl GridConfig {
    pub fn grids(&self) -> Result<SqsGrids> {
        let grids = SqsGrids {
            b_q: self.b_q.values()?,
            tau_q: self.tau_q.values()?,
            delta_t: self.delta_t.values()?,
        };
        grids.validate()?;
        Ok(grids)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalystConfig {
    pub lo: f64,
    pub hi: f64,
    pub resolution: usize,
}

impl Default for CatalystConfig {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 4.0,
            resolution: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Sweep CSV to fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    pub y_sat: f64,
    /// First `T'` used; the optimal working point when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            y_sat: 1.0,
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ParallelConfig {
    /// Concurrent work items; all cores when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    pub protocol: ProtocolConfig,
    pub dissipator: DissipatorConfig,
    pub integrator: IntegratorSection,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub sqs_grid: GridConfig,
    pub catalyst: CatalystConfig,
    pub fit: FitConfig,
    pub parallel: ParallelConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Cross-field checks; run before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.instance.file.is_none() {
            build_instance(self.instance.n, self.instance.raw())?;
        }
        self.protocol.validate().context("[protocol]")?;
        self.dissipator.validate().context("[dissipator]")?;
        self.integrator(false).validate()?;
        if let OutputGrid::Uniform { points } = self.output.grid {
            if points < 2 {
                bail!("[output] a uniform grid needs at least 2 points");
            }
        }
        self.sqs_grid.grids().context("[sqs_grid]")?;
        if self.sweep.sizes.is_empty() || self.sweep.times.is_empty() || self.sweep.protocols.is_empty() {
            bail!("[sweep] sizes, times and protocols must be non-empty");
        }
        for &n in &self.sweep.sizes {
            self.instance.build_size(n).context("[sweep] sizes")?;
        }
        if let Some(&t) = self.sweep.times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            bail!("[sweep] sweep time {t} must be finite and positive");
        }
        if !(self.catalyst.lo.is_finite() && self.catalyst.hi.is_finite() && self.catalyst.lo < self.catalyst.hi) {
            bail!("[catalyst] need finite lo < hi");
        }
        if self.catalyst.resolution < dqa_core::optimize::MIN_RESOLUTION {
            bail!(
                "[catalyst] resolution must be at least {}",
                dqa_core::optimize::MIN_RESOLUTION
            );
        }
        if self.parallel.workers == Some(0) {
            bail!("[parallel] workers must be positive");
        }
        Ok(())
    }

    pub fn integrator(&self, dissipative: bool) -> IntegratorConfig {
        self.integrator.resolve(dissipative, self.output.grid.clone())
    }
}

/// Flag overrides; every set flag replaces the config value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// System size N (odd).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// JSON instance file.
    #[arg(long, global = true)]
    pub instance_file: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub protocol: Option<ProtocolKind>,
    /// Sweep time T.
    #[arg(long, global = true)]
    pub t: Option<f64>,
    #[arg(long, global = true)]
    pub jxx: Option<f64>,
    #[arg(long, global = true)]
    pub tau_q: Option<f64>,
    #[arg(long, global = true)]
    pub delta_t: Option<f64>,
    #[arg(long, global = true)]
    pub b_q: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub bath: Option<BathKind>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub t_ref: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub omega: Option<f64>,
    #[arg(long, global = true, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, global = true)]
    pub rtol: Option<f64>,
    #[arg(long, global = true)]
    pub atol: Option<f64>,
    /// Uniform output grid with this many points.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',', value_enum)]
    pub protocols: Option<Vec<ProtocolKind>>,
    /// Sweep CSV read by `fit`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fit_start: Option<f64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "magnus" => Ok(Method::Magnus),
        "dormand-prince" => Ok(Method::DormandPrince),
        other => Err(format!("unknown method `{other}` (magnus, dormand-prince)")),
    }
}

impl Overrides {
    pub fn apply(&self, c: &mut ExperimentConfig) {
        fn set<T: Clone>(slot: &mut T, value: &Option<T>) {
            if let Some(v) = value {
                *slot = v.clone();
            }
        }
        fn set_opt<T: Clone>(slot: &mut Option<T>, value: &Option<T>) {
            if value.is_some() {
                *slot = value.clone();
            }
        }
        set(&mut c.instance.n, &self.n);
        set_opt(&mut c.instance.file, &self.instance_file);
        set(&mut c.protocol.kind, &self.protocol);
        set(&mut c.protocol.t, &self.t);
        set_opt(&mut c.protocol.jxx, &self.jxx);
        set_opt(&mut c.protocol.tau_q, &self.tau_q);
        set_opt(&mut c.protocol.delta_t, &self.delta_t);
        set_opt(&mut c.protocol.b_q, &self.b_q);
        set(&mut c.dissipator.kind, &self.bath);
        set_opt(&mut c.dissipator.gamma, &self.gamma);
        set_opt(&mut c.dissipator.t_ref, &self.t_ref);
        set_opt(&mut c.dissipator.beta, &self.beta);
        set_opt(&mut c.dissipator.omega, &self.omega);
        set_opt(&mut c.integrator.method, &self.method);
        set_opt(&mut c.integrator.rtol, &self.rtol);
        set_opt(&mut c.integrator.atol, &self.atol);
        if let Some(points) = self.points {
            c.output.grid = OutputGrid::Uniform { points };
        }
        set(&mut c.output.dir, &self.out);
        set(&mut c.sweep.sizes, &self.sizes);
        set(&mut c.sweep.times, &self.times);
        set(&mut c.sweep.protocols, &self.protocols);
        set_opt(&mut c.fit.input, &self.input);
        set_opt(&mut c.fit.start, &self.fit_start);
        set_opt(&mut c.parallel.workers, &self.workers);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.instance.n = 7;
        c.protocol = ProtocolConfig {
            kind: ProtocolKind::Sqs,
            t: 50.0,
            jxx: None,
            tau_q: Some(0.975),
            delta_t: Some(11.0),
            b_q: Some(0.1),
        };
        c.dissipator = DissipatorConfig {
            kind: BathKind::Gainloss,
            gamma: None,
            t_ref: Some(1400.0),
            beta: Some(0.1),
            omega: None,
        };
        c.integrator.rtol = Some(1e-9);
        c.output.grid = OutputGrid::Times {
            times: vec![0.0, 12.5, 61.0],
        };
        c.parallel.workers = Some(3);
        c
    }

    #[test]
    fn round_trip_is_identity() {
        for c in [ExperimentConfig::default(), sample()] {
            let text = c.to_toml();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, c, "{text}");
            assert_eq!(back.to_toml(), text);
            assert_eq!(back.hash(), c.hash());
        }
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = ExperimentConfig::from_toml("[protocol]\nkind = \"nsdqa\"\nt = 20.0\njxx = 1.5\n").unwrap();
        assert_eq!(c.instance, InstanceConfig::default());
        assert_eq!(c.protocol.jxx, Some(1.5));
        c.validate().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_toml("[protocol]\nkind = \"qa\"\nt = 1.0\ntauq = 0.5\n").is_err());
    }

    #[test]
    fn quench_fields_only_with_sqs() {
        let mut c = sample();
        c.validate().unwrap();
        c.protocol.kind = ProtocolKind::Qa;
        assert!(c.validate().is_err());
        let mut c = sample();
        c.protocol.b_q = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.protocol.jxx = Some(1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn bath_fields_are_consistent() {
        let mut c = sample();
        c.dissipator.gamma = Some(0.1);
        assert!(c.validate().is_err());
        let mut c = sample();
        c.dissipator.beta = None;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.dissipator.t_ref = Some(50.0);
        assert!(c.validate().is_err());
        c.dissipator.kind = BathKind::Dephasing;
        c.validate().unwrap();
        assert_eq!(c.dissipator.spec(5).unwrap(), DissipatorSpec::Dephasing { gamma: 0.004 });
    }

    #[test]
    fn flags_win_over_the_file() {
        let mut c = sample();
        let o = Overrides {
            n: Some(9),
            t: Some(15.0),
            rtol: Some(1e-6),
            points: Some(11),
            workers: Some(1),
            ..Overrides::default()
        };
        o.apply(&mut c);
        assert_eq!(c.instance.n, 9);
        assert_eq!(c.protocol.t, 15.0);
        assert_eq!(c.integrator(true).rtol, 1e-6);
        assert_eq!(c.output.grid, OutputGrid::Uniform { points: 11 });
        assert_eq!(c.protocol.tau_q, Some(0.975));
        assert_ne!(c.hash(), sample().hash());
    }

    #[test]
    fn integrator_defaults_follow_the_dynamics() {
        let c = ExperimentConfig::default();
        assert_eq!(c.integrator(false).rtol, IntegratorConfig::unitary().rtol);
        assert_eq!(c.integrator(true).rtol, IntegratorConfig::lindblad().rtol);
    }

    #[test]
    fn bad_values_fail_validation() {
        let mut c = ExperimentConfig::default();
        c.instance.n = 4;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.sweep.times = vec![10.0, -1.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.catalyst.resolution = 4;
        assert!(c.validate().is_err());
    }
}

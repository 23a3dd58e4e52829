use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::drift_fields::{mollify, parse_field, DriftField, MollifierSpec};
use crate::error::{Error, Result};
use crate::flow_engine::EnsembleConfig;
use crate::lattice::Lattice;
use crate::levy_noise::{SimulationMode, SmallJumpPolicy, StableSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SamplePath,
    Flow,
    InverseFlow,
    Transport,
    WeakCheck,
    PerturbativeCheck,
    Resolvent,
    #[serde(rename = "nonuniqueness-demo")]
    NonUniqueness,
    Stability,
    Moments,
    Commutator,
    SobolevDiag,
    Convergence,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::SamplePath,
        Experiment::Flow,
        Experiment::InverseFlow,
        Experiment::Transport,
        Experiment::WeakCheck,
        Experiment::PerturbativeCheck,
        Experiment::Resolvent,
        Experiment::NonUniqueness,
        Experiment::Stability,
        Experiment::Moments,
        Experiment::Commutator,
        Experiment::SobolevDiag,
        Experiment::Convergence,
    ];

    /// Subcommand name, also used as the artifact file stem.
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SamplePath => "sample-path",
            Experiment::Flow => "flow",
            Experiment::InverseFlow => "inverse-flow",
            Experiment::Transport => "transport",
            Experiment::WeakCheck => "weak-check",
            Experiment::PerturbativeCheck => "perturbative-check",
            Experiment::Resolvent => "resolvent",
            Experiment::NonUniqueness => "nonuniqueness-demo",
            Experiment::Stability => "stability",
            Experiment::Moments => "moments",
            Experiment::Commutator => "commutator",
            Experiment::SobolevDiag => "sobolev-diag",
            Experiment::Convergence => "convergence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Quantity driven through the refinement levels of a convergence run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConvergenceTarget {
    /// `sup_x |φ⁻¹(φ(x)) − x|` on the configured points.
    RoundTrip,
    /// Perturbative transport residual at the horizon.
    Perturbative,
    /// Marcus weak residual at the horizon; the jump cutoff is refined with
    /// the grid.
    Weak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub alpha: f64,
    #[serde(default = "one")]
    pub c_alpha: f64,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default = "exact_mode")]
    pub mode: SimulationMode,
    #[serde(default = "one")]
    pub cutoff_delta: f64,
    #[serde(default = "gaussian")]
    pub small_jump_policy: SmallJumpPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftConfig {
    /// Registry expression such as `trig(1, 1)`.
    pub field: String,
    /// Hölder exponent used by the `α/2 + β > 1` gate; defaults to the
    /// field's own exponent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_beta: Option<f64>,
    /// Mollify the field at this scale before use.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default = "default_dt")]
    pub base_dt: f64,
    /// Lattice spacing.
    #[serde(default = "default_h")]
    pub h: f64,
    /// Box centre; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub half_width: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            horizon: 1.0,
            base_dt: default_dt(),
            h: default_h(),
            center: None,
            half_width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "one_usize")]
    pub n_paths: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { n_paths: 1, master_seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_dir(),
            format: OutputFormat::Csv,
        }
    }
}

/// Experiment-specific knobs. Each experiment documents the ones it reads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separations: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum_center: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub torus_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ConvergenceTarget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev_delta: Option<f64>,
}

/// Full description of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub override_gate: bool,
    pub noise: NoiseConfig,
    pub drift: DriftConfig,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub params: Params,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_dt() -> f64 {
    0.01
}
fn default_h() -> f64 {
    0.05
}
fn default_dir() -> String {
    "out".into()
}
fn exact_mode() -> SimulationMode {
    SimulationMode::ExactIncrement
}
fn gaussian() -> SmallJumpPolicy {
    SmallJumpPolicy::Gaussian
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical TOML rendering; the config hash is taken over this text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Built-in configuration for `experiment`.
    pub fn default_for(experiment: Experiment) -> Self {
        let mut cfg = ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            experiment: Some(experiment),
            override_gate: false,
            noise: NoiseConfig {
                alpha: 1.5,
                c_alpha: 1.0,
                dim: 1,
                mode: SimulationMode::ExactIncrement,
                cutoff_delta: 1.0,
                small_jump_policy: SmallJumpPolicy::Gaussian,
            },
            drift: DriftConfig {
                field: "trig(1,1)".into(),
                holder_beta: None,
                mollify_epsilon: None,
            },
            discretization: Discretization::default(),
            ensemble: EnsembleSection::default(),
            output: OutputConfig::default(),
            params: Params::default(),
        };
        match experiment {
            Experiment::WeakCheck => {
                cfg.noise.mode = SimulationMode::JumpDecomposition;
                cfg.noise.small_jump_policy = SmallJumpPolicy::Drop;
                cfg.noise.cutoff_delta = 0.1;
            }
            Experiment::NonUniqueness => {
                cfg.drift.field = "counterexample(0.5,4)".into();
                cfg.discretization.horizon = 2.0;
                cfg.discretization.base_dt = 1e-3;
                cfg.ensemble.n_paths = 100;
                cfg.params.perturbations = Some(vec![1e-2, 1e-4, 1e-6]);
            }
            Experiment::Moments => {
                cfg.drift.field = "counterexample(0.6,1)".into();
                cfg.ensemble.n_paths = 200;
            }
            Experiment::Stability | Experiment::SobolevDiag => {
                cfg.drift.field = "counterexample(0.7,1)".into();
                cfg.ensemble.n_paths = 20;
            }
            Experiment::Commutator => {
                cfg.drift.field = "counterexample(0.7,1)".into();
                cfg.discretization.h = 0.005;
            }
            Experiment::Resolvent => {
                cfg.drift.field = "trig(0.1,1)".into();
            }
            Experiment::Convergence => {
                cfg.drift.field = "trig(1,1)".into();
                cfg.ensemble.n_paths = 20;
                cfg.discretization.base_dt = 0.02;
                cfg.discretization.h = 0.04;
            }
            _ => {}
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let n = &self.noise;
        if !(n.alpha > 0.0 && n.alpha < 2.0) {
            return Err(Error::validation("noise.alpha", format!("must lie in (0, 2), got {}", n.alpha)));
        }
        positive("noise.c_alpha", n.c_alpha)?;
        positive("noise.cutoff_delta", n.cutoff_delta)?;
        if n.dim == 0 {
            return Err(Error::validation("noise.dim", "must be at least 1"));
        }
        let disc = &self.discretization;
        positive("discretization.horizon", disc.horizon)?;
        positive("discretization.base_dt", disc.base_dt)?;
        positive("discretization.h", disc.h)?;
        positive("discretization.half_width", disc.half_width)?;
        if let Some(c) = &disc.center {
            if c.len() != n.dim {
                return Err(Error::validation("discretization.center", format!("needs {} coordinates", n.dim)));
            }
        }
        if self.ensemble.n_paths == 0 {
            return Err(Error::validation("ensemble.n_paths", "must be at least 1"));
        }
        if let Some(e) = self.drift.mollify_epsilon {
            positive("drift.mollify_epsilon", e)?;
        }
        let field = parse_field(&self.drift.field, n.dim).map_err(|e| Error::validation("drift.field", e.to_string()))?;
        let beta = self.drift.holder_beta.unwrap_or(field.holder_beta);
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::validation("drift.holder_beta", format!("must lie in (0, 1], got {beta}")));
        }
        if n.alpha / 2.0 + beta <= 1.0 && !self.override_gate {
            return Err(Error::validation(
                "drift.holder_beta",
                format!(
                    "alpha/2 + beta = {} does not exceed 1 (pass --override-gate to run anyway)",
                    n.alpha / 2.0 + beta
                ),
            ));
        }
        if let Some(l) = self.params.levels {
            if l < 3 {
                return Err(Error::validation("params.levels", "at least 3 refinement levels are needed"));
            }
        }
        Ok(())
    }

    pub fn stable_spec(&self) -> Result<StableSpec> {
        let n = &self.noise;
        Ok(StableSpec::new(n.alpha, n.c_alpha, n.dim)?
            .with_mode(n.mode)
            .with_cutoff(n.cutoff_delta)
            .with_policy(n.small_jump_policy))
    }

    /// The raw registry field, before any mollification.
    pub fn raw_drift(&self) -> Result<DriftField> {
        parse_field(&self.drift.field, self.noise.dim)
    }

    pub fn drift_field(&self) -> Result<DriftField> {
        let raw = self.raw_drift()?;
        match self.drift.mollify_epsilon {
            None => Ok(raw),
            Some(eps) => mollify(&raw, &MollifierSpec::new(eps, self.noise.dim)?),
        }
    }

    pub fn ensemble(&self) -> Result<EnsembleConfig> {
        Ok(EnsembleConfig {
            spec: self.stable_spec()?,
            horizon: self.discretization.horizon,
            base_dt: self.discretization.base_dt,
            n_paths: self.ensemble.n_paths,
            master_seed: self.ensemble.master_seed,
        })
    }

    pub fn center(&self) -> Vec<f64> {
        self.discretization
            .center
            .clone()
            .unwrap_or_else(|| vec![0.0; self.noise.dim])
    }

    /// The configured box as a lattice of spacing `h`.
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::cube(&self.center(), self.discretization.half_width, self.discretization.h)
    }

    /// Initial points: `params.points`, or the lattice cell centres.
    pub fn points(&self) -> Result<Vec<Vec<f64>>> {
        match &self.params.points {
            Some(p) => {
                if p.iter().any(|x| x.len() != self.noise.dim) {
                    return Err(Error::validation("params.points", format!("every point needs {} coordinates", self.noise.dim)));
                }
                Ok(p.clone())
            }
            None => Ok(self.lattice()?.points()),
        }
    }
}

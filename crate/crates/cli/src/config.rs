//! Experiment configuration files (TOML).
//!
//! A config names one experiment, the group, the seed and the output format,
//! plus the sections that experiment needs. Unknown keys are rejected.

use std::path::PathBuf;

use pathlab::ballmeasure::{Law, RadiusSchedule};
use pathlab::meanlab::{GroupFunctional, ObservableKind, RotationEstimator};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Geometry,
    Levy,
    Translation,
    Rotation,
    Star,
    Semidirect,
    Brownian,
    Witness,
    Selftest,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Geometry => "geometry",
            ExperimentKind::Levy => "levy",
            ExperimentKind::Translation => "translation",
            ExperimentKind::Rotation => "rotation",
            ExperimentKind::Star => "star",
            ExperimentKind::Semidirect => "semidirect",
            ExperimentKind::Brownian => "brownian",
            ExperimentKind::Witness => "witness",
            ExperimentKind::Selftest => "selftest",
        }
    }

    pub fn is_defect(self) -> bool {
        matches!(
            self,
            ExperimentKind::Translation | ExperimentKind::Rotation | ExperimentKind::Star | ExperimentKind::Semidirect
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "default_group")]
    pub group: String,
    pub seed: u64,
    #[serde(default)]
    pub format: Format,
    /// Output file stem; defaults to the experiment name.
    pub output: Option<String>,
    pub schedule: Option<RadiusSchedule>,
    #[serde(default)]
    pub law: Law,
    pub n_list: Option<Vec<usize>>,
    pub m: Option<usize>,
    /// Upper limit for sample doubling in sweeps.
    pub m_cap: Option<usize>,
    #[serde(default, rename = "case")]
    pub cases: Vec<CaseConfig>,
    pub geometry: Option<GeometryConfig>,
    pub levy: Option<LevyConfig>,
    pub brownian: Option<BrownianConfig>,
    pub witness: Option<WitnessConfig>,
    pub selftest: Option<SelftestConfig>,
}

fn default_group() -> String {
    "so3".into()
}

/// An element of `V_N` described by a recipe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    Zero,
    /// Gaussian coordinates on `blocks` blocks rescaled to L² norm `norm`.
    Random {
        blocks: usize,
        norm: f64,
        seed: u64,
    },
    /// The constant path `scale·basis[index]`.
    Basis {
        index: usize,
        scale: f64,
    },
    /// Explicit row-major block coordinates.
    Blocks {
        blocks: usize,
        data: Vec<f64>,
    },
    /// The case's translation path itself (functional directions only).
    SameAsPath,
    /// `SameAsPath` rescaled to L² norm `norm`.
    PathScaled {
        norm: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Cosine {
        direction: PathSpec,
    },
    GaussWindow {
        direction: PathSpec,
        scale: f64,
    },
    /// `F ≡ 1`.
    One,
}

/// A path in `G` sampled on `grid` cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RotorSpec {
    Identity {
        grid: usize,
    },
    /// `t ↦ exp(t·X)` with `X = angle·axis/‖axis‖`.
    Geodesic {
        axis: Vec<f64>,
        angle: f64,
        grid: usize,
    },
    /// The constant path at `exp(X)`.
    Constant {
        axis: Vec<f64>,
        angle: f64,
        grid: usize,
    },
    /// `develop` of the case's translation path.
    Develop {
        grid: usize,
    },
}

/// `exp(angle·axis/‖axis‖)`; a zero angle is the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub axis: Vec<f64>,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub m: usize,
}

/// One defect series. Fields left out fall back to the top level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub label: String,
    pub schedule: Option<RadiusSchedule>,
    pub n_list: Option<Vec<usize>>,
    pub m: Option<usize>,
    pub path: Option<PathSpec>,
    pub functional: Option<FunctionalSpec>,
    pub rotor: Option<RotorSpec>,
    #[serde(default)]
    pub estimator: RotationEstimator,
    pub envelope: Option<EnvelopeConfig>,
    pub k: Option<ElementSpec>,
    #[serde(default)]
    pub group_functional: GroupFunctional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryTrend {
    pub exponent: f64,
    pub n: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Explicit `(n, s)` points.
    #[serde(default)]
    pub points: Vec<(usize, f64)>,
    /// Families `s_n = n^exponent`.
    #[serde(default)]
    pub trends: Vec<GeometryTrend>,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockMaxConfig {
    pub n: usize,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyConfig {
    pub n: Vec<usize>,
    pub eps: Vec<f64>,
    pub m: usize,
    pub block_max: Option<BlockMaxConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsConfig {
    pub t: f64,
    pub steps: usize,
    pub m: usize,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianConfig {
    pub t_list: Vec<f64>,
    pub steps: usize,
    pub path: RotorSpec,
    pub observable: ObservableKind,
    #[serde(default = "one")]
    pub time: f64,
    pub ks: Option<KsConfig>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub y: Vec<f64>,
    pub eps: f64,
    pub n: usize,
    pub radii: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Cocycle,
    RoundTrip,
    GroupLaws,
    Exactness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    pub checks: Vec<Check>,
    /// Path pairs / triples per check.
    pub samples: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    pub fn stem(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    /// Main output file name.
    pub fn output_file(&self) -> PathBuf {
        PathBuf::from(format!("{}.{}", self.stem(), self.format.extension()))
    }

    /// The built-in configuration of the `selftest` subcommand.
    pub fn builtin_selftest(seed: u64) -> Self {
        Self {
            experiment: ExperimentKind::Selftest,
            group: default_group(),
            seed,
            format: Format::Json,
            output: None,
            schedule: None,
            law: Law::UniformBall,
            n_list: None,
            m: None,
            m_cap: None,
            cases: Vec::new(),
            geometry: None,
            levy: None,
            brownian: None,
            witness: None,
            selftest: Some(SelftestConfig {
                checks: vec![Check::Cocycle, Check::RoundTrip, Check::GroupLaws, Check::Exactness],
                samples: None,
            }),
        }
    }
}

//! Experiment configuration schema.
//!
//! Every struct rejects unknown fields. Matrices are written either by name,
//! as seeded random draws (`{"random_unitary": "label"}`), or inline as rows
//! of `[re, im]` pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Sorkin,
    Theorem2,
    Adversary,
    Factorisation,
    Spacelike,
    Campaign,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Sorkin => "sorkin",
            ExperimentKind::Theorem2 => "theorem2",
            ExperimentKind::Adversary => "adversary",
            ExperimentKind::Factorisation => "factorisation",
            ExperimentKind::Spacelike => "spacelike",
            ExperimentKind::Campaign => "campaign",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub tolerance: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sorkin: Option<SorkinSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem2: Option<Theorem2Section>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversarySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorisation: Option<FactorisationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacelike: Option<SpacelikeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignSection>,
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub width: usize,
    pub depth: usize,
    #[serde(default = "default_dim")]
    pub site_dim: usize,
    pub dynamics: Dynamics,
}

fn default_dim() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Dynamics {
    /// Identity gates on every bond.
    Trivial,
    /// Independent Haar gates drawn from the named stream.
    Random(String),
    /// One gate on every bond.
    Uniform(MatrixSpec),
    /// Explicit gates per layer.
    Layers(Vec<Vec<MatrixSpec>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSpec {
    Named(NamedMatrix),
    /// `|k⟩⟨k|`.
    Projector(usize),
    PartialSwap(f64),
    RandomUnitary(String),
    RandomDensity(String),
    RandomEffect(String),
    RandomHermitian(String),
    /// Row-major `[re, im]` entries.
    Rows(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMatrix {
    Identity,
    PauliX,
    PauliY,
    PauliZ,
    Hadamard,
    Swap,
    /// Site shift controlled by the probe's top level.
    ProbeControlledShift,
    /// Probe shift controlled by the site's top level.
    SiteControlledShift,
    /// `|+⟩⟨+|` (uniform superposition).
    Plus,
    MaximallyMixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub cell: [usize; 2],
    pub gate: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub name: String,
    #[serde(default = "default_dim")]
    pub probe_dim: usize,
    pub probe_state: MatrixSpec,
    #[serde(default)]
    pub couplings: Vec<CouplingConfig>,
    #[serde(default)]
    pub nonlocal: bool,
    pub observable: MatrixSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CharlieConfig {
    /// A single-site operator at each listed cell, summed.
    Local {
        cells: Vec<[usize; 2]>,
        observable: MatrixSpec,
    },
    Probe(ObserverConfig),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SorkinSection {
    pub alice: ObserverConfig,
    pub bob: ObserverConfig,
    pub charlie: CharlieConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem2Section {
    pub observers: Vec<ObserverConfig>,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacelike: Option<Vec<String>>,
    /// Experimental: drop the connectedness requirement on the target zone.
    #[serde(default)]
    pub allow_disconnected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    pub width: usize,
    pub depth: usize,
    pub alice_cell: [usize; 2],
    pub bob_cells: Vec<[usize; 2]>,
    pub charlie_cell: [usize; 2],
    pub threshold: f64,
    pub budget: usize,
    /// Frozen witness: evaluate this candidate instead of searching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<usize>,
    /// Bob's cells for the local repair check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair_cells: Option<Vec<[usize; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorisationSection {
    pub observers: Vec<ObserverConfig>,
    pub order: Vec<String>,
    /// Skip the causal-order validation, expecting the check to fail.
    #[serde(default)]
    pub forced: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacelikeSection {
    pub a: ObserverConfig,
    pub b: ObserverConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CampaignKind {
    Sorkin,
    SorkinRandomGeometry,
    Theorem2,
    Factorisation,
    Lemma1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub kind: CampaignKind,
}

/// Reads a config file, checks it against the schema and validates every
/// declared matrix.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let config = parse_schema(text)?;
    crate::run::validate(&config)?;
    Ok(config)
}

/// Schema checks only.
pub fn parse_schema(text: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| CliError::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    if config.version != CONFIG_VERSION {
        return Err(CliError::Schema {
            pointer: "/version".into(),
            message: format!("unsupported version {}, expected {CONFIG_VERSION}", config.version),
        });
    }
    Ok(config)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{key}")),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

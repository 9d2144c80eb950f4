//! Run configuration. The TOML layout is documented in `config-schema.md`
//! next to this crate's manifest.

use serde::Deserialize;
use solvdiff_core::{AveragingWindow, Boundary, CevApproach, DiscreteMethod, Payoff, Scheme};

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must name the subcommand being run.
    pub command: Option<String>,
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub method: MethodConfig,
    #[serde(default)]
    pub option: OptionConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

fn two() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn hundred() -> f64 {
    100.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Sqb {
        mu: f64,
        #[serde(default = "two")]
        nu: f64,
        #[serde(default = "one")]
        x0: f64,
        #[serde(default)]
        boundary: BoundaryName,
    },
    Cir {
        lambda0: f64,
        lambda1: f64,
        #[serde(default = "two")]
        nu: f64,
        #[serde(default = "one")]
        y0: f64,
        #[serde(default)]
        boundary: BoundaryName,
    },
    Cev {
        r: f64,
        delta: f64,
        beta: f64,
        #[serde(default = "hundred")]
        f0: f64,
        #[serde(default)]
        approach: ApproachName,
    },
    BesselK {
        rho: f64,
        r: f64,
        c: f64,
        mu: f64,
        #[serde(default = "two")]
        nu: f64,
        #[serde(default = "hundred")]
        f0: f64,
    },
    ConfluentU {
        c: f64,
        rho: f64,
        lambda1: f64,
        mu: f64,
        #[serde(default = "two")]
        nu: f64,
        r: f64,
        #[serde(default = "hundred")]
        f0: f64,
    },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Sqb { .. } => "sqb",
            ModelConfig::Cir { .. } => "cir",
            ModelConfig::Cev { .. } => "cev",
            ModelConfig::BesselK { .. } => "bessel_k",
            ModelConfig::ConfluentU { .. } => "confluent_u",
        }
    }

    /// Discount rate implied by the model (0 for SQB and CIR).
    pub fn rate(&self) -> f64 {
        match *self {
            ModelConfig::Cev { r, .. } | ModelConfig::BesselK { r, .. } | ModelConfig::ConfluentU { r, .. } => r,
            _ => 0.0,
        }
    }

    /// Starting value in the model's own units.
    pub fn start(&self) -> f64 {
        match *self {
            ModelConfig::Sqb { x0, .. } => x0,
            ModelConfig::Cir { y0, .. } => y0,
            ModelConfig::Cev { f0, .. } | ModelConfig::BesselK { f0, .. } | ModelConfig::ConfluentU { f0, .. } => f0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryName {
    #[default]
    Absorbing,
    Reflecting,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Absorbing => Boundary::Absorbing,
            BoundaryName::Reflecting => Boundary::Reflecting,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproachName {
    #[default]
    CirReduction,
    DriftRestore,
}

impl From<ApproachName> for CevApproach {
    fn from(a: ApproachName) -> Self {
        match a {
            ApproachName::CirReduction => CevApproach::CirReduction,
            ApproachName::DriftRestore => CevApproach::DriftRestore,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Mc,
    Rqmc,
    Weighted,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteName {
    #[default]
    Chopdown,
    Rejection,
}

impl From<DiscreteName> for DiscreteMethod {
    fn from(d: DiscreteName) -> Self {
        match d {
            DiscreteName::Chopdown => DiscreteMethod::Chopdown,
            DiscreteName::Rejection => DiscreteMethod::Rejection,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default)]
    pub kind: MethodKind,
    pub scheme: Option<String>,
    pub paths: Option<usize>,
    pub randomizations: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub discrete: DiscreteName,
    #[serde(default)]
    pub force: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionConfig {
    pub payoffs: Option<Vec<String>>,
    pub strike: Option<f64>,
    pub rate: Option<f64>,
    pub average: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
    Binary,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub format: Option<Format>,
    /// "-" or absent means stdout.
    pub path: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub mu: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub nu: Option<f64>,
    pub schemes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub regimes: Option<Vec<String>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn scheme(&self) -> Result<Scheme, CliError> {
        match &self.method.scheme {
            None => Ok(Scheme::SeqFht),
            Some(s) => Scheme::parse(s).ok_or_else(|| CliError::Config(format!("unknown scheme '{s}'"))),
        }
    }

    pub fn payoffs(&self) -> Result<Vec<Payoff>, CliError> {
        match &self.option.payoffs {
            None => Ok(Payoff::ALL.to_vec()),
            Some(v) if v.is_empty() => Err(CliError::Config("option.payoffs is empty".into())),
            Some(v) => v
                .iter()
                .map(|s| Payoff::parse(s).ok_or_else(|| CliError::Config(format!("unknown payoff '{s}'"))))
                .collect(),
        }
    }

    pub fn averaging(&self, default: AveragingWindow) -> Result<AveragingWindow, CliError> {
        match &self.option.average {
            None => Ok(default),
            Some(s) => AveragingWindow::parse(s).ok_or_else(|| CliError::Config(format!("unknown average '{s}'"))),
        }
    }

    pub fn seed(&self) -> u64 {
        self.method.seed.unwrap_or(1)
    }

    /// Checks that do not need a model constructor: positivity of sizes and
    /// consistency of the grid block.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.method.paths == Some(0) {
            return bad("method.paths must be positive");
        }
        if self.method.randomizations == Some(0) {
            return bad("method.randomizations must be positive");
        }
        if let Some(t) = self.grid.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return bad("grid.horizon must be positive");
            }
        }
        if self.grid.steps == Some(0) {
            return bad("grid.steps must be positive");
        }
        if self.grid.times.is_some() && (self.grid.horizon.is_some() || self.grid.steps.is_some()) {
            return bad("grid.times cannot be combined with grid.horizon or grid.steps");
        }
        if let Some(k) = self.option.strike {
            if !(k >= 0.0 && k.is_finite()) {
                return bad("option.strike must be nonnegative");
            }
        }
        self.scheme()?;
        self.payoffs()?;
        self.averaging(AveragingWindow::Monitoring)?;
        Ok(())
    }
}

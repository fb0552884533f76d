//! Sweep configuration: a JSON file whose fields can each be overridden on
//! the command line.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ntk_core::{Activation, Architecture, Backend};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputKind {
    Kappa,
    Spectrum,
    PredictorDecay,
    PhaseDiagram,
    DynamicsTrace,
}

impl OutputKind {
    pub const ALL: [OutputKind; 5] = [
        OutputKind::Kappa,
        OutputKind::Spectrum,
        OutputKind::PredictorDecay,
        OutputKind::PhaseDiagram,
        OutputKind::DynamicsTrace,
    ];

    /// Table name, also the output file stem.
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Kappa => "kappa",
            OutputKind::Spectrum => "spectrum",
            OutputKind::PredictorDecay => "predictor_decay",
            OutputKind::PhaseDiagram => "phase_diagram",
            OutputKind::DynamicsTrace => "dynamics",
        }
    }
}

impl FromStr for OutputKind {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        OutputKind::ALL
            .into_iter()
            .find(|k| k.name() == key || (key == "dynamics_trace" && *k == OutputKind::DynamicsTrace))
            .ok_or_else(|| SweepError::Config(format!("unknown output kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// IID standard normal features, labels from the sign of a random
    /// linear teacher.
    GaussianIid,
    /// Two Gaussian clusters at `±μ` with alternating ±1 labels.
    TwoClusters,
}

impl FromStr for Generator {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian_iid" | "gaussian" => Ok(Generator::GaussianIid),
            "two_clusters" => Ok(Generator::TwoClusters),
            other => Err(SweepError::Config(format!("unknown generator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(SweepError::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Serializes through `Display`/`FromStr` for the core enums.
mod as_str {
    use super::*;
    use serde::{de::Error as _, Deserializer, Serializer};

    pub fn serialize<T: fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: fmt::Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(D::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(with = "as_str")]
    pub activation: Activation,
    #[serde(with = "as_str")]
    pub architecture: Architecture,
    pub sigma_w2_grid: Vec<f64>,
    pub sigma_b2_grid: Vec<f64>,
    pub depths: Vec<usize>,
    /// Training-set size.
    pub m: usize,
    /// Test-set size.
    pub n: usize,
    /// Feature count for fully-connected inputs.
    pub features: usize,
    /// Channels per pixel for convolutional inputs (`channels · spatial`
    /// columns in total).
    pub channels: usize,
    pub spatial: usize,
    pub filter_halfwidth: usize,
    pub ridge: f64,
    /// Dropout keep rate on the output layer; 1 disables it.
    pub dropout: f64,
    pub seed: u64,
    pub generator: Generator,
    pub outputs: Vec<OutputKind>,
    /// Gauss–Hermite size for activations without a closed form; `None`
    /// uses the default.
    pub quadrature_nodes: Option<usize>,
    /// Gradient-flow learning rate as a fraction of `2/λ_max`.
    pub eta_fraction: f64,
    /// Gradient-flow times, in units of `1/(η λ_max)`.
    pub times: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            activation: Activation::Erf,
            architecture: Architecture::Fcn,
            sigma_w2_grid: vec![1.0, 2.0, 4.0],
            sigma_b2_grid: vec![0.05, 0.5],
            depths: vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 512],
            m: 12,
            n: 8,
            features: 16,
            channels: 3,
            spatial: 6,
            filter_halfwidth: 1,
            ridge: 0.0,
            dropout: 1.0,
            seed: 0,
            generator: Generator::TwoClusters,
            outputs: OutputKind::ALL.to_vec(),
            quadrature_nodes: None,
            eta_fraction: 0.5,
            times: vec![0.0, 1.0, 10.0, 100.0, 1000.0],
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SweepError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn backend(&self) -> Backend {
        match self.quadrature_nodes {
            Some(nodes) => Backend::Quadrature { nodes },
            None => Backend::default_for(self.activation),
        }
    }

    /// Columns of the raw input matrix.
    pub fn input_width(&self) -> usize {
        if self.architecture.is_cnn() {
            self.channels * self.spatial
        } else {
            self.features
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SweepError::Config(msg));
        if self.sigma_w2_grid.is_empty() || self.sigma_b2_grid.is_empty() {
            return bad("sigma grids must be nonempty".into());
        }
        for &v in self.sigma_w2_grid.iter().chain(&self.sigma_b2_grid) {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("grid values must be finite and nonnegative, got {v}"));
            }
        }
        if self.depths.is_empty() {
            return bad("depths must be nonempty".into());
        }
        if self.depths[0] == 0 || self.depths.windows(2).any(|w| w[0] >= w[1]) {
            return bad("depths must be positive and strictly ascending".into());
        }
        if self.m < 2 || self.n < 1 {
            return bad(format!("need m ≥ 2 and n ≥ 1, got m = {}, n = {}", self.m, self.n));
        }
        if self.input_width() == 0 {
            return bad("inputs need at least one column".into());
        }
        if self.architecture.is_cnn() {
            if self.spatial == 0 || 2 * self.filter_halfwidth + 1 > self.spatial {
                return bad(format!(
                    "filter window {} does not fit spatial size {}",
                    2 * self.filter_halfwidth + 1,
                    self.spatial
                ));
            }
            if self.dropout < 1.0 {
                return bad("dropout is only supported for fcn".into());
            }
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return bad(format!("ridge must be nonnegative, got {}", self.ridge));
        }
        if !(self.dropout > 0.0 && self.dropout <= 1.0) {
            return bad(format!("dropout keep rate must lie in (0, 1], got {}", self.dropout));
        }
        if !(self.eta_fraction > 0.0 && self.eta_fraction.is_finite()) {
            return bad(format!("eta_fraction must be positive, got {}", self.eta_fraction));
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return bad("times must be finite and nonnegative".into());
        }
        if self.quadrature_nodes == Some(0) {
            return bad("quadrature_nodes must be positive".into());
        }
        if self.generator == Generator::TwoClusters && self.m % 2 == 1 {
            return bad(format!("two_clusters needs an even training size, got m = {}", self.m));
        }
        if self.outputs.is_empty() {
            return bad("outputs must be nonempty".into());
        }
        Ok(())
    }
}

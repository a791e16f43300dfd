use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slowquench::evolve::EvolutionConfig;
use slowquench::models::Model;

use crate::error::CliError;

/// Everything a run needs. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    #[serde(default)]
    pub quench: QuenchConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub invariant: InvariantConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    /// Rate `g`; zero is a sudden quench.
    pub rate: f64,
    /// Axis quenched by `sweep` and `evolve`.
    #[serde(default)]
    pub axis: usize,
    /// Second quench axis of the two-quench scheme and the sudden control.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_axis: Option<usize>,
}

impl Default for QuenchConfig {
    fn default() -> Self {
        Self {
            rate: 1.0,
            axis: 0,
            second_axis: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Nodes per axis including the periodic image; odd.
    pub extent: usize,
    /// Lower zone edge in units of `π`; `-1.5` gives `[−3π/2, π/2)`.
    #[serde(default = "default_origin")]
    pub origin: f64,
}

fn default_origin() -> f64 {
    -1.0
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            extent: 201,
            origin: default_origin(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeChoice {
    #[default]
    Scheme1,
    Scheme2,
    SuddenControl,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantConfig {
    #[serde(default)]
    pub scheme: SchemeChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// Momentum of the single run.
    pub k: Vec<f64>,
    /// Integrator settings; when absent the run uses the averaging plan
    /// derived from the local gap and rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<EvolutionConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        let comps = self.model.components();
        if !(self.quench.rate.is_finite() && self.quench.rate >= 0.0) {
            return bad(format!("quench.rate must be finite and nonnegative, got {}", self.quench.rate));
        }
        if self.quench.axis >= comps {
            return bad(format!("quench.axis {} out of range for {} components", self.quench.axis, comps));
        }
        if let Some(a) = self.quench.second_axis {
            if a == 0 || a >= comps {
                return bad(format!("quench.second_axis must lie in 1..{comps}, got {a}"));
            }
        }
        if self.grid.extent < 5 || self.grid.extent.is_multiple_of(2) {
            return bad(format!("grid.extent must be odd and at least 5, got {}", self.grid.extent));
        }
        if !self.grid.origin.is_finite() {
            return bad(format!("grid.origin must be finite, got {}", self.grid.origin));
        }
        if let Some(e) = &self.evolve {
            if e.k.len() != self.model.dim() {
                return bad(format!("evolve.k needs {} entries, got {}", self.model.dim(), e.k.len()));
            }
        }
        if self.output.formats.is_empty() {
            return bad(String::from("output.formats must not be empty"));
        }
        Ok(())
    }

    /// Configured second axis, or the default for the model dimension.
    pub fn second_axis(&self) -> usize {
        self.quench.second_axis.unwrap_or(if self.model.dim() == 2 { 2 } else { 1 })
    }
}

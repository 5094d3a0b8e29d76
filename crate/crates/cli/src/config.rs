//! Experiment configuration: a flat JSON file mirroring the command-line
//! flags. Flags override the file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gaussian,
    Bernoulli,
    Simplex,
}

impl Model {
    pub fn default_variant(self) -> &'static str {
        match self {
            Model::Gaussian | Model::Bernoulli => "correct",
            Model::Simplex => "min",
        }
    }

    pub fn default_thin(self) -> usize {
        match self {
            Model::Simplex => 20,
            _ => 1,
        }
    }
}

/// `"default"` or an explicit list of names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QuantitySelection {
    Named(String),
    List(Vec<String>),
}

impl QuantitySelection {
    pub fn parse_flag(flag: &str) -> Self {
        if flag == "default" {
            Self::Named(flag.into())
        } else {
            Self::List(flag.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
        }
    }

    /// `None` selects the model's default set.
    pub fn names(&self) -> Result<Option<Vec<String>>> {
        match self {
            Self::Named(s) if s == "default" => Ok(None),
            Self::Named(s) => Ok(Some(vec![s.clone()])),
            Self::List(v) if v.is_empty() => bail!("empty quantity list"),
            Self::List(v) => Ok(Some(v.clone())),
        }
    }
}

/// Every field optional, as read from a file or from flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub model: Option<Model>,
    pub variant: Option<String>,
    pub n: Option<usize>,
    pub sims: Option<usize>,
    pub draws: Option<usize>,
    pub seed: Option<u64>,
    pub thin: Option<usize>,
    pub quantities: Option<QuantitySelection>,
    pub step: Option<usize>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: PartialConfig) -> Self {
        Self {
            model: over.model.or(self.model),
            variant: over.variant.or(self.variant),
            n: over.n.or(self.n),
            sims: over.sims.or(self.sims),
            draws: over.draws.or(self.draws),
            seed: over.seed.or(self.seed),
            thin: over.thin.or(self.thin),
            quantities: over.quantities.or(self.quantities),
            step: over.step.or(self.step),
            out: over.out.or(self.out),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub variant: String,
    /// Observations per dataset, Gaussian model only.
    pub n: usize,
    pub sims: usize,
    pub draws: usize,
    pub seed: u64,
    pub thin: usize,
    /// `None` selects the model's default set.
    pub quantities: Option<Vec<String>>,
    pub step: usize,
    pub out: PathBuf,
}

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_SIMS: usize = 1000;
pub const DEFAULT_DRAWS: usize = 100;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "sbc-out";

impl TryFrom<PartialConfig> for ExperimentConfig {
    type Error = anyhow::Error;

    fn try_from(p: PartialConfig) -> Result<Self> {
        let Some(model) = p.model else {
            bail!("no model given; use --model gaussian|bernoulli|simplex");
        };
        if p.n.is_some() && model != Model::Gaussian {
            bail!("--n applies to the gaussian model only");
        }
        let config = Self {
            model,
            variant: p.variant.unwrap_or_else(|| model.default_variant().to_string()),
            n: p.n.unwrap_or(DEFAULT_N),
            sims: p.sims.unwrap_or(DEFAULT_SIMS),
            draws: p.draws.unwrap_or(DEFAULT_DRAWS),
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            thin: p.thin.unwrap_or(model.default_thin()),
            quantities: match p.quantities {
                Some(q) => q.names()?,
                None => None,
            },
            step: p.step.unwrap_or(sbc_core::diagnostics::DEFAULT_STEP),
            out: p.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        };
        for (name, value) in [("n", config.n), ("sims", config.sims), ("draws", config.draws), ("thin", config.thin), ("step", config.step)] {
            if value == 0 {
                bail!("--{name} must be at least 1");
            }
        }
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: PartialConfig = serde_json::from_str(
            r#"{"model": "gaussian", "variant": "prior-only", "sims": 50, "quantities": ["mu[1]", "sum"]}"#,
        )
        .unwrap();
        let flags = PartialConfig { sims: Some(70), ..Default::default() };
        let config = ExperimentConfig::try_from(file.overlay(flags)).unwrap();
        assert_eq!(config.sims, 70);
        assert_eq!(config.variant, "prior-only");
        assert_eq!(config.quantities, Some(vec!["mu[1]".to_string(), "sum".to_string()]));
        assert_eq!(config.thin, 1);
    }

    #[test]
    fn model_defaults() {
        let config = ExperimentConfig::try_from(PartialConfig { model: Some(Model::Simplex), ..Default::default() }).unwrap();
        assert_eq!((config.variant.as_str(), config.thin), ("min", 20));
        assert!(config.quantities.is_none());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::try_from(PartialConfig::default()).is_err());
        let n_on_simplex = PartialConfig { model: Some(Model::Simplex), n: Some(4), ..Default::default() };
        assert!(ExperimentConfig::try_from(n_on_simplex).is_err());
        let zero = PartialConfig { model: Some(Model::Gaussian), sims: Some(0), ..Default::default() };
        assert!(ExperimentConfig::try_from(zero).is_err());
        assert!(serde_json::from_str::<PartialConfig>(r#"{"model": "nosuch"}"#).is_err());
        assert!(serde_json::from_str::<PartialConfig>(r#"{"modle": "gaussian"}"#).is_err());
    }

    #[test]
    fn quantity_flag() {
        assert_eq!(QuantitySelection::parse_flag("default").names().unwrap(), None);
        assert_eq!(
            QuantitySelection::parse_flag("mu[1], diff").names().unwrap(),
            Some(vec!["mu[1]".to_string(), "diff".to_string()])
        );
    }
}

//! Run configuration: one JSON file with a section per subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmix::{CovarianceShape, ModelFamily};
use crate::harness::{AsymptoticsConfig, SweepConfig};
use crate::learning::EmOptions;
use crate::siggen::FrameSpec;
use crate::siggen::mixing::validate_priors;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub gen: Option<GenConfig>,
    pub learn: Option<LearnConfig>,
    pub sweep: Option<SweepConfig>,
    pub asymptotics: Option<AsymptoticsConfig>,
    pub tdc: Option<TdcConfig>,
}

/// Synthetic dataset generation: SOI frames, Gaussian interference and mixtures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub frame: FrameSpec,
    pub examples: usize,
    pub interference: Vec<CovarianceShape>,
    pub priors: Vec<f64>,
    pub sinr_db: f64,
    pub snr_db: Option<f64>,
    pub base_seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            examples: 1000,
            interference: vec![CovarianceShape::Ar1 { coef: 0.5 }, CovarianceShape::Ar1 { coef: 0.95 }],
            priors: vec![0.5, 0.5],
            sinr_db: -10.0,
            snr_db: None,
            base_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnKindName {
    PerTypeLinear,
    PooledLinear,
    EmMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnConfig {
    /// Dataset index written by `gen`.
    pub dataset: PathBuf,
    pub kinds: Vec<LearnKindName>,
    pub shrinkage: Option<f64>,
    pub em: EmOptions,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("dataset.json"),
            kinds: vec![LearnKindName::PerTypeLinear, LearnKindName::PooledLinear, LearnKindName::EmMixture],
            shrinkage: None,
            em: EmOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdcConfig {
    pub model: ModelFamily,
    pub n: usize,
    pub trials: usize,
    pub base_seed: u64,
}

impl Default for TdcConfig {
    fn default() -> Self {
        Self { model: ModelFamily::default(), n: 1024, trials: 1000, base_seed: 0 }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        self.frame.validate().map_err(|e| Error::config("gen.frame", e.to_string()))?;
        if self.examples == 0 {
            return Err(Error::config("gen.examples", "must be at least 1"));
        }
        validate_priors(&self.priors).map_err(|e| Error::config("gen.priors", e.to_string()))?;
        if self.priors.len() != self.interference.len() {
            return Err(Error::config("gen.priors", "one prior per interference type is required"));
        }
        Ok(())
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kinds.is_empty() {
            return Err(Error::config("learn.kinds", "no model kinds selected"));
        }
        if self.shrinkage.is_some_and(|l| !(0.0..=1.0).contains(&l)) {
            return Err(Error::config("learn.shrinkage", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

impl TdcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("tdc.n", "must be positive"));
        }
        if self.trials < 30 {
            return Err(Error::config("tdc.trials", "must be at least 30"));
        }
        self.model.validate().map_err(|e| Error::config("tdc.model", e.to_string()))
    }
}

fn prefixed(section: &str, e: Error) -> Error {
    match e {
        Error::Config { key, message } => Error::Config { key: format!("{section}.{key}"), message },
        other => Error::config(section, other.to_string()),
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.gen {
            g.validate()?;
        }
        if let Some(l) = &self.learn {
            l.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.validate().map_err(|e| prefixed("sweep", e))?;
        }
        if let Some(a) = &self.asymptotics {
            a.validate().map_err(|e| prefixed("asymptotics", e))?;
        }
        if let Some(t) = &self.tdc {
            t.validate()?;
        }
        Ok(())
    }

    /// Parses and validates JSON text; errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            let message = e.into_inner().to_string();
            Error::Config { key, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved configuration, defaults included.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn parse_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Config::from_json_str(&text)
}

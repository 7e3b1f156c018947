use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::DistributionSpec;
use crate::error::{check_positive, check_unit_interval_open, Error, Result};
use crate::model::EffectProfile;
use crate::rng::StreamKey;

use super::ingest::ingest_units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    UniformRandomUnit,
    EqualPerUnit,
}

/// Settings shared by both sweep kinds, read from a flat TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Accuracy targets for the failure sweep.
    #[serde(default)]
    pub epsilons: Vec<f64>,
    /// Total draw counts for the value sweep.
    #[serde(default)]
    pub sample_sizes: Vec<u64>,
    /// Budget fractions in `(0, 1]`; empty means every budget from 1 to the unit count.
    #[serde(default)]
    pub budgets: Vec<f64>,
    #[serde(default = "default_sampling")]
    pub sampling: SamplingKind,
    /// Unit table with header `unit_id,tau`; relative paths resolve against the config file.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Analytic family to draw a synthetic profile from, e.g. `beta:2,2`.
    #[serde(default)]
    pub synthetic: Option<String>,
    #[serde(default)]
    pub units: Option<usize>,
    #[serde(default)]
    pub synthetic_seed: Option<u64>,
}

fn default_trials() -> usize {
    50
}
fn default_delta() -> f64 {
    0.05
}
fn default_gamma() -> f64 {
    0.5
}
fn default_sampling() -> SamplingKind {
    SamplingKind::UniformRandomUnit
}

impl SweepConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            trials: default_trials(),
            delta: default_delta(),
            gamma: default_gamma(),
            epsilons: Vec::new(),
            sample_sizes: Vec::new(),
            budgets: Vec::new(),
            sampling: default_sampling(),
            input: None,
            synthetic: None,
            units: None,
            synthetic_seed: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(input), Some(dir)) = (&config.input, path.parent()) {
            if input.is_relative() {
                config.input = Some(dir.join(input));
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        check_unit_interval_open("delta", self.delta)?;
        check_positive("gamma", self.gamma)?;
        for &e in &self.epsilons {
            check_unit_interval_open("epsilon", e)?;
        }
        if self.sample_sizes.contains(&0) {
            return Err(Error::param("sample_sizes", "draw counts must be positive"));
        }
        if let Some(&b) = self.budgets.iter().find(|&&b| !(b > 0.0 && b <= 1.0)) {
            return Err(Error::param(
                "budgets",
                format!("fraction {b} is not in (0, 1]"),
            ));
        }
        match (&self.input, &self.synthetic) {
            (Some(_), Some(_)) => Err(Error::Config(
                "set only one of 'input' and 'synthetic'".into(),
            )),
            (None, Some(_)) if self.units.is_none() => {
                Err(Error::Config("'synthetic' needs 'units'".into()))
            }
            _ => Ok(()),
        }
    }

    /// The profile named by `input` or `synthetic`.
    pub fn load_profile(&self) -> Result<EffectProfile> {
        match (&self.input, &self.synthetic, self.units) {
            (Some(path), _, _) => Ok(ingest_units(path)?.profile),
            (None, Some(family), Some(units)) => {
                let spec: DistributionSpec = family.parse()?;
                synthetic_profile(&spec, units, self.synthetic_seed.unwrap_or(self.seed))
            }
            _ => Err(Error::Config(
                "no profile: set 'input' or 'synthetic' and 'units'".into(),
            )),
        }
    }

    /// Budgets to evaluate for a profile of `units` units, ascending and deduplicated.
    pub fn resolve_budgets(&self, units: usize) -> Vec<usize> {
        if self.budgets.is_empty() {
            return (1..=units).collect();
        }
        let mut ks: Vec<usize> = self
            .budgets
            .iter()
            .map(|f| ((f * units as f64).round() as usize).clamp(1, units))
            .collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// `units` independent draws from `spec` by inversion of seeded uniforms.
pub fn synthetic_profile(
    spec: &DistributionSpec,
    units: usize,
    seed: u64,
) -> Result<EffectProfile> {
    if units == 0 {
        return Err(Error::EmptyProfile);
    }
    let mut rng = StreamKey::new(seed, u64::MAX).rng(0);
    let effects = (0..units)
        .map(|_| spec.quantile(rng.random::<f64>()))
        .collect::<Result<Vec<f64>>>()?;
    EffectProfile::new(effects)
}

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chart::{EigenSettings, OosKernel};
use crate::error::{Error, Result};
use crate::nn::{LbbConfig, TrainConfig};
use crate::scene::SceneConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub dim: usize,
    pub k: usize,
    pub solver: EigenSettings,
    pub oos_kernel: OosKernel,
}

impl Default for ChartConfig {
    fn default() -> Self {
        ChartConfig { dim: 5, k: 5, solver: EigenSettings::default(), oos_kernel: OosKernel::Neighbors }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub split: u64,
    pub rff: u64,
    pub init: u64,
    pub shuffle: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { split: 0x5b17, rff: 0x0ff_0600, init: 0x1417, shuffle: 0x5_4ff1e }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Highest achievable SNR used for spectral efficiency, in dB.
    pub snr_opt_db: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { snr_opt_db: 10.0 }
    }
}

impl EvalConfig {
    pub fn snr_opt(&self) -> f64 {
        10f64.powf(self.snr_opt_db / 10.0)
    }
}

/// Everything a variant run depends on besides the variant itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub split_fraction: f64,
    pub scene: SceneConfig,
    pub chart: ChartConfig,
    pub nn: LbbConfig,
    pub train: TrainConfig,
    pub seeds: Seeds,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            split_fraction: 0.7,
            scene: SceneConfig::default(),
            chart: ChartConfig::default(),
            nn: LbbConfig::default(),
            train: TrainConfig::default(),
            seeds: Seeds::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::Config(format!("split fraction {} must lie in (0, 1)", self.split_fraction)));
        }
        if self.chart.dim == 0 || self.chart.k == 0 {
            return Err(Error::Config("chart dimension and neighbourhood size must be positive".into()));
        }
        if self.nn.num_features == 0 || self.nn.hidden.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        if self.nn.gamma.is_some_and(|g| !(g > 0.0)) || !(self.nn.gamma_factor > 0.0) {
            return Err(Error::Config("RFF lengthscale settings must be positive".into()));
        }
        if self.train.batch_size == 0 || !(self.train.adam.lr > 0.0) {
            return Err(Error::Config("batch size and learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("split_fraction = 0.5\n[scene]\nnum_users = 300\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(c.split_fraction, 0.5);
        assert_eq!(c.scene.num_users, 300);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, 100);
        assert_eq!(c.chart.k, 5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::from_toml("split_fraction = 1.0"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("[train]\nbatch_size = 0"), Err(Error::Config(_))));
    }
}

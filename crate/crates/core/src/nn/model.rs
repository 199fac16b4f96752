use std::path::Path;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::loss::correlation_loss;
use super::mlp::{Dense, Mlp};
use super::rff::{rff_init, RffLayer};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::io;

const FORMAT_VERSION: u32 = 1;

/// Architecture of the location-to-precoder network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbbConfig {
    pub num_features: usize,
    pub hidden: Vec<usize>,
    /// RFF lengthscale; when absent it is `gamma_factor` times the median
    /// pairwise distance between training inputs.
    pub gamma: Option<f64>,
    pub gamma_factor: f64,
}

impl Default for LbbConfig {
    fn default() -> Self {
        LbbConfig { num_features: 600, hidden: vec![300, 300, 300], gamma: None, gamma_factor: 0.2 }
    }
}

/// RFF layer followed by an MLP producing `2A` real outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LbbModel {
    pub rff: RffLayer,
    pub mlp: Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format_version: u32,
    pub input_dim: usize,
    pub num_features: usize,
    /// `[F, hidden…, 2A]`.
    pub layer_sizes: Vec<usize>,
    pub gamma: f64,
    pub rff_seed: u64,
    pub init_seed: u64,
    pub train: TrainConfig,
    pub loss_history: Vec<f64>,
    /// `Ω, b` of the RFF layer then `W1, b1, W2, b2, …`, row-major.
    pub params_file: String,
}

impl LbbModel {
    pub fn new(input_dim: usize, num_antennas: usize, config: &LbbConfig, gamma: f64, rff_seed: u64, init_seed: u64) -> Result<Self> {
        let rff = rff_init(input_dim, config.num_features, gamma, rff_seed)?;
        let mut sizes = vec![config.num_features];
        sizes.extend(&config.hidden);
        sizes.push(2 * num_antennas);
        let mlp = Mlp::init(&sizes, init_seed)?;
        Ok(LbbModel { rff, mlp })
    }

    pub fn input_dim(&self) -> usize {
        self.rff.input_dim()
    }

    pub fn num_antennas(&self) -> usize {
        self.mlp.layers.last().expect("non-empty").outputs() / 2
    }

    /// Raw `2A` outputs for a batch of inputs.
    pub fn forward(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        let features = self.rff.forward(z)?;
        Ok(self.mlp.forward(features.view())?.0)
    }

    /// Loss and MLP parameter gradients on a batch.
    pub fn loss_and_grad<G: AsRef<[Complex64]>>(&self, features: ArrayView2<f64>, targets: &[G]) -> Result<(f64, Mlp)> {
        let (w, cache) = self.mlp.forward(features)?;
        let (loss, dw) = correlation_loss(w.view(), targets)?;
        Ok((loss, self.mlp.backward(&cache, dw.view())))
    }

    pub fn save(&self, dir: &Path, manifest: &ModelManifest) -> Result<()> {
        io::ensure_dir(dir)?;
        let mut blob: Vec<f64> = self.rff.omega.iter().chain(self.rff.bias.iter()).copied().collect();
        for s in self.mlp.param_slices() {
            blob.extend_from_slice(s);
        }
        io::write_f64(&dir.join(&manifest.params_file), &blob)?;
        io::write_json(&dir.join("manifest.json"), manifest)
    }

    pub fn load(dir: &Path) -> Result<(LbbModel, ModelManifest)> {
        let path = dir.join("manifest.json");
        let m: ModelManifest = io::read_json(&path)?;
        if m.format_version != FORMAT_VERSION || m.layer_sizes.len() < 2 || m.layer_sizes[0] != m.num_features {
            return Err(Error::artifact(&path, "unsupported or inconsistent model manifest"));
        }
        let (d, f) = (m.input_dim, m.num_features);
        let mlp_len: usize = m.layer_sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let blob = io::read_f64(&dir.join(&m.params_file), f * d + f + mlp_len)?;
        let (omega, rest) = blob.split_at(f * d);
        let (bias, mut rest) = rest.split_at(f);
        let rff = RffLayer {
            omega: Array2::from_shape_vec((f, d), omega.to_vec()).expect("sized"),
            bias: bias.to_vec().into(),
            gamma: m.gamma,
        };
        let mut layers = Vec::new();
        for w in m.layer_sizes.windows(2) {
            let (weight, tail) = rest.split_at(w[0] * w[1]);
            let (bias, tail) = tail.split_at(w[1]);
            layers.push(Dense {
                weight: Array2::from_shape_vec((w[1], w[0]), weight.to_vec()).expect("sized"),
                bias: bias.to_vec().into(),
            });
            rest = tail;
        }
        Ok((LbbModel { rff, mlp: Mlp { layers } }, m))
    }
}

impl ModelManifest {
    pub fn describe(model: &LbbModel, rff_seed: u64, init_seed: u64, train: TrainConfig, loss_history: Vec<f64>) -> Self {
        ModelManifest {
            format_version: FORMAT_VERSION,
            input_dim: model.input_dim(),
            num_features: model.rff.num_features(),
            layer_sizes: model.mlp.sizes(),
            gamma: model.rff.gamma,
            rff_seed,
            init_seed,
            train,
            loss_history,
            params_file: "params.f64".into(),
        }
    }
}

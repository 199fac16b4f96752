//! Chart directories: `manifest.json` plus `z.f64` (D×N, row-major). Anchor
//! channels are not copied; the manifest names them by dataset hash, band
//! and user index.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Chart, OosKernel, SolverStats};
use crate::error::{Error, Result};
use crate::io;
use crate::scene::Dataset;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartMode {
    /// Charted over every user before the split.
    OneShot,
    /// Charted over the training users; others are embedded out of sample.
    OnTheFly,
}

impl std::str::FromStr for ChartMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_shot" => Ok(ChartMode::OneShot),
            "on_the_fly" => Ok(ChartMode::OnTheFly),
            other => Err(Error::Config(format!("unknown chart mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartManifest {
    pub format_version: u32,
    pub num_points: usize,
    pub dim: usize,
    pub k: usize,
    pub sigma: f64,
    #[serde(default)]
    pub oos_kernel: OosKernel,
    pub mode: ChartMode,
    pub solver: SolverStats,
    pub dataset_hash: String,
    /// Which channels were charted: 0 for uplink at BS1, 1 for downlink at BS2.
    pub band: usize,
    /// Dataset user index of each chart column.
    pub anchor_indices: Vec<usize>,
    pub z_file: String,
}

#[derive(Debug, Clone)]
pub struct StoredChart {
    pub manifest: ChartManifest,
    pub chart: Chart,
}

impl StoredChart {
    pub fn new(chart: Chart, mode: ChartMode, dataset: &Dataset, band: usize, anchor_indices: Vec<usize>) -> Self {
        let manifest = ChartManifest {
            format_version: FORMAT_VERSION,
            num_points: chart.len(),
            dim: chart.dim(),
            k: chart.k,
            sigma: chart.sigma,
            oos_kernel: chart.kernel,
            mode,
            solver: chart.stats.clone(),
            dataset_hash: dataset.content_hash(),
            band,
            anchor_indices,
            z_file: "z.f64".into(),
        };
        StoredChart { manifest, chart }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        io::ensure_dir(dir)?;
        let z: Vec<f64> = self.chart.z.iter().copied().collect();
        io::write_f64(&dir.join(&self.manifest.z_file), &z)?;
        io::write_json(&dir.join("manifest.json"), &self.manifest)
    }

    /// Loads a chart and re-attaches its anchors from `dataset`, which must
    /// be the dataset the chart was built from.
    pub fn load(dir: &Path, dataset: &Dataset) -> Result<StoredChart> {
        let path = dir.join("manifest.json");
        let m: ChartManifest = io::read_json(&path)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::artifact(&path, "unsupported chart format"));
        }
        if m.dataset_hash != dataset.content_hash() {
            return Err(Error::artifact(&path, "chart was built from a different dataset"));
        }
        if m.anchor_indices.len() != m.num_points || m.anchor_indices.iter().any(|&i| i >= dataset.num_users()) {
            return Err(Error::artifact(&path, "anchor indices do not fit the dataset"));
        }
        let raw = io::read_f64(&dir.join(&m.z_file), m.dim * m.num_points)?;
        let z = Array2::from_shape_vec((m.dim, m.num_points), raw).expect("length checked on read");
        let channels = dataset.channels(m.band);
        let anchors = m.anchor_indices.iter().map(|&i| channels[i].clone()).collect();
        let chart = Chart::new(z, anchors, m.sigma, m.k, m.solver.clone())?.with_kernel(m.oos_kernel);
        Ok(StoredChart { manifest: m, chart })
    }

    /// Chart location of dataset user `user` if it is one of the anchors.
    pub fn anchor_location(&self, user: usize) -> Option<Vec<f64>> {
        self.manifest.anchor_indices.iter().position(|&i| i == user).map(|c| self.chart.location(c))
    }
}

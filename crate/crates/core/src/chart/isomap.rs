use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::distance::{pi_distance_cached, squared_norms};
use super::eigen::EigenSettings;
use super::graph::nearest;
use super::mds::{classical_mds, SolverStats};
use super::{geodesic_distances, knn_graph, pairwise_distances, DistanceMatrix};
use crate::error::{Error, Result};
use crate::scene::ChannelVector;

/// Which anchors take part in out-of-sample embedding.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OosKernel {
    /// The `k` most similar anchors, with similarities shifted down by the
    /// `(k+1)`-th largest so that weights reach zero continuously.
    #[default]
    Neighbors,
    /// Every anchor.
    Dense,
}

/// A learned channel chart: latent coordinates of the training channels plus
/// the channels themselves, which parameterize out-of-sample embedding.
#[derive(Debug, Clone)]
pub struct Chart {
    /// `dim × N`, column `n` is the chart location of anchor `n`.
    pub z: Array2<f64>,
    pub anchors: Vec<ChannelVector>,
    anchor_sq: Vec<f64>,
    /// Gaussian kernel bandwidth of the out-of-sample embedder.
    pub sigma: f64,
    pub k: usize,
    pub kernel: OosKernel,
    pub stats: SolverStats,
}

/// Result of embedding one new channel.
#[derive(Debug, Clone, PartialEq)]
pub struct OosPoint {
    pub coords: Vec<f64>,
    /// Every kernel weight underflowed and the nearest anchor was used.
    pub fallback: bool,
}

impl Chart {
    pub fn new(z: Array2<f64>, anchors: Vec<ChannelVector>, sigma: f64, k: usize, stats: SolverStats) -> Result<Chart> {
        if z.ncols() != anchors.len() {
            return Err(Error::ShapeMismatch { expected: anchors.len(), got: z.ncols() });
        }
        if !(sigma > 0.0) {
            return Err(Error::Domain(format!("kernel bandwidth {sigma} must be positive")));
        }
        let anchor_sq = squared_norms(&anchors)?;
        Ok(Chart { z, anchors, anchor_sq, sigma, k, kernel: OosKernel::default(), stats })
    }

    pub fn with_kernel(mut self, kernel: OosKernel) -> Chart {
        self.kernel = kernel;
        self
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    pub fn len(&self) -> usize {
        self.z.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    pub fn location(&self, n: usize) -> Vec<f64> {
        self.z.column(n).to_vec()
    }

    /// Maps a channel that was not part of training into the chart.
    ///
    /// This is a two-layer network whose first layer holds the anchor
    /// channels: it computes Gaussian similarities
    /// `s_n = exp(-d(h, h_n)² / 2σ²)` under the phase-insensitive distance,
    /// turns them into weights summing to one, and returns the weighted
    /// average of the anchors' chart locations.
    ///
    /// With [`OosKernel::Neighbors`] the weights are `s_n − s_(k+1)` for the
    /// `k` most similar anchors and zero elsewhere, `s_(k+1)` being the
    /// `(k+1)`-th largest similarity. Distances to far anchors saturate near
    /// `√2`, and without the cut their sheer number drags every embedding
    /// toward the chart centre.
    ///
    /// If no weight survives (all similarities underflow, or the nearest
    /// anchors are exactly tied), the nearest anchor's location is returned
    /// and the result is flagged.
    pub fn oos_embed(&self, h: &[Complex64]) -> Result<OosPoint> {
        let len = self.anchors[0].data.len();
        if h.len() != len {
            return Err(Error::ShapeMismatch { expected: len, got: h.len() });
        }
        let sq = squared_norms(&[h])?[0];
        let mut distances: Vec<(f64, usize)> = self
            .anchors
            .iter()
            .zip(&self.anchor_sq)
            .enumerate()
            .map(|(n, (a, &asq))| (pi_distance_cached(h, sq, &a.data, asq), n))
            .collect();
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let two_var = 2.0 * self.sigma * self.sigma;
        let similarity = |d: f64| (-d * d / two_var).exp();
        let (support, floor) = match self.kernel {
            OosKernel::Neighbors if self.k < distances.len() => {
                distances.select_nth_unstable_by(self.k, by_distance);
                let floor = similarity(distances[self.k].0);
                distances.truncate(self.k);
                (distances, floor)
            }
            _ => (distances, 0.0),
        };
        let weights: Vec<f64> = support.iter().map(|&(d, _)| similarity(d) - floor).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            let nearest = support.iter().min_by(|a, b| by_distance(a, b)).expect("chart has anchors").1;
            warn!("out-of-sample similarities vanished; using nearest anchor {nearest}");
            return Ok(OosPoint { coords: self.location(nearest), fallback: true });
        }
        let mut coords = vec![0.0; self.dim()];
        for (&(_, n), w) in support.iter().zip(&weights) {
            let w = w / total;
            for (c, z) in coords.iter_mut().zip(self.z.column(n)) {
                *c += w * z;
            }
        }
        Ok(OosPoint { coords, fallback: false })
    }
}

/// Mean distance from each point to its `k`-th nearest neighbour.
pub fn mean_kth_neighbor_distance(dm: &DistanceMatrix, k: usize) -> f64 {
    let n = dm.len();
    let total: f64 = (0..n)
        .map(|i| {
            let nn = nearest(dm, i, k);
            dm.get(i, *nn.last().expect("k >= 1"))
        })
        .sum();
    total / n as f64
}

/// Isomap over the phase-insensitive distance: pairwise distances, k-NN
/// graph, graph geodesics and classical MDS into `dim` coordinates.
pub fn isomap(channels: &[ChannelVector], k: usize, dim: usize, settings: &EigenSettings) -> Result<Chart> {
    let dm = pairwise_distances(channels)?;
    isomap_from_distances(&dm, channels.to_vec(), k, dim, settings)
}

/// Isomap from precomputed pairwise distances of `anchors`.
pub fn isomap_from_distances(
    dm: &DistanceMatrix,
    anchors: Vec<ChannelVector>,
    k: usize,
    dim: usize,
    settings: &EigenSettings,
) -> Result<Chart> {
    let graph = knn_graph(dm, k)?;
    let geodesics = geodesic_distances(&graph)?;
    let embedding = classical_mds(&geodesics, dim, settings)?;
    let mut sigma = mean_kth_neighbor_distance(dm, k);
    if sigma == 0.0 {
        // all neighbourhoods collapse (duplicate channels); any positive
        // width gives the same averaging
        sigma = f64::MIN_POSITIVE.sqrt();
    }
    Chart::new(embedding.coords, anchors, sigma, k, embedding.stats)
}

//! Channel charting: phase-insensitive distances, Isomap and the
//! similarity-based out-of-sample embedder.

mod distance;
pub mod eigen;
mod graph;
mod isomap;
mod mds;
mod store;

pub use distance::{pairwise_distances, pi_distance, DistanceMatrix, MIN_CHANNEL_NORM};
pub use eigen::{top_eigenpairs, EigenPairs, EigenSettings};
pub use graph::{dijkstra, geodesic_distances, knn_graph, NeighborGraph};
pub use isomap::{isomap, isomap_from_distances, mean_kth_neighbor_distance, Chart, OosKernel, OosPoint};
pub use mds::{classical_mds, double_center, Embedding, SolverStats};
pub use store::{ChartManifest, ChartMode, StoredChart};

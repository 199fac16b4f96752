//! Random Fourier features, a ReLU MLP with hand-derived gradients, the
//! precoder misalignment loss and Adam.

mod adam;
mod loss;
mod mlp;
mod model;
mod rff;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use loss::correlation_loss;
pub use mlp::{Dense, Mlp, MlpCache};
pub use model::{LbbConfig, LbbModel, ModelManifest};
pub use rff::{rff_init, RffLayer};
pub use train::{median_pairwise_distance, train, TrainConfig};

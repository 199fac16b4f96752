use log::debug;
use ndarray::{Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::model::LbbModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 30, batch_size: 100, adam: AdamConfig::default() }
    }
}

/// Median pairwise Euclidean distance between the rows of `x`.
pub fn median_pairwise_distance(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let r = &x.row(i) - &x.row(j);
            d.push(r.dot(&r).sqrt());
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, &mut upper, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if d.len() % 2 == 1 {
        upper
    } else {
        let lower = d[..mid].iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        0.5 * (lower + upper)
    }
}

/// Mini-batch Adam on the misalignment loss. The RFF layer is left
/// untouched; returns the mean training loss of each epoch.
pub fn train<G: AsRef<[Complex64]> + Sync>(
    model: &mut LbbModel,
    inputs: ArrayView2<f64>,
    targets: &[G],
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = inputs.nrows();
    if targets.len() != n {
        return Err(Error::ShapeMismatch { expected: n, got: targets.len() });
    }
    if config.batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    if config.epochs == 0 {
        return Ok(Vec::new());
    }
    let features: Array2<f64> = model.rff.forward(inputs)?;
    let shapes: Vec<usize> = model.mlp.param_slices().iter().map(|s| s.len()).collect();
    let mut adam = AdamState::new(config.adam, &shapes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let x = features.select(Axis(0), idx);
            let g: Vec<&[Complex64]> = idx.iter().map(|&i| targets[i].as_ref()).collect();
            let (loss, grads) = model.loss_and_grad(x.view(), &g)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            debug_assert!((-1e-12..=1.0 + 1e-12).contains(&loss), "loss {loss} out of range");
            let grad_slices = grads.param_slices();
            adam.step(&mut model.mlp.param_slices_mut(), &grad_slices);
            total += loss * idx.len() as f64;
        }
        let mean = total / n as f64;
        debug!("epoch {epoch}: loss {mean:.6}");
        history.push(mean);
    }
    Ok(history)
}

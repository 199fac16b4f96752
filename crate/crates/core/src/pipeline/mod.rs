//! The five-variant experiment: dataset, split, charting, beamformer
//! training and evaluation, with every artifact written to disk.
//!
//! An output directory holds `cache/` (datasets and charts, keyed by a hash
//! of their inputs) and one directory per variant with the trained model,
//! `variant.json`, the evaluation CSVs and `summary.json`.

mod access;
mod compare;
mod config;
mod variant;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array2;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use access::{Access, AccessLog, ChannelReader};
pub use compare::{compare, Comparison, ComparisonRow, MedianDifference};
pub use config::{ChartConfig, EvalConfig, RunConfig, Seeds};
pub use variant::{LbbInput, Target, VariantSpec, PRESETS, REDUCED_DIM};

use crate::beamform::{evaluate, EvalReport, Overhead, TestUser};
use crate::chart::{isomap, ChartMode, StoredChart};
use crate::error::{Error, Result};
use crate::io;
use crate::nn::{median_pairwise_distance, train, LbbModel, ModelManifest};
use crate::scene::{generate_dataset, Dataset, SceneConfig, BS_UPLINK};

/// Stage names used in the access log.
pub const STAGE_CHART: &str = "chart";
pub const STAGE_OOS: &str = "oos_embed";
pub const STAGE_TRAIN: &str = "train";
pub const STAGE_EVAL: &str = "eval";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded random split into `⌊fraction·n⌋` training users and the rest,
/// each listed in increasing index order.
pub fn split(num_users: usize, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("split fraction {fraction} must lie in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..num_users).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (fraction * num_users as f64).floor() as usize;
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

fn short_hash(value: &impl Serialize) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(&Sha256::digest(&bytes)[..8])
}

/// Loads the dataset for `scene` from `cache_dir`, generating and storing
/// it on first use.
pub fn ensure_dataset(scene: &SceneConfig, cache_dir: &Path) -> Result<Dataset> {
    let dir = cache_dir.join(format!("dataset-{}", short_hash(scene)));
    if dir.join("manifest.json").exists() {
        let ds = Dataset::load(&dir)?;
        if &ds.scene == scene {
            info!("reusing dataset {}", dir.display());
            return Ok(ds);
        }
    }
    info!("generating {} users", scene.num_users);
    let ds = generate_dataset(scene)?;
    ds.save(&dir)?;
    Ok(ds)
}

/// Users whose channels are charted in `mode`: everyone for one-shot charts,
/// the training users otherwise.
pub fn chart_users(mode: ChartMode, num_users: usize, split: &Split) -> Vec<usize> {
    match mode {
        ChartMode::OneShot => (0..num_users).collect(),
        ChartMode::OnTheFly => split.train.clone(),
    }
}

/// Isomap over the uplink channels at BS1 of `users`.
pub fn build_chart(
    reader: &ChannelReader<'_>,
    mode: ChartMode,
    users: Vec<usize>,
    dim: usize,
    config: &ChartConfig,
) -> Result<StoredChart> {
    let channels = reader.read(STAGE_CHART, BS_UPLINK, &users);
    let chart = isomap(&channels, config.k, dim, &config.solver)?.with_kernel(config.oos_kernel);
    Ok(StoredChart::new(chart, mode, reader.dataset, BS_UPLINK, users))
}

#[derive(Serialize)]
struct ChartKey<'a> {
    dataset_hash: &'a str,
    mode: ChartMode,
    dim: usize,
    k: usize,
    solver: &'a crate::chart::EigenSettings,
    oos_kernel: crate::chart::OosKernel,
    users: &'a [usize],
}

/// Loads the chart for these inputs from `cache_dir` or builds and stores it.
pub fn ensure_chart(
    reader: &ChannelReader<'_>,
    mode: ChartMode,
    split: &Split,
    dim: usize,
    config: &ChartConfig,
    cache_dir: &Path,
) -> Result<(StoredChart, PathBuf)> {
    let users = chart_users(mode, reader.dataset.num_users(), split);
    let hash = reader.dataset.content_hash();
    let key = ChartKey { dataset_hash: &hash, mode, dim, k: config.k, solver: &config.solver, oos_kernel: config.oos_kernel, users: &users };
    let dir = cache_dir.join(format!("chart-{}", short_hash(&key)));
    if dir.join("manifest.json").exists() {
        if let Ok(stored) = StoredChart::load(&dir, reader.dataset) {
            info!("reusing chart {}", dir.display());
            return Ok((stored, dir));
        }
        warn!("cached chart {} is unusable; rebuilding", dir.display());
    }
    info!("charting {} channels ({mode:?}, D = {dim}, k = {})", users.len(), config.k);
    let stored = build_chart(reader, mode, users, dim, config)?;
    stored.save(&dir)?;
    Ok((stored, dir))
}

/// Chart locations of `users` as rows: stored coordinates for anchors, the
/// out-of-sample embedding of their uplink channel otherwise. Returns the
/// number of embeddings that fell back to the nearest anchor.
pub fn chart_inputs(stored: &StoredChart, reader: &ChannelReader<'_>, users: &[usize]) -> Result<(Array2<f64>, usize)> {
    let dim = stored.chart.dim();
    let mut rows = Array2::zeros((users.len(), dim));
    let mut outside = Vec::new();
    for (r, &u) in users.iter().enumerate() {
        match stored.anchor_location(u) {
            Some(z) => rows.row_mut(r).assign(&ndarray::Array1::from(z)),
            None => outside.push(r),
        }
    }
    let mut fallbacks = 0;
    if !outside.is_empty() {
        let idx: Vec<usize> = outside.iter().map(|&r| users[r]).collect();
        let channels = reader.read(STAGE_OOS, stored.manifest.band, &idx);
        for (&r, h) in outside.iter().zip(&channels) {
            let p = stored.chart.oos_embed(&h.data)?;
            fallbacks += usize::from(p.fallback);
            rows.row_mut(r).assign(&ndarray::Array1::from(p.coords));
        }
    }
    Ok((rows, fallbacks))
}

/// True user locations as rows.
pub fn location_inputs(dataset: &Dataset, users: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((users.len(), 3), |(r, c)| dataset.locations[users[r]][c])
}

/// Central-subcarrier channels of `users` toward the target base station.
pub fn central_targets(reader: &ChannelReader<'_>, target: Target, users: &[usize], stage: &'static str) -> Vec<Vec<Complex64>> {
    let s = reader.dataset.scene.central_subcarrier();
    reader
        .read(stage, target.band(), users)
        .iter()
        .map(|h| h.subcarrier(s).to_vec())
        .collect()
}

/// Everything needed to re-evaluate a trained beamformer; stored as
/// `variant.json` next to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub variant: VariantSpec,
    pub config: RunConfig,
    pub dataset_hash: String,
    pub chart_dir: Option<PathBuf>,
    pub gamma: f64,
    pub train_users: usize,
    pub test_users: usize,
    pub oos_fallbacks: usize,
}

fn lbb_inputs(
    spec: &VariantSpec,
    chart: Option<&StoredChart>,
    reader: &ChannelReader<'_>,
    users: &[usize],
) -> Result<(Array2<f64>, usize)> {
    match (spec.lbb_input, chart) {
        (LbbInput::TrueLocation, _) => Ok((location_inputs(reader.dataset, users), 0)),
        (LbbInput::Chart, Some(c)) => chart_inputs(c, reader, users),
        (LbbInput::Chart, None) => Err(Error::Config(format!("variant {} needs a chart", spec.id))),
    }
}

/// Trains the beamformer of `spec` on the training users and saves it with
/// its metadata under `dir`.
pub fn train_stage(
    spec: &VariantSpec,
    config: &RunConfig,
    reader: &ChannelReader<'_>,
    chart: Option<(&StoredChart, &Path)>,
    split: &Split,
    dir: &Path,
) -> Result<(LbbModel, ModelMeta)> {
    let (x, fallbacks) = lbb_inputs(spec, chart.map(|c| c.0), reader, &split.train)?;
    let targets = central_targets(reader, spec.target, &split.train, STAGE_TRAIN);
    let gamma = match config.nn.gamma {
        Some(g) => g,
        None => config.nn.gamma_factor * median_pairwise_distance(x.view()),
    };
    let scene = &reader.dataset.scene;
    let mut model = LbbModel::new(x.ncols(), scene.num_antennas(), &config.nn, gamma, config.seeds.rff, config.seeds.init)?;
    info!("{}: training on {} users (γ = {gamma:.4})", spec.id, split.train.len());
    let history = train(&mut model, x.view(), &targets, &config.train, config.seeds.shuffle)?;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        info!("{}: training loss {first:.4} → {last:.4}", spec.id);
    }
    let manifest = ModelManifest::describe(&model, config.seeds.rff, config.seeds.init, config.train.clone(), history);
    model.save(&dir.join("model"), &manifest)?;
    let meta = ModelMeta {
        variant: spec.clone(),
        config: config.clone(),
        dataset_hash: reader.dataset.content_hash(),
        chart_dir: chart.map(|c| c.1.to_path_buf()),
        gamma,
        train_users: split.train.len(),
        test_users: split.test.len(),
        oos_fallbacks: fallbacks,
    };
    io::write_json(&dir.join("variant.json"), &meta)?;
    Ok((model, meta))
}

fn chart_csv(dataset: &Dataset, split: &Split, train: &Array2<f64>, test: &Array2<f64>) -> String {
    let dim = train.ncols();
    let mut s = String::from("index,split,x,y");
    for d in 1..=dim {
        write!(s, ",z{d}").expect("string write");
    }
    s.push('\n');
    let mut rows: Vec<(usize, &str, ndarray::ArrayView1<f64>)> = split
        .train
        .iter()
        .zip(train.outer_iter())
        .map(|(&u, z)| (u, "train", z))
        .chain(split.test.iter().zip(test.outer_iter()).map(|(&u, z)| (u, "test", z)))
        .collect();
    rows.sort_by_key(|r| r.0);
    for (u, part, z) in rows {
        let [x, y, _] = dataset.locations[u];
        write!(s, "{u},{part},{x},{y}").expect("string write");
        for v in z {
            write!(s, ",{v}").expect("string write");
        }
        s.push('\n');
    }
    s
}

/// Evaluates a trained beamformer on the test users and exports the report
/// (and, for chart variants, every user's chart location) into `dir`.
pub fn eval_stage(
    model: &LbbModel,
    meta: &ModelMeta,
    reader: &ChannelReader<'_>,
    chart: Option<&StoredChart>,
    split: &Split,
    dir: &Path,
) -> Result<EvalReport> {
    let spec = &meta.variant;
    let (x, fallbacks) = lbb_inputs(spec, chart, reader, &split.test)?;
    if fallbacks > 0 {
        warn!("{}: {fallbacks} test users fell back to their nearest anchor", spec.id);
    }
    let targets = central_targets(reader, spec.target, &split.test, STAGE_EVAL);
    let users: Vec<TestUser> = split
        .test
        .iter()
        .map(|&u| TestUser { index: u, location: reader.dataset.locations[u], los: reader.dataset.los[u] })
        .collect();
    let scene = &reader.dataset.scene;
    let overhead = Overhead::new(x.ncols(), scene.num_antennas(), scene.num_subcarriers);
    let report = evaluate(&spec.id, model, x.view(), &targets, &users, overhead, meta.config.eval.snr_opt())?;
    report.export(dir)?;
    if spec.lbb_input == LbbInput::Chart {
        let (train_x, _) = lbb_inputs(spec, chart, reader, &split.train)?;
        io::write_text(&dir.join(format!("chart_{}.csv", spec.id)), &chart_csv(reader.dataset, split, &train_x, &x))?;
    }
    Ok(report)
}

/// Runs one variant end to end under `out`, reusing cached datasets and
/// charts. Channel reads are recorded in `log`.
pub fn run_variant(spec: &VariantSpec, config: &RunConfig, out: &Path, log: &AccessLog) -> Result<EvalReport> {
    run_variant_inner(spec, config, out, log).map_err(|e| Error::Variant { variant: spec.id.clone(), source: Box::new(e) })
}

fn run_variant_inner(spec: &VariantSpec, config: &RunConfig, out: &Path, log: &AccessLog) -> Result<EvalReport> {
    config.validate()?;
    let cache = out.join("cache");
    let dataset = ensure_dataset(&config.scene, &cache)?;
    let reader = ChannelReader { dataset: &dataset, log };
    let split = split(dataset.num_users(), config.split_fraction, config.seeds.split)?;
    let chart = match spec.chart_mode {
        Some(mode) => Some(ensure_chart(&reader, mode, &split, spec.chart_dim, &config.chart, &cache)?),
        None => None,
    };
    let dir = out.join(&spec.id);
    let chart_ref = chart.as_ref().map(|(c, p)| (c, p.as_path()));
    let (model, meta) = train_stage(spec, config, &reader, chart_ref, &split, &dir)?;
    let report = eval_stage(&model, &meta, &reader, chart.as_ref().map(|c| &c.0), &split, &dir)?;
    info!(
        "{}: median η {:.4}, mean {:.4}, p10 {:.4}",
        spec.id, report.summary.median, report.summary.mean, report.summary.p10
    );
    Ok(report)
}

/// Re-evaluates a saved model directory against `dataset`.
pub fn eval_saved_model(model_dir: &Path, dataset: &Dataset, out: &Path, log: &AccessLog) -> Result<EvalReport> {
    let meta: ModelMeta = io::read_json(&model_dir.join("variant.json"))?;
    if meta.dataset_hash != dataset.content_hash() {
        return Err(Error::artifact(model_dir, "model was trained on a different dataset"));
    }
    let (model, _) = LbbModel::load(&model_dir.join("model"))?;
    let reader = ChannelReader { dataset, log };
    let split = split(dataset.num_users(), meta.config.split_fraction, meta.config.seeds.split)?;
    let chart = match &meta.chart_dir {
        Some(dir) => Some(StoredChart::load(dir, dataset)?),
        None => None,
    };
    eval_stage(&model, &meta, &reader, chart.as_ref(), &split, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_partition() {
        let s = split(10, 0.7, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split(10, 0.7, 3).unwrap(), s);
        assert_ne!(split(100, 0.7, 4).unwrap(), split(100, 0.7, 3).unwrap());
        assert!(split(10, 0.0, 1).is_err());
        assert!(split(10, 1.0, 1).is_err());
    }
}

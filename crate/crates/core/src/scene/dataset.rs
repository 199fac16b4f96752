//! Per-user channel triplets and their on-disk layout.
//!
//! A dataset directory holds `manifest.json` plus raw little-endian arrays:
//! `locations.f64` (U×3), `uplink_bs1.f64` and `downlink_bs2.f64`
//! (U × A·S × 2, interleaved re/im) and `los.u8` (U×2).

use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{synthesize_channel, trace_paths, ChannelVector, PathSet, SceneConfig, BS_DOWNLINK, BS_UPLINK};
use crate::error::{Error, Result};
use crate::io;

/// Generation fails when more users than this are shadowed on first draw.
pub const MAX_SHADOWED_FRACTION: f64 = 0.05;
const MAX_DRAWS_PER_USER: usize = 64;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub scene: SceneConfig,
    pub locations: Vec<[f64; 3]>,
    /// Uplink channel from each user to BS1.
    pub uplink: Vec<ChannelVector>,
    /// Downlink channel from BS2 to each user.
    pub downlink: Vec<ChannelVector>,
    /// Line-of-sight flags toward `[BS1, BS2]`.
    pub los: Vec<[bool; 2]>,
    /// Users whose first drawn location was shadowed and had to be redrawn.
    pub redrawn: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub scene: SceneConfig,
    pub rng_seed: u64,
    pub num_users: usize,
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub channel_len: usize,
    pub endianness: String,
    pub redrawn_users: usize,
    pub content_hash: String,
    pub files: DatasetFiles,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFiles {
    pub locations: String,
    pub uplink_bs1: String,
    pub downlink_bs2: String,
    pub los: String,
}

impl Default for DatasetFiles {
    fn default() -> Self {
        DatasetFiles {
            locations: "locations.f64".into(),
            uplink_bs1: "uplink_bs1.f64".into(),
            downlink_bs2: "downlink_bs2.f64".into(),
            los: "los.u8".into(),
        }
    }
}

struct UserSample {
    location: [f64; 3],
    uplink: ChannelVector,
    downlink: ChannelVector,
    los: [bool; 2],
    redrawn: bool,
}

fn user_rng(scene: &SceneConfig, index: usize) -> ChaCha8Rng {
    // one ChaCha stream per user: the draws of user j never depend on how
    // many draws other users consumed
    let mut rng = ChaCha8Rng::seed_from_u64(scene.rng_seed);
    rng.set_stream(index as u64);
    rng
}

fn draw_location(scene: &SceneConfig, rng: &mut ChaCha8Rng) -> [f64; 3] {
    let r = &scene.user_region;
    [rng.random_range(r.x[0]..r.x[1]), rng.random_range(r.y[0]..r.y[1]), r.height]
}

fn shadowed(r: &Result<PathSet>) -> Result<bool> {
    match r {
        Ok(_) => Ok(false),
        Err(Error::EmptyPathSet { .. }) => Ok(true),
        Err(e) => Err(Error::Domain(e.to_string())),
    }
}

/// Shadowing of each user's first draw toward `[BS1, BS2]`.
fn first_draw_shadowing(scene: &SceneConfig, index: usize) -> Result<[bool; 2]> {
    let location = draw_location(scene, &mut user_rng(scene, index));
    Ok([
        shadowed(&trace_paths(scene, location, BS_UPLINK))?,
        shadowed(&trace_paths(scene, location, BS_DOWNLINK))?,
    ])
}

fn sample_user(scene: &SceneConfig, index: usize) -> Result<UserSample> {
    let mut rng = user_rng(scene, index);
    let mut last = [f64::NAN; 3];
    for attempt in 0..MAX_DRAWS_PER_USER {
        let location = draw_location(scene, &mut rng);
        last = location;
        let up = trace_paths(scene, location, BS_UPLINK);
        let down = trace_paths(scene, location, BS_DOWNLINK);
        if let (Ok(up), Ok(down)) = (&up, &down) {
            return Ok(UserSample {
                location,
                los: [up.los, down.los],
                uplink: synthesize_channel(up, scene, scene.uplink_carrier_hz)?,
                downlink: synthesize_channel(down, scene, scene.downlink_carrier_hz)?,
                redrawn: attempt > 0,
            });
        }
        shadowed(&up)?;
        shadowed(&down)?;
    }
    Err(Error::EmptyPathSet { bs: BS_DOWNLINK, location: last })
}

/// Samples users uniformly in the user region and synthesizes their uplink
/// channel to BS1 and downlink channel from BS2.
///
/// Users whose draw is shadowed toward either base station are redrawn from
/// their own stream. Generation is rejected when more than
/// [`MAX_SHADOWED_FRACTION`] of the first draws are shadowed toward one base
/// station. The output is identical for identical configurations no matter
/// how many threads run it.
pub fn generate_dataset(scene: &SceneConfig) -> Result<Dataset> {
    scene.validate()?;
    let first: Vec<[bool; 2]> = (0..scene.num_users)
        .into_par_iter()
        .map(|j| first_draw_shadowing(scene, j))
        .collect::<Result<_>>()?;
    for bs in 0..2 {
        let shadowed = first.iter().filter(|f| f[bs]).count();
        if shadowed as f64 > MAX_SHADOWED_FRACTION * scene.num_users as f64 {
            return Err(Error::SceneMisconfigured { bs, shadowed, users: scene.num_users });
        }
    }
    let samples: Vec<UserSample> = (0..scene.num_users)
        .into_par_iter()
        .map(|j| sample_user(scene, j))
        .collect::<Result<_>>()?;
    let redrawn = samples.iter().filter(|s| s.redrawn).count();
    let mut ds = Dataset {
        scene: scene.clone(),
        locations: Vec::with_capacity(samples.len()),
        uplink: Vec::with_capacity(samples.len()),
        downlink: Vec::with_capacity(samples.len()),
        los: Vec::with_capacity(samples.len()),
        redrawn,
    };
    for s in samples {
        ds.locations.push(s.location);
        ds.uplink.push(s.uplink);
        ds.downlink.push(s.downlink);
        ds.los.push(s.los);
    }
    Ok(ds)
}

fn interleave(channels: &[ChannelVector]) -> Vec<f64> {
    channels
        .iter()
        .flat_map(|h| h.data.iter().flat_map(|c| [c.re, c.im]))
        .collect()
}

fn deinterleave(raw: &[f64], len: usize, carrier_hz: f64, bs: usize, num_antennas: usize) -> Vec<ChannelVector> {
    raw.chunks_exact(2 * len)
        .map(|chunk| {
            let data: Vec<Complex64> =
                chunk.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let shadowed = data.iter().all(|c| c.norm_sqr() == 0.0);
            ChannelVector { data, carrier_hz, bs, num_antennas, shadowed }
        })
        .collect()
}

impl Dataset {
    pub fn num_users(&self) -> usize {
        self.locations.len()
    }

    fn raw_arrays(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<u8>) {
        let locations = self.locations.iter().flatten().copied().collect();
        let los = self.los.iter().flat_map(|f| f.map(u8::from)).collect();
        (locations, interleave(&self.uplink), interleave(&self.downlink), los)
    }

    /// SHA-256 over the raw array bytes, in file order.
    pub fn content_hash(&self) -> String {
        let (loc, up, down, los) = self.raw_arrays();
        let mut hasher = Sha256::new();
        for arr in [&loc, &up, &down] {
            for v in arr.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher.update(&los);
        hex::encode(hasher.finalize())
    }

    /// Uplink channels (BS1) or downlink channels (BS2).
    pub fn channels(&self, bs: usize) -> &[ChannelVector] {
        if bs == BS_UPLINK {
            &self.uplink
        } else {
            &self.downlink
        }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        io::ensure_dir(dir)?;
        let files = DatasetFiles::default();
        let (loc, up, down, los) = self.raw_arrays();
        io::write_f64(&dir.join(&files.locations), &loc)?;
        io::write_f64(&dir.join(&files.uplink_bs1), &up)?;
        io::write_f64(&dir.join(&files.downlink_bs2), &down)?;
        io::write_u8(&dir.join(&files.los), &los)?;
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            scene: self.scene.clone(),
            rng_seed: self.scene.rng_seed,
            num_users: self.num_users(),
            num_antennas: self.scene.num_antennas(),
            num_subcarriers: self.scene.num_subcarriers,
            channel_len: self.scene.channel_len(),
            endianness: io::ENDIANNESS.into(),
            redrawn_users: self.redrawn,
            content_hash: self.content_hash(),
            files,
        };
        io::write_json(&dir.join("manifest.json"), &manifest)
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let manifest_path = dir.join("manifest.json");
        let m: DatasetManifest = io::read_json(&manifest_path)?;
        if m.endianness != io::ENDIANNESS || m.format_version != FORMAT_VERSION {
            return Err(Error::artifact(&manifest_path, "unsupported format or endianness"));
        }
        let u = m.num_users;
        let len = m.channel_len;
        if len != m.scene.channel_len() {
            return Err(Error::artifact(&manifest_path, "channel length disagrees with scene"));
        }
        let loc = io::read_f64(&dir.join(&m.files.locations), u * 3)?;
        let up = io::read_f64(&dir.join(&m.files.uplink_bs1), u * len * 2)?;
        let down = io::read_f64(&dir.join(&m.files.downlink_bs2), u * len * 2)?;
        let los = io::read_u8(&dir.join(&m.files.los), u * 2)?;
        let a = m.scene.num_antennas();
        let ds = Dataset {
            locations: loc.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            uplink: deinterleave(&up, len, m.scene.uplink_carrier_hz, BS_UPLINK, a),
            downlink: deinterleave(&down, len, m.scene.downlink_carrier_hz, BS_DOWNLINK, a),
            los: los.chunks_exact(2).map(|c| [c[0] != 0, c[1] != 0]).collect(),
            redrawn: m.redrawn_users,
            scene: m.scene,
        };
        if ds.content_hash() != m.content_hash {
            return Err(Error::artifact(&manifest_path, "content hash mismatch"));
        }
        Ok(ds)
    }
}

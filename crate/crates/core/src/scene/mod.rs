//! Synthetic street-canyon scene.
//!
//! Two base stations on opposite sides of a street serve users spread on a
//! horizontal rectangle. Propagation is modelled with the image-source method
//! up to first order (two walls and the ground), which gives every user a
//! handful of specular paths whose delays, gains and departure angles vary
//! smoothly with position. The resulting per-user channel vectors play the
//! role of a ray-traced dataset.

mod array;
mod channel;
mod dataset;
mod geometry;

pub use array::{steering_from_cosines, steering_vector, ArrayOrientation};
pub use channel::{subcarrier_frequencies, synthesize_channel, ChannelVector};
pub use dataset::{generate_dataset, Dataset, DatasetManifest, MAX_SHADOWED_FRACTION};
pub use geometry::{image_source_rays, trace_paths, Path, PathKind, PathSet, RayGeometry};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Index of the base station that observes uplink channels.
pub const BS_UPLINK: usize = 0;
/// Index of the base station whose downlink channels are predicted.
pub const BS_DOWNLINK: usize = 1;

/// Infinite vertical reflecting plane. `normal` is horizontal and points
/// into the street.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallPlane {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

impl WallPlane {
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        (0..3).map(|i| (p[i] - self.point[i]) * self.normal[i]).sum::<f64>() / norm3(self.normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Axis-aligned vertical rectangle lying in the plane `axis = offset`.
///
/// `span` bounds the other horizontal coordinate and `z` the height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub axis: Axis,
    pub offset: f64,
    pub span: [f64; 2],
    pub z: [f64; 2],
}

/// Users are placed on `x × y` at a fixed `height`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRegion {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub height: f64,
}

impl UserRegion {
    fn corners(&self) -> [[f64; 3]; 4] {
        let h = self.height;
        [
            [self.x[0], self.y[0], h],
            [self.x[1], self.y[0], h],
            [self.x[0], self.y[1], h],
            [self.x[1], self.y[1], h],
        ]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (self.x[0]..=self.x[1]).contains(&p[0]) && (self.y[0]..=self.y[1]).contains(&p[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub bs_positions: [[f64; 3]; 2],
    pub array_orientations: [ArrayOrientation; 2],
    pub wall_planes: Vec<WallPlane>,
    pub ground_height: f64,
    /// Whether the ground contributes a reflected path.
    pub ground_reflection: bool,
    pub obstacles: Vec<Obstacle>,
    pub reflection_coefficient: f64,
    pub uplink_carrier_hz: f64,
    pub downlink_carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub num_subcarriers: usize,
    /// `[Nx, Ny]`: elements along the horizontal and vertical array axes.
    pub array_shape: [usize; 2],
    pub num_users: usize,
    pub user_region: UserRegion,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            bs_positions: [[-12.0, -18.0, 6.0], [12.0, 18.0, 6.0]],
            array_orientations: [
                ArrayOrientation { normal: [0.0, 1.0, 0.0], up: [0.0, 0.0, 1.0] },
                ArrayOrientation { normal: [0.0, -1.0, 0.0], up: [0.0, 0.0, 1.0] },
            ],
            wall_planes: vec![
                WallPlane { point: [0.0, -20.0, 0.0], normal: [0.0, 1.0, 0.0] },
                WallPlane { point: [0.0, 20.0, 0.0], normal: [0.0, -1.0, 0.0] },
            ],
            ground_height: 0.0,
            ground_reflection: true,
            obstacles: vec![
                Obstacle { axis: Axis::Y, offset: 10.0, span: [-2.0, 6.0], z: [0.0, 3.5] },
                Obstacle { axis: Axis::X, offset: -24.0, span: [8.0, 12.0], z: [0.0, 3.0] },
            ],
            reflection_coefficient: 0.7,
            uplink_carrier_hz: 3.5e9,
            downlink_carrier_hz: 28e9,
            bandwidth_hz: 20e6,
            num_subcarriers: 16,
            array_shape: [8, 8],
            num_users: 2000,
            user_region: UserRegion { x: [-30.0, 30.0], y: [-15.0, 15.0], height: 1.5 },
            rng_seed: 0x5eed_c4a7,
        }
    }
}

impl SceneConfig {
    pub fn num_antennas(&self) -> usize {
        self.array_shape[0] * self.array_shape[1]
    }

    pub fn channel_len(&self) -> usize {
        self.num_antennas() * self.num_subcarriers
    }

    /// Carrier used by base station `bs`: BS1 listens on the uplink band,
    /// BS2 transmits on the downlink band.
    pub fn carrier_hz(&self, bs: usize) -> f64 {
        if bs == BS_UPLINK {
            self.uplink_carrier_hz
        } else {
            self.downlink_carrier_hz
        }
    }

    /// Subcarrier whose precoder the beamformer predicts.
    pub fn central_subcarrier(&self) -> usize {
        self.num_subcarriers / 2
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_antennas() == 0 {
            return bad(format!("array shape {:?} has no elements", self.array_shape));
        }
        if self.num_subcarriers == 0 {
            return bad("num_subcarriers must be at least 1".into());
        }
        if !(self.uplink_carrier_hz > 0.0 && self.downlink_carrier_hz > 0.0) {
            return bad("carrier frequencies must be positive".into());
        }
        if !(self.bandwidth_hz > 0.0) {
            return bad("bandwidth must be positive".into());
        }
        if !(self.reflection_coefficient > 0.0 && self.reflection_coefficient <= 1.0) {
            return bad(format!(
                "reflection coefficient {} outside (0, 1]",
                self.reflection_coefficient
            ));
        }
        if self.num_users == 0 {
            return bad("num_users must be positive".into());
        }
        let r = &self.user_region;
        if !(r.x[0] < r.x[1] && r.y[0] < r.y[1]) {
            return bad(format!("user region {:?} is empty", r));
        }
        if r.height <= self.ground_height {
            return bad("user height must lie above the ground".into());
        }
        for (i, w) in self.wall_planes.iter().enumerate() {
            if w.normal[2] != 0.0 || norm3(w.normal) == 0.0 {
                return bad(format!("wall {i} normal must be horizontal and nonzero"));
            }
            if r.corners().iter().any(|&c| w.signed_distance(c) <= 0.0) {
                return bad(format!("user region is not strictly inside wall {i}"));
            }
            for (b, &p) in self.bs_positions.iter().enumerate() {
                if w.signed_distance(p) <= 0.0 {
                    return bad(format!("base station {b} lies outside wall {i}"));
                }
            }
        }
        for (b, o) in self.array_orientations.iter().enumerate() {
            o.basis().map_err(|e| Error::Config(format!("base station {b}: {e}")))?;
            let n = o.unit_normal();
            let p = self.bs_positions[b];
            let behind = r.corners().iter().any(|c| {
                (0..3).map(|i| (c[i] - p[i]) * n[i]).sum::<f64>() <= 0.0
            });
            if behind {
                return bad(format!("part of the user region lies behind base station {b}"));
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.span[0] < o.span[1] && o.z[0] < o.z[1]) {
                return bad(format!("obstacle {i} is degenerate"));
            }
        }
        Ok(())
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

use num_complex::Complex64;
use std::f64::consts::PI;

use super::{steering_vector, PathSet, SceneConfig};
use crate::error::Result;

/// Vectorized MIMO-OFDM channel between one base station and one user.
///
/// Entry `a + s * A` holds antenna `a` on subcarrier `s`: the antenna index
/// runs fastest and the subcarrier index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub data: Vec<Complex64>,
    pub carrier_hz: f64,
    pub bs: usize,
    pub num_antennas: usize,
    /// Set when no path reached the user and the vector is all zeros.
    pub shadowed: bool,
}

impl ChannelVector {
    pub fn num_subcarriers(&self) -> usize {
        self.data.len() / self.num_antennas
    }

    /// Per-antenna channel on subcarrier `s`.
    pub fn subcarrier(&self, s: usize) -> &[Complex64] {
        &self.data[s * self.num_antennas..(s + 1) * self.num_antennas]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl AsRef<[Complex64]> for ChannelVector {
    fn as_ref(&self) -> &[Complex64] {
        &self.data
    }
}

/// Subcarrier centre frequencies: `carrier + (s - (S-1)/2) * bandwidth / S`.
pub fn subcarrier_frequencies(carrier_hz: f64, bandwidth_hz: f64, num_subcarriers: usize) -> Vec<f64> {
    let spacing = bandwidth_hz / num_subcarriers as f64;
    let mid = (num_subcarriers as f64 - 1.0) / 2.0;
    (0..num_subcarriers)
        .map(|s| carrier_hz + (s as f64 - mid) * spacing)
        .collect()
}

/// Sums every path's contribution on every subcarrier. Array responses are
/// evaluated at the carrier (narrowband array).
pub fn synthesize_channel(paths: &PathSet, scene: &SceneConfig, carrier_hz: f64) -> Result<ChannelVector> {
    let num_antennas = scene.num_antennas();
    let freqs = subcarrier_frequencies(carrier_hz, scene.bandwidth_hz, scene.num_subcarriers);
    let mut data = vec![Complex64::new(0.0, 0.0); num_antennas * freqs.len()];
    let orientation = &scene.array_orientations[paths.bs];
    for p in &paths.paths {
        let response =
            steering_vector(scene.array_shape, orientation, carrier_hz, p.azimuth, p.elevation)?;
        for (s, &f) in freqs.iter().enumerate() {
            // reduce the cycle count before scaling by 2π to keep the phase accurate
            let cycles = (f * p.delay_s).fract();
            let coeff = p.gain * Complex64::from_polar(1.0, -2.0 * PI * cycles);
            let block = &mut data[s * num_antennas..(s + 1) * num_antennas];
            for (h, a) in block.iter_mut().zip(&response) {
                *h += coeff * a;
            }
        }
    }
    Ok(ChannelVector {
        data,
        carrier_hz,
        bs: paths.bs,
        num_antennas,
        shadowed: paths.is_shadowed(),
    })
}

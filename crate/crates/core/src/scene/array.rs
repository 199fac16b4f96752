//! Uniform planar array response.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Pose of a planar array: boresight `normal` and a vector giving the
/// vertical array axis (`up`, orthogonalised against the normal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayOrientation {
    pub normal: [f64; 3],
    pub up: [f64; 3],
}

impl ArrayOrientation {
    pub(crate) fn unit_normal(&self) -> Vector3<f64> {
        Vector3::from(self.normal).normalize()
    }

    /// Orthonormal `(horizontal, vertical, normal)` axes of the array.
    pub(crate) fn basis(&self) -> Result<(Vector3<f64>, Vector3<f64>, Vector3<f64>)> {
        let n = Vector3::from(self.normal);
        if n.norm() == 0.0 {
            return Err(Error::Domain("array normal is zero".into()));
        }
        let n = n.normalize();
        let up = Vector3::from(self.up);
        let v = up - n * up.dot(&n);
        if v.norm() < 1e-12 {
            return Err(Error::Domain("array up vector is parallel to the normal".into()));
        }
        let v = v.normalize();
        let h = n.cross(&v);
        Ok((h, v, n))
    }

    /// Direction cosines `(u, v)` of a unit direction in array coordinates.
    /// Fails for directions behind the array plane.
    pub fn direction_cosines(&self, direction: Vector3<f64>) -> Result<(f64, f64)> {
        let (h, v, n) = self.basis()?;
        let d = direction.normalize();
        if d.dot(&n) < -1e-12 {
            return Err(Error::Domain(format!(
                "direction {:?} lies behind the array",
                d.as_slice()
            )));
        }
        Ok((d.dot(&h), d.dot(&v)))
    }
}

/// Unit vector for a global azimuth (from +x toward +y) and elevation
/// (above the horizontal plane).
pub(crate) fn direction_from_angles(azimuth: f64, elevation: f64) -> Vector3<f64> {
    Vector3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

/// Half-wavelength UPA response for direction cosines `(u, v)`.
///
/// Element `(m, n)` sits at index `m + Nx * n` and has phase `π (m u + n v)`.
pub fn steering_from_cosines(array_shape: [usize; 2], u: f64, v: f64) -> Vec<Complex64> {
    let [nx, ny] = array_shape;
    let mut out = Vec::with_capacity(nx * ny);
    for n in 0..ny {
        for m in 0..nx {
            out.push(Complex64::from_polar(1.0, PI * (m as f64 * u + n as f64 * v)));
        }
    }
    out
}

/// Array response toward a global `(azimuth, elevation)` departure direction.
///
/// Elements are spaced half a wavelength apart at `carrier_hz`, so the
/// response does not depend on the carrier value itself.
pub fn steering_vector(
    array_shape: [usize; 2],
    orientation: &ArrayOrientation,
    carrier_hz: f64,
    azimuth: f64,
    elevation: f64,
) -> Result<Vec<Complex64>> {
    if !(carrier_hz > 0.0) {
        return Err(Error::Domain(format!("carrier {carrier_hz} Hz must be positive")));
    }
    let (u, v) = orientation.direction_cosines(direction_from_angles(azimuth, elevation))?;
    Ok(steering_from_cosines(array_shape, u, v))
}

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Frozen random Fourier feature layer, `sqrt(2/F)·cos(Ωz + b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RffLayer {
    /// `F × D`, entries `N(0, 1/γ²)`.
    pub omega: Array2<f64>,
    /// `F` phases, uniform on `[0, 2π)`.
    pub bias: Array1<f64>,
    pub gamma: f64,
}

pub fn rff_init(input_dim: usize, num_features: usize, gamma: f64, seed: u64) -> Result<RffLayer> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(format!("RFF lengthscale must be positive, got {gamma}")));
    }
    if input_dim == 0 || num_features == 0 {
        return Err(Error::Domain("RFF layer needs positive input and feature counts".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / gamma).expect("finite positive std");
    let omega = Array2::from_shape_simple_fn((num_features, input_dim), || normal.sample(&mut rng));
    let bias = Array1::from_shape_simple_fn(num_features, || rng.random_range(0.0..std::f64::consts::TAU));
    Ok(RffLayer { omega, bias, gamma })
}

impl RffLayer {
    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }

    pub fn num_features(&self) -> usize {
        self.omega.nrows()
    }

    /// Features of a batch of inputs, one per row.
    pub fn forward(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch { expected: self.input_dim(), got: z.ncols() });
        }
        let scale = (2.0 / self.num_features() as f64).sqrt();
        let mut out = z.dot(&self.omega.t());
        for mut row in out.rows_mut() {
            row.zip_mut_with(&self.bias, |x, b| *x = scale * (*x + b).cos());
        }
        Ok(out)
    }
}

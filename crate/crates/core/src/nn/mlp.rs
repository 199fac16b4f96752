use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Affine layer `y = x Wᵀ + b` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

/// Fully connected network with ReLU after every layer but the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass: `inputs[l]` is the input of layer
/// `l`, `pre[l]` its pre-activation.
#[derive(Debug, Clone)]
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl MlpCache {
    /// Which hidden units were active (positive pre-activation), layer by
    /// layer, sample by sample.
    pub fn active_units(&self) -> Vec<bool> {
        let hidden = self.pre.len().saturating_sub(1);
        self.pre[..hidden].iter().flat_map(|p| p.iter().map(|&z| z > 0.0)).collect()
    }
}

impl Mlp {
    /// Weights i.i.d. uniform on `±1/√fan_in`, biases zero.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Mlp> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Domain(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Dense {
                    weight: Array2::from_shape_simple_fn((w[1], w[0]), || rng.random_range(-bound..=bound)),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Ok(Mlp { layers })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, MlpCache)> {
        if x.ncols() != self.layers[0].inputs() {
            return Err(Error::ShapeMismatch { expected: self.layers[0].inputs(), got: x.ncols() });
        }
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut y = h.dot(&layer.weight.t());
            y += &layer.bias;
            inputs.push(h);
            h = if l < last { y.mapv(|v| v.max(0.0)) } else { y.clone() };
            pre.push(y);
        }
        Ok((h, MlpCache { inputs, pre }))
    }

    /// Parameter gradients for upstream gradient `dy` on the output, in the
    /// same shapes as `self`.
    pub fn backward(&self, cache: &MlpCache, dy: ArrayView2<f64>) -> Mlp {
        let last = self.layers.len() - 1;
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = dy.to_owned();
        for l in (0..self.layers.len()).rev() {
            if l < last {
                delta.zip_mut_with(&cache.pre[l], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let weight = delta.t().dot(&cache.inputs[l]).as_standard_layout().into_owned();
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                delta = delta.dot(&self.layers[l].weight);
            }
            grads.push(Dense { weight, bias });
        }
        grads.reverse();
        Mlp { layers: grads }
    }

    /// Parameters as flat slices in declaration order: `W1, b1, W2, b2, …`.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_parameters_give_zero_output() {
        let mut m = Mlp::init(&[4, 6, 3], 1).unwrap();
        for s in m.param_slices_mut() {
            s.fill(0.0);
        }
        let (y, _) = m.forward(array![[1.0, -2.0, 3.0, 0.5]].view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_identity_layer_reproduces_input() {
        let m = Mlp { layers: vec![Dense { weight: Array2::eye(3), bias: Array1::zeros(3) }] };
        let x = array![[1.0, -2.0, 3.0]];
        assert_eq!(m.forward(x.view()).unwrap().0, x);
    }

    #[test]
    fn init_bounds_and_shapes() {
        let m = Mlp::init(&[600, 300, 300, 300, 128], 4).unwrap();
        assert_eq!(m.sizes(), vec![600, 300, 300, 300, 128]);
        for l in &m.layers {
            let bound = 1.0 / (l.inputs() as f64).sqrt();
            assert!(l.weight.iter().all(|w| w.abs() <= bound));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn scalar_chain_rule_by_hand() {
        // y = w2·relu(w1·x + b1) + b2 with x = 2, w1 = 3, b1 = -1, w2 = -0.5, b2 = 4
        let m = Mlp {
            layers: vec![
                Dense { weight: array![[3.0]], bias: array![-1.0] },
                Dense { weight: array![[-0.5]], bias: array![4.0] },
            ],
        };
        let (y, cache) = m.forward(array![[2.0]].view()).unwrap();
        assert_eq!(y[[0, 0]], 1.5);
        let g = m.backward(&cache, array![[1.0]].view());
        // ∂y/∂w2 = relu(5) = 5, ∂y/∂b2 = 1, ∂y/∂w1 = w2·x = -1, ∂y/∂b1 = w2 = -0.5
        assert_eq!(g.layers[1].weight[[0, 0]], 5.0);
        assert_eq!(g.layers[1].bias[0], 1.0);
        assert_eq!(g.layers[0].weight[[0, 0]], -1.0);
        assert_eq!(g.layers[0].bias[0], -0.5);
    }

    #[test]
    fn relu_kink_has_zero_slope() {
        let m = Mlp {
            layers: vec![
                Dense { weight: array![[1.0]], bias: array![0.0] },
                Dense { weight: array![[1.0]], bias: array![0.0] },
            ],
        };
        let (_, cache) = m.forward(array![[0.0]].view()).unwrap();
        let g = m.backward(&cache, array![[1.0]].view());
        assert_eq!(g.layers[0].weight[[0, 0]], 0.0);
        assert_eq!(g.layers[0].bias[0], 0.0);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = Mlp::init(&[3, 5, 2], 2).unwrap();
        let (_, cache) = m.forward(array![[0.1, 0.2, 0.3]].view()).unwrap();
        let g = m.backward(&cache, Array2::zeros((1, 2)).view());
        assert!(g.param_slices().iter().all(|s| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn input_jacobian_matches_finite_differences() {
        let m = Mlp::init(&[4, 7, 7, 3], 9).unwrap();
        let x = array![[0.3, -0.7, 1.1, 0.2]];
        let dx = array![[0.4, -0.1, 0.25, 0.9]] * 1e-6;
        let (y0, _) = m.forward(x.view()).unwrap();
        let (y1, _) = m.forward((&x + &dx).view()).unwrap();
        // Jacobian-vector product by differentiating through the first layer
        for o in 0..3 {
            let mut e = Array2::zeros((1, 3));
            e[[0, o]] = 1.0;
            let (_, cache) = m.forward(x.view()).unwrap();
            let g = m.backward(&cache, e.view());
            // ∂y/∂x = ∂y/∂b1 · W1, since the first pre-activation is W1 x + b1
            let jx = g.layers[0].bias.dot(&m.layers[0].weight);
            let predicted = jx.dot(&dx.row(0));
            let actual = y1[[0, o]] - y0[[0, o]];
            assert!((predicted - actual).abs() <= 1e-5 * actual.abs().max(1e-9), "{predicted} vs {actual}");
        }
    }
}

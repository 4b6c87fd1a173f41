//! Dense multilayer perceptron with tanh hidden layers, manual backprop and
//! Adam.
//!
//! Parameters live in one flat vector laid out layer by layer as
//! `W (out x in, row-major)` then `b (out)`, so optimisers, checkpoints and
//! finite-difference checks all work on plain slices.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// `activations[0]` is the input, `activations[l]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights and zero biases; the last layer is scaled by
    /// `output_scale` (a small value keeps a fresh policy near uniform).
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_scale: f64, rng: &mut R) -> Mlp {
        assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0), "an MLP needs at least input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        let n_layers = sizes.len() - 1;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let scale = if l + 1 == n_layers { output_scale } else { 1.0 };
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            params.extend((0..fan_in * fan_out).map(|_| dist.sample(rng) * scale));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Mlp { sizes: sizes.to_vec(), params }
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn n_inputs(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.sizes.last().expect("non-empty sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Rebuilds a network from stored sizes and parameters.
    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Option<Mlp> {
        (sizes.len() >= 2 && Self::count(&sizes) == params.len()).then_some(Mlp { sizes, params })
    }

    pub fn forward(&self, input: &[f64]) -> (Vec<f64>, MlpCache) {
        assert_eq!(input.len(), self.n_inputs(), "input width");
        let n_layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let x = &activations[l];
            let mut y: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(y);
            offset += n_in * n_out + n_out;
        }
        let out = activations.last().expect("output layer").clone();
        (out, MlpCache { activations })
    }

    /// Accumulates `d loss / d params` into `grads` given `d loss / d output`.
    pub fn backward(&self, cache: &MlpCache, d_output: &[f64], grads: &mut [f64]) {
        assert_eq!(grads.len(), self.params.len(), "gradient buffer size");
        let n_layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = d_output.to_vec();
        for l in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < n_layers {
                // through tanh: y = tanh(z), dy/dz = 1 - y^2
                for (d, y) in delta.iter_mut().zip(&cache.activations[l + 1]) {
                    *d *= 1.0 - y * y;
                }
            }
            let x = &cache.activations[l];
            let o = offsets[l];
            for j in 0..n_out {
                let row = &mut grads[o + j * n_in..o + (j + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g += delta[j] * xi;
                }
                grads[o + n_in * n_out + j] += delta[j];
            }
            if l > 0 {
                let w = &self.params[o..o + n_in * n_out];
                delta = (0..n_in).map(|i| (0..n_out).map(|j| w[j * n_in + i] * delta[j]).sum()).collect();
            }
        }
    }
}

/// Adam optimiser state for one parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize, learning_rate: f64) -> Adam {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            params[i] -= self.learning_rate * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.epsilon);
        }
    }
}

/// Rescales `grads` so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

//! Fully connected tanh networks on batches stored column-per-sample.

use nalgebra::{DMatrix, DMatrixView, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::RlError;

/// Tanh hidden layers and a linear output layer. All weights and biases live
/// in one flat vector, layer by layer: `W` (column-major, `out x in`) then `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug, Default)]
pub struct MlpCache {
    /// Layer inputs; `inputs[0]` is the network input.
    inputs: Vec<DMatrix<f64>>,
}

impl Mlp {
    /// Initializes weights with scaled normal draws (gain `sqrt(2)` for
    /// hidden layers, `output_gain` for the last) and zero biases.
    pub fn new(sizes: &[usize], output_gain: f64, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output sizes");
        let mut params = Vec::with_capacity(Self::count(sizes));
        let layers = sizes.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == layers { output_gain } else { 2f64.sqrt() };
            let normal = Normal::new(0.0, gain / (fan_in as f64).sqrt()).expect("finite std");
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self { sizes: sizes.to_vec(), params }
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self, RlError> {
        let expected = Self::count(sizes);
        if sizes.len() < 2 || params.len() != expected {
            return Err(RlError::Dimension { expected, got: params.len() });
        }
        Ok(Self { sizes: sizes.to_vec(), params })
    }

    fn count(sizes: &[usize]) -> usize {
        sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn layer(&self, offset: usize, l: usize) -> (DMatrixView<'_, f64>, DMatrixView<'_, f64>) {
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        let w = DMatrixView::from_slice(&self.params[offset..offset + i * o], o, i);
        let b = DMatrixView::from_slice(&self.params[offset + i * o..offset + i * o + o], o, 1);
        (w, b)
    }

    fn check(&self, x: &DMatrix<f64>) -> Result<(), RlError> {
        if x.nrows() != self.input_dim() {
            return Err(RlError::Dimension { expected: self.input_dim(), got: x.nrows() });
        }
        Ok(())
    }

    /// Batch forward pass; columns are samples.
    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>, RlError> {
        self.check(x)?;
        let mut h = x.clone();
        let layers = self.sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (w, b) = self.layer(offset, l);
            let mut z = w * &h;
            for mut col in z.column_iter_mut() {
                col += b.column(0);
            }
            if l + 1 < layers {
                z.apply(|v| *v = v.tanh());
            }
            h = z;
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        Ok(h)
    }

    /// Forward pass that records what the backward pass needs.
    pub fn forward_cached(&self, x: &DMatrix<f64>, cache: &mut MlpCache) -> Result<DMatrix<f64>, RlError> {
        self.check(x)?;
        cache.inputs.clear();
        let mut h = x.clone();
        let layers = self.sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (w, b) = self.layer(offset, l);
            let mut z = w * &h;
            for mut col in z.column_iter_mut() {
                col += b.column(0);
            }
            if l + 1 < layers {
                z.apply(|v| *v = v.tanh());
            }
            cache.inputs.push(std::mem::replace(&mut h, z));
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        Ok(h)
    }

    /// Accumulates parameter gradients into `grad` given `dL/d output`.
    pub fn backward(&self, cache: &MlpCache, grad_out: &DMatrix<f64>, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = grad_out.clone();
        for l in (0..layers).rev() {
            let (i, o) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &cache.inputs[l];
            let dw = &delta * input.transpose();
            for (g, d) in grad[off..off + i * o].iter_mut().zip(dw.iter()) {
                *g += d;
            }
            let db: DVector<f64> = delta.column_sum();
            for (g, d) in grad[off + i * o..off + i * o + o].iter_mut().zip(db.iter()) {
                *g += d;
            }
            if l > 0 {
                let (w, _) = self.layer(off, l);
                let mut next = w.transpose() * &delta;
                // input of layer l is the tanh output of layer l-1
                next.zip_apply(input, |d, h| *d *= 1.0 - h * h);
                delta = next;
            }
        }
    }
}

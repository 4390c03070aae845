use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Layer, Matrix, ParamSet};

/// Anything that predicts the noise component of `x_t` at timestep `t`.
pub trait NoisePredictor {
    fn data_dim(&self) -> usize;
    fn predict(&self, x_t: &[f64], t: usize) -> Vec<f64>;
}

/// Architecture of the fully connected denoiser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserConfig {
    pub data_dim: usize,
    pub hidden: Vec<usize>,
    /// Width of the sinusoidal time embedding concatenated to the input.
    /// Must be even; 0 disables the embedding.
    pub time_embed_dim: usize,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        DenoiserConfig {
            data_dim: 2,
            hidden: vec![64, 64, 64],
            time_embed_dim: 16,
        }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data_dim == 0 {
            return Err(Error::invalid("data_dim must be positive"));
        }
        if !self.time_embed_dim.is_multiple_of(2) {
            return Err(Error::invalid("time_embed_dim must be even"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.data_dim + self.time_embed_dim
    }
}

/// Sinusoidal embedding of a timestep: `dim/2` sines followed by `dim/2` cosines.
pub fn sinusoidal_embedding(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut out = vec![0.0; dim];
    let t = t as f64;
    for i in 0..half {
        let freq = (-(10_000f64.ln()) * i as f64 / half as f64).exp();
        out[i] = (t * freq).sin();
        out[half + i] = (t * freq).cos();
    }
    out
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn affine(layer: &Layer, input: &[f64]) -> Vec<f64> {
    let w = &layer.weight;
    (0..w.rows())
        .map(|r| {
            let row = w.row(r);
            row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + layer.bias[r]
        })
        .collect()
}

/// Fully connected noise predictor `eps_theta(x_t, t)` with SiLU activations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiserModel {
    params: ParamSet,
    data_dim: usize,
    time_embed_dim: usize,
}

impl DenoiserModel {
    /// Random initialisation with `N(0, 1/fan_in)` weights and zero biases.
    pub fn new<R: Rng + ?Sized>(config: &DenoiserConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut widths = vec![config.input_dim()];
        widths.extend_from_slice(&config.hidden);
        widths.push(config.data_dim);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let scale = 1.0 / (w[0] as f64).sqrt();
                let weight = Matrix::from_fn(w[1], w[0], |_, _| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * scale
                });
                Layer::new(format!("fc{i}"), i, weight, vec![0.0; w[1]])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_params(ParamSet::new(layers)?, config.data_dim, config.time_embed_dim)
    }

    pub fn from_params(params: ParamSet, data_dim: usize, time_embed_dim: usize) -> Result<Self> {
        let (first, last) = match (params.layers().first(), params.layers().last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Architecture("denoiser needs at least one layer".into())),
        };
        if first.inputs() != data_dim + time_embed_dim {
            return Err(Error::Architecture(format!(
                "first layer takes {} inputs, expected {data_dim} + {time_embed_dim}",
                first.inputs()
            )));
        }
        if last.outputs() != data_dim {
            return Err(Error::Architecture(format!(
                "last layer emits {} values, expected {data_dim}",
                last.outputs()
            )));
        }
        if !time_embed_dim.is_multiple_of(2) {
            return Err(Error::invalid("time_embed_dim must be even"));
        }
        Ok(DenoiserModel {
            params,
            data_dim,
            time_embed_dim,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    /// Same embedding and data width, different parameters (e.g. after pruning).
    pub fn with_params(&self, params: ParamSet) -> Result<Self> {
        Self::from_params(params, self.data_dim, self.time_embed_dim)
    }

    pub fn time_embed_dim(&self) -> usize {
        self.time_embed_dim
    }

    fn input(&self, x_t: &[f64], t: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(self.data_dim + self.time_embed_dim);
        input.extend_from_slice(x_t);
        input.extend(sinusoidal_embedding(t, self.time_embed_dim));
        input
    }

    /// Forward pass keeping every layer input and pre-activation.
    fn forward_cached(&self, x_t: &[f64], t: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let layers = self.params.layers();
        let mut inputs = Vec::with_capacity(layers.len());
        let mut pre = Vec::with_capacity(layers.len());
        let mut a = self.input(x_t, t);
        for (i, layer) in layers.iter().enumerate() {
            let z = affine(layer, &a);
            let next = if i + 1 < layers.len() {
                z.iter().map(|&v| silu(v)).collect()
            } else {
                z.clone()
            };
            inputs.push(std::mem::replace(&mut a, next));
            pre.push(z);
        }
        (inputs, pre)
    }

    /// Accumulates `d(output . upstream)/d(params)` into `grad`.
    pub(crate) fn backprop(&self, x_t: &[f64], t: usize, upstream: &[f64], grad: &mut ParamSet) {
        let (inputs, pre) = self.forward_cached(x_t, t);
        let layers = self.params.layers();
        let mut delta = upstream.to_vec();
        for l in (0..layers.len()).rev() {
            let layer = &layers[l];
            let input = &inputs[l];
            {
                let g = &mut grad.layers_mut()[l];
                for (r, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (gw, a) in g.weight.row_mut(r).iter_mut().zip(input) {
                        *gw += d * a;
                    }
                    g.bias[r] += d;
                }
            }
            if l > 0 {
                let w = &layer.weight;
                let mut back = vec![0.0; w.cols()];
                for (r, d) in delta.iter().enumerate() {
                    for (b, wv) in back.iter_mut().zip(w.row(r)) {
                        *b += d * wv;
                    }
                }
                delta = back
                    .iter()
                    .zip(&pre[l - 1])
                    .map(|(b, z)| b * silu_grad(*z))
                    .collect();
            }
        }
    }
}

impl NoisePredictor for DenoiserModel {
    fn data_dim(&self) -> usize {
        self.data_dim
    }

    fn predict(&self, x_t: &[f64], t: usize) -> Vec<f64> {
        let layers = self.params.layers();
        let mut a = self.input(x_t, t);
        for (i, layer) in layers.iter().enumerate() {
            let z = affine(layer, &a);
            a = if i + 1 < layers.len() {
                z.into_iter().map(silu).collect()
            } else {
                z
            };
        }
        a
    }
}

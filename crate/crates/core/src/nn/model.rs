use serde::{Deserialize, Serialize};

use super::conv::{Conv1d, ConvCache, Padding};
use super::dense::Dense;
use super::layers::{dropout_forward, relu_backward, relu_forward, Mode};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: Padding,
    },
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    Dropout {
        rate: f64,
    },
    Flatten,
    Activation {
        kind: Activation,
    },
}

/// Serialisable architecture description. The input is a single-channel
/// spectrum of `input_len` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub input_len: usize,
    pub output_dim: usize,
}

pub const FISHCNN_KERNEL: usize = 64;
pub const FISHCNN_DROPOUT: f64 = 0.10;

/// The default two-conv, three-dense regressor for spectra of `input_len` points.
pub fn build_fishcnn(input_len: usize) -> Result<ModelSpec> {
    build_fishcnn_with(input_len, FISHCNN_KERNEL, FISHCNN_DROPOUT)
}

pub fn build_fishcnn_with(input_len: usize, kernel: usize, dropout: f64) -> Result<ModelSpec> {
    if input_len < kernel {
        return Err(Error::InvalidArgument(format!(
            "input length {input_len} is shorter than the kernel ({kernel})"
        )));
    }
    let relu = LayerSpec::Activation { kind: Activation::Relu };
    let conv = |in_channels| LayerSpec::Conv1d {
        in_channels,
        out_channels: 16,
        kernel,
        stride: 1,
        padding: Padding::Same,
    };
    let spec = ModelSpec {
        layers: vec![
            conv(1),
            relu.clone(),
            conv(16),
            relu.clone(),
            LayerSpec::Flatten,
            LayerSpec::Dropout { rate: dropout },
            LayerSpec::Dense {
                in_dim: 16 * input_len,
                out_dim: 128,
            },
            relu.clone(),
            LayerSpec::Dense { in_dim: 128, out_dim: 16 },
            relu,
            LayerSpec::Dense { in_dim: 16, out_dim: 3 },
            LayerSpec::Activation {
                kind: Activation::Identity,
            },
        ],
        input_len,
        output_dim: 3,
    };
    spec.validate()?;
    Ok(spec)
}

/// `1 + Σ (kᵢ − 1)·Π_{j<i} sⱼ` over the convolution layers.
pub fn receptive_field(spec: &ModelSpec) -> usize {
    let mut rf = 1;
    let mut jump = 1;
    for layer in &spec.layers {
        if let LayerSpec::Conv1d { kernel, stride, .. } = layer {
            rf += (kernel - 1) * jump;
            jump *= stride;
        }
    }
    rf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Channels(usize, usize),
    Flat(usize),
}

impl Shape {
    fn size(self) -> usize {
        match self {
            Shape::Channels(c, l) => c * l,
            Shape::Flat(d) => d,
        }
    }
}

impl ModelSpec {
    /// Checks layer compatibility and returns each layer's output shape.
    fn shapes(&self) -> Result<Vec<Shape>> {
        let bad = |i: usize, msg: String| Error::Shape(format!("layer {i}: {msg}"));
        let mut cur = Shape::Channels(1, self.input_len);
        let mut out = Vec::with_capacity(self.layers.len());
        if self.input_len == 0 {
            return Err(Error::Shape("input_len must be ≥ 1".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => {
                    let Shape::Channels(c, len) = cur else {
                        return Err(bad(i, "convolution after flatten".into()));
                    };
                    if c != in_channels {
                        return Err(bad(i, format!("expects {in_channels} channels, got {c}")));
                    }
                    let conv = Conv1d::new(in_channels, out_channels, kernel, stride, padding, len)
                        .map_err(|e| bad(i, e.to_string()))?;
                    Shape::Channels(out_channels, conv.out_len)
                }
                LayerSpec::Dense { in_dim, out_dim } => {
                    let Shape::Flat(d) = cur else {
                        return Err(bad(i, "dense layer needs a flattened input".into()));
                    };
                    if d != in_dim {
                        return Err(bad(i, format!("expects width {in_dim}, got {d}")));
                    }
                    Dense::new(in_dim, out_dim).map_err(|e| bad(i, e.to_string()))?;
                    Shape::Flat(out_dim)
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(bad(i, format!("dropout rate {rate} outside [0, 1)")));
                    }
                    cur
                }
                LayerSpec::Flatten => Shape::Flat(cur.size()),
                LayerSpec::Activation { .. } => cur,
            };
            out.push(cur);
        }
        match cur {
            Shape::Flat(d) if d == self.output_dim => Ok(out),
            other => Err(Error::Shape(format!(
                "model output is {other:?}, expected {} values",
                self.output_dim
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes().map(|_| ())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match *l {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    ..
                } => (in_channels * kernel + 1) * out_channels,
                LayerSpec::Dense { in_dim, out_dim } => (in_dim + 1) * out_dim,
                _ => 0,
            })
            .sum()
    }
}

/// Parameters and gradient buffers, two groups (weight, bias) per
/// parametric layer in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Vec<Vec<f64>>,
    pub grads: Vec<Vec<f64>>,
}

impl ModelState {
    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Vec::len).sum()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }
}

#[derive(Debug)]
enum Layer {
    Conv(Conv1d),
    Dense(Dense),
    Dropout(f64),
    Flatten,
    Activation(Activation),
}

enum LayerCache {
    Conv(ConvCache),
    Input(Vec<f64>),
    Mask(Option<Vec<f64>>),
    Nothing,
}

/// Activations recorded by [`Network::forward`] for the backward pass.
pub struct ForwardPass {
    batch: usize,
    caches: Vec<LayerCache>,
    output: Vec<f64>,
}

impl ForwardPass {
    /// Output `[batch, output_dim]`, row-major.
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn batch(&self) -> usize {
        self.batch
    }
}

/// An executable model built from a [`ModelSpec`].
#[derive(Debug)]
pub struct Network {
    spec: ModelSpec,
    layers: Vec<Layer>,
    /// Index of the weight group for parametric layers.
    slots: Vec<Option<usize>>,
}

impl Network {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let shapes = spec.shapes()?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut slots = Vec::with_capacity(spec.layers.len());
        let mut next = 0;
        for (i, l) in spec.layers.iter().enumerate() {
            let in_len = match if i == 0 { Shape::Channels(1, spec.input_len) } else { shapes[i - 1] } {
                Shape::Channels(_, len) => len,
                Shape::Flat(_) => 0,
            };
            let (layer, slot) = match *l {
                LayerSpec::Conv1d {
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    padding,
                } => (
                    Layer::Conv(Conv1d::new(in_channels, out_channels, kernel, stride, padding, in_len)?),
                    Some(next),
                ),
                LayerSpec::Dense { in_dim, out_dim } => (Layer::Dense(Dense::new(in_dim, out_dim)?), Some(next)),
                LayerSpec::Dropout { rate } => (Layer::Dropout(rate), None),
                LayerSpec::Flatten => (Layer::Flatten, None),
                LayerSpec::Activation { kind } => (Layer::Activation(kind), None),
            };
            if slot.is_some() {
                next += 2;
            }
            layers.push(layer);
            slots.push(slot);
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
            slots,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Kaiming-uniform weights (`±√(6/fan_in)`) and zero biases; each layer
    /// draws from its own stream so the result does not depend on layer sizes
    /// elsewhere in the model.
    pub fn init(&self, seed: u64) -> ModelState {
        let mut params = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let (fan_in, n_w, n_b) = match layer {
                Layer::Conv(c) => (c.in_channels * c.kernel, c.weight_len(), c.out_channels),
                Layer::Dense(d) => (d.in_dim, d.weight_len(), d.out_dim),
                _ => continue,
            };
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut s = rng::derived_stream(seed, "init", &[i as u64]);
            params.push((0..n_w).map(|_| bound * (2.0 * rng::unit(&mut s) - 1.0)).collect());
            params.push(vec![0.0; n_b]);
        }
        let grads = params.iter().map(|p: &Vec<f64>| vec![0.0; p.len()]).collect();
        ModelState { params, grads }
    }

    /// Runs the model on `batch` spectra laid out `[batch, input_len]`.
    pub fn forward(&self, state: &ModelState, input: &[f64], batch: usize, mode: Mode, seed: u64) -> Result<ForwardPass> {
        if input.len() != batch * self.spec.input_len {
            return Err(Error::Shape(format!(
                "model input has {} values, expected {batch}×{}",
                input.len(),
                self.spec.input_len
            )));
        }
        let mut x = input.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for (i, (layer, slot)) in self.layers.iter().zip(&self.slots).enumerate() {
            let (y, cache) = match layer {
                Layer::Conv(c) => {
                    let s = slot.expect("conv has parameters");
                    let (y, cache) = c.forward(&x, batch, &state.params[s], &state.params[s + 1])?;
                    (y, LayerCache::Conv(cache))
                }
                Layer::Dense(d) => {
                    let s = slot.expect("dense has parameters");
                    let y = d.forward(&x, batch, &state.params[s], &state.params[s + 1])?;
                    (y, LayerCache::Input(x))
                }
                Layer::Dropout(rate) => {
                    let (y, mask) = dropout_forward(&x, *rate, mode, rng::derive_seed(seed, "layer", &[i as u64]));
                    (y, LayerCache::Mask(mask))
                }
                Layer::Flatten | Layer::Activation(Activation::Identity) => (x, LayerCache::Nothing),
                Layer::Activation(Activation::Relu) => (relu_forward(&x), LayerCache::Input(x)),
            };
            caches.push(cache);
            x = y;
        }
        Ok(ForwardPass {
            batch,
            caches,
            output: x,
        })
    }

    /// Back-propagates `upstream` (d loss / d output) and overwrites
    /// `state.grads`.
    pub fn backward(&self, state: &mut ModelState, pass: ForwardPass, upstream: &[f64]) -> Result<()> {
        if upstream.len() != pass.output.len() {
            return Err(Error::Shape("upstream gradient does not match model output".into()));
        }
        let batch = pass.batch;
        let mut g = upstream.to_vec();
        for (i, cache) in pass.caches.into_iter().enumerate().rev() {
            let need_input = i > 0;
            match (&self.layers[i], cache) {
                (Layer::Conv(c), LayerCache::Conv(cache)) => {
                    let s = self.slots[i].expect("conv has parameters");
                    let grads = c.backward(&cache, &g, &state.params[s], need_input)?;
                    state.grads[s] = grads.weight;
                    state.grads[s + 1] = grads.bias;
                    g = grads.input.unwrap_or_default();
                }
                (Layer::Dense(d), LayerCache::Input(x)) => {
                    let s = self.slots[i].expect("dense has parameters");
                    let grads = d.backward(&x, batch, &g, &state.params[s], need_input)?;
                    state.grads[s] = grads.weight;
                    state.grads[s + 1] = grads.bias;
                    g = grads.input.unwrap_or_default();
                }
                (Layer::Dropout(_), LayerCache::Mask(Some(mask))) => {
                    for (v, m) in g.iter_mut().zip(&mask) {
                        *v *= m;
                    }
                }
                (Layer::Activation(Activation::Relu), LayerCache::Input(x)) => g = relu_backward(&x, &g),
                (Layer::Dropout(_), LayerCache::Mask(None))
                | (Layer::Flatten, LayerCache::Nothing)
                | (Layer::Activation(Activation::Identity), LayerCache::Nothing) => {}
                _ => unreachable!("layer cache mismatch"),
            }
        }
        Ok(())
    }

    /// Eval-mode forward over `input` in chunks of `chunk` spectra.
    pub fn predict(&self, state: &ModelState, input: &[f64], chunk: usize) -> Result<Vec<f64>> {
        let len = self.spec.input_len;
        if len == 0 || input.len() % len != 0 {
            return Err(Error::Shape(format!(
                "prediction input width does not match model input length {len}"
            )));
        }
        let mut out = Vec::with_capacity(input.len() / len * self.spec.output_dim);
        for part in input.chunks(chunk.max(1) * len) {
            out.extend_from_slice(self.forward(state, part, part.len() / len, Mode::Eval, 0)?.output());
        }
        Ok(out)
    }
}

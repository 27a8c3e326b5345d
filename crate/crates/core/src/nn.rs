//! Dense feed-forward networks with hand-written reverse-mode gradients.
//!
//! A [`DenseNet`] is a stack of affine layers with a rectifier between them
//! and a linear output layer, so `forward` returns raw logits. The same type
//! is used for the student and for both teachers.
//!
//! Weights are stored row-major with shape `(out_dim, in_dim)`. All
//! arithmetic is `f64`.
//!
//! # Checkpoint format
//!
//! ```text
//! b"FDNETCK1"          8 bytes
//! header_len: u64 LE   8 bytes
//! header: JSON         {format_version, layer_dims, activation, seed, num_params}
//! params: f64 LE       per layer: weights (row-major), then biases
//! ```

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// `max(0, x)`, with derivative 0 at the origin.
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    in_dim: usize,
    out_dim: usize,
    /// Row-major, shape (out_dim, in_dim).
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl DenseLayer {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    #[inline]
    fn affine_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.in_dim).zip(&self.biases).map(
            |(row, &b)| {
                let mut acc = b;
                for (w, x) in row.iter().zip(input) {
                    acc += w * x;
                }
                acc
            },
        ));
    }
}

/// A feed-forward network: input dim, hidden dims..., output dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layer_dims: Vec<usize>,
    layers: Vec<DenseLayer>,
    activation: Activation,
    seed: Option<u64>,
}

fn validate_dims(layer_dims: &[usize]) -> Result<()> {
    if layer_dims.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "layer_dims needs at least input and output dims, got {layer_dims:?}"
        )));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidConfig(format!(
            "layer_dims entries must be >= 1, got {layer_dims:?}"
        )));
    }
    Ok(())
}

impl DenseNet {
    /// Fan-in scaled uniform init: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
    /// biases zero. Bit-identical for equal `(layer_dims, seed)`.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        validate_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (in_dim, out_dim) = (w[0], w[1]);
                let limit = (6.0 / in_dim as f64).sqrt();
                let weights = (0..in_dim * out_dim)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                DenseLayer {
                    in_dim,
                    out_dim,
                    weights,
                    biases: vec![0.0; out_dim],
                }
            })
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation: Activation::Relu,
            seed: Some(seed),
        })
    }

    /// Builds a network from explicit parameters. `weights[l]` is row-major
    /// `(layer_dims[l+1], layer_dims[l])`.
    pub fn from_parts(
        layer_dims: &[usize],
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activation: Activation,
    ) -> Result<Self> {
        validate_dims(layer_dims)?;
        let n_layers = layer_dims.len() - 1;
        if weights.len() != n_layers || biases.len() != n_layers {
            return Err(Error::ShapeMismatch(format!(
                "expected {n_layers} weight/bias arrays, got {}/{}",
                weights.len(),
                biases.len()
            )));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (l, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (in_dim, out_dim) = (layer_dims[l], layer_dims[l + 1]);
            if w.len() != in_dim * out_dim || b.len() != out_dim {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l}: expected {out_dim}x{in_dim} weights and {out_dim} biases, got {} and {}",
                    w.len(),
                    b.len()
                )));
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {l} parameters")));
            }
            layers.push(DenseLayer {
                in_dim,
                out_dim,
                weights: w,
                biases: b,
            });
        }
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            activation,
            seed: None,
        })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Seed the parameters were initialized from, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated non-empty")
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// Iterates all parameters, layer by layer, weights before biases.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Logits for one input; no output normalization.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.affine_into(&cur, &mut next);
            if l < last {
                for v in &mut next {
                    *v = self.activation.apply(*v);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Forward pass that keeps every layer's input and pre-activation for
    /// a later [`DenseNet::backward_trace`].
    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut cur = x.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.out_dim);
            layer.affine_into(&cur, &mut z);
            let next = if l + 1 < n {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            } else {
                z.clone()
            };
            inputs.push(cur);
            pre.push(z);
            cur = next;
        }
        Ok(ForwardTrace { inputs, pre })
    }

    /// Activations of the last hidden layer. A network without hidden
    /// layers returns its input unchanged.
    pub fn penultimate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(x)?;
        Ok(trace.inputs.pop().expect("at least one layer"))
    }

    /// Parameter gradients of a scalar loss whose gradient w.r.t. the
    /// logits of `x` is `dl_dz`.
    pub fn backward(&self, x: &[f64], dl_dz: &[f64]) -> Result<GradientBundle> {
        let trace = self.forward_trace(x)?;
        let mut grads = GradientBundle::zeros_like(self);
        self.backward_trace(&trace, dl_dz, &mut grads)?;
        Ok(grads)
    }

    /// Accumulates (adds) the parameter gradients for one traced sample
    /// into `grads`.
    pub fn backward_trace(
        &self,
        trace: &ForwardTrace,
        dl_dz: &[f64],
        grads: &mut GradientBundle,
    ) -> Result<()> {
        if dl_dz.len() != self.output_dim() {
            return Err(Error::DimMismatch {
                context: "logit gradient",
                expected: self.output_dim(),
                actual: dl_dz.len(),
            });
        }
        grads.check_shape(self)?;
        if trace.pre.len() != self.layers.len() {
            return Err(Error::ShapeMismatch(
                "trace does not belong to this network".into(),
            ));
        }
        let mut delta = dl_dz.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.inputs[l];
            let g = &mut grads.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                g.biases[o] += d;
                if d != 0.0 {
                    let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gw, &xi) in row.iter_mut().zip(input) {
                        *gw += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let below = &trace.pre[l - 1];
            let mut next = vec![0.0; layer.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (n, &w) in next.iter_mut().zip(row) {
                    *n += w * d;
                }
            }
            for (n, &p) in next.iter_mut().zip(below) {
                *n *= self.activation.derivative(p);
            }
            delta = next;
        }
        Ok(())
    }

    /// In-place `p <- p - lr * g`.
    pub fn apply_sgd(&mut self, grads: &GradientBundle, lr: f64) -> Result<()> {
        if !(lr >= 0.0 && lr.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and >= 0, got {lr}"
            )));
        }
        grads.check_shape(self)?;
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient entries".into()));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (p, &d) in layer.weights.iter_mut().zip(&g.weights) {
                *p -= lr * d;
            }
            for (p, &d) in layer.biases.iter_mut().zip(&g.biases) {
                *p -= lr * d;
            }
        }
        Ok(())
    }

    /// Serializes to the checkpoint format described in the module docs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = CheckpointHeader {
            format_version: CHECKPOINT_VERSION,
            layer_dims: self.layer_dims.clone(),
            activation: self.activation,
            seed: self.seed,
            num_params: self.num_params(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(CHECKPOINT_MAGIC.len() + 8 + header.len() + 8 * self.num_params());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Checkpoint("truncated magic".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Checkpoint("not a network checkpoint".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)
            .map_err(|_| Error::Checkpoint("truncated header length".into()))?;
        let len = u64::from_le_bytes(len) as usize;
        if r.len() < len {
            return Err(Error::Checkpoint("truncated header".into()));
        }
        let header: CheckpointHeader = serde_json::from_slice(&r[..len])
            .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        r = &r[len..];
        if header.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                header.format_version
            )));
        }
        validate_dims(&header.layer_dims)?;
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut read_array = |n: usize| -> Result<Vec<f64>> {
            if r.len() < n * 8 {
                return Err(Error::Checkpoint("truncated parameters".into()));
            }
            let (head, rest) = r.split_at(n * 8);
            r = rest;
            Ok(head
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        for w in header.layer_dims.windows(2) {
            weights.push(read_array(w[0] * w[1])?);
            biases.push(read_array(w[1])?);
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }
        let mut net = Self::from_parts(&header.layer_dims, weights, biases, header.activation)?;
        net.seed = header.seed;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FDNETCK1";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: u32,
    layer_dims: Vec<usize>,
    activation: Activation,
    seed: Option<u64>,
    num_params: usize,
}

/// Per-layer inputs and pre-activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

impl ForwardTrace {
    /// Pre-activations of every layer, the last being the logits.
    pub fn pre_activations(&self) -> &[Vec<f64>] {
        &self.pre
    }

    pub fn logits(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradients shaped exactly like a [`DenseNet`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
}

impl GradientBundle {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    weights: vec![0.0; l.weights.len()],
                    biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn check_shape(&self, net: &DenseNet) -> Result<()> {
        let ok = self.layers.len() == net.layers.len()
            && self.layers.iter().zip(&net.layers).all(|(g, l)| {
                g.weights.len() == l.weights.len() && g.biases.len() == l.biases.len()
            });
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(
                "gradient bundle is not congruent with network".into(),
            ))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(&mut l.biases).for_each(|v| *v *= factor);
        }
    }

    /// Same order as [`DenseNet::params`].
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
    }
}

/// Pure SGD step: returns a copy of `net` with `p - lr * g` applied.
pub fn sgd_step(net: &DenseNet, grads: &GradientBundle, lr: f64) -> Result<DenseNet> {
    let mut out = net.clone();
    out.apply_sgd(grads, lr)?;
    Ok(out)
}

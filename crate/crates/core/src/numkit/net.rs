//! Dense feed-forward networks with explicit, hand-derived gradients.
//!
//! Everything is `f64` and allocation-simple on purpose: networks here are
//! tiny (a few thousand parameters) and the priority is exact, auditable
//! chain-rule arithmetic that a finite-difference oracle can confirm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::rng::SeededRng;

pub const NET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of pre-activation `z` and output `y`.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Fully-connected network. The activation applies to hidden layers only;
/// the output layer is always linear.
///
/// `weights[l]` is row-major `(layer_sizes[l+1] x layer_sizes[l])`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    activation: Activation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

/// Cached intermediate values from a forward pass, consumed by [`DenseNet::backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Layer inputs: activations[0] is the network input, activations[l] the
    /// post-activation output of layer l-1.
    activations: Vec<Vec<f64>>,
    /// Pre-activation values per layer.
    pre_acts: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has layers")
    }
}

/// Parameter gradients plus the gradient with respect to the network input.
#[derive(Debug, Clone)]
pub struct NetGrads {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_input: Vec<f64>,
}

impl NetGrads {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            d_input: vec![0.0; net.in_dim()],
        }
    }

    /// Accumulate `other * scale` into self (input gradient included).
    pub fn add_scaled(&mut self, other: &NetGrads, scale: f64) {
        for (dst, src) in self.d_weights.iter_mut().zip(&other.d_weights) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
        for (dst, src) in self.d_biases.iter_mut().zip(&other.d_biases) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s * scale;
            }
        }
        for (d, s) in self.d_input.iter_mut().zip(&other.d_input) {
            *d += s * scale;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.d_weights {
            for v in w.iter_mut() {
                *v *= factor;
            }
        }
        for b in &mut self.d_biases {
            for v in b.iter_mut() {
                *v *= factor;
            }
        }
        for v in &mut self.d_input {
            *v *= factor;
        }
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for w in &self.d_weights {
            for &v in w {
                m = m.max(v.abs());
            }
        }
        for b in &self.d_biases {
            for &v in b {
                m = m.max(v.abs());
            }
        }
        m
    }
}

impl DenseNet {
    /// All-zero parameters. Useful as a neutral starting point and in tests.
    pub fn zeros(layer_sizes: &[usize], activation: Activation) -> Result<Self> {
        Self::validate_sizes(layer_sizes)?;
        let weights = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l + 1] * layer_sizes[l]])
            .collect();
        let biases = (0..layer_sizes.len() - 1)
            .map(|l| vec![0.0; layer_sizes[l + 1]])
            .collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            weights,
            biases,
        })
    }

    /// Uniform init in +-sqrt(6/(fan_in+fan_out)), biases zero, deterministic
    /// from the generator.
    pub fn init(layer_sizes: &[usize], activation: Activation, rng: &mut SeededRng) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation)?;
        for l in 0..net.weights.len() {
            let fan_in = layer_sizes[l] as f64;
            let fan_out = layer_sizes[l + 1] as f64;
            let bound = (6.0 / (fan_in + fan_out)).sqrt();
            for w in net.weights[l].iter_mut() {
                *w = rng.uniform(-bound, bound);
            }
        }
        Ok(net)
    }

    fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
        if layer_sizes.len() < 2 {
            return Err(Error::Invalid {
                what: "layer_sizes",
                detail: "need at least input and output layers".into(),
            });
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Invalid {
                what: "layer_sizes",
                detail: "layer sizes must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn in_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn out_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> f64 {
        self.weights[layer][row * self.layer_sizes[layer] + col]
    }

    pub fn weight_mut(&mut self, layer: usize, row: usize, col: usize) -> &mut f64 {
        let cols = self.layer_sizes[layer];
        &mut self.weights[layer][row * cols + col]
    }

    pub fn bias_mut(&mut self, layer: usize, row: usize) -> &mut f64 {
        &mut self.biases[layer][row]
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().flatten().all(|v| v.is_finite())
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward_trace(x)?;
        Ok(trace.activations.pop().expect("non-empty"))
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.in_dim() {
            return Err(Error::ShapeMismatch {
                what: "network input",
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        let n = self.n_layers();
        let mut activations = Vec::with_capacity(n + 1);
        let mut pre_acts = Vec::with_capacity(n);
        activations.push(x.to_vec());
        for l in 0..n {
            let input = &activations[l];
            let rows = self.layer_sizes[l + 1];
            let cols = self.layer_sizes[l];
            let w = &self.weights[l];
            let b = &self.biases[l];
            let mut z = vec![0.0; rows];
            for r in 0..rows {
                let mut acc = b[r];
                let row = &w[r * cols..(r + 1) * cols];
                for (wi, xi) in row.iter().zip(input.iter()) {
                    acc += wi * xi;
                }
                z[r] = acc;
            }
            let last = l + 1 == n;
            let y: Vec<f64> = if last {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            pre_acts.push(z);
            activations.push(y);
        }
        Ok(ForwardTrace {
            activations,
            pre_acts,
        })
    }

    /// Exact chain-rule gradients of the scalar loss whose output gradient is
    /// `dl_dy`, for every parameter and for the input.
    pub fn backward(&self, trace: &ForwardTrace, dl_dy: &[f64]) -> Result<NetGrads> {
        if dl_dy.len() != self.out_dim() {
            return Err(Error::ShapeMismatch {
                what: "output gradient",
                expected: self.out_dim(),
                got: dl_dy.len(),
            });
        }
        let n = self.n_layers();
        let mut grads = NetGrads::zeros_like(self);
        // delta starts as dL/dz for the (linear) output layer.
        let mut delta = dl_dy.to_vec();
        for l in (0..n).rev() {
            let rows = self.layer_sizes[l + 1];
            let cols = self.layer_sizes[l];
            let input = &trace.activations[l];
            for r in 0..rows {
                let d = delta[r];
                grads.d_biases[l][r] = d;
                let row = &mut grads.d_weights[l][r * cols..(r + 1) * cols];
                for (g, xi) in row.iter_mut().zip(input.iter()) {
                    *g = d * xi;
                }
            }
            // Propagate to the previous layer's outputs.
            let w = &self.weights[l];
            let mut upstream = vec![0.0; cols];
            for r in 0..rows {
                let d = delta[r];
                let row = &w[r * cols..(r + 1) * cols];
                for (u, wi) in upstream.iter_mut().zip(row.iter()) {
                    *u += d * wi;
                }
            }
            if l > 0 {
                // Through the hidden activation of layer l-1.
                let z = &trace.pre_acts[l - 1];
                let y = &trace.activations[l];
                for c in 0..cols {
                    upstream[c] *= self.activation.derivative(z[c], y[c]);
                }
            }
            delta = upstream;
        }
        grads.d_input = delta;
        Ok(grads)
    }

    /// In-place parameter update `p += scale * g`.
    pub fn apply_grads(&mut self, grads: &NetGrads, scale: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.d_weights) {
            for (p, gv) in w.iter_mut().zip(g) {
                *p += scale * gv;
            }
        }
        for (b, g) in self.biases.iter_mut().zip(&grads.d_biases) {
            for (p, gv) in b.iter_mut().zip(g) {
                *p += scale * gv;
            }
        }
    }

    /// Polyak average: `self = (1 - rate) * self + rate * online`. Rate 1 is
    /// an exact copy.
    pub fn polyak_from(&mut self, online: &DenseNet, rate: f64) {
        let keep = 1.0 - rate;
        for (t, o) in self.weights.iter_mut().zip(&online.weights) {
            for (tv, ov) in t.iter_mut().zip(o) {
                *tv = keep * *tv + rate * ov;
            }
        }
        for (t, o) in self.biases.iter_mut().zip(&online.biases) {
            for (tv, ov) in t.iter_mut().zip(o) {
                *tv = keep * *tv + rate * ov;
            }
        }
    }

    /// Visit every parameter in a fixed order (weights then biases, layer by
    /// layer). The optimizer relies on this order being stable.
    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let mut idx = 0;
        for l in 0..self.weights.len() {
            for p in self.weights[l].iter_mut() {
                f(idx, p);
                idx += 1;
            }
            for p in self.biases[l].iter_mut() {
                f(idx, p);
                idx += 1;
            }
        }
    }

    /// Visit every gradient entry in the same order as [`Self::for_each_param_mut`].
    pub fn for_each_grad(grads: &NetGrads, mut f: impl FnMut(usize, f64)) {
        let mut idx = 0;
        for l in 0..grads.d_weights.len() {
            for &g in &grads.d_weights[l] {
                f(idx, g);
                idx += 1;
            }
            for &g in &grads.d_biases[l] {
                f(idx, g);
                idx += 1;
            }
        }
    }
}

/// Versioned on-disk form of a [`DenseNet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetCheckpoint {
    pub format_version: u32,
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    /// Row-major per-layer weight arrays.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl NetCheckpoint {
    pub fn from_net(net: &DenseNet) -> Self {
        Self {
            format_version: NET_FORMAT_VERSION,
            layer_sizes: net.layer_sizes.clone(),
            activation: net.activation,
            weights: net.weights.clone(),
            biases: net.biases.clone(),
        }
    }

    pub fn into_net(self) -> Result<DenseNet> {
        if self.format_version != NET_FORMAT_VERSION {
            return Err(Error::Invalid {
                what: "network checkpoint",
                detail: format!("unsupported format version {}", self.format_version),
            });
        }
        DenseNet::validate_sizes(&self.layer_sizes)?;
        let net = DenseNet {
            layer_sizes: self.layer_sizes,
            activation: self.activation,
            weights: self.weights,
            biases: self.biases,
        };
        for l in 0..net.weights.len() {
            let expect_w = net.layer_sizes[l + 1] * net.layer_sizes[l];
            if net.weights[l].len() != expect_w {
                return Err(Error::ShapeMismatch {
                    what: "checkpoint weights",
                    expected: expect_w,
                    got: net.weights[l].len(),
                });
            }
            if net.biases[l].len() != net.layer_sizes[l + 1] {
                return Err(Error::ShapeMismatch {
                    what: "checkpoint biases",
                    expected: net.layer_sizes[l + 1],
                    got: net.biases[l].len(),
                });
            }
        }
        if !net.all_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(net)
    }
}

/// Adam with the usual bias correction. State layout mirrors the fixed
/// parameter order of [`DenseNet::for_each_param_mut`].
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// A large epsilon makes the step proportional to the raw gradient when
    /// gradients are small, instead of normalizing noise up to full size.
    pub fn with_eps(param_count: usize, lr: f64, eps: f64) -> Self {
        Self {
            eps,
            ..Self::new(param_count, lr)
        }
    }

    /// Descend: applies `-lr * mhat/(sqrt(vhat)+eps)`. Pass the ascent
    /// direction negated when maximizing.
    pub fn step(&mut self, net: &mut DenseNet, grads: &NetGrads) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        let mut flat = Vec::with_capacity(self.m.len());
        DenseNet::for_each_grad(grads, |_, g| flat.push(g));
        debug_assert_eq!(flat.len(), self.m.len());
        let (m, v) = (&mut self.m, &mut self.v);
        let (beta1, beta2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        net.for_each_param_mut(|i, p| {
            let g = flat[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            let mhat = m[i] / b1t;
            let vhat = v[i] / b2t;
            *p -= lr * mhat / (vhat.sqrt() + eps);
        });
    }
}

//! Self-contained multilayer perceptron with analytic backpropagation and
//! SGD / adaptive-moment optimizers.
//!
//! Exactly the shapes needed for the actor and critic networks: dense layers,
//! a shared hidden activation, and an output activation. Parameters serialize
//! to portable JSON (exact f64 round trip), which is also the checkpoint
//! encoding. The finite-difference helper at the bottom is the independent
//! oracle used to validate `backward`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MlpError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("parameter structures do not line up")]
    StructureMismatch,
    #[error("non-finite gradient; update refused")]
    NonFiniteGradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the post-activation value.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// One dense layer; `weights` is row-major `(out_dim x in_dim)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layer_dims: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    layers: Vec<Layer>,
}

/// Cached activations from one forward evaluation.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    input: Vec<f64>,
    /// Post-activation outputs per layer; the last entry is the net output.
    outputs: Vec<Vec<f64>>,
}

impl ForwardPass {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("at least one layer")
    }
}

/// Parameter gradients plus the gradient with respect to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| Layer {
                    weights: vec![0.0; l.weights.len()],
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
            input: vec![0.0; net.input_dim()],
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
        for (x, y) in self.input.iter_mut().zip(&other.input) {
            *x += y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for x in &mut l.weights {
                *x *= s;
            }
            for x in &mut l.bias {
                *x *= s;
            }
        }
        for x in &mut self.input {
            *x *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|x| x.is_finite()) && l.bias.iter().all(|x| x.is_finite()))
            && self.input.iter().all(|x| x.is_finite())
    }
}

impl Mlp {
    /// Fresh network with fan-in-scaled uniform initialization,
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    pub fn new(
        layer_dims: &[usize],
        hidden_activation: Activation,
        output_activation: Activation,
        rng: &mut impl rand::Rng,
    ) -> Mlp {
        assert!(layer_dims.len() >= 2, "need at least input and output dims");
        assert!(layer_dims.iter().all(|&d| d > 0), "zero-width layer");
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                Layer {
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.gen_range(-bound..bound))
                        .collect(),
                    bias: (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect(),
                }
            })
            .collect();
        Mlp {
            layer_dims: layer_dims.to_vec(),
            hidden_activation,
            output_activation,
            layers,
        }
    }

    /// All-zero parameters (test scaffolding and scripted agents).
    pub fn zeros(layer_dims: &[usize], hidden_activation: Activation, output_activation: Activation) -> Mlp {
        let layers = layer_dims
            .windows(2)
            .map(|w| Layer {
                weights: vec![0.0; w[0] * w[1]],
                bias: vec![0.0; w[1]],
            })
            .collect();
        Mlp {
            layer_dims: layer_dims.to_vec(),
            hidden_activation,
            output_activation,
            layers,
        }
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Consistency check used after deserializing checkpoints.
    pub fn validate(&self) -> Result<(), MlpError> {
        if self.layer_dims.len() < 2 || self.layers.len() != self.layer_dims.len() - 1 {
            return Err(MlpError::StructureMismatch);
        }
        for (layer, w) in self.layers.iter().zip(self.layer_dims.windows(2)) {
            if layer.weights.len() != w[0] * w[1] || layer.bias.len() != w[1] {
                return Err(MlpError::StructureMismatch);
            }
            if layer.weights.iter().chain(&layer.bias).any(|x| !x.is_finite()) {
                return Err(MlpError::NonFiniteGradient);
            }
        }
        Ok(())
    }

    fn activation_for(&self, layer_index: usize) -> Activation {
        if layer_index + 1 == self.layers.len() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    /// Forward evaluation with cached activations for `backward`.
    pub fn forward(&self, input: &[f64]) -> Result<ForwardPass, MlpError> {
        if input.len() != self.input_dim() {
            return Err(MlpError::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut x = input;
        for (li, layer) in self.layers.iter().enumerate() {
            let in_dim = self.layer_dims[li];
            let out_dim = self.layer_dims[li + 1];
            let act = self.activation_for(li);
            let mut y = Vec::with_capacity(out_dim);
            for o in 0..out_dim {
                let row = &layer.weights[o * in_dim..(o + 1) * in_dim];
                let mut acc = layer.bias[o];
                for (w, v) in row.iter().zip(x) {
                    acc += w * v;
                }
                y.push(act.apply(acc));
            }
            outputs.push(y);
            x = outputs.last().unwrap();
        }
        Ok(ForwardPass {
            input: input.to_vec(),
            outputs,
        })
    }

    /// Forward evaluation without the cache.
    pub fn output(&self, input: &[f64]) -> Result<Vec<f64>, MlpError> {
        let mut pass = self.forward(input)?;
        Ok(pass.outputs.pop().expect("at least one layer"))
    }

    /// Exact analytic gradients of `dot(output, output_grad)` with respect to
    /// every parameter and to the input.
    pub fn backward(&self, pass: &ForwardPass, output_grad: &[f64]) -> Result<Gradients, MlpError> {
        if pass.outputs.len() != self.layers.len() || pass.input.len() != self.input_dim() {
            return Err(MlpError::StructureMismatch);
        }
        if output_grad.len() != self.output_dim() {
            return Err(MlpError::ShapeMismatch {
                expected: self.output_dim(),
                got: output_grad.len(),
            });
        }

        let mut grads = Gradients::zeros_like(self);
        // delta = dL/d(pre-activation) of the current layer
        let mut delta: Vec<f64> = pass
            .outputs
            .last()
            .unwrap()
            .iter()
            .zip(output_grad)
            .map(|(&y, &g)| g * self.output_activation.derivative_from_output(y))
            .collect();

        for li in (0..self.layers.len()).rev() {
            let in_dim = self.layer_dims[li];
            let layer = &self.layers[li];
            let below: &[f64] = if li == 0 {
                &pass.input
            } else {
                &pass.outputs[li - 1]
            };

            let grad_layer = &mut grads.layers[li];
            for (o, &d) in delta.iter().enumerate() {
                let row = &mut grad_layer.weights[o * in_dim..(o + 1) * in_dim];
                for (gw, &v) in row.iter_mut().zip(below) {
                    *gw = d * v;
                }
                grad_layer.bias[o] = d;
            }

            // Gradient w.r.t. the layer input.
            let mut below_grad = vec![0.0; in_dim];
            for (o, &d) in delta.iter().enumerate() {
                let row = &layer.weights[o * in_dim..(o + 1) * in_dim];
                for (bg, &w) in below_grad.iter_mut().zip(row) {
                    *bg += d * w;
                }
            }

            if li == 0 {
                grads.input = below_grad;
            } else {
                let act = self.activation_for(li - 1);
                delta = below_grad
                    .iter()
                    .zip(&pass.outputs[li - 1])
                    .map(|(&g, &y)| g * act.derivative_from_output(y))
                    .collect();
            }
        }
        Ok(grads)
    }

    /// Blend another network of identical shape into this one:
    /// `self = tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<(), MlpError> {
        if self.layer_dims != online.layer_dims {
            return Err(MlpError::StructureMismatch);
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            for (tw, ow) in t.weights.iter_mut().zip(&o.weights) {
                *tw = tau * ow + (1.0 - tau) * *tw;
            }
            for (tb, ob) in t.bias.iter_mut().zip(&o.bias) {
                *tb = tau * ob + (1.0 - tau) * *tb;
            }
        }
        Ok(())
    }

    /// Largest absolute parameter difference to another network.
    pub fn max_param_abs_diff(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let w = a
                    .weights
                    .iter()
                    .zip(&b.weights)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                let bsum = a
                    .bias
                    .iter()
                    .zip(&b.bias)
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                w.max(bsum)
            })
            .fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    /// Adaptive moments.
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

/// Per-network optimizer state; moment shapes mirror the network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    step: u64,
    first_moment: Vec<Layer>,
    second_moment: Vec<Layer>,
}

impl Optimizer {
    pub fn sgd(learning_rate: f64, net: &Mlp) -> Optimizer {
        Optimizer {
            kind: OptimizerKind::Sgd,
            learning_rate,
            step: 0,
            first_moment: zero_layers(net),
            second_moment: zero_layers(net),
        }
    }

    /// Adam with the conventional moment coefficients.
    pub fn adam(learning_rate: f64, net: &Mlp) -> Optimizer {
        Optimizer {
            kind: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
            },
            learning_rate,
            step: 0,
            first_moment: zero_layers(net),
            second_moment: zero_layers(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Descend along `grads`. Non-finite gradients refuse the update and
    /// leave the network and optimizer untouched.
    pub fn apply(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), MlpError> {
        if grads.layers.len() != net.layers.len() {
            return Err(MlpError::StructureMismatch);
        }
        for (g, l) in grads.layers.iter().zip(net.layers()) {
            if g.weights.len() != l.weights.len() || g.bias.len() != l.bias.len() {
                return Err(MlpError::StructureMismatch);
            }
        }
        if !grads.is_finite() {
            return Err(MlpError::NonFiniteGradient);
        }
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
                    for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                        *w -= self.learning_rate * gw;
                    }
                    for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                        *b -= self.learning_rate * gb;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                let t = self.step as i32;
                let bias1 = 1.0 - beta1.powi(t);
                let bias2 = 1.0 - beta2.powi(t);
                for (((layer, g), m), v) in net
                    .layers_mut()
                    .iter_mut()
                    .zip(&grads.layers)
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    adam_update(
                        &mut layer.weights,
                        &g.weights,
                        &mut m.weights,
                        &mut v.weights,
                        self.learning_rate,
                        beta1,
                        beta2,
                        epsilon,
                        bias1,
                        bias2,
                    );
                    adam_update(
                        &mut layer.bias,
                        &g.bias,
                        &mut m.bias,
                        &mut v.bias,
                        self.learning_rate,
                        beta1,
                        beta2,
                        epsilon,
                        bias1,
                        bias2,
                    );
                }
            }
        }
        Ok(())
    }
}

fn zero_layers(net: &Mlp) -> Vec<Layer> {
    net.layers()
        .iter()
        .map(|l| Layer {
            weights: vec![0.0; l.weights.len()],
            bias: vec![0.0; l.bias.len()],
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

/// Central finite-difference gradients of `dot(output, output_grad)` with
/// respect to every parameter and to the input. Only calls `output`, never
/// `backward`, so it is an independent check of the analytic path.
pub fn finite_difference_gradients(net: &Mlp, input: &[f64], output_grad: &[f64], eps: f64) -> Gradients {
    let objective = |net: &Mlp, input: &[f64]| -> f64 {
        net.output(input)
            .expect("shape validated by caller")
            .iter()
            .zip(output_grad)
            .map(|(y, g)| y * g)
            .sum()
    };

    let mut probe = net.clone();
    let mut grads = Gradients::zeros_like(net);
    for li in 0..net.layers().len() {
        for wi in 0..net.layers()[li].weights.len() {
            let orig = probe.layers()[li].weights[wi];
            probe.layers_mut()[li].weights[wi] = orig + eps;
            let plus = objective(&probe, input);
            probe.layers_mut()[li].weights[wi] = orig - eps;
            let minus = objective(&probe, input);
            probe.layers_mut()[li].weights[wi] = orig;
            grads.layers[li].weights[wi] = (plus - minus) / (2.0 * eps);
        }
        for bi in 0..net.layers()[li].bias.len() {
            let orig = probe.layers()[li].bias[bi];
            probe.layers_mut()[li].bias[bi] = orig + eps;
            let plus = objective(&probe, input);
            probe.layers_mut()[li].bias[bi] = orig - eps;
            let minus = objective(&probe, input);
            probe.layers_mut()[li].bias[bi] = orig;
            grads.layers[li].bias[bi] = (plus - minus) / (2.0 * eps);
        }
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = objective(net, &x);
        x[i] = orig - eps;
        let minus = objective(net, &x);
        x[i] = orig;
        grads.input[i] = (plus - minus) / (2.0 * eps);
    }
    grads
}

/// Worst relative disagreement between two gradient sets, with the
/// denominator floored at 1e-6 so near-zero gradients compare absolutely.
pub fn max_relative_gradient_error(a: &Gradients, b: &Gradients) -> f64 {
    let rel = |x: f64, y: f64| (x - y).abs() / x.abs().max(y.abs()).max(1e-6);
    let mut worst = 0.0f64;
    for (la, lb) in a.layers.iter().zip(&b.layers) {
        for (x, y) in la.weights.iter().zip(&lb.weights) {
            worst = worst.max(rel(*x, *y));
        }
        for (x, y) in la.bias.iter().zip(&lb.bias) {
            worst = worst.max(rel(*x, *y));
        }
    }
    for (x, y) in a.input.iter().zip(&b.input) {
        worst = worst.max(rel(*x, *y));
    }
    worst
}

/// Smallest |pre-activation| in the network for the given input; used to
/// keep finite-difference probes away from the rectifier kink.
pub fn min_preactivation_margin(net: &Mlp, input: &[f64]) -> f64 {
    let mut margin = f64::INFINITY;
    let mut x = input.to_vec();
    for (li, layer) in net.layers().iter().enumerate() {
        let in_dim = net.layer_dims()[li];
        let out_dim = net.layer_dims()[li + 1];
        let act = if li + 1 == net.layers().len() {
            net.output_activation
        } else {
            net.hidden_activation
        };
        let mut y = Vec::with_capacity(out_dim);
        for o in 0..out_dim {
            let row = &layer.weights[o * in_dim..(o + 1) * in_dim];
            let mut acc = layer.bias[o];
            for (w, v) in row.iter().zip(&x) {
                acc += w * v;
            }
            if act == Activation::Relu {
                margin = margin.min(acc.abs());
            }
            y.push(act.apply(acc));
        }
        x = y;
    }
    margin
}

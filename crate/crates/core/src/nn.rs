//! Fully connected feedforward networks.
//!
//! Each layer computes a net input `n = W·o + b` from the previous layer's
//! outputs `o` and passes it through an activation `f`. Weights are stored
//! `output_width × input_width`, so row `j` holds the weights into unit `j`.
//!
//! Training-mode forward passes may apply inverted dropout to hidden layer
//! outputs: kept units are scaled by `1/(1-p)`, so inference uses the weights
//! unchanged.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::rng::SeedRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the net input. `relu'(0)` is taken as 0.
    #[inline]
    pub fn derivative(self, net: f64) -> f64 {
        match self {
            Activation::Relu => {
                if net > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(net);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = net.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    // Split on sign so exp never overflows.
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

pub fn activate(activation: Activation, x: &Matrix) -> Matrix {
    x.map(|v| activation.apply(v))
}

pub fn activate_derivative(activation: Activation, net: &Matrix) -> Matrix {
    net.map(|v| activation.derivative(v))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
    pub dropout_rate: f64,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        Self {
            input_width,
            output_width,
            activation,
            dropout_rate: 0.0,
        }
    }

    pub fn with_dropout(mut self, rate: f64) -> Self {
        self.dropout_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_width == 0 || self.output_width == 0 {
            return Err(Error::Config(format!(
                "layer widths must be positive, got {}→{}",
                self.input_width, self.output_width
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// Builds a chained stack of layer specs from a width list such as `[7, 100, 80, 50, 1]`.
/// Every layer but the last uses `hidden`; the last uses `output`.
pub fn stack(
    widths: &[usize],
    hidden: Activation,
    output: Activation,
    hidden_dropout: f64,
) -> Result<Vec<LayerSpec>> {
    if widths.len() < 2 {
        return Err(Error::Config(
            "a network needs an input width and at least one layer".into(),
        ));
    }
    let last = widths.len() - 2;
    let specs: Vec<LayerSpec> = widths
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            if k == last {
                LayerSpec::new(w[0], w[1], output)
            } else {
                LayerSpec::new(w[0], w[1], hidden).with_dropout(hidden_dropout)
            }
        })
        .collect();
    validate_specs(&specs)?;
    Ok(specs)
}

pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("network has no layers".into()));
    }
    for spec in specs {
        spec.validate()?;
    }
    for (k, pair) in specs.windows(2).enumerate() {
        if pair[0].output_width != pair[1].input_width {
            return Err(Error::Config(format!(
                "layer {k} outputs {} units but layer {} expects {}",
                pair[0].output_width,
                k + 1,
                pair[1].input_width
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `output_width × input_width`.
    pub weights: Matrix,
    pub biases: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    /// Checks that parameter shapes agree with `specs` and that every entry is finite.
    pub fn check_against(&self, specs: &[LayerSpec]) -> Result<()> {
        if self.layers.len() != specs.len() {
            return Err(Error::Config(format!(
                "parameters have {} layers, topology has {}",
                self.layers.len(),
                specs.len()
            )));
        }
        for (k, (layer, spec)) in self.layers.iter().zip(specs).enumerate() {
            let expected = (spec.output_width, spec.input_width);
            if layer.weights.shape() != expected {
                return Err(Error::shape(
                    "layer weights",
                    layer.weights.shape(),
                    expected,
                ));
            }
            if layer.biases.len() != spec.output_width {
                return Err(Error::shape(
                    "layer biases",
                    (layer.biases.len(), 1),
                    (spec.output_width, 1),
                ));
            }
            if !layer.weights.is_finite() || layer.biases.as_slice().iter().any(|b| !b.is_finite())
            {
                return Err(Error::NonFinite(format!("layer {k} parameters")));
            }
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    /// All-zero parameters for `specs`.
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        Self {
            layers: specs
                .iter()
                .map(|s| LayerParams {
                    weights: Matrix::zeros(s.output_width, s.input_width),
                    biases: Vector::zeros(s.output_width),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// The batch fed into this layer, after any dropout applied to the previous layer.
    pub inputs: Matrix,
    pub net_inputs: Matrix,
    /// `activation(net_inputs)`, before dropout.
    pub outputs: Matrix,
    /// Entries are 0 or `1/(1-p)`; present only for training passes with `p > 0`.
    pub dropout_mask: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    /// The network output (`batch × final width`).
    pub fn output(&self) -> &Matrix {
        &self
            .layers
            .last()
            .expect("trace has at least one layer")
            .outputs
    }
}

pub enum Mode<'a> {
    Infer,
    Train(&'a mut SeedRng),
}

/// `inputs · Wᵀ + b`, one row per sample.
pub fn net_input(weights: &Matrix, bias: &Vector, inputs: &Matrix) -> Result<Matrix> {
    if bias.len() != weights.rows() {
        return Err(Error::shape(
            "net_input bias",
            (bias.len(), 1),
            (weights.rows(), 1),
        ));
    }
    let mut net = linalg::matmul_transpose_b(inputs, weights)
        .map_err(|_| Error::shape("net_input", inputs.shape(), weights.shape()))?;
    let width = weights.rows();
    for row in net.as_mut_slice().chunks_exact_mut(width) {
        for (n, &b) in row.iter_mut().zip(bias.as_slice()) {
            *n += b;
        }
    }
    Ok(net)
}

pub fn forward(
    params: &NetworkParams,
    specs: &[LayerSpec],
    batch: &Matrix,
    mut mode: Mode<'_>,
) -> Result<ForwardTrace> {
    if params.layers.len() != specs.len() {
        return Err(Error::Config(format!(
            "parameters have {} layers, topology has {}",
            params.layers.len(),
            specs.len()
        )));
    }
    let first = specs
        .first()
        .ok_or_else(|| Error::Config("network has no layers".into()))?;
    if batch.cols() != first.input_width {
        return Err(Error::shape(
            "forward input",
            batch.shape(),
            (batch.rows(), first.input_width),
        ));
    }

    let last = specs.len() - 1;
    let mut layers = Vec::with_capacity(specs.len());
    let mut inputs = batch.clone();
    for (k, (layer, spec)) in params.layers.iter().zip(specs).enumerate() {
        let net_inputs = net_input(&layer.weights, &layer.biases, &inputs)?;
        let outputs = activate(spec.activation, &net_inputs);

        let dropout_mask = match &mut mode {
            Mode::Train(rng) if k < last && spec.dropout_rate > 0.0 => Some(dropout_mask(
                outputs.rows(),
                outputs.cols(),
                spec.dropout_rate,
                rng,
            )),
            _ => None,
        };
        let next_inputs = match &dropout_mask {
            Some(mask) => linalg::elementwise(linalg::ElementwiseOp::Hadamard, &outputs, mask)?,
            None => outputs.clone(),
        };

        layers.push(LayerTrace {
            inputs: std::mem::replace(&mut inputs, next_inputs),
            net_inputs,
            outputs,
            dropout_mask,
        });
    }
    Ok(ForwardTrace { layers })
}

/// Forward pass in inference mode, returning only the output.
pub fn predict(params: &NetworkParams, specs: &[LayerSpec], batch: &Matrix) -> Result<Matrix> {
    let mut trace = forward(params, specs, batch, Mode::Infer)?;
    Ok(trace.layers.pop().expect("non-empty").outputs)
}

fn dropout_mask(rows: usize, cols: usize, rate: f64, rng: &mut SeedRng) -> Matrix {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let data = (0..rows * cols)
        .map(|_| {
            if rng.random::<f64>() < keep {
                scale
            } else {
                0.0
            }
        })
        .collect();
    Matrix::new(rows, cols, data).expect("mask dimensions come from a valid matrix")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

/// Backpropagates `d_loss_d_output` through the trace, returning `∂L/∂W` and
/// `∂L/∂b` for every layer in the same shapes as the parameters.
pub fn backward(
    params: &NetworkParams,
    specs: &[LayerSpec],
    trace: &ForwardTrace,
    d_loss_d_output: &Matrix,
) -> Result<Gradients> {
    if trace.layers.len() != params.layers.len() || specs.len() != params.layers.len() {
        return Err(Error::Config(format!(
            "trace has {} layers, parameters {}, topology {}",
            trace.layers.len(),
            params.layers.len(),
            specs.len()
        )));
    }
    if d_loss_d_output.shape() != trace.output().shape() {
        return Err(Error::shape(
            "backward output gradient",
            d_loss_d_output.shape(),
            trace.output().shape(),
        ));
    }

    let mut grads: Vec<Option<LayerParams>> = vec![None; params.layers.len()];
    // Gradient of the loss with respect to this layer's outputs (post-dropout).
    let mut upstream = d_loss_d_output.clone();

    for k in (0..params.layers.len()).rev() {
        let layer = &params.layers[k];
        let lt = &trace.layers[k];
        if lt.net_inputs.cols() != layer.weights.rows() || lt.inputs.cols() != layer.weights.cols()
        {
            return Err(Error::shape(
                "backward trace",
                (lt.inputs.cols(), lt.net_inputs.cols()),
                (layer.weights.cols(), layer.weights.rows()),
            ));
        }

        let mut delta = match &lt.dropout_mask {
            Some(mask) => linalg::elementwise(linalg::ElementwiseOp::Hadamard, &upstream, mask)?,
            None => upstream,
        };
        let activation = specs[k].activation;
        if activation != Activation::Identity {
            for (d, &n) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(lt.net_inputs.as_slice())
            {
                *d *= activation.derivative(n);
            }
        }

        let d_weights = linalg::matmul_transpose_a(&delta, &lt.inputs)?;
        let d_biases = Vector::new(delta.column_sums())?;
        upstream = if k > 0 {
            linalg::matmul(&delta, &layer.weights)?
        } else {
            delta
        };
        grads[k] = Some(LayerParams {
            weights: d_weights,
            biases: d_biases,
        });
    }

    Ok(Gradients {
        layers: grads.into_iter().map(|g| g.expect("filled")).collect(),
    })
}

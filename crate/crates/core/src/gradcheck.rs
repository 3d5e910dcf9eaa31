//! Finite-difference verification of [`crate::nn::backward`].
//!
//! Every weight and bias is nudged by `±h` and the central difference of the
//! MSE loss is compared with the analytic partial derivative. Partials whose
//! analytic value is below [`SMALL_GRADIENT`] are judged by absolute error
//! instead, since their relative error is dominated by rounding.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::init::{init_network, InitScheme};
use crate::linalg::Matrix;
use crate::nn::{self, Activation, LayerSpec, Mode, NetworkParams};
use crate::rng::{seeded, SeedRng};
use crate::train::mse_loss;

pub const DEFAULT_STEP: f64 = 1e-6;
pub const RELATIVE_TOLERANCE: f64 = 1e-5;
pub const ABSOLUTE_TOLERANCE: f64 = 1e-8;
pub const SMALL_GRADIENT: f64 = 1e-6;
/// Minimum distance of every ReLU pre-activation from zero for a point to count as kink-free.
pub const KINK_MARGIN: f64 = 1e-4;
const MAX_KINK_ATTEMPTS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub widths: Vec<usize>,
    pub hidden: Activation,
    pub output: Activation,
    pub batch: usize,
    pub step: f64,
    pub seed: u64,
    /// Perturbs one analytic partial so the check must fail. Negative control only.
    #[doc(hidden)]
    pub corrupt_backward: bool,
}

impl GradCheckConfig {
    /// 7→5→3→1, sigmoid hidden layers, identity output, batch of 4.
    pub fn sigmoid() -> Self {
        Self {
            widths: vec![7, 5, 3, 1],
            hidden: Activation::Sigmoid,
            output: Activation::Identity,
            batch: 4,
            step: DEFAULT_STEP,
            seed: 42,
            corrupt_backward: false,
        }
    }

    /// Same topology with ReLU hidden layers, checked at a kink-free point.
    pub fn relu() -> Self {
        Self {
            hidden: Activation::Relu,
            ..Self::sigmoid()
        }
    }

    /// A single 7→1 identity layer.
    pub fn identity() -> Self {
        Self {
            widths: vec![7, 1],
            hidden: Activation::Identity,
            output: Activation::Identity,
            ..Self::sigmoid()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCheck {
    pub layer: usize,
    pub parameters: usize,
    /// Largest relative error among partials with analytic magnitude ≥ [`SMALL_GRADIENT`].
    pub max_relative_error: f64,
    /// Largest absolute error among the remaining small partials.
    pub max_absolute_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
    /// Seed of the parameter point actually checked (differs from the configured
    /// seed when ReLU points had to be skipped for lying near a kink).
    pub point_seed: u64,
    /// Smallest |pre-activation| over ReLU layers, when any.
    pub kink_distance: Option<f64>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.max_relative_error)
            .fold(0.0, f64::max)
    }

    pub fn max_absolute_error(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.max_absolute_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_relative_error() < RELATIVE_TOLERANCE
            && self.max_absolute_error() < ABSOLUTE_TOLERANCE
    }
}

struct Point {
    specs: Vec<LayerSpec>,
    params: NetworkParams,
    inputs: Matrix,
    targets: Matrix,
}

fn draw_point(cfg: &GradCheckConfig, seed: u64) -> Result<Point> {
    let specs = nn::stack(&cfg.widths, cfg.hidden, cfg.output, 0.0)?;
    let mut rng: SeedRng = seeded(seed);
    let mut params = init_network(&specs, InitScheme::XavierGaussian, &mut rng)?;
    // Non-zero biases so their partials are exercised away from the init value.
    for layer in &mut params.layers {
        for b in layer.biases.as_mut_slice() {
            *b = 0.1 * normal(&mut rng);
        }
    }
    let in_width = cfg.widths[0];
    let out_width = *cfg.widths.last().expect("validated");
    let inputs = Matrix::new(
        cfg.batch,
        in_width,
        (0..cfg.batch * in_width)
            .map(|_| normal(&mut rng))
            .collect(),
    )?;
    let targets = Matrix::new(
        cfg.batch,
        out_width,
        (0..cfg.batch * out_width)
            .map(|_| normal(&mut rng))
            .collect(),
    )?;
    Ok(Point {
        specs,
        params,
        inputs,
        targets,
    })
}

fn normal(rng: &mut SeedRng) -> f64 {
    StandardNormal.sample(rng)
}

fn kink_distance(point: &Point) -> Result<Option<f64>> {
    let trace = nn::forward(&point.params, &point.specs, &point.inputs, Mode::Infer)?;
    let distance = point
        .specs
        .iter()
        .zip(&trace.layers)
        .filter(|(s, _)| s.activation == Activation::Relu)
        .flat_map(|(_, l)| l.net_inputs.as_slice().iter().map(|x| x.abs()))
        .fold(None, |acc: Option<f64>, d| {
            Some(acc.map_or(d, |a| a.min(d)))
        });
    Ok(distance)
}

/// Index `i` runs over the layer's weights (row-major) and then its biases.
fn param_mut(params: &mut NetworkParams, layer: usize, i: usize) -> &mut f64 {
    let layer = &mut params.layers[layer];
    let n_weights = layer.weights.as_slice().len();
    if i < n_weights {
        &mut layer.weights.as_mut_slice()[i]
    } else {
        &mut layer.biases.as_mut_slice()[i - n_weights]
    }
}

fn loss_at(point: &Point, params: &NetworkParams) -> Result<f64> {
    let out = nn::predict(params, &point.specs, &point.inputs)?;
    Ok(mse_loss(&out, &point.targets)?.0)
}

pub fn gradient_check(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    if cfg.batch == 0 || cfg.step.is_nan() || cfg.step <= 0.0 {
        return Err(Error::Config(
            "gradient check needs batch ≥ 1 and step > 0".into(),
        ));
    }
    let uses_relu = cfg.hidden == Activation::Relu || cfg.output == Activation::Relu;

    let mut seed = cfg.seed;
    let (point, distance) = loop {
        let point = draw_point(cfg, seed)?;
        let distance = kink_distance(&point)?;
        match distance {
            Some(d) if uses_relu && d < KINK_MARGIN => {
                if seed - cfg.seed >= MAX_KINK_ATTEMPTS {
                    return Err(Error::Domain("no kink-free parameter point found".into()));
                }
                seed += 1;
            }
            _ => break (point, distance),
        }
    };

    let trace = nn::forward(&point.params, &point.specs, &point.inputs, Mode::Infer)?;
    let (_, d_out) = mse_loss(trace.output(), &point.targets)?;
    let mut grads = nn::backward(&point.params, &point.specs, &trace, &d_out)?;
    if cfg.corrupt_backward {
        let g = &mut grads.layers[0].weights.as_mut_slice()[0];
        *g += 1e-3 * (1.0 + g.abs());
    }

    let mut layers = Vec::with_capacity(point.params.layers.len());
    let mut probe = point.params.clone();
    for k in 0..point.params.layers.len() {
        let mut check = LayerCheck {
            layer: k,
            parameters: 0,
            max_relative_error: 0.0,
            max_absolute_error: 0.0,
        };
        let n_weights = point.params.layers[k].weights.as_slice().len();
        let n_biases = point.params.layers[k].biases.len();
        for i in 0..n_weights + n_biases {
            let analytic = if i < n_weights {
                grads.layers[k].weights.as_slice()[i]
            } else {
                grads.layers[k].biases.as_slice()[i - n_weights]
            };
            let original = *param_mut(&mut probe, k, i);
            *param_mut(&mut probe, k, i) = original + cfg.step;
            let plus = loss_at(&point, &probe)?;
            *param_mut(&mut probe, k, i) = original - cfg.step;
            let minus = loss_at(&point, &probe)?;
            *param_mut(&mut probe, k, i) = original;
            let numeric = (plus - minus) / (2.0 * cfg.step);

            let abs_err = (analytic - numeric).abs();
            if analytic.abs() < SMALL_GRADIENT {
                check.max_absolute_error = check.max_absolute_error.max(abs_err);
            } else {
                let rel = abs_err / analytic.abs().max(numeric.abs());
                check.max_relative_error = check.max_relative_error.max(rel);
            }
            check.parameters += 1;
        }
        layers.push(check);
    }

    Ok(GradCheckReport {
        layers,
        point_seed: seed,
        kink_distance: if uses_relu { distance } else { None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_network_passes() {
        let report = gradient_check(&GradCheckConfig::sigmoid()).unwrap();
        assert_eq!(report.layers.len(), 3);
        assert_eq!(
            report.layers.iter().map(|l| l.parameters).sum::<usize>(),
            7 * 5 + 5 + 5 * 3 + 3 + 3 + 1
        );
        assert!(report.max_relative_error() < 1e-5, "{report:?}");
        assert!(report.passed());
    }

    #[test]
    fn identity_layer_is_nearly_exact() {
        let report = gradient_check(&GradCheckConfig::identity()).unwrap();
        assert!(report.max_relative_error() < 1e-9, "{report:?}");
    }

    #[test]
    fn relu_network_passes_at_kink_free_point() {
        let report = gradient_check(&GradCheckConfig::relu()).unwrap();
        assert!(report.kink_distance.unwrap() >= KINK_MARGIN);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn corrupted_backward_fails() {
        let cfg = GradCheckConfig {
            corrupt_backward: true,
            ..GradCheckConfig::sigmoid()
        };
        let report = gradient_check(&cfg).unwrap();
        assert!(!report.passed());
        assert!(
            report.layers[0].max_relative_error > 1e-5
                || report.layers[0].max_absolute_error > 1e-8
        );
    }
}

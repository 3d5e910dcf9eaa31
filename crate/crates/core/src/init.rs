//! Weight initialization.
//!
//! Xavier Gaussian draws weights from `N(0, 2/(fan_in + fan_out))`. The
//! uniform scheme draws from `U(-h, h)`. Biases always start at zero.

use std::fmt;

use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::nn::{LayerParams, LayerSpec, NetworkParams};
use crate::rng::SeedRng;

/// Default half-width for uniform initialization: weights in (-0.5, 0.5).
pub const DEFAULT_UNIFORM_HALFWIDTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitScheme {
    XavierGaussian,
    UniformRandom { halfwidth: f64 },
}

impl InitScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitScheme::XavierGaussian => Ok(()),
            InitScheme::UniformRandom { halfwidth } if halfwidth > 0.0 && halfwidth.is_finite() => {
                Ok(())
            }
            InitScheme::UniformRandom { halfwidth } => Err(Error::Config(format!(
                "uniform half-width must be positive, got {halfwidth}"
            ))),
        }
    }
}

impl fmt::Display for InitScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitScheme::XavierGaussian => f.write_str("xavier"),
            InitScheme::UniformRandom { halfwidth } => write!(f, "uniform({halfwidth})"),
        }
    }
}

pub fn xavier_std(fan_in: usize, fan_out: usize) -> f64 {
    (2.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Weights are drawn in row-major order, so a given seed always yields the same matrix.
pub fn init_layer(
    scheme: InitScheme,
    fan_in: usize,
    fan_out: usize,
    rng: &mut SeedRng,
) -> Result<LayerParams> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::Domain(format!(
            "fan-in and fan-out must be positive, got {fan_in} and {fan_out}"
        )));
    }
    scheme.validate()?;
    let n = fan_in * fan_out;
    let data: Vec<f64> = match scheme {
        InitScheme::XavierGaussian => {
            let normal = Normal::new(0.0, xavier_std(fan_in, fan_out))
                .map_err(|e| Error::Domain(e.to_string()))?;
            normal.sample_iter(&mut *rng).take(n).collect()
        }
        InitScheme::UniformRandom { halfwidth } => {
            let uniform =
                Uniform::new(-halfwidth, halfwidth).map_err(|e| Error::Domain(e.to_string()))?;
            uniform.sample_iter(&mut *rng).take(n).collect()
        }
    };
    Ok(LayerParams {
        weights: Matrix::new(fan_out, fan_in, data)?,
        biases: Vector::zeros(fan_out),
    })
}

pub fn init_network(
    specs: &[LayerSpec],
    scheme: InitScheme,
    rng: &mut SeedRng,
) -> Result<NetworkParams> {
    let layers = specs
        .iter()
        .map(|s| init_layer(scheme, s.input_width, s.output_width, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(NetworkParams { layers })
}

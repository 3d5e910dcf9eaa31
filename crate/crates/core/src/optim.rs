//! Parameter updaters.
//!
//! Both rules work on flat slices of parameters and gradients.
//! [`Updater`] holds one state per weight matrix and bias vector of a network
//! and applies the chosen rule layer by layer.
//!
//! Momentum SGD:
//!
//! ```text
//! v ← μ·v + η·g
//! θ ← θ − v
//! ```
//!
//! Adam, with bias-corrected moments and ε added after the square root:
//!
//! ```text
//! t ← t + 1
//! m ← β1·m + (1 − β1)·g
//! v ← β2·v + (1 − β2)·g²
//! θ ← θ − α · (m / (1 − β1ᵗ)) / (√(v / (1 − β2ᵗ)) + ε)
//! ```

use crate::error::{Error, Result};
use crate::nn::{Gradients, NetworkParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumConfig {
    pub learning_rate: f64,
    pub momentum: f64,
}

impl MomentumConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    /// α = 0.001, β1 = 0.9, β2 = 0.999, ε = 1e-8.
    fn default() -> Self {
        Self {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::Config(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MomentumState {
    pub velocity: Vec<f64>,
}

impl MomentumState {
    pub fn new(len: usize) -> Self {
        Self {
            velocity: vec![0.0; len],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// Moments of parameters whose gradient stays zero (dead ReLU units) decay
/// geometrically into the subnormal range, where arithmetic is two orders of
/// magnitude slower. Their contribution to an update is below 1e-300.
#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// `x * 0 == 0` holds exactly for finite `x` and fails for NaN and ±∞.
/// Written as a fold without early exit so it vectorizes.
#[inline]
fn all_finite(xs: &[f64]) -> bool {
    xs.iter().fold(0.0, |acc, &x| acc + x * 0.0) == 0.0
}

fn check_step_inputs(params: &[f64], grads: &[f64], state_len: usize, what: &str) -> Result<()> {
    if params.len() != grads.len() || params.len() != state_len {
        return Err(Error::shape(
            "updater step",
            (params.len(), grads.len()),
            (state_len, state_len),
        ));
    }
    if !all_finite(grads) {
        let i = grads.iter().position(|g| !g.is_finite()).unwrap_or(0);
        return Err(Error::NonFinite(format!("{what} gradient at index {i}")));
    }
    Ok(())
}

pub fn momentum_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut MomentumState,
    cfg: &MomentumConfig,
) -> Result<()> {
    momentum_step_named(params, grads, state, cfg, "parameter")
}

fn momentum_step_named(
    params: &mut [f64],
    grads: &[f64],
    state: &mut MomentumState,
    cfg: &MomentumConfig,
    what: &str,
) -> Result<()> {
    check_step_inputs(params, grads, state.velocity.len(), what)?;
    for ((theta, &g), v) in params.iter_mut().zip(grads).zip(&mut state.velocity) {
        *v = cfg.momentum * *v + cfg.learning_rate * g;
        *theta -= *v;
    }
    Ok(())
}

pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    adam_step_named(params, grads, state, cfg, "parameter")
}

fn adam_step_named(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
    what: &str,
) -> Result<()> {
    check_step_inputs(params, grads, state.m.len(), what)?;
    if state.v.len() != state.m.len() {
        return Err(Error::shape(
            "adam state",
            (state.m.len(), 1),
            (state.v.len(), 1),
        ));
    }
    state.t += 1;
    let t =
        i32::try_from(state.t).map_err(|_| Error::Domain("adam step counter overflow".into()))?;
    let correction1 = 1.0 - cfg.beta1.powi(t);
    let correction2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let n = params.len();
    let (m, v, grads) = (&mut state.m[..n], &mut state.v[..n], &grads[..n]);
    for i in 0..n {
        let g = grads[i];
        m[i] = flush(b1 * m[i] + (1.0 - b1) * g);
        v[i] = flush(b2 * v[i] + (1.0 - b2) * g * g);
        let m_hat = m[i] / correction1;
        let v_hat = v[i] / correction2;
        params[i] -= cfg.alpha * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpdaterConfig {
    Adam(AdamConfig),
    Momentum(MomentumConfig),
}

impl UpdaterConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            UpdaterConfig::Adam(c) => c.validate(),
            UpdaterConfig::Momentum(c) => c.validate(),
        }
    }
}

/// Per-tensor optimizer state for a whole network, in the order
/// `[layer0.weights, layer0.biases, layer1.weights, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState {
    Momentum(Vec<MomentumState>),
    Adam(Vec<AdamState>),
}

#[derive(Debug, Clone)]
pub struct Updater {
    config: UpdaterConfig,
    state: OptimizerState,
    steps: u64,
}

impl Updater {
    pub fn new(config: UpdaterConfig, params: &NetworkParams) -> Result<Self> {
        config.validate()?;
        let lens = params
            .layers
            .iter()
            .flat_map(|l| [l.weights.as_slice().len(), l.biases.len()]);
        let state = match config {
            UpdaterConfig::Adam(_) => OptimizerState::Adam(lens.map(AdamState::new).collect()),
            UpdaterConfig::Momentum(_) => {
                OptimizerState::Momentum(lens.map(MomentumState::new).collect())
            }
        };
        Ok(Self {
            config,
            state,
            steps: 0,
        })
    }

    pub fn state(&self) -> &OptimizerState {
        &self.state
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update. Gradients are checked for shape and finiteness
    /// before any parameter changes.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &Gradients) -> Result<()> {
        if params.layers.len() != grads.layers.len() {
            return Err(Error::shape(
                "updater layers",
                (params.layers.len(), 1),
                (grads.layers.len(), 1),
            ));
        }
        for (k, (p, g)) in params.layers.iter().zip(&grads.layers).enumerate() {
            if p.weights.shape() != g.weights.shape() || p.biases.len() != g.biases.len() {
                return Err(Error::shape(
                    "updater layer",
                    p.weights.shape(),
                    g.weights.shape(),
                ));
            }
            if !all_finite(g.weights.as_slice()) {
                return Err(Error::NonFinite(format!("layer {k} weight gradient")));
            }
            if !all_finite(g.biases.as_slice()) {
                return Err(Error::NonFinite(format!("layer {k} bias gradient")));
            }
        }

        for (k, (p, g)) in params.layers.iter_mut().zip(&grads.layers).enumerate() {
            let tensors: [(&mut [f64], &[f64], &str); 2] = [
                (p.weights.as_mut_slice(), g.weights.as_slice(), "weight"),
                (p.biases.as_mut_slice(), g.biases.as_slice(), "bias"),
            ];
            for (i, (theta, grad, kind)) in tensors.into_iter().enumerate() {
                let what = format!("layer {k} {kind}");
                match (&self.config, &mut self.state) {
                    (UpdaterConfig::Adam(cfg), OptimizerState::Adam(states)) => {
                        adam_step_named(theta, grad, &mut states[2 * k + i], cfg, &what)?
                    }
                    (UpdaterConfig::Momentum(cfg), OptimizerState::Momentum(states)) => {
                        momentum_step_named(theta, grad, &mut states[2 * k + i], cfg, &what)?
                    }
                    _ => unreachable!("state variant follows config"),
                }
            }
        }
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::nn::LayerParams;

    const TABLE2_MOMENTUM: MomentumConfig = MomentumConfig {
        learning_rate: 0.2,
        momentum: 0.1,
    };

    #[test]
    fn momentum_two_step_trace() {
        let mut theta = [0.0];
        let mut state = MomentumState::new(1);
        momentum_step(&mut theta, &[1.0], &mut state, &TABLE2_MOMENTUM).unwrap();
        assert!((theta[0] + 0.2).abs() < 1e-15);
        assert!((state.velocity[0] - 0.2).abs() < 1e-15);
        momentum_step(&mut theta, &[1.0], &mut state, &TABLE2_MOMENTUM).unwrap();
        assert!((state.velocity[0] - 0.22).abs() < 1e-15);
        assert!((theta[0] + 0.42).abs() < 1e-15);
    }

    #[test]
    fn momentum_zero_gradient_is_fixed_point() {
        let mut theta = [1.5, -2.0];
        let mut state = MomentumState::new(2);
        momentum_step(&mut theta, &[0.0, 0.0], &mut state, &TABLE2_MOMENTUM).unwrap();
        assert_eq!(theta, [1.5, -2.0]);
    }

    #[test]
    fn momentum_without_momentum_is_plain_sgd() {
        let cfg = MomentumConfig {
            learning_rate: 0.05,
            momentum: 0.0,
        };
        let mut theta = [0.7, -0.3, 2.0];
        let grads = [0.4, -1.1, 3.0];
        let mut state = MomentumState::new(3);
        for _ in 0..3 {
            let expected: Vec<f64> = theta
                .iter()
                .zip(&grads)
                .map(|(t, g)| t - 0.05 * g)
                .collect();
            momentum_step(&mut theta, &grads, &mut state, &cfg).unwrap();
            assert_eq!(theta.to_vec(), expected);
        }
    }

    #[test]
    fn adam_first_step_hand_trace() {
        let mut theta = [0.0];
        let mut state = AdamState::new(1);
        adam_step(&mut theta, &[2.0], &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(state.t, 1);
        assert!((state.m[0] - 0.2).abs() < 1e-15);
        assert!((state.v[0] - 0.004).abs() < 1e-15);
        assert!((theta[0] - (-9.99999995e-4)).abs() < 1e-15);
    }

    #[test]
    fn adam_zero_gradient_keeps_params_and_counts_step() {
        let mut theta = [0.25];
        let mut state = AdamState::new(1);
        adam_step(&mut theta, &[0.0], &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(theta, [0.25]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn adam_constant_gradient_steps_approach_alpha() {
        let cfg = AdamConfig::default();
        let mut theta = [0.0];
        let mut state = AdamState::new(1);
        let mut last_delta = 0.0;
        for _ in 0..1000 {
            let before = theta[0];
            adam_step(&mut theta, &[0.37], &mut state, &cfg).unwrap();
            last_delta = (theta[0] - before).abs();
        }
        assert!(
            ((last_delta - cfg.alpha) / cfg.alpha).abs() < 0.01,
            "{last_delta}"
        );
    }

    #[test]
    fn adam_first_step_is_scale_robust() {
        // The first step is α·g/(|g| + ε), so g and 1000·g differ by about ε/|g|.
        let cfg = AdamConfig::default();
        for g in [1e-2, 0.5, 2.0, 40.0, -3.0] {
            let mut a = [0.0];
            let mut b = [0.0];
            adam_step(&mut a, &[g], &mut AdamState::new(1), &cfg).unwrap();
            adam_step(&mut b, &[1000.0 * g], &mut AdamState::new(1), &cfg).unwrap();
            assert!(((a[0] - b[0]) / b[0]).abs() < 1e-6, "g = {g}");
        }
    }

    #[test]
    fn step_errors() {
        let mut theta = [0.0, 1.0];
        let mut state = AdamState::new(2);
        let err = adam_step(&mut theta, &[1.0], &mut state, &AdamConfig::default());
        assert!(matches!(err, Err(Error::Shape { .. })));
        let err = adam_step(
            &mut theta,
            &[1.0, f64::NAN],
            &mut state,
            &AdamConfig::default(),
        );
        assert!(matches!(err, Err(Error::NonFinite(_))));
        let mut mstate = MomentumState::new(2);
        let err = momentum_step(
            &mut theta,
            &[f64::INFINITY, 0.0],
            &mut mstate,
            &TABLE2_MOMENTUM,
        );
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    fn tiny_network() -> (NetworkParams, Gradients) {
        let params = NetworkParams {
            layers: vec![
                LayerParams {
                    weights: Matrix::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
                    biases: Vector::zeros(2),
                },
                LayerParams {
                    weights: Matrix::new(1, 2, vec![0.5, -0.5]).unwrap(),
                    biases: Vector::zeros(1),
                },
            ],
        };
        let grads = Gradients {
            layers: vec![
                LayerParams {
                    weights: Matrix::new(2, 2, vec![1.0, -1.0, 0.5, 0.0]).unwrap(),
                    biases: Vector::new(vec![0.1, 0.2]).unwrap(),
                },
                LayerParams {
                    weights: Matrix::new(1, 2, vec![2.0, 3.0]).unwrap(),
                    biases: Vector::new(vec![-1.0]).unwrap(),
                },
            ],
        };
        (params, grads)
    }

    #[test]
    fn updater_names_layer_with_bad_gradient() {
        let (mut params, mut grads) = tiny_network();
        grads.layers[1].biases.as_mut_slice()[0] = f64::NAN;
        let mut updater =
            Updater::new(UpdaterConfig::Adam(AdamConfig::default()), &params).unwrap();
        let before = params.clone();
        let err = updater.step(&mut params, &grads).unwrap_err();
        assert!(err.to_string().contains("layer 1 bias"), "{err}");
        assert_eq!(params, before);
        assert_eq!(updater.steps(), 0);
    }

    #[test]
    fn updater_state_mirrors_params_and_is_deterministic() {
        let (params, grads) = tiny_network();
        let run = || {
            let mut p = params.clone();
            let mut u = Updater::new(UpdaterConfig::Adam(AdamConfig::default()), &p).unwrap();
            for _ in 0..5 {
                u.step(&mut p, &grads).unwrap();
            }
            (p, u)
        };
        let (p1, u1) = run();
        let (p2, u2) = run();
        assert_eq!(p1, p2);
        assert_eq!(u1.state(), u2.state());
        match u1.state() {
            OptimizerState::Adam(states) => {
                let lens: Vec<usize> = states.iter().map(|s| s.m.len()).collect();
                assert_eq!(lens, vec![4, 2, 2, 1]);
                assert!(states.iter().all(|s| s.t == 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn updater_matches_flat_rule() {
        let (mut params, grads) = tiny_network();
        let mut flat = params.layers[0].weights.as_slice().to_vec();
        let mut state = MomentumState::new(4);
        momentum_step(
            &mut flat,
            grads.layers[0].weights.as_slice(),
            &mut state,
            &TABLE2_MOMENTUM,
        )
        .unwrap();
        let mut updater = Updater::new(UpdaterConfig::Momentum(TABLE2_MOMENTUM), &params).unwrap();
        updater.step(&mut params, &grads).unwrap();
        assert_eq!(params.layers[0].weights.as_slice(), flat.as_slice());
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        assert!(AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        }
        .validate()
        .is_err());
        assert!(AdamConfig {
            epsilon: 0.0,
            ..AdamConfig::default()
        }
        .validate()
        .is_err());
        assert!(MomentumConfig {
            learning_rate: -0.1,
            momentum: 0.0
        }
        .validate()
        .is_err());
        assert!(MomentumConfig {
            learning_rate: 0.2,
            momentum: 1.0
        }
        .validate()
        .is_err());
        assert!(TABLE2_MOMENTUM.validate().is_ok());
    }
}

//! Training loop, presets, and evaluation.
//!
//! Inputs and target are z-scored with statistics from the training set.
//! The loss is mean squared error in that standardized space. Predictions are
//! mapped back to meters before any metric is computed.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::data::{Dataset, ScourRecord, Standardizer, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::init::{init_network, InitScheme, DEFAULT_UNIFORM_HALFWIDTH};
use crate::linalg::Matrix;
use crate::metrics::{self, MetricsReport};
use crate::nn::{self, Activation, LayerSpec, Mode, NetworkParams};
use crate::optim::{AdamConfig, MomentumConfig, Updater, UpdaterConfig};
use crate::rng::seeded;

pub const DEFAULT_HISTORY_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchSize {
    /// One update per epoch over the whole training set.
    Full,
    Fixed(usize),
}

impl BatchSize {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            BatchSize::Full => n,
            BatchSize::Fixed(b) => b.min(n),
        }
    }
}

impl fmt::Display for BatchSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BatchSize::Full => f.write_str("full"),
            BatchSize::Fixed(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(BatchSize::Full);
        }
        match s.parse::<usize>() {
            Ok(b) if b >= 1 => Ok(BatchSize::Fixed(b)),
            _ => Err(Error::Config(format!(
                "batch size must be `full` or a positive integer, got `{s}`"
            ))),
        }
    }
}

/// How long to train. An "iteration" count can mean either unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Epochs(usize),
    /// Total updater steps; the last epoch may be cut short.
    Updates(usize),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Epochs(n) => write!(f, "{n} epochs"),
            Budget::Updates(n) => write!(f, "{n} updates"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    Mse,
}

/// Mean over the batch of `(pred − target)²`, and its gradient `2(pred − target)/batch`.
pub fn mse_loss(predicted: &Matrix, target: &Matrix) -> Result<(f64, Matrix)> {
    if predicted.shape() != target.shape() {
        return Err(Error::shape("mse_loss", predicted.shape(), target.shape()));
    }
    let b = predicted.rows() as f64;
    let mut loss = 0.0;
    let grad: Vec<f64> = predicted
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| {
            let d = p - t;
            loss += d * d;
            2.0 * d / b
        })
        .collect();
    Ok((
        loss / b,
        Matrix::new(predicted.rows(), predicted.cols(), grad)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub layer_specs: Vec<LayerSpec>,
    pub init: InitScheme,
    pub updater: UpdaterConfig,
    pub batch_size: BatchSize,
    pub budget: Budget,
    pub loss: Loss,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
    /// Record history every this many epochs (the final epoch is always recorded).
    pub history_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        nn::validate_specs(&self.layer_specs)?;
        let first = &self.layer_specs[0];
        if first.input_width != FEATURE_COUNT {
            return Err(Error::Config(format!(
                "first layer must take {FEATURE_COUNT} inputs, got {}",
                first.input_width
            )));
        }
        let last = self.layer_specs.last().expect("validated non-empty");
        if last.output_width != 1 {
            return Err(Error::Config(format!(
                "last layer must have a single output, got {}",
                last.output_width
            )));
        }
        self.init.validate()?;
        self.updater.validate()?;
        if self.batch_size == BatchSize::Fixed(0) {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        match self.budget {
            Budget::Epochs(0) | Budget::Updates(0) => {
                return Err(Error::Config("training budget must be at least 1".into()))
            }
            _ => {}
        }
        if self.history_every == 0 {
            return Err(Error::Config("history interval must be at least 1".into()));
        }
        Ok(())
    }

    /// Widths from input to output, e.g. `[7, 100, 80, 50, 1]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.layer_specs[0].input_width)
            .chain(self.layer_specs.iter().map(|s| s.output_width))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Three ReLU hidden layers (100, 80, 50), Xavier Gaussian init, Adam, batch 5, 15000 epochs.
    DnnPaper,
    /// One sigmoid hidden layer of 8, uniform init, momentum SGD (lr 0.2, μ 0.1), full batch, 1500 epochs.
    BpnnPaper,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::DnnPaper => "dnn_paper",
            Preset::BpnnPaper => "bpnn_paper",
        }
    }

    /// Model label used in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Preset::DnnPaper => "Deep neural network",
            Preset::BpnnPaper => "Back propagation neural network",
        }
    }

    pub fn config(self, seed: u64) -> TrainConfig {
        match self {
            Preset::DnnPaper => TrainConfig {
                layer_specs: nn::stack(
                    &[FEATURE_COUNT, 100, 80, 50, 1],
                    Activation::Relu,
                    Activation::Identity,
                    0.0,
                )
                .expect("preset topology is valid"),
                init: InitScheme::XavierGaussian,
                updater: UpdaterConfig::Adam(AdamConfig::default()),
                batch_size: BatchSize::Fixed(5),
                budget: Budget::Epochs(15_000),
                loss: Loss::Mse,
                seed,
                shuffle_each_epoch: true,
                history_every: DEFAULT_HISTORY_EVERY,
            },
            Preset::BpnnPaper => TrainConfig {
                layer_specs: nn::stack(
                    &[FEATURE_COUNT, 8, 1],
                    Activation::Sigmoid,
                    Activation::Identity,
                    0.0,
                )
                .expect("preset topology is valid"),
                init: InitScheme::UniformRandom {
                    halfwidth: DEFAULT_UNIFORM_HALFWIDTH,
                },
                updater: UpdaterConfig::Momentum(MomentumConfig {
                    learning_rate: 0.2,
                    momentum: 0.1,
                }),
                batch_size: BatchSize::Full,
                budget: Budget::Epochs(1500),
                loss: Loss::Mse,
                seed,
                shuffle_each_epoch: true,
                history_every: DEFAULT_HISTORY_EVERY,
            },
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dnn_paper" => Ok(Preset::DnnPaper),
            "bpnn_paper" => Ok(Preset::BpnnPaper),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected dnn_paper or bpnn_paper)"
            ))),
        }
    }
}

/// A trained network together with the scaling it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub specs: Vec<LayerSpec>,
    pub params: NetworkParams,
    pub standardizer: Standardizer,
}

impl Model {
    /// Predicted scour depth in meters, one per record.
    pub fn predict(&self, records: &[ScourRecord]) -> Result<Vec<f64>> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let x = self.standardizer.feature_matrix(records)?;
        let out = nn::predict(&self.params, &self.specs, &x)?;
        Ok(out
            .as_slice()
            .iter()
            .map(|&z| self.standardizer.invert_target(z))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub epoch: usize,
    /// Training-set MSE in standardized units, measured without dropout.
    pub train_loss: f64,
    pub val_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub records: Vec<HistoryRecord>,
    pub epochs_run: usize,
    pub total_steps: u64,
}

pub fn steps_per_epoch(n: usize, batch: BatchSize) -> usize {
    n.div_ceil(batch.resolve(n))
}

pub fn train(
    cfg: &TrainConfig,
    train_set: &Dataset,
    validation: Option<&Dataset>,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    let mut rng = seeded(cfg.seed);
    let params = init_network(&cfg.layer_specs, cfg.init, &mut rng)?;
    run(cfg, params, rng, train_set, validation)
}

/// Like [`train`] but starting from the given parameters instead of a fresh
/// initialization. The seed still drives shuffling and dropout.
pub fn train_from(
    cfg: &TrainConfig,
    initial: NetworkParams,
    train_set: &Dataset,
    validation: Option<&Dataset>,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    initial.check_against(&cfg.layer_specs)?;
    run(cfg, initial, seeded(cfg.seed), train_set, validation)
}

fn run(
    cfg: &TrainConfig,
    mut params: NetworkParams,
    mut rng: crate::rng::SeedRng,
    train_set: &Dataset,
    validation: Option<&Dataset>,
) -> Result<(Model, TrainHistory)> {
    let specs = &cfg.layer_specs;
    let standardizer = Standardizer::fit(train_set);
    let x = standardizer.feature_matrix(train_set.records())?;
    let y = standardizer.target_column(train_set.records())?;
    let n = train_set.len();
    let batch = cfg.batch_size.resolve(n);
    let mut updater = Updater::new(cfg.updater, &params)?;

    let (max_epochs, max_steps) = match cfg.budget {
        Budget::Epochs(e) => (e, u64::MAX),
        Budget::Updates(u) => (u.div_ceil(steps_per_epoch(n, cfg.batch_size)), u as u64),
    };

    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=max_epochs {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        for (b, chunk) in order.chunks(batch).enumerate() {
            if updater.steps() >= max_steps {
                break;
            }
            let xb = x.select_rows(chunk)?;
            let yb = y.select_rows(chunk)?;
            let trace = nn::forward(&params, specs, &xb, Mode::Train(&mut rng))?;
            let (loss, d_out) = match cfg.loss {
                Loss::Mse => mse_loss(trace.output(), &yb)?,
            };
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss,
                });
            }
            let grads = nn::backward(&params, specs, &trace, &d_out)?;
            updater.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFinite(_) => Error::Divergence {
                    epoch,
                    batch: b + 1,
                    loss,
                },
                other => other,
            })?;
        }
        history.epochs_run = epoch;

        if epoch % cfg.history_every == 0 || epoch == max_epochs {
            let pred = nn::predict(&params, specs, &x)?;
            let (train_loss, _) = mse_loss(&pred, &y)?;
            let val_rmse = match validation {
                Some(val) => {
                    let model = Model {
                        specs: specs.clone(),
                        params: params.clone(),
                        standardizer,
                    };
                    Some(metrics::rmse(
                        &val.targets(),
                        &model.predict(val.records())?,
                    )?)
                }
                None => None,
            };
            history.records.push(HistoryRecord {
                epoch,
                train_loss,
                val_rmse,
            });
        }
    }
    history.total_steps = updater.steps();

    Ok((
        Model {
            specs: specs.clone(),
            params,
            standardizer,
        },
        history,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// Position in the test set, from 1.
    pub index: usize,
    pub actual: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub predictions: Vec<Prediction>,
}

/// Infer-mode predictions in meters and their metrics, in test-set order.
pub fn evaluate(model: &Model, test_set: &Dataset) -> Result<Evaluation> {
    if test_set.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let predicted = model.predict(test_set.records())?;
    let actual = test_set.targets();
    let report = metrics::report(&actual, &predicted)?;
    let predictions = actual
        .iter()
        .zip(&predicted)
        .enumerate()
        .map(|(i, (&actual, &predicted))| Prediction {
            index: i + 1,
            actual,
            predicted,
        })
        .collect();
    Ok(Evaluation {
        report,
        predictions,
    })
}

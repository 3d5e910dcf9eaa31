//! Feedforward neural-network regression for local scour depth at bridge piers.
//!
//! The crate is built from small pieces that compose into one pipeline:
//!
//! - [`linalg`]: dense `f64` matrices, batches stacked as rows.
//! - [`nn`]: layer topology, activations, forward pass and backpropagation.
//! - [`init`]: Xavier Gaussian and bounded uniform initialization.
//! - [`optim`]: momentum SGD and Adam.
//! - [`data`]: the seven-feature scour record, CSV I/O, seeded splitting,
//!   standardization, summary statistics, and a synthetic data generator.
//! - [`metrics`]: correlation coefficient, RMSE and MAE.
//! - [`train`]: the training loop, the two reference presets, evaluation.
//! - [`gradcheck`]: finite-difference verification of backpropagation.
//! - [`model_io`]: bit-exact text model files.
//!
//! ```no_run
//! use scour_core::{data, train};
//!
//! # fn main() -> scour_core::Result<()> {
//! let ds = data::synth_generate(232, 42)?;
//! let (train_set, test_set) = data::split(&ds, 154, 42)?;
//! let cfg = train::Preset::DnnPaper.config(42);
//! let (model, _history) = train::train(&cfg, &train_set, None)?;
//! let eval = train::evaluate(&model, &test_set)?;
//! println!("cc {:.3} rmse {:.3} m", eval.report.cc, eval.report.rmse);
//! # Ok(())
//! # }
//! ```

pub mod data;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod linalg;
pub mod metrics;
pub mod model_io;
pub mod nn;
pub mod optim;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use metrics::MetricsReport;
pub use train::{Model, Preset, TrainConfig, TrainHistory};

//! Flat `key=value` run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use scour_core::train::TrainConfig;

use crate::error::{CliError, CliResult};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Resolved settings, in insertion order.
    pub config: Vec<(String, String)>,
    pub outputs: Vec<(String, PathBuf)>,
    pub version: String,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn start(command: &str, seed: u64) -> Self {
        let now = unix_now();
        Self {
            command: command.to_owned(),
            seed,
            started_unix: now,
            finished_unix: now,
            config: Vec::new(),
            outputs: Vec::new(),
            version: LIBRARY_VERSION.to_owned(),
        }
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.push((key.into(), value.to_string()));
    }

    pub fn output(&mut self, key: impl Into<String>, path: &Path) {
        self.outputs.push((key.into(), path.to_path_buf()));
    }

    /// Every field of a training configuration under `prefix`.
    pub fn set_train_config(&mut self, prefix: &str, cfg: &TrainConfig) {
        let widths: Vec<String> = cfg.widths().iter().map(|w| w.to_string()).collect();
        self.set(format!("{prefix}widths"), widths.join(","));
        let acts: Vec<String> = cfg
            .layer_specs
            .iter()
            .map(|s| s.activation.to_string())
            .collect();
        self.set(format!("{prefix}activations"), acts.join(","));
        let drops: Vec<String> = cfg
            .layer_specs
            .iter()
            .map(|s| s.dropout_rate.to_string())
            .collect();
        self.set(format!("{prefix}dropout"), drops.join(","));
        self.set(format!("{prefix}init"), cfg.init);
        match cfg.updater {
            scour_core::optim::UpdaterConfig::Adam(a) => {
                self.set(format!("{prefix}updater"), "adam");
                self.set(format!("{prefix}lr"), a.alpha);
                self.set(format!("{prefix}beta1"), a.beta1);
                self.set(format!("{prefix}beta2"), a.beta2);
                self.set(format!("{prefix}eps"), a.epsilon);
            }
            scour_core::optim::UpdaterConfig::Momentum(m) => {
                self.set(format!("{prefix}updater"), "momentum");
                self.set(format!("{prefix}lr"), m.learning_rate);
                self.set(format!("{prefix}momentum"), m.momentum);
            }
        }
        self.set(format!("{prefix}batch_size"), cfg.batch_size);
        self.set(format!("{prefix}budget"), cfg.budget);
        self.set(format!("{prefix}loss"), "mse");
        self.set(format!("{prefix}seed"), cfg.seed);
        self.set(
            format!("{prefix}shuffle_each_epoch"),
            cfg.shuffle_each_epoch,
        );
        self.set(format!("{prefix}history_every"), cfg.history_every);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command={}", self.command);
        let _ = writeln!(out, "version={}", self.version);
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(out, "started_unix={}", self.started_unix);
        let _ = writeln!(out, "finished_unix={}", self.finished_unix);
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k}={v}");
        }
        for (k, p) in &self.outputs {
            let _ = writeln!(out, "output.{k}={}", p.display());
        }
        out
    }

    /// Stamp the finish time and write the manifest.
    pub fn finish(mut self, path: &Path) -> CliResult<()> {
        self.finished_unix = unix_now();
        write_file(path, self.to_text().as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a manifest back into `(key, value)` pairs.
pub fn parse(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

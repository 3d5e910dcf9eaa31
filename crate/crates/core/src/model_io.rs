//! Versioned plain-text model files.
//!
//! ```text
//! scour-model 1
//! layers <count>
//! layer <input_width> <output_width> <activation> <dropout_rate>    (one per layer)
//! feature <center> <scale>                                          (seven lines)
//! target <center> <scale>
//! weights <layer>
//! <one row of output_width values per line, input_width per row>
//! biases <layer>
//! <output_width values>
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so loading a saved
//! model reproduces every `f64` bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::data::{ColumnScaler, Standardizer, FEATURE_COUNT};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::nn::{self, LayerParams, LayerSpec, NetworkParams};
use crate::train::Model;

pub const MAGIC: &str = "scour-model";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_text(model: &Model) -> String {
    let mut out = String::new();
    // Writing to a String cannot fail.
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "layers {}", model.specs.len());
    for s in &model.specs {
        let _ = writeln!(
            out,
            "layer {} {} {} {:e}",
            s.input_width, s.output_width, s.activation, s.dropout_rate
        );
    }
    for f in &model.standardizer.features {
        let _ = writeln!(out, "feature {:e} {:e}", f.center, f.scale);
    }
    let t = model.standardizer.target;
    let _ = writeln!(out, "target {:e} {:e}", t.center, t.scale);
    for (k, layer) in model.params.layers.iter().enumerate() {
        let _ = writeln!(out, "weights {k}");
        for r in 0..layer.weights.rows() {
            let _ = writeln!(out, "{}", join(layer.weights.row(r)));
        }
        let _ = writeln!(out, "biases {k}");
        let _ = writeln!(out, "{}", join(layer.biases.as_slice()));
    }
    out
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, expecting: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((i, line)) => Ok((i + 1, line.split_whitespace().collect())),
            None => Err(Error::ModelFormat(format!(
                "unexpected end of file, expecting {expecting}"
            ))),
        }
    }

    fn keyword(&mut self, key: &str, arity: usize) -> Result<(usize, Vec<&'a str>)> {
        let (line, fields) = self.next(key)?;
        if fields.first() != Some(&key) || fields.len() != arity + 1 {
            return Err(Error::ModelFormat(format!(
                "line {line}: expected `{key}` with {arity} field(s)"
            )));
        }
        Ok((line, fields[1..].to_vec()))
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("line {line}: cannot parse `{s}`")))
}

fn floats(line: usize, fields: &[&str], expected: usize) -> Result<Vec<f64>> {
    if fields.len() != expected {
        return Err(Error::ModelFormat(format!(
            "line {line}: expected {expected} values, found {}",
            fields.len()
        )));
    }
    fields.iter().map(|f| num(line, f)).collect()
}

fn scaler(line: usize, fields: &[&str]) -> Result<ColumnScaler> {
    Ok(ColumnScaler {
        center: num(line, fields[0])?,
        scale: num(line, fields[1])?,
    })
}

pub fn from_text(text: &str) -> Result<Model> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (_, header) = lines.keyword(MAGIC, 1)?;
    let version: u32 = num(1, header[0])?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let (line, count) = lines.keyword("layers", 1)?;
    let count: usize = num(line, count[0])?;

    let mut specs = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, f) = lines.keyword("layer", 4)?;
        specs.push(
            LayerSpec::new(num(line, f[0])?, num(line, f[1])?, f[2].parse()?)
                .with_dropout(num(line, f[3])?),
        );
    }
    nn::validate_specs(&specs)?;

    let mut features = [ColumnScaler {
        center: 0.0,
        scale: 1.0,
    }; FEATURE_COUNT];
    for slot in &mut features {
        let (line, f) = lines.keyword("feature", 2)?;
        *slot = scaler(line, &f)?;
    }
    let (line, f) = lines.keyword("target", 2)?;
    let target = scaler(line, &f)?;

    let mut layers = Vec::with_capacity(count);
    for (k, spec) in specs.iter().enumerate() {
        let (line, f) = lines.keyword("weights", 1)?;
        if num::<usize>(line, f[0])? != k {
            return Err(Error::ModelFormat(format!(
                "line {line}: expected weights {k}"
            )));
        }
        let mut data = Vec::with_capacity(spec.input_width * spec.output_width);
        for _ in 0..spec.output_width {
            let (line, row) = lines.next("weight row")?;
            data.extend(floats(line, &row, spec.input_width)?);
        }
        let (line, f) = lines.keyword("biases", 1)?;
        if num::<usize>(line, f[0])? != k {
            return Err(Error::ModelFormat(format!(
                "line {line}: expected biases {k}"
            )));
        }
        let (line, row) = lines.next("bias row")?;
        layers.push(LayerParams {
            weights: Matrix::new(spec.output_width, spec.input_width, data)?,
            biases: Vector::new(floats(line, &row, spec.output_width)?)?,
        });
    }
    if let Some((i, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::ModelFormat(format!(
            "line {}: trailing content `{extra}`",
            i + 1
        )));
    }

    let params = NetworkParams { layers };
    params.check_against(&specs)?;
    Ok(Model {
        specs,
        params,
        standardizer: Standardizer { features, target },
    })
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_text(model))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    from_text(&fs::read_to_string(path)?)
}

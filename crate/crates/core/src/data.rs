//! Pier scour records and everything needed to get them into a network.
//!
//! Units: `pw`, `h` and `scour` in meters, `v` in m/s, `d50` in millimeters,
//! `skew` in degrees. `ps` and `sigma` are dimensionless. Features stay in
//! these physical units on disk. Numeric conditioning for training is done by
//! [`Standardizer`], which is fit on training data only.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal, StandardNormal};

use crate::error::{Error, Result, RowViolation};
use crate::linalg::Matrix;
use crate::rng::{seeded, SeedRng};

pub const FEATURE_COUNT: usize = 7;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["ps", "pw", "skew", "v", "h", "d50", "sigma"];
pub const TARGET_NAME: &str = "scour";
pub const CSV_HEADER: [&str; FEATURE_COUNT + 1] =
    ["ps", "pw", "skew", "v", "h", "d50", "sigma", "scour"];

/// One field measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScourRecord {
    /// Pier shape factor: 1.3 square-nosed, 1.0 round-nosed, 0.7 sharp-nosed.
    pub ps: f64,
    /// Pier width (m).
    pub pw: f64,
    /// Skew of the pier to the approach flow (degrees).
    pub skew: f64,
    /// Flow velocity (m/s).
    pub v: f64,
    /// Flow depth (m).
    pub h: f64,
    /// Median grain size of the bed material (mm).
    pub d50: f64,
    /// Gradation of the bed material.
    pub sigma: f64,
    /// Observed scour depth (m).
    pub scour: f64,
}

impl ScourRecord {
    pub fn from_values(values: [f64; FEATURE_COUNT + 1]) -> Self {
        let [ps, pw, skew, v, h, d50, sigma, scour] = values;
        Self {
            ps,
            pw,
            skew,
            v,
            h,
            d50,
            sigma,
            scour,
        }
    }

    pub fn features(&self) -> [f64; FEATURE_COUNT] {
        [
            self.ps, self.pw, self.skew, self.v, self.h, self.d50, self.sigma,
        ]
    }

    /// Features followed by the target, in CSV column order.
    pub fn values(&self) -> [f64; FEATURE_COUNT + 1] {
        [
            self.ps, self.pw, self.skew, self.v, self.h, self.d50, self.sigma, self.scour,
        ]
    }

    /// Names of the invariants this record breaks.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.values().iter().any(|x| !x.is_finite()) {
            out.push("all values finite");
            return out;
        }
        if !(0.7..=1.3).contains(&self.ps) {
            out.push("ps in [0.7, 1.3]");
        }
        if self.pw <= 0.0 {
            out.push("pw > 0");
        }
        if !(0.0..=90.0).contains(&self.skew) {
            out.push("skew in [0, 90]");
        }
        if self.v < 0.0 {
            out.push("v >= 0");
        }
        if self.h < 0.0 {
            out.push("h >= 0");
        }
        if self.d50 <= 0.0 {
            out.push("d50 > 0");
        }
        if self.sigma < 1.0 {
            out.push("sigma >= 1");
        }
        if self.scour < 0.0 {
            out.push("scour >= 0");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    File,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ScourRecord>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(
        records: Vec<ScourRecord>,
        provenance: Provenance,
        seed: Option<u64>,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let violations: Vec<RowViolation> = records
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.violations()
                    .into_iter()
                    .map(move |rule| RowViolation { row: i + 1, rule })
            })
            .collect();
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }
        Ok(Self {
            records,
            provenance,
            seed,
        })
    }

    pub fn records(&self) -> &[ScourRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.scour).collect()
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i]).collect(),
            provenance: self.provenance,
            seed: self.seed,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv(File::open(path)?)
}

pub fn read_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != CSV_HEADER {
        let missing: Vec<&str> = CSV_HEADER
            .iter()
            .copied()
            .filter(|c| !names.contains(c))
            .collect();
        return Err(Error::Schema(if missing.is_empty() {
            format!(
                "header must be exactly `{}`, got `{}`",
                CSV_HEADER.join(","),
                names.join(",")
            )
        } else {
            format!("missing column(s): {}", missing.join(", "))
        }));
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 1;
        if row.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                row: row_no,
                column: "*".into(),
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), row.len()),
            });
        }
        let mut values = [0.0; FEATURE_COUNT + 1];
        for (j, cell) in row.iter().enumerate() {
            values[j] = cell.parse::<f64>().map_err(|_| Error::Parse {
                row: row_no,
                column: CSV_HEADER[j].into(),
                message: format!("`{cell}` is not a number"),
            })?;
        }
        records.push(ScourRecord::from_values(values));
    }
    Dataset::new(records, Provenance::File, None)
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(CSV_HEADER)?;
    for r in ds.records() {
        wtr.write_record(r.values().iter().map(|x| x.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_csv(ds, File::create(path)?)
}

/// Seeded shuffle, then the first `n_train` records train and the rest test.
pub fn split(ds: &Dataset, n_train: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    if n_train == 0 || n_train >= ds.len() {
        return Err(Error::Domain(format!(
            "n_train must satisfy 0 < n_train < {}, got {n_train}",
            ds.len()
        )));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut seeded(seed));
    let (train, test) = order.split_at(n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

/// Affine map `x → (x − center) / scale` for one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnScaler {
    pub center: f64,
    pub scale: f64,
}

impl ColumnScaler {
    /// Mean and sample standard deviation. Degenerate columns get scale 1.
    pub fn fit(values: &[f64]) -> Self {
        let (mean, std) = mean_and_sample_std(values);
        let scale = if std > 0.0 && std.is_finite() {
            std
        } else {
            1.0
        };
        Self {
            center: mean,
            scale,
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        (x - self.center) / self.scale
    }

    #[inline]
    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.center
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub features: [ColumnScaler; FEATURE_COUNT],
    pub target: ColumnScaler,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Self {
        let features = std::array::from_fn(|j| {
            let column: Vec<f64> = train.records().iter().map(|r| r.features()[j]).collect();
            ColumnScaler::fit(&column)
        });
        Self {
            features,
            target: ColumnScaler::fit(&train.targets()),
        }
    }

    /// Standardized feature matrix, one row per record.
    pub fn feature_matrix(&self, records: &[ScourRecord]) -> Result<Matrix> {
        let data = records
            .iter()
            .flat_map(|r| {
                r.features()
                    .into_iter()
                    .zip(&self.features)
                    .map(|(x, s)| s.apply(x))
            })
            .collect();
        Matrix::new(records.len(), FEATURE_COUNT, data)
    }

    pub fn target_column(&self, records: &[ScourRecord]) -> Result<Matrix> {
        let data = records.iter().map(|r| self.target.apply(r.scour)).collect();
        Matrix::new(records.len(), 1, data)
    }

    /// Maps standardized predictions back to meters.
    pub fn invert_target(&self, z: f64) -> f64 {
        self.target.invert(z)
    }
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample (n − 1) standard deviation; 0 for a single record.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub n: usize,
    /// Features in CSV order, then the target.
    pub columns: Vec<ColumnStats>,
}

impl FeatureStats {
    pub fn column(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }
}

pub fn summarize(ds: &Dataset) -> Result<FeatureStats> {
    if ds.is_empty() {
        return Err(Error::Domain("cannot summarize an empty dataset".into()));
    }
    let columns = CSV_HEADER
        .iter()
        .enumerate()
        .map(|(j, &name)| {
            let values: Vec<f64> = ds.records().iter().map(|r| r.values()[j]).collect();
            let (mean, std) = mean_and_sample_std(&values);
            ColumnStats {
                name,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean,
                std,
            }
        })
        .collect();
    Ok(FeatureStats {
        n: ds.len(),
        columns,
    })
}

/// Published characteristics of the field data: `(name, min, max, mean, std)`.
pub type ReferenceRow = (&'static str, f64, f64, f64, f64);

/// Training subset (154 records) of the field data.
pub const REFERENCE_TRAIN_STATS: [ReferenceRow; FEATURE_COUNT + 1] = [
    ("ps", 0.70, 1.30, 0.97, 0.21),
    ("pw", 0.30, 5.50, 1.56, 1.16),
    ("skew", 0.0, 85.0, 9.26, 18.63),
    ("v", 0.20, 4.50, 1.64, 0.89),
    ("h", 0.30, 22.50, 4.55, 4.02),
    ("d50", 0.12, 95.0, 18.98, 26.76),
    ("sigma", 1.20, 20.30, 3.65, 3.29),
    ("scour", 0.10, 7.10, 1.12, 1.27),
];

/// Test subset (78 records) of the field data.
pub const REFERENCE_TEST_STATS: [ReferenceRow; FEATURE_COUNT + 1] = [
    ("ps", 0.70, 1.30, 0.99, 0.20),
    ("pw", 0.30, 5.50, 1.40, 1.15),
    ("skew", 0.0, 65.0, 9.90, 18.37),
    ("v", 0.0, 3.20, 1.30, 0.68),
    ("h", 0.0, 22.40, 3.80, 3.58),
    ("d50", 0.15, 95.0, 19.47, 25.10),
    ("sigma", 1.20, 21.80, 3.61, 2.90),
    ("scour", 0.10, 6.20, 0.94, 1.06),
];

/// Leading coefficient of the planted scour relation, chosen so the mean
/// synthetic scour depth sits near the field training mean of 1.12 m.
pub const SYNTH_SCOUR_COEFFICIENT: f64 = 0.96;
/// Fraction of synthetic piers aligned with the flow (skew exactly 0).
pub const SYNTH_ALIGNED_FRACTION: f64 = 0.6;
/// Mean of the exponential skew draw for skewed piers (degrees).
pub const SYNTH_SKEW_MEAN: f64 = 23.15;
/// Relative standard deviation of the multiplicative target noise.
pub const SYNTH_NOISE: f64 = 0.1;

/// Scour depth of the planted relation, before noise:
/// `c·ps·pw^0.65·h^0.35·Fr^0.43·(1 + 0.1·sigma^−0.5)` with `Fr = v/√(9.81·h + 0.01)`.
pub fn planted_scour(ps: f64, pw: f64, v: f64, h: f64, sigma: f64) -> f64 {
    let froude = v / (9.81 * h + 0.01).sqrt();
    SYNTH_SCOUR_COEFFICIENT
        * ps
        * pw.powf(0.65)
        * h.powf(0.35)
        * froude.powf(0.43)
        * (1.0 + 0.1 * sigma.powf(-0.5))
}

fn lognormal_matching(mean: f64, std: f64) -> LogNormal<f64> {
    let s2 = (1.0 + (std / mean).powi(2)).ln();
    LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt()).expect("finite moments")
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Synthetic records whose feature ranges and moments follow the field
/// training data, with scour given by [`planted_scour`] plus noise.
pub fn synth_generate(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::Domain(format!(
            "synthetic dataset needs at least 2 records, got {n}"
        )));
    }
    let stat = |name: &str| {
        *REFERENCE_TRAIN_STATS
            .iter()
            .find(|r| r.0 == name)
            .expect("known column")
    };
    let clipped_lognormal = |name: &str| {
        let (_, min, max, mean, std) = stat(name);
        (lognormal_matching(mean, std), min, max)
    };
    let (pw_dist, pw_min, pw_max) = clipped_lognormal("pw");
    let (h_dist, h_min, h_max) = clipped_lognormal("h");
    let (d50_dist, d50_min, d50_max) = clipped_lognormal("d50");
    let (sigma_dist, sigma_min, sigma_max) = clipped_lognormal("sigma");
    let (_, v_min, v_max, v_mean, v_std) = stat("v");
    let v_dist = Normal::new(v_mean, v_std).expect("finite");
    let skew_dist = Exp::new(1.0 / SYNTH_SKEW_MEAN).expect("positive rate");
    let (_, _, skew_max, _, _) = stat("skew");
    let (_, scour_min, scour_max, _, _) = stat("scour");

    let mut rng: SeedRng = seeded(seed);
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let ps = [0.7, 1.0, 1.3][rng.random_range(0..3)];
        let pw = round_to(pw_dist.sample(&mut rng).clamp(pw_min, pw_max), 2);
        let skew = if rng.random::<f64>() < SYNTH_ALIGNED_FRACTION {
            0.0
        } else {
            round_to(skew_dist.sample(&mut rng).clamp(0.0, skew_max), 0)
        };
        let v = round_to(v_dist.sample(&mut rng).clamp(v_min, v_max), 2);
        let h = round_to(h_dist.sample(&mut rng).clamp(h_min, h_max), 2);
        let d50 = round_to(d50_dist.sample(&mut rng).clamp(d50_min, d50_max), 2);
        let sigma = round_to(sigma_dist.sample(&mut rng).clamp(sigma_min, sigma_max), 2);
        let noise: f64 = rng.sample(StandardNormal);
        let scour = planted_scour(ps, pw, v, h, sigma) * (1.0 + SYNTH_NOISE * noise);
        let scour = round_to(scour.clamp(scour_min, scour_max), 2);
        records.push(ScourRecord {
            ps,
            pw,
            skew,
            v,
            h,
            d50,
            sigma,
            scour,
        });
    }
    Dataset::new(records, Provenance::Synthetic, Some(seed))
}

//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use scour_core::data::{self, Dataset, Provenance, ScourRecord, REFERENCE_TRAIN_STATS};
use scour_core::gradcheck::{gradient_check, GradCheckConfig};
use scour_core::init::{init_layer, InitScheme};
use scour_core::metrics;
use scour_core::optim::{
    adam_step, momentum_step, AdamConfig, AdamState, MomentumConfig, MomentumState,
};
use scour_core::rng::seeded;
use scour_core::train::{self, BatchSize, Preset};
use scour_core::Error;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gradient_correctness() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, cfg) in [
        ("sigmoid", GradCheckConfig::sigmoid()),
        ("relu", GradCheckConfig::relu()),
    ] {
        let start = Instant::now();
        let report = gradient_check(&cfg).expect("gradient check runs");
        let took = start.elapsed();
        ok &=
            report.passed() && report.max_relative_error() < 1e-5 && took < Duration::from_secs(1);
        notes.push(format!(
            "{name} max rel {:.2e} in {:.0} ms",
            report.max_relative_error(),
            took.as_secs_f64() * 1e3
        ));
    }
    outcome(ok, notes.join(", "))
}

/// Scalar Adam written out directly from the update rule.
struct ScalarAdam {
    theta: f64,
    m: f64,
    v: f64,
    t: i32,
}

impl ScalarAdam {
    fn step(&mut self, g: f64) {
        let (alpha, b1, b2, eps) = (0.001, 0.9, 0.999, 1e-8);
        self.t += 1;
        self.m = b1 * self.m + (1.0 - b1) * g;
        self.v = b2 * self.v + (1.0 - b2) * g * g;
        let m_hat = self.m / (1.0 - f64::powi(b1, self.t));
        let v_hat = self.v / (1.0 - f64::powi(b2, self.t));
        self.theta -= alpha * m_hat / (v_hat.sqrt() + eps);
    }
}

fn optimizer_oracles() -> Outcome {
    let gradients = [2.0, 1.0, -0.5, 3.0, 0.0, -2.0, 1e-3, 10.0, -7.5, 0.25, 2.0];
    let mut oracle = ScalarAdam {
        theta: 0.0,
        m: 0.0,
        v: 0.0,
        t: 0,
    };
    let mut theta = [0.0];
    let mut state = AdamState::new(1);
    let cfg = AdamConfig::default();
    let mut worst: f64 = 0.0;
    for &g in &gradients {
        oracle.step(g);
        adam_step(&mut theta, &[g], &mut state, &cfg).expect("finite gradient");
        worst = worst.max((theta[0] - oracle.theta).abs());
    }
    // First step by hand: m̂ = 2, v̂ = 4, so θ = −0.001 · 2 / (2 + 1e-8).
    let first_ok = {
        let mut t = [0.0];
        adam_step(&mut t, &[2.0], &mut AdamState::new(1), &cfg).unwrap();
        (t[0] - -9.99999995e-4).abs() <= 1e-12
    };

    let mcfg = MomentumConfig {
        learning_rate: 0.2,
        momentum: 0.1,
    };
    let mut p = [0.0];
    let mut ms = MomentumState::new(1);
    momentum_step(&mut p, &[1.0], &mut ms, &mcfg).unwrap();
    let one = p[0];
    momentum_step(&mut p, &[1.0], &mut ms, &mcfg).unwrap();
    let two = p[0];
    let momentum_ok = (one - -0.2).abs() <= 1e-12 && (two - -0.42).abs() <= 1e-12;

    outcome(
        worst <= 1e-12 && first_ok && momentum_ok,
        format!(
            "adam max |diff| {worst:.1e} over {} steps, momentum {one} then {two}",
            gradients.len()
        ),
    )
}

fn initializer_statistics() -> Outcome {
    let draws = |seed| {
        let mut rng = seeded(seed);
        let mut out = Vec::with_capacity(100_000);
        while out.len() < 100_000 {
            let layer = init_layer(InitScheme::XavierGaussian, 100, 80, &mut rng).unwrap();
            out.extend_from_slice(layer.weights.as_slice());
        }
        out.truncate(100_000);
        out
    };
    let w = draws(7);
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let target = 2.0 / 180.0;
    let deterministic = draws(7) == w;
    outcome(
        mean.abs() < 0.002 && ((var - target) / target).abs() < 0.05 && deterministic,
        format!("mean {mean:.5}, variance {var:.6} vs {target:.6}, deterministic {deterministic}"),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = seeded(2024);
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    for _ in 0..1000 {
        let len = rng.random_range(2..200);
        let actual: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..7.0)).collect();
        let predicted: Vec<f64> = actual
            .iter()
            .map(|a| a + rng.random_range(-1.5..1.5))
            .collect();

        let n = len as f64;
        let (mut se, mut ae) = (0.0, 0.0);
        for (a, p) in actual.iter().zip(&predicted) {
            se += (a - p) * (a - p);
            ae += (a - p).abs();
        }
        let ma = actual.iter().sum::<f64>() / n;
        let mp = predicted.iter().sum::<f64>() / n;
        let (mut sap, mut saa, mut spp) = (0.0, 0.0, 0.0);
        for (a, p) in actual.iter().zip(&predicted) {
            sap += (a - ma) * (p - mp);
            saa += (a - ma) * (a - ma);
            spp += (p - mp) * (p - mp);
        }
        let expected = [(se / n).sqrt(), ae / n, sap / (saa.sqrt() * spp.sqrt())];

        let rmse = metrics::rmse(&actual, &predicted).unwrap();
        let mae = metrics::mae(&actual, &predicted).unwrap();
        let cc = metrics::correlation(&actual, &predicted).unwrap();
        for (got, want) in [rmse, mae, cc].iter().zip(expected) {
            worst = worst.max((got - want).abs());
        }
        ordered &= mae <= rmse;
    }
    let constant = matches!(
        metrics::correlation(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]),
        Err(Error::UndefinedCorrelation(_))
    );
    outcome(
        worst <= 1e-12 && ordered && constant,
        format!("max |diff| {worst:.1e}, mae <= rmse on all {ordered}, constant input errors {constant}"),
    )
}

/// Two-point column with exactly the given mean and sample standard deviation,
/// kept inside `[lo, hi]`.
fn two_point_column(n: usize, lo: f64, hi: f64, mean: f64, std: f64) -> Vec<f64> {
    let nf = n as f64;
    let shrink = ((nf - 1.0) / nf).sqrt();
    let mut best: Option<(usize, f64, f64)> = None;
    for k in 1..n {
        let kf = k as f64;
        let low = mean - std * shrink * (kf / (nf - kf)).sqrt();
        let high = mean + std * shrink * ((nf - kf) / kf).sqrt();
        if low >= lo && high <= hi {
            let balance = (k as isize - n as isize / 2).unsigned_abs();
            if best.is_none_or(|(bk, _, _)| balance < (bk as isize - n as isize / 2).unsigned_abs())
            {
                best = Some((k, low, high));
            }
        }
    }
    let (k, low, high) = best.expect("a feasible two-point column exists");
    (0..n).map(|i| if i < k { high } else { low }).collect()
}

fn reference_fixture(path: &Path) {
    let n = 154;
    let columns: Vec<Vec<f64>> = REFERENCE_TRAIN_STATS
        .iter()
        .map(|&(_, lo, hi, mean, std)| two_point_column(n, lo, hi, mean, std))
        .collect();
    let records = (0..n)
        .map(|i| {
            let mut row = [0.0; 8];
            for (c, col) in columns.iter().enumerate() {
                // Rotate so columns are not perfectly aligned.
                row[c] = col[(i + 17 * c) % n];
            }
            ScourRecord::from_values(row)
        })
        .collect();
    let ds = Dataset::new(records, Provenance::File, None).expect("fixture is valid");
    data::save_csv(&ds, path).unwrap();
}

fn summarize_reference(dir: &Path) -> (bool, f64) {
    let path = dir.join("reference_train.csv");
    reference_fixture(&path);
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = [
        "scour",
        "--format",
        "json-lines",
        "summarize",
        "--data",
        path.to_str().unwrap(),
    ];
    let code = scour_cli::run(argv, &mut out, &mut err);
    if code != 0 {
        return (false, f64::INFINITY);
    }
    let mut worst: f64 = 0.0;
    for (line, &(name, _, _, mean, std)) in String::from_utf8(out)
        .unwrap()
        .lines()
        .zip(&REFERENCE_TRAIN_STATS)
    {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["column"], name);
        worst = worst.max((v["mean"].as_f64().unwrap() - mean).abs());
        worst = worst.max((v["std"].as_f64().unwrap() - std).abs());
    }
    (worst <= 0.01, worst)
}

struct EndToEnd {
    outcome: Outcome,
    steps_seed_42: u64,
    epochs_seed_42: usize,
}

fn full_scale_end_to_end(dir: &Path) -> EndToEnd {
    let ds = data::synth_generate(232, 42).unwrap();
    let (tr, te) = data::split(&ds, 154, 42).unwrap();
    let mut wins = 0;
    let mut cc_42 = f64::NAN;
    let mut slowest = Duration::ZERO;
    let mut steps_seed_42 = 0;
    let mut epochs_seed_42 = 0;
    let mut rows = Vec::new();
    for seed in 42..47 {
        let start = Instant::now();
        let (dnn, history) = train::train(&Preset::DnnPaper.config(seed), &tr, None).unwrap();
        slowest = slowest.max(start.elapsed());
        let dnn = train::evaluate(&dnn, &te).unwrap().report;
        let (bpnn, _) = train::train(&Preset::BpnnPaper.config(seed), &tr, None).unwrap();
        let bpnn = train::evaluate(&bpnn, &te).unwrap().report;
        if seed == 42 {
            cc_42 = dnn.cc;
            steps_seed_42 = history.total_steps;
            epochs_seed_42 = history.epochs_run;
        }
        if dnn.rmse < bpnn.rmse {
            wins += 1;
        }
        rows.push(format!(
            "seed {seed}: dnn {:.3}/{:.3} bpnn {:.3}/{:.3}",
            dnn.cc, dnn.rmse, bpnn.cc, bpnn.rmse
        ));
    }
    for r in &rows {
        println!("      {r}  (cc/rmse_m)");
    }
    let (summary_ok, summary_err) = summarize_reference(dir);
    let passed = cc_42 >= 0.95 && wins >= 4 && slowest < Duration::from_secs(300) && summary_ok;
    EndToEnd {
        outcome: outcome(
            passed,
            format!(
                "dnn cc {cc_42:.4} (seed 42), dnn wins {wins}/5, slowest run {:.0} s, summary max |diff| {summary_err:.1e}",
                slowest.as_secs_f64()
            ),
        ),
        steps_seed_42,
        epochs_seed_42,
    }
}

fn determinism(dir: &Path) -> Outcome {
    let data_path = dir.join("data.csv");
    data::save_csv(&data::synth_generate(232, 42).unwrap(), &data_path).unwrap();
    let out_dir = dir.join("det");
    let argv = [
        "scour",
        "train",
        "--data",
        data_path.to_str().unwrap(),
        "--preset",
        "dnn_paper",
        "--seed",
        "42",
        "--epochs",
        "300",
        "--history-every",
        "25",
        "--out-dir",
        out_dir.to_str().unwrap(),
    ];
    let files = ["model.txt", "history.csv", "predictions.csv"];
    let mut runs = Vec::new();
    for _ in 0..2 {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        if scour_cli::run(argv, &mut out, &mut err) != 0 {
            return outcome(false, String::from_utf8_lossy(&err).into_owned());
        }
        let bytes: Vec<Vec<u8>> = files
            .iter()
            .map(|f| fs::read(out_dir.join(f)).unwrap())
            .collect();
        runs.push((out, bytes));
    }
    let same = runs[0] == runs[1];
    outcome(
        same,
        format!("{} identical across two runs: {same}", files.join(", ")),
    )
}

fn step_accounting(steps: u64, epochs: usize) -> Outcome {
    let per_epoch = train::steps_per_epoch(154, BatchSize::Fixed(5));
    outcome(
        per_epoch == 31 && epochs == 15_000 && steps == 465_000,
        format!("{per_epoch} steps per epoch, {epochs} epochs, {steps} updater steps"),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        all &= o.passed;
        println!(
            "{} [{id}] {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report(1, "gradient correctness", gradient_correctness());
    report(2, "optimizer oracle equivalence", optimizer_oracles());
    report(3, "initializer statistics", initializer_statistics());
    report(4, "metric oracle equivalence", metric_oracles());
    let e2e = full_scale_end_to_end(dir.path());
    report(5, "end-to-end on synthetic data", e2e.outcome);
    report(6, "determinism", determinism(dir.path()));
    report(
        7,
        "epoch/step accounting",
        step_accounting(e2e.steps_seed_42, e2e.epochs_seed_42),
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

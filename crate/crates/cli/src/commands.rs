use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use scour_core::data::{self, Dataset};
use scour_core::gradcheck::{gradient_check, GradCheckConfig};
use scour_core::init::{InitScheme, DEFAULT_UNIFORM_HALFWIDTH};
use scour_core::model_io;
use scour_core::nn;
use scour_core::optim::{AdamConfig, UpdaterConfig};
use scour_core::train::{self, Budget, Evaluation, Preset, TrainConfig, TrainHistory};
use scour_core::MetricsReport;
use serde_json::json;

use crate::args::{
    Cli, Command, CompareArgs, Format, GradcheckArgs, GradcheckNet, InitKind, Overrides, SplitArgs,
    SummarizeArgs, SynthArgs, TrainArgs, UpdaterKind,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_file, RunManifest};
use crate::render;

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a, cli.format, out),
        Command::Summarize(a) => cmd_summarize(a, cli.format, out),
        Command::Train(a) => cmd_train(a, cli.format, out).map(|_| ()),
        Command::Compare(a) => cmd_compare(a, cli.format, out).map(|_| ()),
        Command::Gradcheck(a) => cmd_gradcheck(a, cli.format, out),
    }
}

pub fn cmd_synth(args: &SynthArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let mut manifest = RunManifest::start("synth", args.seed);
    let ds = data::synth_generate(args.n, args.seed)?;
    let mut bytes = Vec::new();
    data::write_csv(&ds, &mut bytes)?;
    write_file(&args.out, &bytes)?;

    let manifest_path = args
        .out_manifest
        .clone()
        .unwrap_or_else(|| suffixed(&args.out, ".manifest"));
    manifest.set("n", args.n);
    manifest.output("data", &args.out);
    manifest.finish(&manifest_path)?;

    match format {
        Format::JsonLines => render::json_line(
            out,
            &json!({ "command": "synth", "records": ds.len(), "seed": args.seed, "out": args.out.display().to_string() }),
        )?,
        Format::Human => writeln!(out, "wrote {} records to {}", ds.len(), args.out.display())?,
    }
    Ok(())
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn cmd_summarize(args: &SummarizeArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let ds = load(&args.data)?;
    let blocks = if args.split {
        let (tr, te) = data::split(&ds, args.n_train, args.split_seed)?;
        vec![
            ("Train data", data::summarize(&tr)?),
            ("Test data", data::summarize(&te)?),
        ]
    } else {
        vec![("All data", data::summarize(&ds)?)]
    };
    render::summary(out, format, &blocks)?;
    Ok(())
}

/// Start from the preset and replace whatever the overrides name.
pub fn resolve_config(preset: Preset, seed: u64, o: &Overrides) -> CliResult<TrainConfig> {
    let mut cfg = preset.config(seed);

    if o.hidden.is_some()
        || o.activation.is_some()
        || o.output_activation.is_some()
        || o.dropout.is_some()
    {
        let widths = cfg.widths();
        let hidden = o
            .hidden
            .clone()
            .unwrap_or_else(|| widths[1..widths.len() - 1].to_vec());
        let first = cfg.layer_specs[0];
        let last = *cfg.layer_specs.last().expect("presets have layers");
        let hidden_act = o.activation.unwrap_or(if cfg.layer_specs.len() > 1 {
            first.activation
        } else {
            nn::Activation::Relu
        });
        let mut all = vec![data::FEATURE_COUNT];
        all.extend(hidden);
        all.push(1);
        cfg.layer_specs = nn::stack(
            &all,
            hidden_act,
            o.output_activation.unwrap_or(last.activation),
            o.dropout.unwrap_or(first.dropout_rate),
        )?;
    }

    cfg.init = match (o.init, cfg.init) {
        (Some(InitKind::Xavier), _) => InitScheme::XavierGaussian,
        (Some(InitKind::Uniform), InitScheme::UniformRandom { halfwidth })
        | (None, InitScheme::UniformRandom { halfwidth }) => InitScheme::UniformRandom {
            halfwidth: o.halfwidth.unwrap_or(halfwidth),
        },
        (Some(InitKind::Uniform), InitScheme::XavierGaussian) => InitScheme::UniformRandom {
            halfwidth: o.halfwidth.unwrap_or(DEFAULT_UNIFORM_HALFWIDTH),
        },
        (None, InitScheme::XavierGaussian) => InitScheme::XavierGaussian,
    };
    if o.halfwidth.is_some() && cfg.init == InitScheme::XavierGaussian {
        return Err(CliError::Usage(
            "--halfwidth applies only to --init uniform".into(),
        ));
    }

    let kind = match cfg.updater {
        UpdaterConfig::Adam(_) => UpdaterKind::Adam,
        UpdaterConfig::Momentum(_) => UpdaterKind::Momentum,
    };
    if let Some(wanted) = o.updater {
        if wanted != kind {
            cfg.updater = match wanted {
                UpdaterKind::Adam => UpdaterConfig::Adam(AdamConfig::default()),
                UpdaterKind::Momentum => Preset::BpnnPaper.config(seed).updater,
            };
        }
    }
    match &mut cfg.updater {
        UpdaterConfig::Adam(a) => {
            if o.momentum.is_some() {
                return Err(CliError::Usage(
                    "--momentum applies only to --updater momentum".into(),
                ));
            }
            a.alpha = o.lr.unwrap_or(a.alpha);
            a.beta1 = o.beta1.unwrap_or(a.beta1);
            a.beta2 = o.beta2.unwrap_or(a.beta2);
            a.epsilon = o.eps.unwrap_or(a.epsilon);
        }
        UpdaterConfig::Momentum(m) => {
            if o.beta1.is_some() || o.beta2.is_some() || o.eps.is_some() {
                return Err(CliError::Usage(
                    "--beta1, --beta2 and --eps apply only to --updater adam".into(),
                ));
            }
            m.learning_rate = o.lr.unwrap_or(m.learning_rate);
            m.momentum = o.momentum.unwrap_or(m.momentum);
        }
    }

    if let Some(b) = o.batch_size {
        cfg.batch_size = b;
    }
    if let Some(e) = o.epochs {
        cfg.budget = Budget::Epochs(e);
    }
    if let Some(u) = o.updates {
        cfg.budget = Budget::Updates(u);
    }
    if o.no_shuffle {
        cfg.shuffle_each_epoch = false;
    }
    if let Some(h) = o.history_every {
        cfg.history_every = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load(path: &Path) -> CliResult<Dataset> {
    data::load_csv(path).map_err(|source| CliError::Input {
        path: path.display().to_string(),
        source,
    })
}

fn load_split(args: &SplitArgs) -> CliResult<(Dataset, Dataset)> {
    let ds = load(&args.data)?;
    Ok(data::split(&ds, args.n_train, args.split_seed)?)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.display().to_string(),
        source,
    })
}

pub fn history_csv(history: &TrainHistory) -> String {
    let mut s = String::from("epoch,train_loss,val_rmse_m\n");
    for r in &history.records {
        let val = r.val_rmse.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", r.epoch, r.train_loss, val);
    }
    s
}

pub fn predictions_csv(eval: &Evaluation) -> String {
    let mut s = String::from("index,actual_m,predicted_m\n");
    for p in &eval.predictions {
        let _ = writeln!(s, "{},{},{}", p.index, p.actual, p.predicted);
    }
    s
}

fn set_split(manifest: &mut RunManifest, args: &SplitArgs, train_n: usize, test_n: usize) {
    manifest.set("data", args.data.display());
    manifest.set("split_seed", args.split_seed);
    manifest.set("n_train", train_n);
    manifest.set("n_test", test_n);
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub report: MetricsReport,
    pub history: TrainHistory,
    pub model: PathBuf,
    pub history_path: PathBuf,
    pub predictions: PathBuf,
    pub manifest: PathBuf,
}

pub fn cmd_train(args: &TrainArgs, format: Format, out: &mut dyn Write) -> CliResult<TrainOutcome> {
    let s = &args.split;
    let mut manifest = RunManifest::start("train", s.seed);
    let cfg = resolve_config(args.preset, s.seed, &args.overrides)?;
    let (tr, te) = load_split(s)?;

    let (model, history) = train::train(&cfg, &tr, Some(&te))?;
    let eval = train::evaluate(&model, &te)?;

    let in_dir =
        |given: &Option<PathBuf>, name: &str| given.clone().unwrap_or_else(|| s.out_dir.join(name));
    let model_path = in_dir(&args.out_model, "model.txt");
    let history_path = in_dir(&args.out_history, "history.csv");
    let predictions_path = in_dir(&args.out_predictions, "predictions.csv");
    let manifest_path = in_dir(&args.out_manifest, "manifest.txt");
    for p in [
        &model_path,
        &history_path,
        &predictions_path,
        &manifest_path,
    ] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            ensure_dir(dir)?;
        }
    }
    write_file(&model_path, model_io::to_text(&model).as_bytes())?;
    write_file(&history_path, history_csv(&history).as_bytes())?;
    write_file(&predictions_path, predictions_csv(&eval).as_bytes())?;

    manifest.set("preset", args.preset);
    set_split(&mut manifest, s, tr.len(), te.len());
    manifest.set_train_config("", &cfg);
    manifest.set("epochs_run", history.epochs_run);
    manifest.set("total_steps", history.total_steps);
    manifest.set("cc", eval.report.cc);
    manifest.set("rmse_m", eval.report.rmse);
    manifest.set("mae_m", eval.report.mae);
    manifest.output("model", &model_path);
    manifest.output("history", &history_path);
    manifest.output("predictions", &predictions_path);
    manifest.finish(&manifest_path)?;

    render::metrics(out, format, args.preset.name(), &eval.report)?;
    Ok(TrainOutcome {
        report: eval.report,
        history,
        model: model_path,
        history_path,
        predictions: predictions_path,
        manifest: manifest_path,
    })
}

/// Test metrics for both presets, BPNN first.
pub fn cmd_compare(
    args: &CompareArgs,
    format: Format,
    out: &mut dyn Write,
) -> CliResult<Vec<(Preset, MetricsReport)>> {
    let s = &args.split;
    let mut manifest = RunManifest::start("compare", s.seed);
    let (tr, te) = load_split(s)?;
    let presets = [Preset::BpnnPaper, Preset::DnnPaper];
    let configs: Vec<TrainConfig> = presets
        .iter()
        .map(|p| {
            let mut cfg = p.config(s.seed);
            if let Some(e) = args.epochs {
                cfg.budget = Budget::Epochs(e);
            }
            cfg
        })
        .collect();

    let run = |cfg: &TrainConfig| -> scour_core::Result<Evaluation> {
        let (model, _) = train::train(cfg, &tr, None)?;
        train::evaluate(&model, &te)
    };
    let evals: Vec<scour_core::Result<Evaluation>> = if args.sequential {
        configs.iter().map(run).collect()
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = configs
                .iter()
                .map(|cfg| scope.spawn(move || run(cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect()
        })
    };
    let evals = evals.into_iter().collect::<scour_core::Result<Vec<_>>>()?;

    ensure_dir(&s.out_dir)?;
    set_split(&mut manifest, s, tr.len(), te.len());
    for ((preset, cfg), eval) in presets.iter().zip(&configs).zip(&evals) {
        let path = s.out_dir.join(format!("{}_predictions.csv", preset.name()));
        write_file(&path, predictions_csv(eval).as_bytes())?;
        manifest.set_train_config(&format!("{}.", preset.name()), cfg);
        manifest.set(format!("{}.rmse_m", preset.name()), eval.report.rmse);
        manifest.output(format!("{}_predictions", preset.name()), &path);
    }
    manifest.finish(&s.out_dir.join("compare_manifest.txt"))?;

    let rows: Vec<(&str, MetricsReport)> = presets
        .iter()
        .zip(&evals)
        .map(|(p, e)| (p.label(), e.report))
        .collect();
    render::comparison(out, format, &rows)?;
    Ok(presets
        .iter()
        .copied()
        .zip(evals.into_iter().map(|e| e.report))
        .collect())
}

pub fn cmd_gradcheck(args: &GradcheckArgs, format: Format, out: &mut dyn Write) -> CliResult<()> {
    let nets: Vec<(&str, GradCheckConfig)> = match args.net {
        GradcheckNet::Sigmoid => vec![("sigmoid", GradCheckConfig::sigmoid())],
        GradcheckNet::Relu => vec![("relu", GradCheckConfig::relu())],
        GradcheckNet::Identity => vec![("identity", GradCheckConfig::identity())],
        GradcheckNet::All => vec![
            ("sigmoid", GradCheckConfig::sigmoid()),
            ("relu", GradCheckConfig::relu()),
            ("identity", GradCheckConfig::identity()),
        ],
    };
    let mut worst: Option<f64> = None;
    for (name, mut cfg) in nets {
        cfg.seed = args.seed;
        cfg.corrupt_backward = args.corrupt_backward;
        let report = gradient_check(&cfg)?;
        render::gradcheck(out, format, name, &report)?;
        if !report.passed() {
            let e = report.max_relative_error();
            worst = Some(worst.map_or(e, |w: f64| w.max(e)));
        }
    }
    match worst {
        Some(max_relative_error) => Err(CliError::GradCheckFailed { max_relative_error }),
        None => Ok(()),
    }
}

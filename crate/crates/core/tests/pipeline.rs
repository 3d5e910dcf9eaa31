use scour_core::data::{self, Standardizer};
use scour_core::train::{self, BatchSize, Budget, Preset};
use scour_core::{model_io, Error};

fn short(preset: Preset, seed: u64, epochs: usize) -> scour_core::TrainConfig {
    let mut cfg = preset.config(seed);
    cfg.budget = Budget::Epochs(epochs);
    cfg.history_every = 10;
    cfg
}

#[test]
fn synth_split_train_evaluate() {
    let ds = data::synth_generate(232, 42).unwrap();
    let (tr, te) = data::split(&ds, 154, 42).unwrap();
    assert_eq!((tr.len(), te.len()), (154, 78));

    let (model, history) = train::train(&short(Preset::DnnPaper, 42, 40), &tr, Some(&te)).unwrap();
    assert_eq!(history.epochs_run, 40);
    assert_eq!(history.total_steps, 40 * 31);
    let epochs: Vec<usize> = history.records.iter().map(|r| r.epoch).collect();
    assert_eq!(epochs, [10, 20, 30, 40]);
    assert!(history.records.iter().all(|r| r.val_rmse.is_some()));

    let eval = train::evaluate(&model, &te).unwrap();
    assert_eq!(eval.report.n, 78);
    assert!(eval.report.cc > 0.8, "{:?}", eval.report);
    assert!(eval.report.mae <= eval.report.rmse);
    assert_eq!(eval.predictions.first().unwrap().index, 1);
    assert_eq!(eval.predictions.len(), 78);
}

#[test]
fn training_is_reproducible_and_seed_sensitive() {
    let ds = data::synth_generate(100, 3).unwrap();
    let (tr, _) = data::split(&ds, 70, 3).unwrap();
    let a = train::train(&short(Preset::DnnPaper, 5, 5), &tr, None).unwrap();
    let b = train::train(&short(Preset::DnnPaper, 5, 5), &tr, None).unwrap();
    let c = train::train(&short(Preset::DnnPaper, 6, 5), &tr, None).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.0.params, c.0.params);
}

#[test]
fn saved_model_predicts_identically() {
    let ds = data::synth_generate(80, 9).unwrap();
    let (tr, te) = data::split(&ds, 60, 9).unwrap();
    let (model, _) = train::train(&short(Preset::BpnnPaper, 1, 50), &tr, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    model_io::save(&model, &path).unwrap();
    let loaded = model_io::load(&path).unwrap();
    let before = model.predict(te.records()).unwrap();
    let after = loaded.predict(te.records()).unwrap();
    assert!(before
        .iter()
        .zip(&after)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn update_budget_stops_mid_epoch() {
    let ds = data::synth_generate(40, 1).unwrap();
    let mut cfg = short(Preset::DnnPaper, 1, 1);
    cfg.batch_size = BatchSize::Fixed(7);
    cfg.budget = Budget::Updates(10);
    let (_, history) = train::train(&cfg, &ds, None).unwrap();
    assert_eq!(history.total_steps, 10);
    assert_eq!(history.epochs_run, 2);
}

#[test]
fn full_batch_bpnn_takes_one_step_per_epoch() {
    let ds = data::synth_generate(154, 2).unwrap();
    let (_, history) = train::train(&short(Preset::BpnnPaper, 2, 30), &ds, None).unwrap();
    assert_eq!(history.total_steps, 30);
}

#[test]
fn csv_round_trip_preserves_standardization() {
    let ds = data::synth_generate(50, 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    data::save_csv(&ds, &path).unwrap();
    let back = data::load_csv(&path).unwrap();
    assert_eq!(back.records(), ds.records());
    assert_eq!(Standardizer::fit(&back), Standardizer::fit(&ds));
}

#[test]
fn split_too_large_is_rejected() {
    let ds = data::synth_generate(10, 1).unwrap();
    assert!(matches!(data::split(&ds, 10, 1), Err(Error::Domain(_))));
}

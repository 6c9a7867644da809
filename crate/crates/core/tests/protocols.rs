//! Experiment protocols end to end on generated languages.

use std::fs;

use xlod::classifier::{ModelConfig, TrainingConfig};
use xlod::corpus::synthetic::SyntheticCatalogSpec;
use xlod::corpus::{CorpusCatalog, Language};
use xlod::protocols::{
    load_records, run_experiment, DataSource, ExperimentKind, ExperimentSpec, Harness,
    TrainingSetting, MATRIX_FILE,
};
use xlod::Error;

const A: Language = Language::Synthetic(0);
const B: Language = Language::Synthetic(1);

fn catalog() -> CorpusCatalog {
    SyntheticCatalogSpec::disjoint(2, 0).generate().unwrap()
}

fn quick() -> TrainingConfig {
    TrainingConfig {
        epochs: 10,
        ..TrainingConfig::desk()
    }
}

#[test]
fn failed_grid_job_leaves_partial_manifest() {
    let catalog = catalog();
    let dir = tempfile::tempdir().unwrap();
    let harness = Harness::new(&catalog, ModelConfig::desk(), quick())
        .unwrap()
        .with_output(dir.path(), false, false);
    // An earlier monolingual run occupies one of the grid's record names.
    harness.run_monolingual(A).unwrap();

    let err = harness.run_zero_shot_matrix().unwrap_err();
    let Error::Partial {
        completed,
        total,
        manifest,
        source,
    } = err
    else {
        panic!("expected a partial failure, got {err:?}");
    };
    assert_eq!((completed, total), (2, 3));
    assert!(matches!(*source, Error::Collision { .. }));
    assert!(!dir.path().join(MATRIX_FILE).exists());

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(manifest["failed"][0]["setting"], "mono-SYNTHETIC_A");
    assert_eq!(manifest["failed"][0]["category"], "collision");
    let finished = manifest["completed"].as_array().unwrap();
    assert_eq!(finished.len(), 4);
    for name in finished {
        assert!(dir.path().join("records").join(name.as_str().unwrap()).is_file());
    }
}

#[test]
fn forced_grid_overwrites_and_writes_matrix() {
    let catalog = catalog();
    let dir = tempfile::tempdir().unwrap();
    let harness = Harness::new(&catalog, ModelConfig::desk(), quick())
        .unwrap()
        .with_output(dir.path(), true, false)
        .with_jobs(2);
    harness.run_monolingual(A).unwrap();
    let outcome = harness.run_zero_shot_matrix().unwrap();
    assert!(outcome.matrix.is_complete());
    let csv = fs::read_to_string(dir.path().join(MATRIX_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 4, "{csv}");
    assert_eq!(load_records(dir.path()).unwrap().len(), 6);
}

#[test]
fn augmentation_trains_on_both_languages_and_tests_on_base() {
    let catalog = catalog();
    let harness = Harness::new(&catalog, ModelConfig::desk(), quick()).unwrap();
    let record = harness.run_augmentation(A, B).unwrap();
    let sizes = |l: Language| catalog.get(l).unwrap().train.len();
    assert_eq!(record.train_size, sizes(A) + sizes(B));
    assert_eq!(record.test_language, A);
    assert_eq!(record.helper, Some(B));
    assert_eq!(record.row_label(), "BERT (Synthetic A + Synthetic B)");
}

#[test]
fn few_shot_with_helper_adds_the_whole_helper_split() {
    let catalog = catalog();
    let harness = Harness::new(&catalog, ModelConfig::desk(), quick()).unwrap();
    let records = harness.run_few_shot_curve(A, Some(B), &[0.25, 1.0]).unwrap();
    let helper = catalog.get(B).unwrap().train.len();
    let base = catalog.get(A).unwrap().train.len();
    let sizes: Vec<usize> = records.iter().map(|r| r.train_size).collect();
    assert_eq!(sizes, vec![base / 4 + helper, base + helper]);
    assert!(records.iter().all(|r| r.test_language == A));
    assert!(matches!(
        records[0].setting,
        TrainingSetting::FewShot { fraction, .. } if fraction == 0.25
    ));
}

#[test]
fn baseline_bilstm_runs_through_the_same_protocols() {
    let catalog = catalog();
    let harness = Harness::new(&catalog, ModelConfig::desk_baseline(), quick()).unwrap();
    let record = harness.run_monolingual(A).unwrap();
    assert_eq!(record.row_label(), "Baseline Synthetic A");
    assert!(record.metrics.macro_f1 >= 0.8, "{:?}", record.metrics);
    assert_eq!(record.per_epoch_dev_metrics.len(), 10);
}

#[test]
fn run_experiment_persists_spec_and_refuses_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(
        ExperimentKind::Augmentation,
        DataSource::Synthetic(SyntheticCatalogSpec::disjoint(2, 0)),
        ModelConfig::desk(),
        quick(),
    );
    spec.augment_base = Some(A);
    spec.augment_with = Some(B);
    spec.output_dir = dir.path().to_path_buf();
    spec.save_checkpoints = false;
    spec.fill_defaults();
    spec.validate().unwrap();

    let records = run_experiment(&spec, false, 1).unwrap();
    assert_eq!(records.len(), 1);
    assert!(dir.path().join(format!("spec_{}.json", spec.spec_hash())).is_file());
    let loaded = load_records(dir.path()).unwrap();
    assert_eq!(loaded.len(), 1);
    assert!(loaded[0].same_outcome(&records[0]));

    let err = run_experiment(&spec, false, 1).unwrap_err();
    assert!(matches!(err, Error::Collision { .. }), "{err:?}");
    let again = run_experiment(&spec, true, 1).unwrap();
    assert!(again[0].same_outcome(&records[0]));
}

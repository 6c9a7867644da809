//! Experimental protocols: monolingual, joint, zero-shot grid, few-shot
//! curves and data augmentation, with append-only run records.

mod matrix;
mod record;
mod runner;
mod spec;

pub use matrix::{few_shot_csv, few_shot_points, CellStat, CurvePoint, ResultsMatrix};
pub use record::{
    load_records, persist_run, record_file_name, row_label, write_predictions, RunRecord,
    TrainingSetting, CHECKPOINTS_DIR, PREDICTIONS_DIR, RECORDS_DIR,
};
pub use runner::{run_experiment, Harness, ZeroShotOutcome, FEWSHOT_FILE, MATRIX_FILE};
pub use spec::{default_fractions, DataSource, ExperimentKind, ExperimentSpec};

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::spec::ExperimentKind;
use crate::classifier::{Architecture, EpochMetric, PredictionBatch};
use crate::corpus::{LabeledExample, Language};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

pub const RECORDS_DIR: &str = "records";
pub const PREDICTIONS_DIR: &str = "predictions";
pub const CHECKPOINTS_DIR: &str = "checkpoints";

/// What a model was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "setting")]
pub enum TrainingSetting {
    Monolingual { language: Language },
    JointAll { languages: BTreeSet<Language> },
    Augmented { base: Language, helper: Language },
    FewShot {
        base: Language,
        helper: Option<Language>,
        fraction: f64,
    },
}

impl TrainingSetting {
    pub fn train_languages(&self) -> BTreeSet<Language> {
        match self {
            TrainingSetting::Monolingual { language } => BTreeSet::from([*language]),
            TrainingSetting::JointAll { languages } => languages.clone(),
            TrainingSetting::Augmented { base, helper } => BTreeSet::from([*base, *helper]),
            TrainingSetting::FewShot { base, helper, .. } => {
                std::iter::once(*base).chain(*helper).collect()
            }
        }
    }

    /// Table row label, e.g. `English`, `All`, `(Danish + Arabic)`.
    pub fn label(&self) -> String {
        match self {
            TrainingSetting::Monolingual { language } => language.display_name(),
            TrainingSetting::JointAll { .. } => "All".to_string(),
            TrainingSetting::Augmented { base, helper } => {
                format!("({} + {})", base.display_name(), helper.display_name())
            }
            TrainingSetting::FewShot {
                base,
                helper,
                fraction,
            } => match helper {
                Some(h) => format!("{} {:.2} + {}", base.display_name(), fraction, h.display_name()),
                None => format!("{} {:.2}", base.display_name(), fraction),
            },
        }
    }

    /// File-name fragment, unique per setting.
    pub fn slug(&self) -> String {
        match self {
            TrainingSetting::Monolingual { language } => format!("mono-{}", language.code()),
            TrainingSetting::JointAll { .. } => "all".to_string(),
            TrainingSetting::Augmented { base, helper } => {
                format!("aug-{}+{}", base.code(), helper.code())
            }
            TrainingSetting::FewShot {
                base,
                helper,
                fraction,
            } => {
                let helper = helper.map(|h| format!("+{}", h.code())).unwrap_or_default();
                format!("fewshot-{}{}-f{:.4}", base.code(), helper, fraction)
            }
        }
    }
}

/// Row label including the model family.
pub fn row_label(architecture: Architecture, setting: &TrainingSetting) -> String {
    match architecture {
        Architecture::BiLstm => format!("Baseline {}", setting.label()),
        Architecture::Encoder => format!("BERT {}", setting.label()),
    }
}

/// One evaluation of one trained model on one test language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub spec_hash: String,
    pub kind: ExperimentKind,
    pub setting: TrainingSetting,
    pub architecture: Architecture,
    pub train_languages: BTreeSet<Language>,
    pub test_language: Language,
    pub fraction: Option<f64>,
    pub helper: Option<Language>,
    pub train_size: usize,
    pub data_hash: String,
    pub metrics: MetricsReport,
    pub per_epoch_dev_metrics: Vec<EpochMetric>,
    pub checkpoint_ref: Option<PathBuf>,
    pub predictions_ref: Option<PathBuf>,
    pub wall_time_secs: f64,
    pub seed: u64,
}

impl RunRecord {
    pub fn row_label(&self) -> String {
        row_label(self.architecture, &self.setting)
    }

    pub fn file_name(&self) -> String {
        record_file_name(&self.spec_hash, self.seed, &self.setting, self.test_language)
    }

    /// Equality on everything a rerun must reproduce: wall time and the
    /// locations of written artifacts are excluded.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |r: &Self| Self {
            wall_time_secs: 0.0,
            checkpoint_ref: None,
            predictions_ref: None,
            ..r.clone()
        };
        strip(self) == strip(other)
    }
}

pub fn record_file_name(spec_hash: &str, seed: u64, setting: &TrainingSetting, test: Language) -> String {
    format!("{spec_hash}_{seed}_{}_{}.json", setting.slug(), test.code())
}

/// Writes `record` under `<output_dir>/records/`. Existing records are never
/// replaced unless `force` is set.
pub fn persist_run(record: &RunRecord, output_dir: &Path, force: bool) -> Result<PathBuf> {
    let dir = output_dir.join(RECORDS_DIR);
    fs::create_dir_all(&dir)?;
    let path = dir.join(record.file_name());
    let mut options = OpenOptions::new();
    options.write(true);
    if force {
        options.create(true).truncate(true);
    } else {
        options.create_new(true);
    }
    let mut file = options.open(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::AlreadyExists => Error::Collision { path: path.clone() },
        _ => Error::Io(e),
    })?;
    file.write_all(serde_json::to_string_pretty(record)?.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(path)
}

/// Fails with [`Error::Collision`] if any of `names` already exists.
pub(crate) fn check_free(output_dir: &Path, names: &[String]) -> Result<()> {
    for name in names {
        let path = output_dir.join(RECORDS_DIR).join(name);
        if path.exists() {
            return Err(Error::Collision { path });
        }
    }
    Ok(())
}

/// Every record under `<results_dir>/records/`, ordered by file name.
pub fn load_records(results_dir: &Path) -> Result<Vec<RunRecord>> {
    let dir = results_dir.join(RECORDS_DIR);
    let no_records = || Error::NoRecords {
        dir: results_dir.to_path_buf(),
    };
    let entries = fs::read_dir(&dir).map_err(|_| no_records())?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(no_records());
    }
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config {
                key: p.display().to_string(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// `id<TAB>gold<TAB>probability<TAB>predicted` with a header row.
pub fn write_predictions(path: &Path, examples: &[LabeledExample], preds: &PredictionBatch) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut writer = csv::WriterBuilder::new().delimiter(b'\t').from_path(path)?;
    writer.write_record(["id", "gold", "probability", "predicted"])?;
    for ((ex, p), label) in examples.iter().zip(&preds.probabilities).zip(&preds.labels) {
        writer.write_record([
            ex.id.as_str(),
            ex.label.as_str(),
            &format!("{p:.6}"),
            label.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ConfusionMatrix;

    fn record(seed: u64) -> RunRecord {
        RunRecord {
            spec_hash: "abc".into(),
            kind: ExperimentKind::Monolingual,
            setting: TrainingSetting::Monolingual {
                language: Language::Da,
            },
            architecture: Architecture::Encoder,
            train_languages: BTreeSet::from([Language::Da]),
            test_language: Language::Da,
            fraction: None,
            helper: None,
            train_size: 10,
            data_hash: "h".into(),
            metrics: MetricsReport::from_confusion(ConfusionMatrix::new(1, 1, 1, 1)),
            per_epoch_dev_metrics: vec![],
            checkpoint_ref: None,
            predictions_ref: None,
            wall_time_secs: 1.5,
            seed,
        }
    }

    #[test]
    fn persist_refuses_overwrite_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let r = record(1);
        let path = persist_run(&r, dir.path(), false).unwrap();
        assert!(path.ends_with("abc_1_mono-DA_DA.json"));
        assert!(matches!(
            persist_run(&r, dir.path(), false),
            Err(Error::Collision { .. })
        ));
        persist_run(&r, dir.path(), true).unwrap();
        persist_run(&record(2), dir.path(), false).unwrap();
        let loaded = load_records(dir.path()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0], r);
    }

    #[test]
    fn empty_dir_has_no_records() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_records(dir.path()), Err(Error::NoRecords { .. })));
    }

    #[test]
    fn outcome_ignores_wall_time() {
        let a = record(1);
        let mut b = a.clone();
        b.wall_time_secs = 99.0;
        b.checkpoint_ref = Some("x".into());
        assert!(a.same_outcome(&b));
        b.train_size = 11;
        assert!(!a.same_outcome(&b));
    }

    #[test]
    fn slugs_are_distinct() {
        let settings = [
            TrainingSetting::Monolingual { language: Language::En },
            TrainingSetting::JointAll {
                languages: BTreeSet::from([Language::En, Language::Da]),
            },
            TrainingSetting::Augmented { base: Language::Da, helper: Language::En },
            TrainingSetting::FewShot { base: Language::Da, helper: None, fraction: 0.05 },
            TrainingSetting::FewShot { base: Language::Da, helper: Some(Language::En), fraction: 0.05 },
            TrainingSetting::FewShot { base: Language::Da, helper: None, fraction: 0.1 },
        ];
        let slugs: BTreeSet<String> = settings.iter().map(|s| s.slug()).collect();
        assert_eq!(slugs.len(), settings.len());
        assert_eq!(settings[2].label(), "(Danish + English)");
    }
}

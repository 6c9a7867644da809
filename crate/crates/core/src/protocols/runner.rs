use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::matrix::{few_shot_csv, few_shot_points, ResultsMatrix};
use super::record::{
    check_free, persist_run, record_file_name, write_predictions, RunRecord, TrainingSetting,
    CHECKPOINTS_DIR, PREDICTIONS_DIR,
};
use super::spec::{ExperimentKind, ExperimentSpec};
use crate::classifier::{
    build_model, fine_tune, predict_proba, Architecture, Checkpoint, ModelConfig, TrainingConfig,
};
use crate::corpus::{
    concatenate_corpora, slice_fraction, CorpusCatalog, LabeledExample, Language, Split,
};
use crate::error::{Error, Result};
use crate::metrics::macro_f1;
use crate::tokenizer::Vocabulary;

pub const MATRIX_FILE: &str = "matrix.csv";
pub const FEWSHOT_FILE: &str = "fewshot.csv";

#[derive(Debug, Clone)]
struct Sink {
    dir: PathBuf,
    force: bool,
    save_checkpoints: bool,
}

/// Trains and evaluates models over a corpus catalog under the experimental
/// protocols. Records are written to an output directory when one is set.
#[derive(Debug, Clone)]
pub struct Harness<'a> {
    catalog: &'a CorpusCatalog,
    languages: BTreeSet<Language>,
    model: ModelConfig,
    training: TrainingConfig,
    shared_vocab: Vocabulary,
    spec_hash: String,
    kind: ExperimentKind,
    sink: Option<Sink>,
    jobs: usize,
}

/// The zero-shot grid plus the records behind it.
#[derive(Debug, Clone)]
pub struct ZeroShotOutcome {
    pub matrix: ResultsMatrix,
    pub records: Vec<RunRecord>,
}

#[derive(Serialize)]
struct PartialManifest<'a> {
    spec_hash: &'a str,
    seed: u64,
    total: usize,
    completed: Vec<String>,
    failed: Vec<FailedRun>,
}

#[derive(Serialize)]
struct FailedRun {
    setting: String,
    category: &'static str,
    error: String,
}

impl<'a> Harness<'a> {
    /// A harness over every catalog language. The shared desk vocabulary is
    /// built from the union of all training splits.
    pub fn new(catalog: &'a CorpusCatalog, model: ModelConfig, training: TrainingConfig) -> Result<Self> {
        model.validate()?;
        training.validate()?;
        if catalog.is_empty() {
            return Err(Error::arg("catalog is empty"));
        }
        let shared_vocab = Vocabulary::build(
            catalog.iter().flat_map(|c| c.split(Split::Train)),
            model.vocab_min_count,
            model.lowercase,
        )?;
        let spec_hash = config_hash(&model, &training);
        Ok(Self {
            catalog,
            languages: catalog.languages().into_iter().collect(),
            model,
            training,
            shared_vocab,
            spec_hash,
            kind: ExperimentKind::Monolingual,
            sink: None,
            jobs: 1,
        })
    }

    /// A harness configured from a validated experiment spec, writing under
    /// its output directory.
    pub fn from_spec(spec: &ExperimentSpec, catalog: &'a CorpusCatalog, force: bool) -> Result<Self> {
        spec.validate()?;
        let mut h = Self::new(catalog, spec.model.clone(), spec.training.clone())?;
        h.languages = spec.train_languages.clone();
        h.spec_hash = spec.spec_hash();
        h.kind = spec.kind;
        h.sink = Some(Sink {
            dir: spec.output_dir.clone(),
            force,
            save_checkpoints: spec.save_checkpoints,
        });
        Ok(h)
    }

    /// Persists records (and optionally checkpoints) under `dir`.
    pub fn with_output(mut self, dir: impl Into<PathBuf>, force: bool, save_checkpoints: bool) -> Self {
        self.sink = Some(Sink {
            dir: dir.into(),
            force,
            save_checkpoints,
        });
        self
    }

    /// Independent trainings run on up to `jobs` threads.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_languages(mut self, languages: impl IntoIterator<Item = Language>) -> Result<Self> {
        let languages: BTreeSet<Language> = languages.into_iter().collect();
        for &l in &languages {
            self.catalog.get(l)?;
        }
        self.languages = languages;
        Ok(self)
    }

    pub fn spec_hash(&self) -> &str {
        &self.spec_hash
    }

    pub fn seed(&self) -> u64 {
        self.training.seed
    }

    pub fn shared_vocabulary(&self) -> &Vocabulary {
        &self.shared_vocab
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.sink.as_ref().map(|s| s.dir.as_path())
    }

    fn split(&self, language: Language, split: Split) -> Result<&'a [LabeledExample]> {
        Ok(self.catalog.get(language)?.split(split))
    }

    /// Trains one model and evaluates it on each of `tests`.
    pub fn train_and_evaluate(
        &self,
        setting: &TrainingSetting,
        train: &[LabeledExample],
        dev: &[LabeledExample],
        tests: &[Language],
    ) -> Result<(Checkpoint, Vec<RunRecord>)> {
        let names: Vec<String> = tests
            .iter()
            .map(|&t| record_file_name(&self.spec_hash, self.seed(), setting, t))
            .collect();
        if let Some(sink) = self.sink.as_ref().filter(|s| !s.force) {
            check_free(&sink.dir, &names)?;
        }

        let start = Instant::now();
        let vocab = match self.model.architecture {
            Architecture::Encoder => self.shared_vocab.clone(),
            Architecture::BiLstm => {
                Vocabulary::build(train, self.model.vocab_min_count, self.model.lowercase)?
            }
        };
        let handle = build_model(&self.model, &vocab)?;
        let dev = (!dev.is_empty()).then_some(dev);
        let checkpoint = fine_tune(handle, train, dev, &self.training)?;
        log::info!("trained {} on {} examples", setting.slug(), train.len());

        let stem = format!("{}_{}_{}", self.spec_hash, self.seed(), setting.slug());
        let checkpoint_ref = match &self.sink {
            Some(sink) if sink.save_checkpoints => {
                let dir = sink.dir.join(CHECKPOINTS_DIR).join(&stem);
                checkpoint.save(&dir)?;
                Some(dir)
            }
            _ => None,
        };

        let mut records = Vec::with_capacity(tests.len());
        for &test_language in tests {
            let test = self.split(test_language, Split::Test)?;
            let preds = predict_proba(&checkpoint, test)?;
            let gold: Vec<_> = test.iter().map(|e| e.label).collect();
            let metrics = macro_f1(&gold, &preds.labels)?;
            let predictions_ref = match &self.sink {
                Some(sink) => {
                    let path = sink
                        .dir
                        .join(PREDICTIONS_DIR)
                        .join(format!("{stem}_{}.tsv", test_language.code()));
                    write_predictions(&path, test, &preds)?;
                    Some(path)
                }
                None => None,
            };
            let (fraction, helper) = match setting {
                TrainingSetting::FewShot { fraction, helper, .. } => (Some(*fraction), *helper),
                TrainingSetting::Augmented { helper, .. } => (None, Some(*helper)),
                _ => (None, None),
            };
            let record = RunRecord {
                spec_hash: self.spec_hash.clone(),
                kind: self.kind,
                setting: setting.clone(),
                architecture: self.model.architecture,
                train_languages: setting.train_languages(),
                test_language,
                fraction,
                helper,
                train_size: train.len(),
                data_hash: checkpoint.data_hash.clone(),
                metrics,
                per_epoch_dev_metrics: checkpoint.per_epoch_dev_metrics.clone(),
                checkpoint_ref: checkpoint_ref.clone(),
                predictions_ref,
                wall_time_secs: start.elapsed().as_secs_f64(),
                seed: self.seed(),
            };
            if let Some(sink) = &self.sink {
                persist_run(&record, &sink.dir, sink.force)?;
            }
            records.push(record);
        }
        Ok((checkpoint, records))
    }

    /// Trains on `language` and tests on the same language.
    pub fn run_monolingual(&self, language: Language) -> Result<RunRecord> {
        Ok(self.monolingual(language, &[language])?.1.remove(0))
    }

    /// Like [`Harness::run_monolingual`] but also returns the checkpoint.
    pub fn train_monolingual(&self, language: Language) -> Result<(Checkpoint, RunRecord)> {
        let (c, mut r) = self.monolingual(language, &[language])?;
        Ok((c, r.remove(0)))
    }

    fn monolingual(&self, language: Language, tests: &[Language]) -> Result<(Checkpoint, Vec<RunRecord>)> {
        self.train_and_evaluate(
            &TrainingSetting::Monolingual { language },
            self.split(language, Split::Train)?,
            self.split(language, Split::Dev)?,
            tests,
        )
    }

    fn joint(&self, tests: &[Language]) -> Result<(Checkpoint, Vec<RunRecord>)> {
        let train = self.concat(Split::Train, &self.languages)?;
        let dev = self.concat(Split::Dev, &self.languages)?;
        self.train_and_evaluate(
            &TrainingSetting::JointAll {
                languages: self.languages.clone(),
            },
            &train,
            &dev,
            tests,
        )
    }

    fn concat(&self, split: Split, languages: &BTreeSet<Language>) -> Result<Vec<LabeledExample>> {
        let parts = languages
            .iter()
            .map(|&l| Ok((l, self.split(l, split)?)))
            .collect::<Result<Vec<_>>>()?;
        if parts.iter().all(|(_, s)| s.is_empty()) {
            return Ok(Vec::new());
        }
        concatenate_corpora(&parts, self.seed())
    }

    /// One model on the concatenated training splits of every harness
    /// language, tested on each of them.
    pub fn run_joint_all(&self) -> Result<Vec<RunRecord>> {
        let tests: Vec<Language> = self.languages.iter().copied().collect();
        Ok(self.joint(&tests)?.1)
    }

    /// Trains one model per language plus the joint model and tests each on
    /// every language. A failing training leaves the finished records on disk
    /// and a partial-results manifest beside them.
    pub fn run_zero_shot_matrix(&self) -> Result<ZeroShotOutcome> {
        let langs: Vec<Language> = self.languages.iter().copied().collect();
        if langs.len() < 2 {
            return Err(Error::arg("the zero-shot grid needs at least two languages"));
        }
        let mut jobs: Vec<Option<Language>> = langs.iter().copied().map(Some).collect();
        jobs.push(None);
        let run = |job: &Option<Language>| match job {
            Some(l) => self.monolingual(*l, &langs).map(|r| r.1),
            None => self.joint(&langs).map(|r| r.1),
        };
        let outcomes: Vec<Result<Vec<RunRecord>>> = self.parallel(&jobs, run)?;

        let total = outcomes.len();
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for (job, outcome) in jobs.iter().zip(outcomes) {
            match outcome {
                Ok(r) => records.extend(r),
                Err(e) => {
                    let setting = match job {
                        Some(l) => TrainingSetting::Monolingual { language: *l },
                        None => TrainingSetting::JointAll {
                            languages: self.languages.clone(),
                        },
                    };
                    failures.push((setting.slug(), e));
                }
            }
        }
        if !failures.is_empty() {
            return Err(self.partial(total, &records, failures));
        }
        let matrix = ResultsMatrix::from_records(&records);
        if let Some(sink) = &self.sink {
            fs::write(sink.dir.join(MATRIX_FILE), matrix.to_csv()?)?;
        }
        Ok(ZeroShotOutcome { matrix, records })
    }

    fn parallel<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        if self.jobs <= 1 {
            return Ok(items.iter().map(f).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::arg(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }

    fn partial(&self, total: usize, records: &[RunRecord], failures: Vec<(String, Error)>) -> Error {
        let completed_runs = total - failures.len();
        let Some(sink) = &self.sink else {
            return failures.into_iter().next().expect("at least one failure").1;
        };
        let manifest = PartialManifest {
            spec_hash: &self.spec_hash,
            seed: self.seed(),
            total,
            completed: records.iter().map(RunRecord::file_name).collect(),
            failed: failures
                .iter()
                .map(|(setting, e)| FailedRun {
                    setting: setting.clone(),
                    category: e.category(),
                    error: e.to_string(),
                })
                .collect(),
        };
        let path = sink
            .dir
            .join(format!("partial_{}_{}.json", self.spec_hash, self.seed()));
        let written = serde_json::to_string_pretty(&manifest)
            .map_err(Error::from)
            .and_then(|text| Ok(fs::write(&path, text)?));
        let source = failures.into_iter().next().expect("at least one failure").1;
        match written {
            Ok(()) => Error::Partial {
                completed: completed_runs,
                total,
                manifest: path,
                source: Box::new(source),
            },
            Err(_) => source,
        }
    }

    /// Trains on growing stratified slices of `base`'s training split,
    /// optionally concatenated with all of `helper`'s, testing on `base`.
    pub fn run_few_shot_curve(
        &self,
        base: Language,
        helper: Option<Language>,
        fractions: &[f64],
    ) -> Result<Vec<RunRecord>> {
        if fractions.is_empty() {
            return Err(Error::arg("no fractions given"));
        }
        if helper == Some(base) {
            return Err(Error::arg("helper must differ from base"));
        }
        let base_train = self.split(base, Split::Train)?;
        let dev = self.split(base, Split::Dev)?;
        let helper_train = helper.map(|h| self.split(h, Split::Train)).transpose()?;

        let run = |&fraction: &f64| -> Result<Vec<RunRecord>> {
            let sliced = slice_fraction(base_train, fraction, self.seed())?;
            let train = match (helper, helper_train) {
                (Some(h), Some(ht)) => concatenate_corpora(&[(base, &sliced), (h, ht)], self.seed())?,
                _ => sliced,
            };
            let setting = TrainingSetting::FewShot {
                base,
                helper,
                fraction,
            };
            Ok(self.train_and_evaluate(&setting, &train, dev, &[base])?.1)
        };
        let outcomes = self.parallel(fractions, run)?;
        let mut records = Vec::new();
        for o in outcomes {
            records.extend(o?);
        }
        if let Some(sink) = &self.sink {
            fs::write(sink.dir.join(FEWSHOT_FILE), few_shot_csv(&few_shot_points(&records))?)?;
        }
        Ok(records)
    }

    /// Trains on `base` plus `helper` and tests on `base`.
    pub fn run_augmentation(&self, base: Language, helper: Language) -> Result<RunRecord> {
        if helper == base {
            return Err(Error::arg("helper must differ from base"));
        }
        let pair = BTreeSet::from([base, helper]);
        let train = self.concat(Split::Train, &pair)?;
        let dev = self.concat(Split::Dev, &pair)?;
        let setting = TrainingSetting::Augmented { base, helper };
        Ok(self.train_and_evaluate(&setting, &train, &dev, &[base])?.1.remove(0))
    }
}

fn config_hash(model: &ModelConfig, training: &TrainingConfig) -> String {
    let mut value = serde_json::json!({ "model": model, "training": training });
    value["training"].as_object_mut().map(|t| t.remove("seed"));
    value["model"].as_object_mut().map(|m| m.remove("init_seed"));
    let digest = Sha256::digest(value.to_string().as_bytes());
    hex::encode(&digest[..6])
}

/// Loads the experiment's data and runs it end to end, writing records under the
/// experiment's output directory.
pub fn run_experiment(spec: &ExperimentSpec, force: bool, jobs: usize) -> Result<Vec<RunRecord>> {
    let mut spec = spec.clone();
    spec.fill_defaults();
    spec.validate()?;
    let catalog = spec.data.load()?;
    let harness = Harness::from_spec(&spec, &catalog, force)?.with_jobs(jobs);
    fs::create_dir_all(&spec.output_dir)?;
    fs::write(
        spec.output_dir.join(format!("spec_{}.json", spec.spec_hash())),
        serde_json::to_string_pretty(&spec)?,
    )?;
    match spec.kind {
        ExperimentKind::Monolingual => {
            let langs: Vec<Language> = spec.train_languages.iter().copied().collect();
            let results = harness.parallel(&langs, |&l| harness.run_monolingual(l))?;
            results.into_iter().collect()
        }
        ExperimentKind::JointAll => harness.run_joint_all(),
        ExperimentKind::ZeroShotMatrix => Ok(harness.run_zero_shot_matrix()?.records),
        ExperimentKind::FewShotCurve => harness.run_few_shot_curve(
            spec.augment_base.expect("validated"),
            spec.augment_with,
            spec.fractions.as_deref().expect("validated"),
        ),
        ExperimentKind::Augmentation => Ok(vec![harness.run_augmentation(
            spec.augment_base.expect("validated"),
            spec.augment_with.expect("validated"),
        )?]),
    }
}

//! Repeated k-fold cross-validation of preprocessing + augmentation +
//! training procedures.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{FoldScore, Summary};
use crate::augment::{augment, AugmentConfig};
use crate::data::{split_folds, Dataset, SpectralMatrix, TargetMatrix, N_TARGETS, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::nn::{build_fishcnn_with, ModelSpec, FISHCNN_KERNEL};
use crate::preprocess::{fit_global_scaler, FittedScaler, Pipeline, PreprocStep};
use crate::rng;
use crate::train::{inner_split_indices, predict, train_model, TargetScaler, TrainConfig};

/// Version tag written into every results document.
pub const RESULTS_SCHEMA: u32 = 1;

/// One operation in a fold's data preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    /// A row-wise preprocessing step, applied to every partition.
    Row(PreprocStep),
    /// Augmentation of the training partition only.
    Augment,
    /// Global min–max scaling fitted on the training partition as it stands
    /// at this point.
    GlobalScale,
}

/// An ordered list of stages, written `SNV+DA+GS`. The order is literal:
/// `DA+SNV` augments the raw spectra and then normalises the variants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Procedure {
    stages: Vec<Stage>,
}

impl Procedure {
    pub fn new(stages: Vec<Stage>) -> Result<Self> {
        let count = |s: Stage| stages.iter().filter(|&&x| x == s).count();
        if count(Stage::Augment) > 1 || count(Stage::GlobalScale) > 1 {
            return Err(Error::InvalidArgument(
                "a procedure may augment and globally scale at most once each".into(),
            ));
        }
        Ok(Self { stages })
    }

    /// The standard realisation of a design-matrix pipeline: row steps,
    /// then augmentation, then global scaling if the pipeline has it.
    pub fn from_pipeline(pipeline: &Pipeline) -> Self {
        let mut stages: Vec<Stage> = pipeline.row_steps().map(|&s| Stage::Row(s)).collect();
        stages.push(Stage::Augment);
        if pipeline.has_global_scale() {
            stages.push(Stage::GlobalScale);
        }
        Self { stages }
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn augments(&self) -> bool {
        self.stages.contains(&Stage::Augment)
    }
}

impl fmt::Display for Procedure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.stages.is_empty() {
            return f.write_str("raw");
        }
        let parts: Vec<String> = self
            .stages
            .iter()
            .map(|s| match s {
                Stage::Row(step) => step.to_string(),
                Stage::Augment => "DA".to_string(),
                Stage::GlobalScale => "GS".to_string(),
            })
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Procedure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.eq_ignore_ascii_case("raw") {
            return Procedure::new(Vec::new());
        }
        let stages = s
            .split('+')
            .map(|t| match t.trim() {
                "DA" => Ok(Stage::Augment),
                "GS" => Ok(Stage::GlobalScale),
                other => other.parse().map(Stage::Row),
            })
            .collect::<Result<Vec<_>>>()?;
        Procedure::new(stages)
    }
}

impl From<Procedure> for String {
    fn from(p: Procedure) -> Self {
        p.to_string()
    }
}

impl TryFrom<String> for Procedure {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Which procedure produces the prediction for each target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvPlan {
    pub procedures: [Procedure; N_TARGETS],
    /// Design-matrix ids, when the procedures came from the design matrix.
    pub pipeline_ids: [Option<u32>; N_TARGETS],
}

impl CvPlan {
    pub fn uniform(procedure: Procedure) -> Self {
        Self {
            procedures: std::array::from_fn(|_| procedure.clone()),
            pipeline_ids: [None; N_TARGETS],
        }
    }

    pub fn from_pipeline(pipeline: &Pipeline) -> Self {
        Self {
            procedures: std::array::from_fn(|_| Procedure::from_pipeline(pipeline)),
            pipeline_ids: [pipeline.id; N_TARGETS],
        }
    }

    /// Replaces the procedure used for one target.
    pub fn with_override(mut self, target: usize, pipeline: &Pipeline) -> Self {
        self.procedures[target] = Procedure::from_pipeline(pipeline);
        self.pipeline_ids[target] = pipeline.id;
        self
    }

    /// Distinct procedures in first-use order with the targets they serve.
    fn groups(&self) -> Vec<(Procedure, Vec<usize>)> {
        let mut groups: Vec<(Procedure, Vec<usize>)> = Vec::new();
        for (j, p) in self.procedures.iter().enumerate() {
            match groups.iter_mut().find(|(q, _)| q == p) {
                Some((_, targets)) => targets.push(j),
                None => groups.push((p.clone(), vec![j])),
            }
        }
        groups
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelChoice {
    /// The default two-conv regressor with the given kernel width.
    FishCnn { kernel: usize },
    /// An arbitrary architecture; its `input_len` must match the data.
    Custom { spec: ModelSpec },
}

impl Default for ModelChoice {
    fn default() -> Self {
        ModelChoice::FishCnn {
            kernel: FISHCNN_KERNEL,
        }
    }
}

impl ModelChoice {
    pub fn build(&self, input_len: usize, dropout: f64) -> Result<ModelSpec> {
        match self {
            ModelChoice::FishCnn { kernel } => build_fishcnn_with(input_len, *kernel, dropout),
            ModelChoice::Custom { spec } => {
                if spec.input_len != input_len {
                    return Err(Error::Shape(format!(
                        "model expects {} points but the preprocessed spectra have {input_len}",
                        spec.input_len
                    )));
                }
                spec.validate()?;
                Ok(spec.clone())
            }
        }
    }
}

/// Everything besides the data and the procedures that determines a CV
/// experiment. The `seed` fields inside `augment` and `train` are ignored:
/// every (run, fold) derives its own seeds from `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub k: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub augment: AugmentConfig,
    pub train: TrainConfig,
    pub model: ModelChoice,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            k: 6,
            runs: 10,
            base_seed: 0,
            augment: AugmentConfig::default(),
            train: TrainConfig::default(),
            model: ModelChoice::default(),
        }
    }
}

impl CvSettings {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be ≥ 2, got {}", self.k)));
        }
        if self.runs == 0 {
            return Err(Error::InvalidArgument("runs must be ≥ 1".into()));
        }
        self.augment.validate()?;
        self.train.validate()
    }
}

/// Seeds of one (run, fold) work item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldSeeds {
    pub inner: u64,
    pub augment: u64,
    pub train: u64,
}

impl FoldSeeds {
    pub fn derive(base_seed: u64, run: usize, fold: usize) -> Self {
        let idx = [run as u64, fold as u64];
        Self {
            inner: rng::derive_seed(base_seed, "inner", &idx),
            augment: rng::derive_seed(base_seed, "augment", &idx),
            train: rng::derive_seed(base_seed, "train", &idx),
        }
    }
}

pub fn fold_split_seed(base_seed: u64, run: usize) -> u64 {
    rng::derive_seed(base_seed, "folds", &[run as u64])
}

/// Model-ready partitions of one fold. Only `train_*` rows are augmented;
/// validation rows are inner-split originals, test rows the held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedFold {
    pub train_x: SpectralMatrix,
    pub train_y: Vec<f64>,
    pub val_x: SpectralMatrix,
    pub val_y: Vec<f64>,
    pub test_x: SpectralMatrix,
    pub test_y: TargetMatrix,
    pub target_scaler: TargetScaler,
    pub global_scaler: Option<FittedScaler>,
}

/// Builds the partitions for one fold. Every fitted quantity (target
/// scaler, global scaler, augmentation σ, inner split) depends only on
/// `train_idx` rows.
pub fn prepare_fold(
    data: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    procedure: &Procedure,
    settings: &CvSettings,
    seeds: FoldSeeds,
) -> Result<PreparedFold> {
    let originals = data.select(train_idx);
    let test = data.select(test_idx);
    let (inner_tr, inner_val) = inner_split_indices(originals.len(), settings.train.val_fraction, seeds.inner)?;
    let tr = originals.select(&inner_tr);
    let val = originals.select(&inner_val);
    let target_scaler = TargetScaler::fit(&tr.y)?;

    let (mut tx, mut ty) = (tr.x, tr.y);
    let mut vx = val.x;
    let mut sx = test.x;
    let mut global_scaler = None;
    for stage in procedure.stages() {
        match stage {
            Stage::Row(step) => {
                tx = step.apply_rows(&tx)?;
                vx = step.apply_rows(&vx)?;
                sx = step.apply_rows(&sx)?;
            }
            Stage::Augment => {
                let cfg = AugmentConfig {
                    seed: seeds.augment,
                    ..settings.augment
                };
                (tx, ty) = augment(&tx, &ty, &cfg)?;
            }
            Stage::GlobalScale => {
                let s = fit_global_scaler(&tx)?;
                tx = s.apply(&tx)?;
                vx = s.apply(&vx)?;
                sx = s.apply(&sx)?;
                global_scaler = Some(s);
            }
        }
    }
    Ok(PreparedFold {
        train_y: target_scaler.transform(&ty),
        train_x: tx,
        val_y: target_scaler.transform(&val.y),
        val_x: vx,
        test_x: sx,
        test_y: test.y,
        target_scaler,
        global_scaler,
    })
}

/// Training bookkeeping for one model of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTraining {
    pub run: usize,
    pub fold: usize,
    pub procedure: String,
    pub train_rows: usize,
    pub epochs: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Fixed description of the experiment behind a [`CvResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFingerprint {
    pub targets: [String; N_TARGETS],
    pub procedures: [Procedure; N_TARGETS],
    pub pipeline_ids: [Option<u32>; N_TARGETS],
    pub settings: CvSettings,
    /// Unit of the samples fed to the Mann–Whitney comparisons.
    pub sample_unit: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub r2: [Summary; N_TARGETS],
    pub rmse: [Summary; N_TARGETS],
    pub r2_overall: Summary,
    pub rmse_overall: Summary,
}

impl CvSummary {
    pub fn of(scores: &[FoldScore]) -> Self {
        let col = |f: &dyn Fn(&FoldScore) -> f64| Summary::of(&scores.iter().map(f).collect::<Vec<_>>());
        Self {
            r2: std::array::from_fn(|j| col(&|s| s.r2[j])),
            rmse: std::array::from_fn(|j| col(&|s| s.rmse[j])),
            r2_overall: col(&|s| s.r2_overall),
            rmse_overall: col(&|s| s.rmse_overall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub schema: u32,
    pub fingerprint: CvFingerprint,
    /// Ordered by run, then fold.
    pub scores: Vec<FoldScore>,
    pub summary: CvSummary,
    pub training: Vec<FoldTraining>,
}

impl CvResult {
    pub fn overall_r2(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.r2_overall).collect()
    }

    pub fn target_r2(&self, j: usize) -> Vec<f64> {
        self.scores.iter().map(|s| s.r2[j]).collect()
    }
}

struct FoldOutcome {
    score: FoldScore,
    training: Vec<FoldTraining>,
}

fn run_fold(
    data: &Dataset,
    groups: &[(Procedure, Vec<usize>)],
    settings: &CvSettings,
    run: usize,
    fold: usize,
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<FoldOutcome> {
    let seeds = FoldSeeds::derive(settings.base_seed, run, fold);
    let mut pred = vec![[0.0; N_TARGETS]; test_idx.len()];
    let mut training = Vec::with_capacity(groups.len());
    for (procedure, targets) in groups {
        let prepared = prepare_fold(data, train_idx, test_idx, procedure, settings, seeds)?;
        let spec = settings.model.build(prepared.train_x.n_features(), settings.train.dropout)?;
        let cfg = TrainConfig {
            seed: seeds.train,
            ..settings.train
        };
        let (state, report) = train_model(
            &spec,
            &prepared.train_x,
            &prepared.train_y,
            &prepared.val_x,
            &prepared.val_y,
            &cfg,
        )?;
        let out = predict(&state, &spec, &prepared.test_x, &prepared.target_scaler)?;
        for (row, p) in pred.iter_mut().zip(out.rows()) {
            for &j in targets {
                row[j] = p[j];
            }
        }
        training.push(FoldTraining {
            run,
            fold,
            procedure: procedure.to_string(),
            train_rows: prepared.train_x.n_samples(),
            epochs: report.epochs,
            best_epoch: report.best_epoch,
            stopped_early: report.stopped_early,
        });
    }
    let truth = data.y.select(test_idx);
    let score = FoldScore::compute(run, fold, &truth, &TargetMatrix::new(pred)?)?;
    Ok(FoldOutcome { score, training })
}

/// Runs `settings.runs` repetitions of `settings.k`-fold CV. Work items
/// execute on the current rayon pool; results are gathered in (run, fold)
/// order so the output does not depend on the number of threads.
pub fn run_cv(data: &Dataset, plan: &CvPlan, settings: &CvSettings) -> Result<CvResult> {
    settings.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let splits = (0..settings.runs)
        .map(|r| split_folds(data.len(), settings.k, fold_split_seed(settings.base_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let groups = plan.groups();
    let items: Vec<(usize, usize)> = (0..settings.runs)
        .flat_map(|r| (0..settings.k).map(move |f| (r, f)))
        .collect();
    let outcomes: Vec<Result<FoldOutcome>> = items
        .par_iter()
        .with_max_len(1)
        .map(|&(r, f)| {
            let split = &splits[r];
            run_fold(data, &groups, settings, r, f, &split.train_indices(f), &split.test_indices(f)).map_err(
                |e| Error::Fold {
                    run: r,
                    fold: f,
                    source: Box::new(e),
                },
            )
        })
        .collect();

    let mut scores = Vec::with_capacity(items.len());
    let mut training = Vec::new();
    for outcome in outcomes {
        let o = outcome?;
        scores.push(o.score);
        training.extend(o.training);
    }
    Ok(CvResult {
        schema: RESULTS_SCHEMA,
        fingerprint: CvFingerprint {
            targets: TARGET_NAMES.map(String::from),
            procedures: plan.procedures.clone(),
            pipeline_ids: plan.pipeline_ids,
            settings: settings.clone(),
            sample_unit: "fold".into(),
        },
        summary: CvSummary::of(&scores),
        scores,
        training,
    })
}

//! Scoring, statistics and experiment drivers.

mod ablation;
mod cv;
mod grid;
mod metrics;
mod report;
mod stats;

pub use ablation::{
    ablate_factor, ablate_kernel, ablate_order, AblationArm, AblationKind, AblationTable, ALPHA, DEFAULT_FACTORS,
    DEFAULT_KERNELS, ORDER_ARMS, REFERENCE_FACTOR, REFERENCE_KERNEL,
};
pub use cv::{
    fold_split_seed, prepare_fold, run_cv, CvFingerprint, CvPlan, CvResult, CvSettings, CvSummary, FoldSeeds,
    FoldTraining, ModelChoice, PreparedFold, Procedure, Stage, RESULTS_SCHEMA,
};
pub use grid::{grid_search_pipelines, RankedPipeline};
pub use metrics::{overall_score, r2, rmse, FoldScore, Summary};
pub use report::{render_ablation, render_cv, render_grid};
pub use stats::{mann_whitney_u, ComparisonResult, Method, EXACT_MAX_SMALLER};

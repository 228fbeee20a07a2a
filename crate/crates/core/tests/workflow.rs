//! Cross-validation, grid search and ablation drivers on small synthetic
//! data with a deliberately tiny model.

use spectral_forge::augment::AugmentConfig;
use spectral_forge::data::Dataset;
use spectral_forge::eval::{
    ablate_factor, ablate_kernel, ablate_order, grid_search_pipelines, run_cv, CvPlan, CvSettings, ModelChoice,
    Procedure, Summary, ORDER_ARMS,
};
use spectral_forge::nn::{Activation, LayerSpec, ModelSpec, Padding};
use spectral_forge::preprocess::{design_matrix, Pipeline};
use spectral_forge::synth::{generate, SynthConfig};
use spectral_forge::train::TrainConfig;

const LEN: usize = 427;

fn data(n: usize) -> Dataset {
    generate(&SynthConfig {
        n_samples: n,
        seed: 21,
        ..SynthConfig::default()
    })
    .unwrap()
    .dataset
}

fn tiny_model() -> ModelChoice {
    ModelChoice::Custom {
        spec: ModelSpec {
            layers: vec![
                LayerSpec::Conv1d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel: 5,
                    stride: 4,
                    padding: Padding::None,
                },
                LayerSpec::Activation { kind: Activation::Relu },
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    in_dim: 2 * 106,
                    out_dim: 3,
                },
            ],
            input_len: LEN,
            output_dim: 3,
        },
    }
}

fn settings(runs: usize, k: usize) -> CvSettings {
    CvSettings {
        k,
        runs,
        base_seed: 77,
        augment: AugmentConfig {
            factor: 3,
            ..AugmentConfig::default()
        },
        train: TrainConfig {
            max_epochs: 4,
            patience: 2,
            ..TrainConfig::default()
        },
        model: tiny_model(),
    }
}

fn proc(text: &str) -> CvPlan {
    CvPlan::uniform(text.parse::<Procedure>().unwrap())
}

#[test]
fn cv_produces_one_score_per_run_and_fold() {
    let result = run_cv(&data(18), &proc("SNV+DA+GS"), &settings(2, 3)).unwrap();
    assert_eq!(result.scores.len(), 6);
    let order: Vec<(usize, usize)> = result.scores.iter().map(|s| (s.run, s.fold)).collect();
    assert_eq!(order, vec![(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]);
    let overall: Vec<f64> = result.scores.iter().map(|s| s.r2_overall).collect();
    let s = Summary::of(&overall);
    assert_eq!(result.summary.r2_overall, s);
    assert_eq!(result.training.len(), 6);
}

#[test]
fn factor_one_augmentation_equals_no_augmentation() {
    let mut s = settings(1, 3);
    s.augment.factor = 1;
    let d = data(15);
    let with = run_cv(&d, &proc("SNV+DA"), &s).unwrap();
    let without = run_cv(&d, &proc("SNV"), &s).unwrap();
    assert_eq!(with.scores, without.scores);
}

#[test]
fn cv_is_deterministic_and_seed_sensitive() {
    let d = data(15);
    let a = run_cv(&d, &proc("SNV+DA+GS"), &settings(1, 3)).unwrap();
    let b = run_cv(&d, &proc("SNV+DA+GS"), &settings(1, 3)).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let mut other = settings(1, 3);
    other.base_seed += 1;
    let c = run_cv(&d, &proc("SNV+DA+GS"), &other).unwrap();
    assert_ne!(a.scores, c.scores);
}

#[test]
fn per_target_plans_are_evaluated_per_target() {
    let d = data(15);
    let snv = Pipeline::resolve("18").unwrap();
    let raw = Pipeline::resolve("1").unwrap();
    let plan = CvPlan::from_pipeline(&snv).with_override(2, &raw);
    let mixed = run_cv(&d, &plan, &settings(1, 3)).unwrap();
    assert_eq!(mixed.fingerprint.pipeline_ids, [Some(18), Some(18), Some(1)]);
    assert_eq!(mixed.scores.len(), 3);
}

#[test]
fn grid_ranking_ignores_input_order() {
    let d = data(12);
    let s = settings(1, 2);
    let pipelines: Vec<Pipeline> = design_matrix().into_iter().filter(|p| [1, 18, 64].contains(&p.id.unwrap())).collect();
    let forward = grid_search_pipelines(&d, &pipelines, &s, 3).unwrap();
    let mut reversed = pipelines.clone();
    reversed.reverse();
    let backward = grid_search_pipelines(&d, &reversed, &s, 3).unwrap();
    assert_eq!(forward, backward);
    assert_eq!(forward.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
    for w in forward.windows(2) {
        assert!(w[0].result.summary.r2_overall.mean >= w[1].result.summary.r2_overall.mean);
    }
    // budget keeps the lowest ids
    let two = grid_search_pipelines(&d, &reversed, &s, 2).unwrap();
    let mut ids: Vec<u32> = two.iter().map(|r| r.id.unwrap()).collect();
    ids.sort();
    assert_eq!(ids, vec![1, 18]);
}

#[test]
fn order_ablation_has_six_arms_against_the_reference() {
    let table = ablate_order(&data(12), &settings(1, 2)).unwrap();
    let labels: Vec<&str> = table.arms.iter().map(|a| a.label.as_str()).collect();
    assert_eq!(labels, ORDER_ARMS);
    assert_eq!(table.reference, "SNV+DA+GS");
    for arm in &table.arms {
        assert_eq!(arm.vs_reference.is_none(), arm.label == table.reference);
        assert_eq!(arm.result.scores.len(), 2);
    }
}

#[test]
fn factor_and_kernel_ablations_cover_their_grids() {
    let d = data(12);
    let mut s = settings(1, 2);
    s.model = ModelChoice::FishCnn { kernel: 8 };
    s.train.max_epochs = 1;
    let plan = CvPlan::from_pipeline(&Pipeline::resolve("18").unwrap());
    let factors = ablate_factor(&d, &plan, &settings(1, 2), &[2, 50, 4]).unwrap();
    assert_eq!(factors.arms.len(), 3);
    assert!(factors.arm("50").is_some());
    let kernels = ablate_kernel(&d, &plan, &s, &[64, 4]).unwrap();
    assert_eq!(kernels.arms.len(), 2);
    assert!(kernels.arm("64").unwrap().vs_reference.is_none());
}

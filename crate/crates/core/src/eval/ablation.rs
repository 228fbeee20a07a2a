//! Ordering, augmentation-factor and kernel-size ablations. Each arm is a
//! full CV experiment sharing the base seed, so arms see identical folds.

use serde::{Deserialize, Serialize};

use super::cv::{run_cv, CvPlan, CvResult, CvSettings, ModelChoice, Procedure};
use super::stats::{mann_whitney_u, ComparisonResult};
use crate::data::{Dataset, N_TARGETS};
use crate::error::{Error, Result};

pub const ORDER_ARMS: [&str; 6] = ["SNV+DA+GS", "SNV+GS", "GS", "DA+SNV", "DA+GS", "DA"];
pub const DEFAULT_FACTORS: [usize; 4] = [10, 30, 50, 60];
pub const REFERENCE_FACTOR: usize = 50;
pub const DEFAULT_KERNELS: [usize; 4] = [64, 16, 8, 4];
pub const REFERENCE_KERNEL: usize = 64;

/// Significance level for the arm comparisons.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationKind {
    Order,
    Factor,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationArm {
    pub label: String,
    pub result: CvResult,
    /// Overall-R² comparison against the reference arm; `None` for the
    /// reference itself.
    pub vs_reference: Option<ComparisonResult>,
    /// Per-target R² comparisons against the reference arm.
    pub vs_reference_targets: Option<[ComparisonResult; N_TARGETS]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub schema: u32,
    pub kind: AblationKind,
    pub reference: String,
    pub arms: Vec<AblationArm>,
}

impl AblationTable {
    pub fn arm(&self, label: &str) -> Option<&AblationArm> {
        self.arms.iter().find(|a| a.label == label)
    }

    fn reference_arm(&self) -> &AblationArm {
        self.arm(&self.reference).expect("reference arm present")
    }

    /// Whether arm `i` beats the reference significantly on overall R², or,
    /// for the reference, beats every other arm.
    pub fn significantly_better(&self, i: usize) -> bool {
        let arm = &self.arms[i];
        let mean = |a: &AblationArm| a.result.summary.r2_overall.mean;
        match &arm.vs_reference {
            Some(c) => c.p_value < ALPHA && mean(arm) > mean(self.reference_arm()),
            None => self.arms.iter().filter(|a| a.label != arm.label).all(|a| {
                a.vs_reference
                    .as_ref()
                    .is_some_and(|c| c.p_value < ALPHA && mean(a) < mean(arm))
            }),
        }
    }
}

fn compare(arms: Vec<(String, CvResult)>, kind: AblationKind, reference: &str) -> Result<AblationTable> {
    let ref_result = arms
        .iter()
        .find(|(l, _)| l == reference)
        .map(|(_, r)| r.clone())
        .ok_or_else(|| Error::InvalidArgument(format!("reference arm `{reference}` is not among the arms")))?;
    let arms = arms
        .into_iter()
        .map(|(label, result)| {
            let (vs, vs_t) = if label == reference {
                (None, None)
            } else {
                (
                    Some(mann_whitney_u(&result.overall_r2(), &ref_result.overall_r2())),
                    Some(std::array::from_fn(|j| {
                        mann_whitney_u(&result.target_r2(j), &ref_result.target_r2(j))
                    })),
                )
            };
            AblationArm {
                label,
                result,
                vs_reference: vs,
                vs_reference_targets: vs_t,
            }
        })
        .collect();
    Ok(AblationTable {
        schema: super::cv::RESULTS_SCHEMA,
        kind,
        reference: reference.to_string(),
        arms,
    })
}

/// The six literal-order arms; `DA` arms use `settings.augment`.
pub fn ablate_order(data: &Dataset, settings: &CvSettings) -> Result<AblationTable> {
    let arms = ORDER_ARMS
        .iter()
        .map(|label| {
            let proc: Procedure = label.parse()?;
            Ok((label.to_string(), run_cv(data, &CvPlan::uniform(proc), settings)?))
        })
        .collect::<Result<Vec<_>>>()?;
    compare(arms, AblationKind::Order, ORDER_ARMS[0])
}

/// One arm per augmentation factor, compared with factor 50.
pub fn ablate_factor(data: &Dataset, plan: &CvPlan, settings: &CvSettings, factors: &[usize]) -> Result<AblationTable> {
    if !factors.contains(&REFERENCE_FACTOR) {
        return Err(Error::InvalidArgument(format!(
            "factor list must include the reference factor {REFERENCE_FACTOR}"
        )));
    }
    let arms = factors
        .iter()
        .map(|&f| {
            let mut s = settings.clone();
            s.augment.factor = f;
            Ok((f.to_string(), run_cv(data, plan, &s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    compare(arms, AblationKind::Factor, &REFERENCE_FACTOR.to_string())
}

/// One arm per convolution kernel width, compared with width 64.
pub fn ablate_kernel(data: &Dataset, plan: &CvPlan, settings: &CvSettings, kernels: &[usize]) -> Result<AblationTable> {
    if !kernels.contains(&REFERENCE_KERNEL) {
        return Err(Error::InvalidArgument(format!(
            "kernel list must include the reference kernel {REFERENCE_KERNEL}"
        )));
    }
    let arms = kernels
        .iter()
        .map(|&k| {
            let mut s = settings.clone();
            s.model = ModelChoice::FishCnn { kernel: k };
            Ok((k.to_string(), run_cv(data, plan, &s)?))
        })
        .collect::<Result<Vec<_>>>()?;
    compare(arms, AblationKind::Kernel, &REFERENCE_KERNEL.to_string())
}

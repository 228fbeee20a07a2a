use serde::{Deserialize, Serialize};

use crate::data::{TargetMatrix, N_TARGETS};
use crate::error::{Error, Result};

/// Coefficient of determination `1 − SS_res / SS_tot`; unbounded below.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if !(ss_tot > 0.0) {
        return Err(Error::ZeroVariance("R² is undefined for a constant reference column".into()));
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    let mse = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum::<f64>() / y_true.len() as f64;
    Ok(mse.sqrt())
}

fn check(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} reference values but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidArgument("metrics need at least 2 samples".into()));
    }
    Ok(())
}

/// Arithmetic mean of the per-target scores.
pub fn overall_score(per_target: &[f64; N_TARGETS]) -> f64 {
    per_target.iter().sum::<f64>() / N_TARGETS as f64
}

/// Scores of one model on one test fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScore {
    pub run: usize,
    pub fold: usize,
    pub r2: [f64; N_TARGETS],
    pub rmse: [f64; N_TARGETS],
    pub r2_overall: f64,
    pub rmse_overall: f64,
}

impl FoldScore {
    pub fn compute(run: usize, fold: usize, truth: &TargetMatrix, pred: &TargetMatrix) -> Result<Self> {
        let mut r2s = [0.0; N_TARGETS];
        let mut rmses = [0.0; N_TARGETS];
        for j in 0..N_TARGETS {
            let (t, p) = (truth.column(j), pred.column(j));
            r2s[j] = r2(&t, &p)?;
            rmses[j] = rmse(&t, &p)?;
        }
        Ok(Self {
            run,
            fold,
            r2: r2s,
            rmse: rmses,
            r2_overall: overall_score(&r2s),
            rmse_overall: overall_score(&rmses),
        })
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HuberLoss {
    pub delta: f64,
}

impl Default for HuberLoss {
    fn default() -> Self {
        Self { delta: 1.0 }
    }
}

impl HuberLoss {
    pub fn compute(&self, pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        huber_loss(pred, target, self.delta)
    }
}

/// Mean Huber loss over all elements and its gradient with respect to `pred`.
pub fn huber_loss(pred: &[f64], target: &[f64], delta: f64) -> Result<(f64, Vec<f64>)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("Huber delta must be > 0, got {delta}")));
    }
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let n = pred.len() as f64;
    let mut total = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let r = p - t;
            if r.abs() <= delta {
                total += 0.5 * r * r;
                r / n
            } else {
                total += delta * (r.abs() - 0.5 * delta);
                delta * r.signum() / n
            }
        })
        .collect();
    Ok((total / n, grad))
}

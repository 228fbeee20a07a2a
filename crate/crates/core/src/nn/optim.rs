use serde::{Deserialize, Serialize};

/// AdamW hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self {
            lr: 0.0015,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.001,
        }
    }
}

/// Moment estimates, shaped like the parameter groups they track.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A gradient entry was NaN or infinite; nothing was changed.
    SkippedNonFinite,
}

impl AdamWState {
    pub fn new(params: &[Vec<f64>]) -> Self {
        Self {
            t: 0,
            m: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            v: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }
}

impl AdamW {
    /// One update. Decay is applied multiplicatively before the Adam step,
    /// `θ ← θ·(1 − lr·λ) − lr·m̂/(√v̂ + ε)`, so with zero gradients the
    /// trajectory is exactly `θ·(1 − lr·λ)ᵗ`.
    pub fn step(&self, state: &mut AdamWState, params: &mut [Vec<f64>], grads: &[Vec<f64>]) -> StepOutcome {
        assert_eq!(params.len(), grads.len(), "parameter/gradient group count");
        assert_eq!(params.len(), state.m.len(), "parameter/moment group count");
        if grads.iter().flatten().any(|g| !g.is_finite()) {
            return StepOutcome::SkippedNonFinite;
        }
        state.t += 1;
        let t = state.t as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let decay = 1.0 - self.lr * self.weight_decay;
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
            assert_eq!(p.len(), g.len(), "gradient shape mismatch");
            let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
            for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                *p = *p * decay - lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
            }
        }
        StepOutcome::Applied
    }
}

//! Mini-batch training with z-scored targets and validation-based early
//! stopping.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SpectralMatrix, TargetMatrix, N_TARGETS};
use crate::error::{Error, Result};
use crate::nn::{huber_loss, AdamW, AdamWState, Mode, ModelSpec, ModelState, Network};
use crate::rng;

/// Spectra per forward pass when evaluating without gradients.
const EVAL_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub initial_lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub weight_decay: f64,
    pub dropout: f64,
    pub huber_delta: f64,
    /// Share of original training samples held out for early stopping.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 38,
            initial_lr: 0.0015,
            max_epochs: 1500,
            patience: 55,
            weight_decay: 0.001,
            dropout: 0.10,
            huber_delta: 1.0,
            val_fraction: 0.15,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.batch_size == 0 {
            return fail("batch_size must be ≥ 1".into());
        }
        if self.patience == 0 {
            return fail("patience must be ≥ 1".into());
        }
        if self.max_epochs == 0 {
            return fail("max_epochs must be ≥ 1".into());
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return fail(format!("learning rate must be > 0, got {}", self.initial_lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!("weight decay must be ≥ 0, got {}", self.weight_decay));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.huber_delta > 0.0) {
            return fail(format!("huber delta must be > 0, got {}", self.huber_delta));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return fail(format!("val_fraction must lie in (0, 1), got {}", self.val_fraction));
        }
        Ok(())
    }

    pub fn optimizer(&self) -> AdamW {
        AdamW {
            lr: self.initial_lr,
            weight_decay: self.weight_decay,
            ..AdamW::default()
        }
    }
}

/// Linear learning-rate scaling rule `0.01 · batch / 256`.
pub fn heuristic_lr(batch_size: usize) -> f64 {
    0.01 * batch_size as f64 / 256.0
}

/// Per-target z-scoring fitted on training targets (sample std).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetScaler {
    pub mean: [f64; N_TARGETS],
    pub std: [f64; N_TARGETS],
}

impl TargetScaler {
    pub fn fit(y: &TargetMatrix) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "target scaling needs at least 2 rows, got {n}"
            )));
        }
        let mut mean = [0.0; N_TARGETS];
        let mut std = [0.0; N_TARGETS];
        for j in 0..N_TARGETS {
            let col = y.column(j);
            let m = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            if !(var.sqrt() > 0.0) {
                return Err(Error::ZeroVariance(format!("target {j} is constant in the training fold")));
            }
            mean[j] = m;
            std[j] = var.sqrt();
        }
        Ok(Self { mean, std })
    }

    /// Scaled targets, flattened row-major.
    pub fn transform(&self, y: &TargetMatrix) -> Vec<f64> {
        y.rows()
            .iter()
            .flat_map(|r| (0..N_TARGETS).map(move |j| (r[j] - self.mean[j]) / self.std[j]))
            .collect()
    }

    pub fn inverse(&self, scaled: &[f64]) -> Result<TargetMatrix> {
        if scaled.len() % N_TARGETS != 0 {
            return Err(Error::Shape(format!("{} values is not a whole number of target rows", scaled.len())));
        }
        TargetMatrix::new(
            scaled
                .chunks_exact(N_TARGETS)
                .map(|r| std::array::from_fn(|j| r[j] * self.std[j] + self.mean[j]))
                .collect(),
        )
    }
}

/// Splits `n` original samples into (inner train, inner validation) index
/// lists with `ceil(fraction · n)` validation samples.
pub fn inner_split_indices(n: usize, val_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction must lie in (0, 1), got {val_fraction}"
        )));
    }
    // the epsilon keeps exact products such as 0.15·20 = 3 from rounding up
    let n_val = (val_fraction * n as f64 - 1e-9).ceil().max(0.0) as usize;
    if n_val == 0 || n_val >= n {
        return Err(Error::InvalidArgument(format!(
            "inner split of {n} samples at fraction {val_fraction} leaves an empty part"
        )));
    }
    let perm = rng::permutation(n, seed);
    let mut val = perm[..n_val].to_vec();
    let mut train = perm[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

pub fn inner_split(data: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, val) = inner_split_indices(data.len(), val_fraction, seed)?;
    Ok((data.select(&train), data.select(&val)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best validation loss; an epoch counts as an improvement only
/// if it is strictly lower.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopper {
    pub patience: usize,
    pub best_loss: f64,
    /// 1-based; 0 until the first update.
    pub best_epoch: usize,
    stale: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best_loss: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn update(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best_loss {
            self.best_loss = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Excluded from serialisation so results files stay reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Mean Huber loss of the model over a whole set in eval mode.
pub fn evaluate_loss(net: &Network, state: &ModelState, x: &SpectralMatrix, y_scaled: &[f64], delta: f64) -> Result<f64> {
    let pred = net.predict(state, x.data(), EVAL_CHUNK)?;
    Ok(huber_loss(&pred, y_scaled, delta)?.0)
}

/// Trains `spec` on `train` and early-stops on `val`. Target arrays are the
/// already-scaled, flattened `[n, 3]` values. Returns the parameters of the
/// best validation epoch.
pub fn train_model(
    spec: &ModelSpec,
    train_x: &SpectralMatrix,
    train_y: &[f64],
    val_x: &SpectralMatrix,
    val_y: &[f64],
    cfg: &TrainConfig,
) -> Result<(ModelState, TrainReport)> {
    cfg.validate()?;
    let started = Instant::now();
    let net = Network::new(spec)?;
    let width = spec.input_len;
    let out = spec.output_dim;
    for (name, x, y) in [("training", train_x, train_y), ("validation", val_x, val_y)] {
        if x.n_features() != width {
            return Err(Error::Shape(format!(
                "{name} spectra have {} points, model expects {width}",
                x.n_features()
            )));
        }
        if x.n_samples() == 0 {
            return Err(Error::EmptyDataset);
        }
        if y.len() != x.n_samples() * out {
            return Err(Error::Shape(format!("{name} targets do not match {} spectra", x.n_samples())));
        }
    }

    let n = train_x.n_samples();
    let mut state = net.init(rng::derive_seed(cfg.seed, "init", &[]));
    let opt = cfg.optimizer();
    let mut opt_state = AdamWState::new(&state.params);
    let mut stopper = EarlyStopper::new(cfg.patience);
    let mut best = state.params.clone();
    let mut report = TrainReport {
        epochs: 0,
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_early: false,
        wall_time_secs: 0.0,
    };
    let mut bx = Vec::with_capacity(cfg.batch_size * width);
    let mut by = Vec::with_capacity(cfg.batch_size * out);

    for epoch in 1..=cfg.max_epochs {
        let order = rng::permutation(n, rng::derive_seed(cfg.seed, "epoch", &[epoch as u64]));
        let mut total = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            bx.clear();
            by.clear();
            for &i in idx {
                bx.extend_from_slice(train_x.row(i));
                by.extend_from_slice(&train_y[i * out..(i + 1) * out]);
            }
            let seed = rng::derive_seed(cfg.seed, "dropout", &[epoch as u64, b as u64]);
            let pass = net.forward(&state, &bx, idx.len(), Mode::Train, seed)?;
            let (loss, grad) = huber_loss(pass.output(), &by, cfg.huber_delta)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: b,
                    message: format!("training loss is {loss}"),
                });
            }
            total += loss * idx.len() as f64;
            net.backward(&mut state, pass, &grad)?;
            // a skipped step leaves parameters untouched; training continues
            let _ = opt.step(&mut opt_state, &mut state.params, &state.grads);
        }
        let val = evaluate_loss(&net, &state, val_x, val_y, cfg.huber_delta)?;
        if !val.is_finite() {
            return Err(Error::NonFinite {
                epoch,
                batch: 0,
                message: format!("validation loss is {val}"),
            });
        }
        report.train_loss.push(total / n as f64);
        report.val_loss.push(val);
        report.epochs = epoch;
        match stopper.update(epoch, val) {
            StopDecision::Improved => best.clone_from(&state.params),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                report.stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }
    state.params = best;
    state.zero_grads();
    report.best_epoch = stopper.best_epoch;
    report.wall_time_secs = started.elapsed().as_secs_f64();
    Ok((state, report))
}

/// Eval-mode predictions in original target units.
pub fn predict(state: &ModelState, spec: &ModelSpec, x: &SpectralMatrix, scaler: &TargetScaler) -> Result<TargetMatrix> {
    if x.n_features() != spec.input_len {
        return Err(Error::Shape(format!(
            "spectra have {} points, model expects {}",
            x.n_features(),
            spec.input_len
        )));
    }
    let net = Network::new(spec)?;
    let out = net.predict(state, x.data(), EVAL_CHUNK)?;
    scaler.inverse(&out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::WavenumberAxis;
    use crate::nn::build_fishcnn;

    #[test]
    fn learning_rate_heuristic() {
        assert_eq!(heuristic_lr(38), 0.001484375);
        assert_eq!(heuristic_lr(256), 0.01);
        assert_eq!(heuristic_lr(1), 3.90625e-5);
    }

    #[test]
    fn stopper_semantics() {
        let mut s = EarlyStopper::new(2);
        assert_eq!(s.update(1, 1.0), StopDecision::Improved);
        assert_eq!(s.update(2, 0.9), StopDecision::Improved);
        assert_eq!(s.update(3, 0.95), StopDecision::Continue);
        assert_eq!(s.update(4, 0.91), StopDecision::Stop);
        assert_eq!(s.best_epoch, 2);
        // ties are not improvements
        let mut s = EarlyStopper::new(1);
        s.update(1, 0.5);
        assert_eq!(s.update(2, 0.5), StopDecision::Stop);
    }

    #[test]
    fn inner_split_sizes() {
        let (tr, va) = inner_split_indices(32, 0.15, 4).unwrap();
        assert_eq!((tr.len(), va.len()), (27, 5));
        assert_eq!(inner_split_indices(32, 0.15, 4).unwrap(), (tr, va));
        let (_, va) = inner_split_indices(20, 0.15, 1).unwrap();
        assert_eq!(va.len(), 3);
        assert!(inner_split_indices(1, 0.5, 0).is_err());
        assert!(inner_split_indices(5, 0.0, 0).is_err());
    }

    #[test]
    fn scaler_round_trip_and_inverse() {
        let y = TargetMatrix::new(vec![[74.2, 12.1, 3.3], [78.9, 17.5, 6.1], [71.0, 19.0, 2.2]]).unwrap();
        let s = TargetScaler::fit(&y).unwrap();
        let back = s.inverse(&s.transform(&y)).unwrap();
        for (a, b) in back.rows().iter().zip(y.rows()) {
            for j in 0..3 {
                assert!((a[j] - b[j]).abs() < 1e-12);
            }
        }
        let s = TargetScaler {
            mean: [75.0, 15.0, 5.0],
            std: [1.0; 3],
        };
        assert_eq!(s.inverse(&[0.0; 3]).unwrap().rows()[0], [75.0, 15.0, 5.0]);
        let constant = TargetMatrix::new(vec![[1.0, 2.0, 3.0]; 4]).unwrap();
        assert!(TargetScaler::fit(&constant).is_err());
    }

    fn toy(n: usize, len: usize, seed: u64) -> (SpectralMatrix, Vec<f64>) {
        let mut s = rng::stream(seed);
        let axis = WavenumberAxis::linspace(0.0, 1.0, len).unwrap();
        let mut data = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a = rng::unit(&mut s) * 2.0 - 1.0;
            let b = rng::unit(&mut s) * 2.0 - 1.0;
            for t in 0..len {
                let u = t as f64 / len as f64;
                data.push(a * (6.0 * u).sin() + b * u);
            }
            y.extend([a, b, a - b]);
        }
        let ids = (0..n).map(|i| i.to_string()).collect();
        (SpectralMatrix::new(axis, data, ids).unwrap(), y)
    }

    #[test]
    fn patience_beyond_budget_runs_every_epoch_and_restores_best() {
        let spec = build_fishcnn(64).unwrap();
        let (x, y) = toy(12, 64, 1);
        let (vx, vy) = toy(4, 64, 2);
        let cfg = TrainConfig {
            max_epochs: 6,
            patience: 10,
            batch_size: 5,
            ..TrainConfig::default()
        };
        let (state, report) = train_model(&spec, &x, &y, &vx, &vy, &cfg).unwrap();
        assert_eq!(report.epochs, 6);
        assert_eq!(report.train_loss.len(), 6);
        assert!(!report.stopped_early);
        let net = Network::new(&spec).unwrap();
        let reeval = evaluate_loss(&net, &state, &vx, &vy, 1.0).unwrap();
        assert!((reeval - report.val_loss[report.best_epoch - 1]).abs() < 1e-12);

        let (state2, mut report2) = train_model(&spec, &x, &y, &vx, &vy, &cfg).unwrap();
        report2.wall_time_secs = report.wall_time_secs;
        assert_eq!(report2, report);
        assert_eq!(state2, state);
    }

    #[test]
    fn rejects_width_mismatch() {
        let spec = build_fishcnn(64).unwrap();
        let (x, y) = toy(4, 65, 1);
        assert!(train_model(&spec, &x, &y, &x, &y, &TrainConfig::default()).is_err());
        let s = TargetScaler {
            mean: [0.0; 3],
            std: [1.0; 3],
        };
        let state = Network::new(&spec).unwrap().init(0);
        assert!(predict(&state, &spec, &x, &s).is_err());
    }
}

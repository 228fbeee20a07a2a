//! Artefact-style augmentation: every training spectrum spawns variants
//! `m·x + o + s·t` with a random multiplier `m`, offset `o` and slope `s`
//! along the index axis `t ∈ [−1, 1]`.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{SpectralMatrix, TargetMatrix};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Output rows per input row, originals included.
    pub factor: usize,
    pub offset_scale: f64,
    pub mult_scale: f64,
    pub slope_scale: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            factor: 50,
            offset_scale: 0.10,
            mult_scale: 0.05,
            slope_scale: 0.05,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factor == 0 {
            return Err(Error::InvalidArgument("augmentation factor must be ≥ 1".into()));
        }
        for (name, v) in [
            ("offset_scale", self.offset_scale),
            ("mult_scale", self.mult_scale),
            ("slope_scale", self.slope_scale),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite value ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Relative artefact magnitudes shared by augmentation and synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArtefactScales {
    pub offset: f64,
    pub mult: f64,
    pub slope: f64,
}

/// Population standard deviation over every entry of the matrix.
pub fn global_std(x: &SpectralMatrix) -> f64 {
    let d = x.data();
    if d.is_empty() {
        return 0.0;
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64).sqrt()
}

/// Index axis mapped linearly onto `[−1, 1]`.
pub fn unit_ramp(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n).map(|j| -1.0 + 2.0 * j as f64 / (n - 1) as f64).collect()
}

/// Draws one (multiplier, offset, slope) triple from `stream` and applies it.
/// Offset and slope magnitudes are relative to `sigma`.
pub(crate) fn perturb_row(
    row: &[f64],
    ramp: &[f64],
    scales: ArtefactScales,
    sigma: f64,
    stream: &mut rng::Stream,
) -> Vec<f64> {
    let mut z = || -> f64 { StandardNormal.sample(stream) };
    let o = scales.offset * sigma * z();
    let m = 1.0 + scales.mult * z();
    let s = scales.slope * sigma * z();
    row.iter().zip(ramp).map(|(x, t)| m * x + o + s * t).collect()
}

/// Expands `(x, y)` to `factor × n` rows: each source row followed by its
/// `factor − 1` variants. Targets are copied from the source row.
///
/// Variant `v` of row `r` draws from the stream `(cfg.seed, "augment", r, v)`,
/// so the result does not depend on scheduling.
pub fn augment(
    x: &SpectralMatrix,
    y: &TargetMatrix,
    cfg: &AugmentConfig,
) -> Result<(SpectralMatrix, TargetMatrix)> {
    cfg.validate()?;
    if x.n_samples() != y.len() {
        return Err(Error::Shape(format!(
            "{} spectra but {} target rows",
            x.n_samples(),
            y.len()
        )));
    }
    if cfg.factor == 1 {
        return Ok((x.clone(), y.clone()));
    }
    let sigma = global_std(x);
    let ramp = unit_ramp(x.n_features());
    let scales = ArtefactScales {
        offset: cfg.offset_scale,
        mult: cfg.mult_scale,
        slope: cfg.slope_scale,
    };
    let blocks: Vec<Vec<f64>> = (0..x.n_samples())
        .into_par_iter()
        .map(|r| {
            let src = x.row(r);
            let mut block = Vec::with_capacity(src.len() * cfg.factor);
            block.extend_from_slice(src);
            for v in 1..cfg.factor {
                let mut stream = rng::derived_stream(cfg.seed, "augment", &[r as u64, v as u64]);
                block.extend(perturb_row(src, &ramp, scales, sigma, &mut stream));
            }
            block
        })
        .collect();

    let mut ids = Vec::with_capacity(x.n_samples() * cfg.factor);
    let mut targets = Vec::with_capacity(ids.capacity());
    for (r, id) in x.sample_ids().iter().enumerate() {
        ids.push(id.clone());
        for v in 1..cfg.factor {
            ids.push(format!("{id}~aug{v}"));
        }
        targets.extend(std::iter::repeat_n(y.rows()[r], cfg.factor));
    }
    Ok((
        SpectralMatrix::new(x.axis().clone(), blocks.concat(), ids)?,
        TargetMatrix::new(targets)?,
    ))
}

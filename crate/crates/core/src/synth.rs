//! Synthetic fish-like spectra with known composition.
//!
//! Each sample is a mixture of three pure-component spectra (water, protein,
//! lipids) weighted by its target percentages, on top of a fixed background
//! constituent shared by all samples. Artefacts and channel noise are added
//! last. Without the background, every spectrum would be a pure scale of
//! its composition vector, and per-spectrum normalisation (SNV) would erase
//! the information that separates, say, 70 % water from 80 % water.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::augment::{global_std, perturb_row, unit_ramp, ArtefactScales};
use crate::data::{Dataset, SpectralMatrix, TargetMatrix, WavenumberAxis, N_TARGETS, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisPreset {
    /// 427 points, 1891.58 down to 580.109.
    Ingaas,
    /// 1971 points, 4001.81 down to 202.533.
    Ftraman,
}

impl AxisPreset {
    pub fn axis(self) -> WavenumberAxis {
        let (start, end, n) = match self {
            AxisPreset::Ingaas => (1891.58, 580.109, 427),
            AxisPreset::Ftraman => (4001.81, 202.533, 1971),
        };
        WavenumberAxis::linspace(start, end, n).expect("preset axes are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            AxisPreset::Ingaas => "ingaas",
            AxisPreset::Ftraman => "ftraman",
        }
    }
}

impl std::str::FromStr for AxisPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ingaas" => Ok(AxisPreset::Ingaas),
            "ftraman" | "ft-raman" => Ok(AxisPreset::Ftraman),
            other => Err(Error::InvalidArgument(format!(
                "unknown axis preset `{other}` (expected ingaas or ftraman)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub preset: AxisPreset,
    /// Inclusive `[low, high]` percent ranges for water, protein, lipids.
    pub target_ranges: [[f64; 2]; N_TARGETS],
    /// Channel noise standard deviation relative to the mean absolute clean
    /// signal.
    pub noise_std: f64,
    pub artefacts: ArtefactScales,
    /// Fixed amount of the shared background constituent in every sample,
    /// on the same percent scale as the targets.
    pub background_weight: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_samples: 39,
            preset: AxisPreset::Ingaas,
            target_ranges: [[70.0, 80.0], [10.0, 20.0], [2.0, 8.0]],
            noise_std: 0.01,
            artefacts: ArtefactScales {
                offset: 0.1,
                mult: 0.1,
                slope: 0.1,
            },
            background_weight: 25.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be ≥ 1".into()));
        }
        for (name, [lo, hi]) in TARGET_NAMES.iter().zip(self.target_ranges) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidArgument(format!("target range for {name} must satisfy low < high")));
            }
        }
        let scales = [
            ("noise_std", self.noise_std),
            ("artefact offset", self.artefacts.offset),
            ("artefact mult", self.artefacts.mult),
            ("artefact slope", self.artefacts.slope),
            ("background_weight", self.background_weight),
        ];
        for (name, v) in scales {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite value ≥ 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

/// A pure-component spectrum: a sum of Gaussian peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub peaks: Vec<Peak>,
}

impl Component {
    pub fn evaluate(&self, axis: &WavenumberAxis) -> Vec<f64> {
        axis.values()
            .iter()
            .map(|&x| {
                self.peaks
                    .iter()
                    .map(|p| p.amplitude * (-0.5 * ((x - p.center) / p.width).powi(2)).exp())
                    .sum()
            })
            .collect()
    }
}

/// The three target constituents plus the shared background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentBasis {
    pub components: [Component; N_TARGETS],
    pub background: Component,
}

fn random_component(name: &str, axis: &WavenumberAxis, seed: u64, index: u64) -> Component {
    let mut s = rng::derived_stream(seed, "basis", &[index]);
    let (a, b) = (axis.values()[0], axis.values()[axis.len() - 1]);
    let (lo, span) = (a.min(b), (a - b).abs());
    let n_peaks = 4 + rng::below(&mut s, 5) as usize;
    let peaks = (0..n_peaks)
        .map(|_| Peak {
            center: lo + span * rng::unit(&mut s),
            width: span * (0.01 + 0.04 * rng::unit(&mut s)),
            amplitude: 0.2 + 0.8 * rng::unit(&mut s),
        })
        .collect();
    Component {
        name: name.to_string(),
        peaks,
    }
}

impl ComponentBasis {
    /// 4–8 peaks per component with seeded centres, widths and amplitudes.
    pub fn random(axis: &WavenumberAxis, seed: u64) -> Self {
        Self {
            components: std::array::from_fn(|j| random_component(TARGET_NAMES[j], axis, seed, j as u64)),
            background: random_component("background", axis, seed, N_TARGETS as u64),
        }
    }
}

/// Applies `m·x + o + s·t` per row with draws from `(seed, "artefact", row)`.
/// Offset and slope magnitudes are relative to the global std of `x`.
pub fn inject_artefacts(x: &SpectralMatrix, scales: ArtefactScales, seed: u64) -> Result<SpectralMatrix> {
    for v in [scales.offset, scales.mult, scales.slope] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("artefact scales must be finite and ≥ 0, got {v}")));
        }
    }
    if scales == ArtefactScales::default() {
        return Ok(x.clone());
    }
    let sigma = global_std(x);
    let ramp = unit_ramp(x.n_features());
    let rows: Vec<Vec<f64>> = x
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let mut s = rng::derived_stream(seed, "artefact", &[i as u64]);
            perturb_row(row, &ramp, scales, sigma, &mut s)
        })
        .collect();
    SpectralMatrix::from_rows(x.axis().clone(), &rows, x.sample_ids().to_vec())
}

/// A generated dataset and the basis that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub basis: ComponentBasis,
}

/// Audit record written next to generated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config: SynthConfig,
    pub basis: ComponentBasis,
}

pub fn generate(cfg: &SynthConfig) -> Result<Synthetic> {
    cfg.validate()?;
    let axis = cfg.preset.axis();
    let basis = ComponentBasis::random(&axis, cfg.seed);
    let spectra: Vec<Vec<f64>> = basis.components.iter().map(|c| c.evaluate(&axis)).collect();
    let background = basis.background.evaluate(&axis);

    let mut targets = Vec::with_capacity(cfg.n_samples);
    let mut rows = Vec::with_capacity(cfg.n_samples);
    for i in 0..cfg.n_samples {
        let mut s = rng::derived_stream(cfg.seed, "sample", &[i as u64]);
        let y: [f64; N_TARGETS] = std::array::from_fn(|j| {
            let [lo, hi] = cfg.target_ranges[j];
            lo + (hi - lo) * rng::unit(&mut s)
        });
        let row: Vec<f64> = (0..axis.len())
            .map(|f| cfg.background_weight * background[f] + (0..N_TARGETS).map(|j| y[j] * spectra[j][f]).sum::<f64>())
            .collect();
        targets.push(y);
        rows.push(row);
    }
    let ids: Vec<String> = (1..=cfg.n_samples).map(|i| i.to_string()).collect();
    let clean = SpectralMatrix::from_rows(axis, &rows, ids)?;
    let mut x = inject_artefacts(&clean, cfg.artefacts, cfg.seed)?;

    if cfg.noise_std > 0.0 {
        let amplitude = clean.data().iter().map(|v| v.abs()).sum::<f64>() / clean.data().len() as f64;
        let normal = Normal::new(0.0, cfg.noise_std * amplitude).expect("finite noise std");
        let n_features = x.n_features();
        let mut data = x.data().to_vec();
        for (i, row) in data.chunks_exact_mut(n_features).enumerate() {
            let mut s = rng::derived_stream(cfg.seed, "noise", &[i as u64]);
            for v in row {
                *v += normal.sample(&mut s);
            }
        }
        x = x.with_data(data)?;
    }
    Ok(Synthetic {
        dataset: Dataset::new(x, TargetMatrix::new(targets)?)?,
        basis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{linear_baseline, snv};

    fn quiet() -> SynthConfig {
        SynthConfig {
            noise_std: 0.0,
            artefacts: ArtefactScales::default(),
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_shapes_and_ranges() {
        let s = generate(&SynthConfig::default()).unwrap();
        assert_eq!(s.dataset.x.n_samples(), 39);
        assert_eq!(s.dataset.x.n_features(), 427);
        for row in s.dataset.y.rows() {
            for (j, v) in row.iter().enumerate() {
                let [lo, hi] = SynthConfig::default().target_ranges[j];
                assert!((lo..=hi).contains(v));
            }
        }
        let f = generate(&SynthConfig {
            preset: AxisPreset::Ftraman,
            n_samples: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_eq!(f.dataset.x.n_features(), 1971);
    }

    #[test]
    fn deterministic() {
        let a = generate(&SynthConfig::default()).unwrap();
        let b = generate(&SynthConfig::default()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig {
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(a.dataset.x, c.dataset.x);
    }

    #[test]
    fn basis_has_four_to_eight_nonnegative_peaks() {
        let axis = AxisPreset::Ingaas.axis();
        for seed in 0..20 {
            let b = ComponentBasis::random(&axis, seed);
            for c in b.components.iter().chain([&b.background]) {
                assert!((4..=8).contains(&c.peaks.len()));
                assert!(c.evaluate(&axis).iter().all(|v| *v >= 0.0));
            }
        }
    }

    #[test]
    fn zero_scales_are_identity() {
        let x = generate(&quiet()).unwrap().dataset.x;
        assert_eq!(inject_artefacts(&x, ArtefactScales::default(), 3).unwrap(), x);
    }

    #[test]
    fn offset_artefacts_vanish_under_snv() {
        let x = generate(&quiet()).unwrap().dataset.x;
        let y = inject_artefacts(
            &x,
            ArtefactScales {
                offset: 0.5,
                ..ArtefactScales::default()
            },
            4,
        )
        .unwrap();
        for (a, b) in x.rows().zip(y.rows()) {
            for (p, q) in snv(a).unwrap().iter().zip(snv(b).unwrap()) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn slope_artefacts_vanish_under_linear_baseline() {
        let x = generate(&quiet()).unwrap().dataset.x;
        let y = inject_artefacts(
            &x,
            ArtefactScales {
                slope: 0.5,
                offset: 0.3,
                ..ArtefactScales::default()
            },
            5,
        )
        .unwrap();
        for (a, b) in x.rows().zip(y.rows()) {
            for (p, q) in linear_baseline(a).unwrap().iter().zip(linear_baseline(b).unwrap()) {
                assert!((p - q).abs() < 1e-9);
            }
        }
    }
}

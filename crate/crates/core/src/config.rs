//! Experiment configuration: a flat `key = value` text format with dotted
//! keys, e.g.
//!
//! ```text
//! # study.cfg
//! seed = 7
//! pipeline = 18
//! pipeline.lipids_yield = SNV|D2w19
//! augment.factor = 50
//! train.max_epochs = 300
//! cv.runs = 10
//! ```
//!
//! Unset keys take their defaults. Every problem is reported with the
//! offending key, and all of them are collected before giving up.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::augment::{AugmentConfig, ArtefactScales};
use crate::data::{load_dataset, Dataset, N_TARGETS, TARGET_NAMES};
use crate::error::{Error, FieldError, Result};
use crate::eval::{CvPlan, CvSettings, ModelChoice, DEFAULT_FACTORS, DEFAULT_KERNELS};
use crate::nn::{ModelSpec, FISHCNN_KERNEL};
use crate::preprocess::Pipeline;
use crate::synth::{generate, AxisPreset, SynthConfig};
use crate::train::TrainConfig;

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "seed",
    "data.x",
    "data.y",
    "synth.n_samples",
    "synth.preset",
    "synth.noise_std",
    "synth.offset",
    "synth.mult",
    "synth.slope",
    "synth.background_weight",
    "synth.water_range",
    "synth.protein_range",
    "synth.lipids_yield_range",
    "synth.seed",
    "pipeline",
    "pipeline.water",
    "pipeline.protein",
    "pipeline.lipids_yield",
    "augment.factor",
    "augment.offset_scale",
    "augment.mult_scale",
    "augment.slope_scale",
    "augment.seed",
    "train.batch_size",
    "train.lr",
    "train.max_epochs",
    "train.patience",
    "train.weight_decay",
    "train.dropout",
    "train.huber_delta",
    "train.val_fraction",
    "model.kernel",
    "model.spec",
    "cv.k",
    "cv.runs",
    "cv.grid_budget",
    "ablate.factors",
    "ablate.kernels",
];

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Files { x: PathBuf, y: PathBuf },
    Synthetic(SynthConfig),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Files { x, y } => load_dataset(x, y),
            DataSource::Synthetic(cfg) => Ok(generate(cfg)?.dataset),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataSource,
    /// Synthetic settings, also used by `generate` when `data` points at files.
    pub synth: SynthConfig,
    pub pipeline: Pipeline,
    pub overrides: [Option<Pipeline>; N_TARGETS],
    pub augment: AugmentConfig,
    pub train: TrainConfig,
    pub model: ModelChoice,
    pub k: usize,
    pub runs: usize,
    pub grid_budget: Option<usize>,
    pub ablate_factors: Vec<usize>,
    pub ablate_kernels: Vec<usize>,
    /// Resolved values of every key, used for manifests and fingerprints.
    canonical: BTreeMap<String, String>,
}

/// Raw key/value pairs in the order of precedence they were applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim().to_string();
                    if values.insert(k.clone(), v.trim().to_string()).is_some() {
                        errors.push(FieldError {
                            field: k,
                            message: format!("line {}: key set twice", i + 1),
                        });
                    }
                }
                None => errors.push(FieldError {
                    field: format!("line {}", i + 1),
                    message: format!("expected `key = value`, got `{line}`"),
                }),
            }
        }
        if errors.is_empty() {
            Ok(Self { values, base_dir: None })
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut raw = Self::parse(&text)?;
        raw.base_dir = path.parent().map(Path::to_path_buf);
        Ok(raw)
    }

    /// Sets (or replaces) a key, as command-line flags do.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(pair, "expected `key=value`"))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn path(&self, value: &str) -> PathBuf {
        let p = PathBuf::from(value);
        match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }
    }
}

/// Collects field errors while reading typed values.
struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<FieldError>,
    canonical: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn fail(&mut self, field: &str, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.to_string(),
            message: message.into(),
        });
    }

    /// Typed value of `key`, or `default` when unset. Records the resolved
    /// value under `key` in the canonical map.
    fn value<T>(&mut self, key: &str, default: T) -> T
    where
        T: FromStr + ToString,
        T::Err: std::fmt::Display,
    {
        let v = match self.raw.get(key) {
            None => default,
            Some(text) => match text.parse::<T>() {
                Ok(v) => v,
                Err(e) => {
                    self.fail(key, format!("cannot parse `{text}`: {e}"));
                    default
                }
            },
        };
        self.canonical.insert(key.to_string(), v.to_string());
        v
    }

    fn list(&mut self, key: &str, default: &[usize]) -> Vec<usize> {
        let v = match self.raw.get(key) {
            None => default.to_vec(),
            Some(text) => match text.split(',').map(|t| t.trim().parse::<usize>()).collect() {
                Ok(v) => v,
                Err(e) => {
                    self.fail(key, format!("expected a comma-separated list of integers: {e}"));
                    default.to_vec()
                }
            },
        };
        self.canonical.insert(
            key.to_string(),
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        );
        v
    }

    fn range(&mut self, key: &str, default: [f64; 2]) -> [f64; 2] {
        let v = match self.raw.get(key) {
            None => default,
            Some(text) => {
                let parts: Vec<_> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
                match parts.as_slice() {
                    [Ok(lo), Ok(hi)] => [*lo, *hi],
                    _ => {
                        self.fail(key, format!("expected `low,high`, got `{text}`"));
                        default
                    }
                }
            }
        };
        self.canonical.insert(key.to_string(), format!("{:?},{:?}", v[0], v[1]));
        v
    }

    fn pipeline(&mut self, key: &str, default: Option<&str>) -> Option<Pipeline> {
        let text = self.raw.get(key).or(default)?;
        match Pipeline::resolve(text) {
            Ok(p) => {
                let shown = match p.id {
                    Some(id) => format!("{id}:{p}"),
                    None => p.to_string(),
                };
                self.canonical.insert(key.to_string(), shown);
                Some(p)
            }
            Err(e) => {
                self.fail(key, e.to_string());
                None
            }
        }
    }

    fn check(&mut self, field: &str, result: Result<()>) {
        if let Err(e) = result {
            let msg = match e {
                Error::InvalidArgument(m) => m,
                other => other.to_string(),
            };
            self.fail(field, msg);
        }
    }
}

/// Defaults for `f64` values print with `{:?}` so the canonical form is
/// round-trippable.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Real(f64);

impl FromStr for Real {
    type Err = std::num::ParseFloatError;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        s.parse().map(Real)
    }
}

impl std::fmt::Display for Real {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Preset(AxisPreset);

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse().map(Preset)
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0.name())
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut r = Reader {
            raw,
            errors: Vec::new(),
            canonical: BTreeMap::new(),
        };
        for key in raw.values.keys() {
            if !KEYS.contains(&key.as_str()) {
                r.fail(key, "unknown key");
            }
        }

        let seed: u64 = r.value("seed", 0);

        let sd = SynthConfig::default();
        let synth = SynthConfig {
            n_samples: r.value("synth.n_samples", sd.n_samples),
            preset: r.value("synth.preset", Preset(sd.preset)).0,
            target_ranges: [
                r.range("synth.water_range", sd.target_ranges[0]),
                r.range("synth.protein_range", sd.target_ranges[1]),
                r.range("synth.lipids_yield_range", sd.target_ranges[2]),
            ],
            noise_std: r.value("synth.noise_std", Real(sd.noise_std)).0,
            artefacts: ArtefactScales {
                offset: r.value("synth.offset", Real(sd.artefacts.offset)).0,
                mult: r.value("synth.mult", Real(sd.artefacts.mult)).0,
                slope: r.value("synth.slope", Real(sd.artefacts.slope)).0,
            },
            background_weight: r.value("synth.background_weight", Real(sd.background_weight)).0,
            seed: r.value("synth.seed", seed),
        };
        r.check("synth", synth.validate());

        let data = match (raw.get("data.x"), raw.get("data.y")) {
            (Some(x), Some(y)) => {
                let (x, y) = (raw.path(x), raw.path(y));
                r.canonical.insert("data.x".into(), x.display().to_string());
                r.canonical.insert("data.y".into(), y.display().to_string());
                DataSource::Files { x, y }
            }
            (None, None) => DataSource::Synthetic(synth.clone()),
            (Some(_), None) => {
                r.fail("data.y", "data.x is set but data.y is missing");
                DataSource::Synthetic(synth.clone())
            }
            (None, Some(_)) => {
                r.fail("data.x", "data.y is set but data.x is missing");
                DataSource::Synthetic(synth.clone())
            }
        };

        let pipeline = r.pipeline("pipeline", Some("18")).unwrap_or_else(Pipeline::raw);
        let overrides = std::array::from_fn(|j| r.pipeline(&format!("pipeline.{}", TARGET_NAMES[j]), None));

        let ad = AugmentConfig::default();
        let augment = AugmentConfig {
            factor: r.value("augment.factor", ad.factor),
            offset_scale: r.value("augment.offset_scale", Real(ad.offset_scale)).0,
            mult_scale: r.value("augment.mult_scale", Real(ad.mult_scale)).0,
            slope_scale: r.value("augment.slope_scale", Real(ad.slope_scale)).0,
            seed: r.value("augment.seed", seed),
        };
        let check_aug = augment.validate();
        r.check("augment", check_aug);

        let td = TrainConfig::default();
        let train = TrainConfig {
            batch_size: r.value("train.batch_size", td.batch_size),
            initial_lr: r.value("train.lr", Real(td.initial_lr)).0,
            max_epochs: r.value("train.max_epochs", td.max_epochs),
            patience: r.value("train.patience", td.patience),
            weight_decay: r.value("train.weight_decay", Real(td.weight_decay)).0,
            dropout: r.value("train.dropout", Real(td.dropout)).0,
            huber_delta: r.value("train.huber_delta", Real(td.huber_delta)).0,
            val_fraction: r.value("train.val_fraction", Real(td.val_fraction)).0,
            seed,
        };
        let check_train = train.validate();
        r.check("train", check_train);

        let kernel: usize = r.value("model.kernel", FISHCNN_KERNEL);
        if kernel == 0 {
            r.fail("model.kernel", "kernel must be ≥ 1");
        }
        let model = match raw.get("model.spec") {
            None => ModelChoice::FishCnn { kernel },
            Some(p) => {
                let path = raw.path(p);
                match fs::read_to_string(&path)
                    .map_err(|e| e.to_string())
                    .and_then(|t| serde_json::from_str::<ModelSpec>(&t).map_err(|e| e.to_string()))
                {
                    Ok(spec) => {
                        if let Err(e) = spec.validate() {
                            r.fail("model.spec", e.to_string());
                        }
                        let compact = serde_json::to_string(&spec).expect("model spec serialises");
                        r.canonical.insert("model.spec".into(), compact);
                        ModelChoice::Custom { spec }
                    }
                    Err(e) => {
                        r.fail("model.spec", format!("{}: {e}", path.display()));
                        ModelChoice::FishCnn { kernel }
                    }
                }
            }
        };

        let k: usize = r.value("cv.k", 6);
        if k < 2 {
            r.fail("cv.k", "k must be ≥ 2");
        }
        let runs: usize = r.value("cv.runs", 10);
        if runs == 0 {
            r.fail("cv.runs", "runs must be ≥ 1");
        }
        let grid_budget = match raw.get("cv.grid_budget") {
            None => None,
            Some(_) => {
                let b: usize = r.value("cv.grid_budget", 0);
                if b == 0 {
                    r.fail("cv.grid_budget", "budget must be ≥ 1");
                }
                Some(b)
            }
        };
        let ablate_factors = r.list("ablate.factors", &DEFAULT_FACTORS);
        let ablate_kernels = r.list("ablate.kernels", &DEFAULT_KERNELS);
        if ablate_factors.contains(&0) {
            r.fail("ablate.factors", "factors must be ≥ 1");
        }
        if ablate_kernels.contains(&0) {
            r.fail("ablate.kernels", "kernels must be ≥ 1");
        }

        if !r.errors.is_empty() {
            return Err(Error::Config(r.errors));
        }
        Ok(Self {
            seed,
            data,
            synth,
            pipeline,
            overrides,
            augment,
            train,
            model,
            k,
            runs,
            grid_budget,
            ablate_factors,
            ablate_kernels,
            canonical: r.canonical,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Resolved values of every key, sorted by key.
    pub fn canonical(&self) -> &BTreeMap<String, String> {
        &self.canonical
    }

    /// `key=value` lines of the canonical map.
    pub fn canonical_text(&self) -> String {
        self.canonical.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings {
            k: self.k,
            runs: self.runs,
            base_seed: self.seed,
            augment: self.augment,
            train: self.train,
            model: self.model.clone(),
        }
    }

    pub fn plan(&self) -> CvPlan {
        let mut plan = CvPlan::from_pipeline(&self.pipeline);
        for (j, o) in self.overrides.iter().enumerate() {
            if let Some(p) = o {
                plan = plan.with_override(j, p);
            }
        }
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_any_key() {
        let c = ExperimentConfig::parse("").unwrap();
        assert_eq!(c.seed, 0);
        assert_eq!(c.pipeline.id, Some(18));
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.augment, AugmentConfig::default());
        assert_eq!((c.k, c.runs), (6, 10));
        assert!(matches!(c.data, DataSource::Synthetic(_)));
    }

    #[test]
    fn values_and_comments() {
        let c = ExperimentConfig::parse(
            "# comment\nseed = 7\ntrain.batch_size=16\npipeline.lipids_yield = SNV|D2w19\nablate.factors = 10, 50\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.train.seed, 7);
        assert_eq!(c.synth.seed, 7);
        assert_eq!(c.train.batch_size, 16);
        assert_eq!(c.ablate_factors, vec![10, 50]);
        let plan = c.plan();
        assert_eq!(plan.procedures[2].to_string(), "SNV+D2w19p3+DA");
        assert_eq!(plan.procedures[0].to_string(), "SNV+DA");
    }

    #[test]
    fn errors_are_field_level_and_collected() {
        let err = ExperimentConfig::parse("train.batch_size = 0\ncv.k = x\nbogus = 1\ntrain.dropout = 1.5\n").unwrap_err();
        let Error::Config(fields) = err else { panic!("expected config error") };
        let names: Vec<&str> = fields.iter().map(|f| f.field.as_str()).collect();
        assert!(names.contains(&"bogus"));
        assert!(names.contains(&"cv.k"));
        assert!(names.contains(&"train"));
        assert!(fields.len() >= 3);
        assert!(ExperimentConfig::parse("no equals sign").is_err());
        assert!(ExperimentConfig::parse("data.x = a.csv").is_err());
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = ExperimentConfig::parse("seed=1\n").unwrap();
        let b = ExperimentConfig::parse("# same\nseed = 1").unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
        let c = ExperimentConfig::parse("seed=2").unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
        // spelling out a default does not change the experiment
        let d = ExperimentConfig::parse("seed=1\ntrain.batch_size=38").unwrap();
        assert_eq!(a.fingerprint(), d.fingerprint());
    }
}

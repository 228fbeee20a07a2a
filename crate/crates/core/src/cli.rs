//! Command-line front end. `main` only calls [`run`] and maps the error to
//! an exit code.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::augment::augment;
use crate::config::{ExperimentConfig, RawConfig};
use crate::data::{write_dataset, Dataset};
use crate::error::{Error, Result};
use crate::eval::{
    ablate_factor, ablate_kernel, ablate_order, grid_search_pipelines, render_ablation, render_cv, render_grid,
    AblationTable, CvResult, RankedPipeline, RESULTS_SCHEMA,
};
use crate::preprocess::{apply_pipeline, design_matrix};
use crate::synth::{generate, Truth};

#[derive(Debug, Parser)]
#[command(name = "spectral-forge", version, about = "Spectral preprocessing, augmentation and CNN regression experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent (run, fold) work items.
    #[arg(long, global = true, env = "SPECTRAL_FORGE_JOBS")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Extra `key=value` config override; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (X.csv, Y.csv, truth.json).
    Generate {
        /// Axis preset: ingaas (427 points) or ftraman (1971 points).
        #[arg(long)]
        preset: Option<String>,
    },
    /// Apply a preprocessing pipeline to the whole dataset.
    Preprocess {
        /// Design-matrix id (1–64) or step list such as `LB|SNV|D1w5`.
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Augment the whole dataset.
    Augment {
        #[arg(long)]
        factor: Option<usize>,
    },
    /// Repeated k-fold cross-validation (or a pipeline grid search when
    /// `cv.grid_budget` is set).
    Cv {
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        pipeline: Option<String>,
    },
    /// Run one of the ablation studies.
    Ablate {
        which: AblationChoice,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Render Markdown tables for every results file in a directory.
    Report {
        /// Results directory; defaults to `--out`.
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblationChoice {
    Order,
    Factor,
    Kernel,
}

impl AblationChoice {
    fn name(self) -> &'static str {
        match self {
            AblationChoice::Order => "order",
            AblationChoice::Factor => "factor",
            AblationChoice::Kernel => "kernel",
        }
    }
}

fn load_config(g: &GlobalArgs, command: &Command) -> Result<ExperimentConfig> {
    let mut raw = match &g.config {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    for pair in &g.set {
        raw.set_pair(pair)?;
    }
    if let Some(s) = g.seed {
        raw.set("seed", s.to_string());
    }
    match command {
        Command::Generate { preset: Some(p) } => raw.set("synth.preset", p.clone()),
        Command::Preprocess { pipeline: Some(p) } => raw.set("pipeline", p.clone()),
        Command::Augment { factor: Some(f) } => raw.set("augment.factor", f.to_string()),
        Command::Cv { runs, k, pipeline } => {
            if let Some(r) = runs {
                raw.set("cv.runs", r.to_string());
            }
            if let Some(k) = k {
                raw.set("cv.k", k.to_string());
            }
            if let Some(p) = pipeline {
                raw.set("pipeline", p.clone());
            }
        }
        Command::Ablate { runs, k, .. } => {
            if let Some(r) = runs {
                raw.set("cv.runs", r.to_string());
            }
            if let Some(k) = k {
                raw.set("cv.k", k.to_string());
            }
        }
        _ => {}
    }
    ExperimentConfig::from_raw(&raw)
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(path, text.as_bytes())
}

/// `manifest.json`: what was run, with which resolved configuration and
/// seeds, and which files it wrote. No timestamps, so reruns are identical.
fn write_manifest(out: &Path, command: &str, cfg: &ExperimentConfig, outputs: &[&str]) -> Result<()> {
    let manifest = json!({
        "schema": RESULTS_SCHEMA,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_fingerprint": cfg.fingerprint(),
        "config": cfg.canonical(),
        "seeds": {
            "base_seed": cfg.seed,
            "synth": cfg.synth.seed,
            "augment": cfg.augment.seed,
            "derivation": "splitmix64 over (seed, label, indices); labels: folds[run], inner/augment/train[run, fold], init, epoch[e], dropout[e, batch]",
        },
        "outputs": outputs,
    });
    write_json(&out.join("manifest.json"), &manifest)
}

fn write_data(out: &Path, ds: &Dataset) -> Result<()> {
    write_dataset(ds, out.join("X.csv"), out.join("Y.csv"))
}

fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let synth = generate(&cfg.synth)?;
    write_data(out, &synth.dataset)?;
    write_json(
        &out.join("truth.json"),
        &Truth {
            config: cfg.synth.clone(),
            basis: synth.basis,
        },
    )?;
    write_manifest(out, "generate", cfg, &["X.csv", "Y.csv", "truth.json"])?;
    eprintln!(
        "wrote {} × {} dataset to {}",
        synth.dataset.x.n_samples(),
        synth.dataset.x.n_features(),
        out.display()
    );
    Ok(())
}

fn cmd_preprocess(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = cfg.data.load()?;
    let n = data.len();
    let (x, _, _) = apply_pipeline(&cfg.pipeline, &data.x, &data.x)?;
    write_data(out, &Dataset::new(x, data.y)?)?;
    write_manifest(out, "preprocess", cfg, &["X.csv", "Y.csv"])?;
    eprintln!("applied pipeline `{}` to {n} spectra", cfg.pipeline);
    Ok(())
}

fn cmd_augment(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = cfg.data.load()?;
    let (x, y) = augment(&data.x, &data.y, &cfg.augment)?;
    let n = x.n_samples();
    write_data(out, &Dataset::new(x, y)?)?;
    write_manifest(out, "augment", cfg, &["X.csv", "Y.csv"])?;
    eprintln!("augmented {} spectra to {n}", data.len());
    Ok(())
}

fn cmd_cv(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = cfg.data.load()?;
    let settings = cfg.cv_settings();
    if let Some(budget) = cfg.grid_budget {
        let ranked = grid_search_pipelines(&data, &design_matrix(), &settings, budget)?;
        write_json(&out.join("grid.json"), &json!({ "schema": RESULTS_SCHEMA, "ranked": ranked }))?;
        let md = render_grid(&ranked);
        write(&out.join("grid.md"), md.as_bytes())?;
        write_manifest(out, "cv", cfg, &["grid.json", "grid.md"])?;
        print!("{md}");
        return Ok(());
    }
    let result = crate::eval::run_cv(&data, &cfg.plan(), &settings)?;
    write_json(&out.join("cv.json"), &result)?;
    let md = render_cv(&result);
    write(&out.join("cv.md"), md.as_bytes())?;
    write_manifest(out, "cv", cfg, &["cv.json", "cv.md"])?;
    print!("{md}");
    Ok(())
}

fn cmd_ablate(cfg: &ExperimentConfig, out: &Path, which: AblationChoice) -> Result<()> {
    let data = cfg.data.load()?;
    let settings = cfg.cv_settings();
    let table = match which {
        AblationChoice::Order => ablate_order(&data, &settings)?,
        AblationChoice::Factor => ablate_factor(&data, &cfg.plan(), &settings, &cfg.ablate_factors)?,
        AblationChoice::Kernel => ablate_kernel(&data, &cfg.plan(), &settings, &cfg.ablate_kernels)?,
    };
    let stem = format!("ablate_{}", which.name());
    let (json_name, md_name) = (format!("{stem}.json"), format!("{stem}.md"));
    write_json(&out.join(&json_name), &table)?;
    let md = render_ablation(&table);
    write(&out.join(&md_name), md.as_bytes())?;
    write_manifest(out, &format!("ablate {}", which.name()), cfg, &[&json_name, &md_name])?;
    print!("{md}");
    Ok(())
}

#[derive(serde::Deserialize)]
struct GridFile {
    ranked: Vec<RankedPipeline>,
}

/// Renders every known results file in `dir` (sorted by name) into
/// `report.md`.
fn cmd_report(dir: &Path) -> Result<()> {
    if !dir.join("manifest.json").is_file() {
        return Err(Error::InvalidArgument(format!(
            "{} has no manifest.json; not a results directory",
            dir.display()
        )));
    }
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json") && n != "manifest.json" && n != "truth.json")
        .collect();
    names.sort();
    let mut sections = Vec::new();
    for name in &names {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let section = if name == "cv.json" {
            render_cv(&serde_json::from_str::<CvResult>(&text)?)
        } else if name == "grid.json" {
            render_grid(&serde_json::from_str::<GridFile>(&text)?.ranked)
        } else if name.starts_with("ablate_") {
            render_ablation(&serde_json::from_str::<AblationTable>(&text)?)
        } else {
            continue;
        };
        sections.push(section);
    }
    if sections.is_empty() {
        return Err(Error::InvalidArgument(format!("no results files found in {}", dir.display())));
    }
    let report = sections.join("\n");
    write(&dir.join("report.md"), report.as_bytes())?;
    print!("{report}");
    Ok(())
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Command::Report { dir } = &cli.command {
        return cmd_report(dir.as_deref().unwrap_or(&cli.global.out));
    }
    let cfg = load_config(&cli.global, &cli.command)?;
    let jobs = cli.global.jobs.unwrap_or(1);
    if jobs == 0 {
        return Err(Error::config("jobs", "must be ≥ 1"));
    }
    let out = cli.global.out.clone();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Generate { .. } => cmd_generate(&cfg, &out),
        Command::Preprocess { .. } => cmd_preprocess(&cfg, &out),
        Command::Augment { .. } => cmd_augment(&cfg, &out),
        Command::Cv { .. } => cmd_cv(&cfg, &out),
        Command::Ablate { which, .. } => cmd_ablate(&cfg, &out, *which),
        Command::Report { .. } => unreachable!("handled above"),
    })
}

/// Exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

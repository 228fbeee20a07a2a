//! Markdown renderings of CV results, grid searches and ablation tables.

use std::fmt::Write;

use super::ablation::{AblationKind, AblationTable, ALPHA};
use super::cv::CvResult;
use super::grid::RankedPipeline;
use super::metrics::Summary;
use crate::data::TARGET_NAMES;

fn pm(s: Summary) -> String {
    format!("{:.3} ± {:.3}", s.mean, s.std)
}

fn bold_if(text: String, bold: bool) -> String {
    if bold {
        format!("**{text}**")
    } else {
        text
    }
}

fn p_cell(p: Option<f64>) -> String {
    match p {
        None => "ref".into(),
        Some(p) if p < 1e-4 => "<0.0001".into(),
        Some(p) => format!("{p:.4}"),
    }
}

pub fn render_cv(result: &CvResult) -> String {
    let fp = &result.fingerprint;
    let s = &result.summary;
    let mut out = String::new();
    let _ = writeln!(out, "# Cross-validation\n");
    for (j, name) in TARGET_NAMES.iter().enumerate() {
        let id = fp.pipeline_ids[j].map_or_else(String::new, |i| format!(" (pipeline {i})"));
        let _ = writeln!(out, "- {name}: `{}`{id}", fp.procedures[j]);
    }
    let _ = writeln!(
        out,
        "- runs × folds: {} × {} = {} fold scores, base seed {}\n",
        fp.settings.runs,
        fp.settings.k,
        result.scores.len(),
        fp.settings.base_seed
    );
    let _ = writeln!(out, "| Target | R² | RMSE |\n|---|---|---|");
    for (j, name) in TARGET_NAMES.iter().enumerate() {
        let _ = writeln!(out, "| {name} | {} | {} |", pm(s.r2[j]), pm(s.rmse[j]));
    }
    let _ = writeln!(out, "| overall | {} | {} |", pm(s.r2_overall), pm(s.rmse_overall));
    out
}

pub fn render_grid(ranked: &[RankedPipeline]) -> String {
    let mut out = String::from("# Pipeline grid search\n\n| Rank | ID | Pipeline | R² overall | RMSE overall |\n|---|---|---|---|---|\n");
    for r in ranked {
        let _ = writeln!(
            out,
            "| {} | {} | `{}` | {} | {} |",
            r.rank,
            r.id.map_or_else(|| "-".to_string(), |i| i.to_string()),
            r.pipeline,
            pm(r.result.summary.r2_overall),
            pm(r.result.summary.rmse_overall)
        );
    }
    out
}

/// Order and factor tables list one arm per row; the kernel table puts
/// kernels in columns with an overall row and one row per target. Bold
/// marks arms significantly better than the reference at α = 0.05.
pub fn render_ablation(table: &AblationTable) -> String {
    let mut out = String::new();
    let title = match table.kind {
        AblationKind::Order => "Ordering ablation",
        AblationKind::Factor => "Augmentation factor ablation",
        AblationKind::Kernel => "Kernel size ablation",
    };
    let _ = writeln!(
        out,
        "# {title}\n\nReference arm: `{}`. p-values: two-sided Mann–Whitney U on fold-level R² (α = {ALPHA}).\n",
        table.reference
    );
    match table.kind {
        AblationKind::Order | AblationKind::Factor => {
            let head = if table.kind == AblationKind::Order { "Procedure" } else { "Factor" };
            let _ = writeln!(out, "| {head} | R² overall | RMSE overall | p |\n|---|---|---|---|");
            for (i, arm) in table.arms.iter().enumerate() {
                let s = &arm.result.summary;
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} |",
                    arm.label,
                    bold_if(pm(s.r2_overall), table.significantly_better(i)),
                    pm(s.rmse_overall),
                    p_cell(arm.vs_reference.map(|c| c.p_value))
                );
            }
        }
        AblationKind::Kernel => {
            let _ = write!(out, "| R² |");
            for arm in &table.arms {
                let _ = write!(out, " k={} |", arm.label);
            }
            let _ = write!(out, "\n|---|");
            for _ in &table.arms {
                let _ = write!(out, "---|");
            }
            let _ = writeln!(out);
            let _ = write!(out, "| overall |");
            for (i, arm) in table.arms.iter().enumerate() {
                let cell = bold_if(pm(arm.result.summary.r2_overall), table.significantly_better(i));
                let _ = write!(out, " {cell} (p {}) |", p_cell(arm.vs_reference.map(|c| c.p_value)));
            }
            let _ = writeln!(out);
            let reference = table.arm(&table.reference).map(|a| a.result.summary.r2);
            for (j, name) in TARGET_NAMES.iter().enumerate() {
                let _ = write!(out, "| {name} |");
                for arm in &table.arms {
                    let p = arm.vs_reference_targets.map(|t| t[j].p_value);
                    let better = p.is_some_and(|p| p < ALPHA)
                        && reference.is_some_and(|r| arm.result.summary.r2[j].mean > r[j].mean);
                    let _ = write!(out, " {} (p {}) |", bold_if(pm(arm.result.summary.r2[j]), better), p_cell(p));
                }
                let _ = writeln!(out);
            }
        }
    }
    out
}

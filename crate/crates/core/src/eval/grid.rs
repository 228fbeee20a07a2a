use serde::{Deserialize, Serialize};

use super::cv::{run_cv, CvPlan, CvResult, CvSettings};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::preprocess::Pipeline;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPipeline {
    pub rank: usize,
    pub id: Option<u32>,
    pub pipeline: String,
    pub result: CvResult,
}

/// Evaluates up to `budget` pipelines (lowest design ids first, so the
/// selection does not depend on input order) and ranks them by mean overall
/// R² descending, then by its standard deviation, then by id.
pub fn grid_search_pipelines(
    data: &Dataset,
    pipelines: &[Pipeline],
    settings: &CvSettings,
    budget: usize,
) -> Result<Vec<RankedPipeline>> {
    if budget == 0 {
        return Err(Error::InvalidArgument("grid search budget must be ≥ 1".into()));
    }
    let mut chosen: Vec<&Pipeline> = pipelines.iter().collect();
    chosen.sort_by_key(|p| (p.id.unwrap_or(u32::MAX), p.to_string()));
    chosen.dedup_by(|a, b| a == b);
    chosen.truncate(budget);

    let mut ranked = chosen
        .into_iter()
        .map(|p| {
            Ok(RankedPipeline {
                rank: 0,
                id: p.id,
                pipeline: p.to_string(),
                result: run_cv(data, &CvPlan::from_pipeline(p), settings)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        let (sa, sb) = (a.result.summary.r2_overall, b.result.summary.r2_overall);
        sb.mean
            .total_cmp(&sa.mean)
            .then(sa.std.total_cmp(&sb.std))
            .then(a.id.unwrap_or(u32::MAX).cmp(&b.id.unwrap_or(u32::MAX)))
            .then(a.pipeline.cmp(&b.pipeline))
    });
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(ranked)
}

use serde::Serialize;

use super::{PipelineEvent, RuntimeError};
use crate::vision::StageKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyStats {
    pub stage: StageKind,
    pub count: usize,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
    pub mean: f64,
}

/// Nearest-rank percentile of an ascending slice: the value at rank
/// `ceil(p/100 * n)`.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Per-stage latency statistics, skipped stages excluded. Stages are listed
/// in the order they first appear.
pub fn report_latency(events: &[PipelineEvent]) -> Result<Vec<LatencyStats>, RuntimeError> {
    if events.is_empty() {
        return Err(RuntimeError::NoData);
    }
    let mut per_stage: Vec<(StageKind, Vec<f64>)> = Vec::new();
    for ev in events {
        for rec in &ev.stages {
            let Some(ms) = rec.latency_ms.filter(|_| !rec.is_skipped()) else {
                continue;
            };
            match per_stage.iter_mut().find(|(k, _)| *k == rec.name) {
                Some((_, v)) => v.push(ms),
                None => per_stage.push((rec.name, vec![ms])),
            }
        }
    }
    if per_stage.is_empty() {
        return Err(RuntimeError::NoData);
    }
    Ok(per_stage
        .into_iter()
        .map(|(stage, mut v)| {
            v.sort_by(f64::total_cmp);
            LatencyStats {
                stage,
                count: v.len(),
                p50: nearest_rank(&v, 50.0),
                p95: nearest_rank(&v, 95.0),
                max: *v.last().expect("non-empty"),
                mean: v.iter().sum::<f64>() / v.len() as f64,
            }
        })
        .collect())
}

pub fn format_latency_table(stats: &[LatencyStats]) -> String {
    let mut out = format!(
        "{:<10} {:>7} {:>10} {:>10} {:>10} {:>10}\n",
        "stage", "count", "p50_ms", "p95_ms", "max_ms", "mean_ms"
    );
    for s in stats {
        out.push_str(&format!(
            "{:<10} {:>7} {:>10.3} {:>10.3} {:>10.3} {:>10.3}\n",
            s.stage.as_str(),
            s.count,
            s.p50,
            s.p95,
            s.max,
            s.mean
        ));
    }
    out
}

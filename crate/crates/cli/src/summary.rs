//! Per-step replicate summaries: median and 5th/95th percentiles.

use std::io::Write;

use hrk_core::{AlTrace, ModelKind};

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Summary row for one model and step.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub step: usize,
    pub n: usize,
    pub replicates: usize,
    pub rmse: [f64; 3],
    pub is: [f64; 3],
}

fn triple(mut v: Vec<f64>) -> [f64; 3] {
    v.sort_by(f64::total_cmp);
    [quantile(&v, 0.5), quantile(&v, 0.05), quantile(&v, 0.95)]
}

/// Summarizes the complete traces of one model, step by step.
pub fn summarize(model: ModelKind, traces: &[&AlTrace]) -> Vec<SummaryRow> {
    let done: Vec<&&AlTrace> = traces.iter().filter(|t| t.complete).collect();
    let Some(steps) = done.iter().map(|t| t.steps.len()).min() else {
        return Vec::new();
    };
    (0..steps)
        .map(|k| SummaryRow {
            model,
            step: k,
            n: done[0].steps[k].n,
            replicates: done.len(),
            rmse: triple(done.iter().map(|t| t.steps[k].rmse).collect()),
            is: triple(done.iter().map(|t| t.steps[k].interval_score).collect()),
        })
        .collect()
}

pub const SUMMARY_HEADER: &str = "model,step,n,replicates,rmse_median,rmse_p05,rmse_p95,is_median,is_p05,is_p95";

pub fn write_summary<W: Write>(mut out: W, header: &[(String, String)], rows: &[SummaryRow]) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.model, r.step, r.n, r.replicates, r.rmse[0], r.rmse[1], r.rmse[2], r.is[0], r.is[1], r.is[2]
        )?;
    }
    Ok(())
}

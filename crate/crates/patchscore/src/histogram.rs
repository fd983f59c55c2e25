//! Fixed-width score histograms per patch side.

use patchscore_core::{quantile_sorted, Criterion, PatchSide};
use serde::{Deserialize, Serialize};

use crate::store::ScoredPatch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideHistogram {
    pub side: usize,
    pub bin_width: f64,
    /// `counts.len() + 1` edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub total: u64,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramExport {
    pub criterion: String,
    pub sides: Vec<SideHistogram>,
}

/// Bins per unit of score: width 1.0 for MEMD, 0.05 for entropy.
fn bins_per_unit(criterion: Criterion) -> u32 {
    match criterion {
        Criterion::Memd => 1,
        Criterion::Entropy => 20,
    }
}

fn side_histogram(criterion: Criterion, side: PatchSide, scores: &[f64]) -> SideHistogram {
    let per_unit = bins_per_unit(criterion);
    let n_bins = (criterion.max_score() as u32 * per_unit) as usize;
    let mut counts = vec![0u64; n_bins];
    for &s in scores {
        let bin = ((s * f64::from(per_unit)).floor().max(0.0) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let edges = (0..=n_bins).map(|i| i as f64 / f64::from(per_unit)).collect();

    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let summary = if sorted.is_empty() {
        Summary { min: 0.0, max: 0.0, mean: 0.0, median: 0.0 }
    } else {
        Summary {
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            median: quantile_sorted(&sorted, 0.5),
        }
    };
    SideHistogram {
        side: side.get(),
        bin_width: 1.0 / f64::from(per_unit),
        edges,
        counts,
        total: scores.len() as u64,
        summary,
    }
}

/// One histogram per side present in `rows`, in ascending side order.
pub fn export(criterion: Criterion, rows: &[ScoredPatch]) -> HistogramExport {
    let mut sides: Vec<PatchSide> = rows.iter().map(|r| r.key.side).collect();
    sides.sort();
    sides.dedup();
    let sides = sides
        .into_iter()
        .map(|side| {
            let scores: Vec<f64> = rows.iter().filter(|r| r.key.side == side).map(|r| r.score).collect();
            side_histogram(criterion, side, &scores)
        })
        .collect();
    HistogramExport { criterion: criterion.as_str().to_owned(), sides }
}

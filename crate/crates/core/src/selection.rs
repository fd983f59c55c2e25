//! Per-image quantile bands, class balancing and image-level splits.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::record::{Label, Split};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    Entropy,
    Memd,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Entropy => "entropy",
            Criterion::Memd => "memd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "entropy" => Some(Criterion::Entropy),
            "memd" => Some(Criterion::Memd),
            _ => None,
        }
    }

    pub fn max_score(self) -> f64 {
        match self {
            Criterion::Entropy => 8.0,
            Criterion::Memd => 255.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Low,
    High,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::High => "high",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Band::Low),
            "high" => Some(Band::High),
            _ => None,
        }
    }
}

/// Band width in `(0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Quantile(f64);

impl Quantile {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q < 0.5 {
            Ok(Self(q))
        } else {
            Err(Error::InvalidQuantile(q))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionSpec {
    pub criterion: Criterion,
    pub band: Band,
    pub quantile: Quantile,
}

/// Scores of the patches of one image under one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    image_id: String,
    criterion: Criterion,
    entries: Vec<(usize, f64)>,
}

impl ScoreTable {
    pub fn new(image_id: impl Into<String>, criterion: Criterion, entries: Vec<(usize, f64)>) -> Result<Self> {
        let image_id = image_id.into();
        if entries.is_empty() {
            return Err(Error::EmptyScoreTable(image_id));
        }
        if let Some(&(_, score)) = entries
            .iter()
            .find(|(_, s)| !s.is_finite() || *s < 0.0 || *s > criterion.max_score())
        {
            return Err(Error::ScoreOutOfRange { criterion: criterion.as_str(), score });
        }
        Ok(Self { image_id, criterion, entries })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    /// Linear-interpolation quantile of the scores, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let mut sorted: Vec<f64> = self.entries.iter().map(|&(_, s)| s).collect();
        sorted.sort_by(f64::total_cmp);
        quantile_sorted(&sorted, q)
    }
}

/// Linear interpolation between order statistics at rank `(n - 1) q`.
///
/// The result is clamped to the bracketing pair so it is monotone in `q`
/// despite rounding.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let rank = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(rank) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let (a, b) = (sorted[lo], sorted[hi]);
    (a + (rank - lo as f64) * (b - a)).clamp(a, b)
}

/// Indices (ascending) of the patches inside the requested band.
///
/// The low band keeps scores `<=` the `q` quantile, the high band scores `>=`
/// the `1 - q` quantile. The threshold lies within the score range, so the
/// result is never empty.
pub fn select_band(table: &ScoreTable, spec: &SelectionSpec) -> Vec<usize> {
    let q = spec.quantile.get();
    let mut out: Vec<usize> = match spec.band {
        Band::Low => {
            let t = table.quantile(q);
            table.entries.iter().filter(|(_, s)| *s <= t).map(|&(i, _)| i).collect()
        }
        Band::High => {
            let t = table.quantile(1.0 - q);
            table.entries.iter().filter(|(_, s)| *s >= t).map(|&(i, _)| i).collect()
        }
    };
    out.sort_unstable();
    out.dedup();
    out
}

/// Image-level split, reproducible from the seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    pub splits: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, image_id: &str) -> Option<Split> {
        self.splits.get(image_id).copied()
    }

    pub fn count(&self, split: Split) -> usize {
        self.splits.values().filter(|&&s| s == split).count()
    }
}

/// `(test, val)` image counts for `n` images: 10% test, then 20% of the rest
/// for validation, each rounded half up.
pub fn split_sizes(n: usize) -> (usize, usize) {
    let test = (n + 5) / 10;
    let val = (2 * (n - test) + 5) / 10;
    (test, val)
}

/// Shuffles the ids with a seeded ChaCha8 generator and cuts test, val and
/// train in that order. The ids are sorted first, so only the set of ids and
/// the seed matter.
pub fn assign_splits(image_ids: &[String], seed: u64) -> Result<SplitAssignment> {
    let mut seen = BTreeSet::new();
    for id in image_ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateImageId(id.clone()));
        }
    }
    let mut order: Vec<&str> = seen.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let (test, val) = split_sizes(order.len());
    let splits = order
        .into_iter()
        .enumerate()
        .map(|(i, id)| {
            let split = if i < test {
                Split::Test
            } else if i < test + val {
                Split::Val
            } else {
                Split::Train
            };
            (String::from(id), split)
        })
        .collect();
    Ok(SplitAssignment { seed, splits })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageCandidate {
    pub id: String,
    pub label: Label,
    pub has_mask: bool,
}

/// All malignant images with a mask plus an equally sized, seeded sample of
/// benign images with a mask. Returned ids are sorted.
pub fn balance_classes(images: &[ImageCandidate], seed: u64) -> Result<Vec<String>> {
    let pick = |label| {
        let mut ids: Vec<&str> = images
            .iter()
            .filter(|c| c.has_mask && c.label == label)
            .map(|c| c.id.as_str())
            .collect();
        ids.sort_unstable();
        ids
    };
    let malignant = pick(Label::Malignant);
    let benign = pick(Label::Benign);
    if benign.len() < malignant.len() {
        return Err(Error::InsufficientBenign { needed: malignant.len(), available: benign.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = malignant
        .iter()
        .chain(benign.choose_multiple(&mut rng, malignant.len()))
        .map(|&id| String::from(id))
        .collect();
    out.sort_unstable();
    Ok(out)
}

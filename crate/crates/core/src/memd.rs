//! Mean Exhaustive Minimum Distance (MEMD) between pixel multisets.
//!
//! The score between images `A` and `B` is the mean distance over
//! `M = min(#A, #B)` pixel matches. Matching follows one canonical procedure,
//! shared by the exhaustive reference and the counting-sort fast path:
//!
//! * equal sizes: the i-th smallest pixel of `A` is paired with the i-th
//!   smallest pixel of `B` (optimal 1D assignment);
//! * unequal sizes: the pixels of the smaller image are visited in ascending
//!   intensity order and each consumes the nearest unconsumed pixel of the
//!   larger image, ties going to the lower intensity.
//!
//! Distances are integers, so every score is kept as an exact rational
//! `total / matches` and converted to `f64` only on request.

use alloc::vec::Vec;

use crate::image::{GrayImage, RgbImage};
use crate::{Error, Result};

/// Exact MEMD value `total_distance / matches`.
#[derive(Debug, Clone, Copy, Eq)]
pub struct MemdScore {
    total: u64,
    matches: u64,
}

impl MemdScore {
    fn new(total: u64, matches: u64) -> Self {
        debug_assert!(matches > 0 && total <= 255 * matches);
        Self { total, matches }
    }

    pub fn total_distance(self) -> u64 {
        self.total
    }

    pub fn matches(self) -> u64 {
        self.matches
    }

    pub fn value(self) -> f64 {
        self.total as f64 / self.matches as f64
    }
}

/// Rational equality: `1/2 == 2/4`.
impl PartialEq for MemdScore {
    fn eq(&self, other: &Self) -> bool {
        u128::from(self.total) * u128::from(other.matches)
            == u128::from(other.total) * u128::from(self.matches)
    }
}

/// 8-bit pixel multiset stored as a 256-bin count; sorting is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMultiset {
    counts: [u32; 256],
    size: u64,
}

impl PixelMultiset {
    pub fn from_pixels(pixels: &[u8]) -> Self {
        let mut counts = [0u32; 256];
        for &p in pixels {
            counts[usize::from(p)] += 1;
        }
        Self { counts, size: pixels.len() as u64 }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        Self::from_pixels(img.pixels())
    }

    pub fn counts(&self) -> &[u32; 256] {
        &self.counts
    }

    pub fn len(&self) -> u64 {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}

/// Reference implementation working on explicit pixel arrays.
///
/// Quadratic in the pixel count for unequal sizes; use [`memd_sorted`] for
/// anything but verification.
pub fn memd_exhaustive(a: &GrayImage, b: &GrayImage) -> Result<MemdScore> {
    memd_exhaustive_pixels(a.pixels(), b.pixels())
}

pub(crate) fn memd_exhaustive_pixels(a: &[u8], b: &[u8]) -> Result<MemdScore> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyImage);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut small = small.to_vec();
    small.sort_unstable();
    let mut large = large.to_vec();
    large.sort_unstable();

    if small.len() == large.len() {
        let total = small.iter().zip(&large).map(|(&x, &y)| u64::from(x.abs_diff(y))).sum();
        return Ok(MemdScore::new(total, small.len() as u64));
    }
    Ok(greedy_match(&small, &large))
}

/// Ascending-order greedy nearest matching for any pair of sizes.
///
/// This is the procedure used for unequal sizes. On equal sizes it can be
/// worse than the sorted pairing: `A = [4, 6]`, `B = [0, 5]` gives 3.5 here
/// against 2.5 for the sorted pairing.
pub fn memd_greedy(a: &GrayImage, b: &GrayImage) -> Result<MemdScore> {
    if a.pixels().is_empty() || b.pixels().is_empty() {
        return Err(Error::EmptyImage);
    }
    let (small, large) = if a.pixels().len() <= b.pixels().len() {
        (a.pixels(), b.pixels())
    } else {
        (b.pixels(), a.pixels())
    };
    let mut small = small.to_vec();
    small.sort_unstable();
    Ok(greedy_match(&small, large))
}

// `small` must be sorted ascending; `large` may be in any order.
fn greedy_match(small: &[u8], large: &[u8]) -> MemdScore {
    let mut consumed = alloc::vec![false; large.len()];
    let mut total = 0u64;
    for &s in small {
        let mut best: Option<(u8, u8, usize)> = None;
        for (k, &l) in large.iter().enumerate() {
            if consumed[k] {
                continue;
            }
            let key = (s.abs_diff(l), l);
            if best.is_none_or(|(d, v, _)| key < (d, v)) {
                best = Some((key.0, key.1, k));
            }
        }
        // small.len() <= large.len(), so an unconsumed pixel always remains
        let (d, _, k) = best.expect("larger image exhausted");
        consumed[k] = true;
        total += u64::from(d);
    }
    MemdScore::new(total, small.len() as u64)
}

/// Set of non-empty intensity bins with predecessor/successor queries.
struct BinSet([u64; 4]);

impl BinSet {
    fn of(counts: &[u32; 256]) -> Self {
        let mut words = [0u64; 4];
        for (v, _) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            words[v / 64] |= 1 << (v % 64);
        }
        Self(words)
    }

    fn remove(&mut self, v: usize) {
        self.0[v / 64] &= !(1 << (v % 64));
    }

    /// Largest member `<= v`.
    fn at_or_below(&self, v: usize) -> Option<usize> {
        let (w, bit) = (v / 64, v % 64);
        let masked = self.0[w] & (u64::MAX >> (63 - bit));
        if masked != 0 {
            return Some(w * 64 + 63 - masked.leading_zeros() as usize);
        }
        (0..w)
            .rev()
            .find(|&i| self.0[i] != 0)
            .map(|i| i * 64 + 63 - self.0[i].leading_zeros() as usize)
    }

    /// Smallest member `>= v`.
    fn at_or_above(&self, v: usize) -> Option<usize> {
        let (w, bit) = (v / 64, v % 64);
        let masked = self.0[w] & (u64::MAX << bit);
        if masked != 0 {
            return Some(w * 64 + masked.trailing_zeros() as usize);
        }
        (w + 1..4)
            .find(|&i| self.0[i] != 0)
            .map(|i| i * 64 + self.0[i].trailing_zeros() as usize)
    }
}

/// Counting-sort fast path; matches [`memd_exhaustive`] exactly.
///
/// Equal sizes are a two-pointer sweep over both histograms. Unequal sizes
/// walk the smaller histogram upward and drain the nearest non-empty bins of
/// the larger one, so the cost is bounded by the number of bins touched
/// rather than by the pixel count.
pub fn memd_sorted(a: &PixelMultiset, b: &PixelMultiset) -> Result<MemdScore> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyImage);
    }
    let (small, large) = if a.size <= b.size { (a, b) } else { (b, a) };
    let total = if small.size == large.size {
        sweep_equal(&small.counts, &large.counts)
    } else {
        drain_nearest(&small.counts, &large.counts)
    };
    Ok(MemdScore::new(total, small.size))
}

fn sweep_equal(a: &[u32; 256], b: &[u32; 256]) -> u64 {
    let (mut i, mut j) = (0usize, 0usize);
    let (mut left_a, mut left_b) = (a[0], b[0]);
    let mut total = 0u64;
    loop {
        while left_a == 0 {
            i += 1;
            if i == 256 {
                return total;
            }
            left_a = a[i];
        }
        while left_b == 0 {
            j += 1;
            left_b = b[j];
        }
        let take = left_a.min(left_b);
        total += u64::from(take) * i.abs_diff(j) as u64;
        left_a -= take;
        left_b -= take;
    }
}

fn drain_nearest(small: &[u32; 256], large: &[u32; 256]) -> u64 {
    let mut remaining = *large;
    let mut bins = BinSet::of(&remaining);
    let mut total = 0u64;
    for (v, &count) in small.iter().enumerate() {
        let mut need = count;
        while need > 0 {
            let below = bins.at_or_below(v);
            let above = bins.at_or_above(v);
            let bin = match (below, above) {
                (Some(lo), Some(hi)) if v - lo <= hi - v => lo,
                (_, Some(hi)) => hi,
                (Some(lo), None) => lo,
                (None, None) => unreachable!("larger multiset exhausted"),
            };
            let take = need.min(remaining[bin]);
            total += u64::from(take) * v.abs_diff(bin) as u64;
            need -= take;
            remaining[bin] -= take;
            if remaining[bin] == 0 {
                bins.remove(bin);
            }
        }
    }
    total
}

fn max_norm(p: [u8; 3]) -> u8 {
    p[0].max(p[1]).max(p[2])
}

fn max_dist(p: [u8; 3], q: [u8; 3]) -> u8 {
    (0..3).map(|c| p[c].abs_diff(q[c])).max().unwrap_or(0)
}

/// Greedy MEMD on RGB pixels with the max-norm distance.
///
/// Pixels of the smaller image are visited by ascending max norm and matched
/// to the nearest unconsumed pixel of the other image. Sorting by a norm does
/// not order vectors by mutual distance, so this is not a sound similarity on
/// colour data; it exists to show why scoring runs on grayscale.
pub fn memd_multichannel_naive(a: &RgbImage, b: &RgbImage) -> Result<MemdScore> {
    let (a, b) = (a.pixels(), b.pixels());
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyImage);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut order: Vec<[u8; 3]> = small.to_vec();
    order.sort_by_key(|&p| max_norm(p));
    let mut consumed = alloc::vec![false; large.len()];
    let mut total = 0u64;
    for &p in &order {
        let (k, d) = large
            .iter()
            .enumerate()
            .filter(|(k, _)| !consumed[*k])
            .map(|(k, &q)| (k, max_dist(p, q)))
            .min_by_key(|&(_, d)| d)
            .expect("larger image exhausted");
        consumed[k] = true;
        total += u64::from(d);
    }
    Ok(MemdScore::new(total, order.len() as u64))
}

/// Average MEMD of one patch against every other patch of the same image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchMemdSummary {
    pub index: usize,
    pub memd_mean: f64,
}

/// Turns per-patch sums of pair distances into means.
///
/// `row_totals[i]` is the sum of the pair totals between patch `i` and every
/// other patch and `matches` the pixel count per patch. Each mean is one
/// division of exact integers, so callers that fill `row_totals` in any order
/// or on any number of threads get the same bits.
pub fn summarize_row_totals(row_totals: &[u64], matches: u64) -> Vec<PatchMemdSummary> {
    let m = row_totals.len() as u64;
    row_totals
        .iter()
        .enumerate()
        .map(|(index, &t)| PatchMemdSummary {
            index,
            memd_mean: if m < 2 { 0.0 } else { t as f64 / (matches * (m - 1)) as f64 },
        })
        .collect()
}

fn patch_multisets(patches: &[GrayImage]) -> Result<Vec<PixelMultiset>> {
    if let Some(first) = patches.first() {
        let dims = (first.width(), first.height());
        if patches.iter().any(|p| (p.width(), p.height()) != dims) {
            return Err(Error::MixedPatchSizes);
        }
    }
    Ok(patches.iter().map(PixelMultiset::from_gray).collect())
}

/// Mean MEMD of every patch against its siblings.
///
/// Each unordered pair is scored once; `on_pair(i, j)` is called for every
/// evaluation.
pub fn per_patch_memd_with(
    patches: &[GrayImage],
    mut on_pair: impl FnMut(usize, usize),
) -> Result<Vec<PatchMemdSummary>> {
    let sets = patch_multisets(patches)?;
    let mut rows = alloc::vec![0u64; sets.len()];
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let score = memd_sorted(&sets[i], &sets[j])?;
            on_pair(i, j);
            rows[i] += score.total_distance();
            rows[j] += score.total_distance();
        }
    }
    let matches = sets.first().map_or(1, PixelMultiset::len);
    Ok(summarize_row_totals(&rows, matches))
}

pub fn per_patch_memd(patches: &[GrayImage]) -> Result<Vec<PatchMemdSummary>> {
    per_patch_memd_with(patches, |_, _| {})
}

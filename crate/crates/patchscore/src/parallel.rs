//! Thread-pool helpers and the parallel per-patch MEMD driver.

use std::sync::atomic::{AtomicU64, Ordering};

use patchscore_core::{memd_sorted, summarize_row_totals, Error as CoreError, GrayImage, PatchMemdSummary, PixelMultiset};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs `f` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invariant(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Parallel equivalent of [`patchscore_core::per_patch_memd`].
///
/// Pairs `(i, j)` with `i < j` are scored once each and their integer totals
/// folded into per-thread row sums, which are then added together. Integer
/// addition is associative, so the result does not depend on scheduling.
/// `pairs` is incremented once per evaluated pair.
pub fn per_patch_memd_par(patches: &[GrayImage], pairs: &AtomicU64) -> Result<Vec<PatchMemdSummary>> {
    if let Some(first) = patches.first() {
        let dims = (first.width(), first.height());
        if patches.iter().any(|p| (p.width(), p.height()) != dims) {
            return Err(CoreError::MixedPatchSizes.into());
        }
    }
    let sets: Vec<PixelMultiset> = patches.par_iter().map(PixelMultiset::from_gray).collect();
    let m = sets.len();
    let rows = (0..m)
        .into_par_iter()
        .try_fold(
            || vec![0u64; m],
            |mut acc, i| {
                for j in i + 1..m {
                    let total = memd_sorted(&sets[i], &sets[j])?.total_distance();
                    acc[i] += total;
                    acc[j] += total;
                }
                pairs.fetch_add((m - i - 1) as u64, Ordering::Relaxed);
                Ok::<_, CoreError>(acc)
            },
        )
        .try_reduce(
            || vec![0u64; m],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )?;
    let matches = sets.first().map_or(1, PixelMultiset::len);
    Ok(summarize_row_totals(&rows, matches))
}

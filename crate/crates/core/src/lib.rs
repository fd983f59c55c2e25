//! Patch extraction and patch scoring for lesion images.
//!
//! This crate is `no_std` (it needs `alloc`) and holds the pure part of the
//! pipeline:
//!
//! * [`image`]: gray/RGB rasters, binary masks, BT.601 grayscale conversion,
//!   region-of-interest tiling and cropping.
//! * [`entropy`]: Shannon entropy over a 256-bin intensity histogram.
//! * [`memd`]: the Mean Exhaustive Minimum Distance similarity score, with an
//!   exhaustive reference implementation and a counting-sort fast path.
//! * [`selection`]: per-image quantile bands, class balancing and
//!   image-level train/val/test splits.
//! * [`aggregate`]: patch-vote aggregation into an image verdict.
//!
//! File formats, PNG decoding, the command line and the parallel drivers live
//! in the `patchscore` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod aggregate;
pub mod entropy;
mod error;
pub mod image;
pub mod memd;
pub mod record;
pub mod selection;

pub use aggregate::{aggregate, AggregateVerdict, PatchPredictions};
pub use entropy::{histogram, shannon_entropy, EntropyScore, IntensityHistogram};
pub use error::Error;
pub use image::{crop, luma, tile_roi, to_grayscale, GrayImage, Mask, PatchSide, RgbImage};
pub use memd::{
    memd_exhaustive, memd_greedy, memd_multichannel_naive, memd_sorted, per_patch_memd,
    per_patch_memd_with, summarize_row_totals, MemdScore, PatchMemdSummary, PixelMultiset,
};
pub use record::{Label, PatchRecord, Split};
pub use selection::{
    assign_splits, balance_classes, quantile_sorted, select_band, split_sizes, Band, Criterion, ImageCandidate, Quantile,
    ScoreTable, SelectionSpec, SplitAssignment,
};

pub type Result<T, E = Error> = core::result::Result<T, E>;

//! On-disk layout of a patch store.
//!
//! ```text
//! <out>/index.csv              source index with absolute paths
//! <out>/patches.csv            image_id,side,origin_x,origin_y,label
//! <out>/patch_counts.json      per-side counts and skipped images
//! <out>/scores_<criterion>.csv image_id,side,origin_x,origin_y,score
//! <out>/histogram_<criterion>.json
//! ```
//!
//! The store keeps coordinates only; pixels are re-cropped from the source
//! images when needed. Rows are sorted by image id, side, then row-major
//! origin. Scores are written with six decimals.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use patchscore_core::{Criterion, Label, PatchSide};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{load_index, DatasetIndex};

pub const PATCHES_FILE: &str = "patches.csv";
pub const COUNTS_FILE: &str = "patch_counts.json";

pub fn scores_file(criterion: Criterion) -> String {
    format!("scores_{}.csv", criterion.as_str())
}

pub fn histogram_file(criterion: Criterion) -> String {
    format!("histogram_{}.json", criterion.as_str())
}

/// Patch coordinates; identity of a patch within a store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchKey {
    pub side: PatchSide,
    pub origin_y: usize,
    pub origin_x: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredPatch {
    pub image_id: String,
    pub key: PatchKey,
    pub label: Label,
}

impl StoredPatch {
    pub fn patch_id(&self) -> String {
        format!("{}_{}_{}_{}", self.image_id, self.key.side, self.key.origin_x, self.key.origin_y)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PatchRow {
    image_id: String,
    side: usize,
    origin_x: usize,
    origin_y: usize,
    label: u8,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScoreRow {
    image_id: String,
    side: usize,
    origin_x: usize,
    origin_y: usize,
    score: String,
}

/// Score with the fixed six-decimal formatting used in every CSV.
pub fn fmt_score(score: f64) -> String {
    format!("{score:.6}")
}

pub(crate) fn parse_side(side: usize, line: u64) -> Result<PatchSide> {
    PatchSide::new(side).map_err(|e| Error::MalformedRow { line, reason: e.to_string() })
}

fn parse_label(v: u8, line: u64) -> Result<Label> {
    Label::parse(&v.to_string()).ok_or(Error::UnknownLabel { line, value: v.to_string() })
}

pub(crate) fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchStore {
    pub dir: PathBuf,
    pub index: DatasetIndex,
    pub patches: Vec<StoredPatch>,
}

impl PatchStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let index = load_index(dir)?;
        let path = dir.join(PATCHES_FILE);
        let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let mut patches = Vec::new();
        for (i, row) in reader.deserialize::<PatchRow>().enumerate() {
            let line = i as u64 + 2;
            let row = row.map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
            patches.push(StoredPatch {
                image_id: row.image_id,
                key: PatchKey { side: parse_side(row.side, line)?, origin_y: row.origin_y, origin_x: row.origin_x },
                label: parse_label(row.label, line)?,
            });
        }
        Ok(Self { dir: dir.to_path_buf(), index, patches })
    }

    pub fn write_patches(dir: &Path, patches: &[StoredPatch]) -> Result<()> {
        let path = dir.join(PATCHES_FILE);
        let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        for p in patches {
            writer
                .serialize(PatchRow {
                    image_id: p.image_id.clone(),
                    side: p.key.side.get(),
                    origin_x: p.key.origin_x,
                    origin_y: p.key.origin_y,
                    label: p.label.as_u8(),
                })
                .map_err(|e| Error::csv(&path, e))?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))
    }

    /// Patches grouped by `(image_id, side)` in canonical order.
    pub fn groups(&self) -> BTreeMap<(String, PatchSide), Vec<PatchKey>> {
        let mut groups: BTreeMap<(String, PatchSide), Vec<PatchKey>> = BTreeMap::new();
        for p in &self.patches {
            groups.entry((p.image_id.clone(), p.key.side)).or_default().push(p.key);
        }
        for keys in groups.values_mut() {
            keys.sort();
        }
        groups
    }

    pub fn image_path(&self, image_id: &str) -> Result<PathBuf> {
        self.index
            .records
            .iter()
            .find(|r| r.image_id == image_id)
            .map(|r| self.index.resolve(&r.image_path))
            .ok_or_else(|| Error::Invariant(format!("patch references unknown image {image_id:?}")))
    }
}

/// One scored patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPatch {
    pub image_id: String,
    pub key: PatchKey,
    pub score: f64,
}

pub fn write_scores(path: &Path, rows: &[ScoredPatch]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        writer
            .serialize(ScoreRow {
                image_id: r.image_id.clone(),
                side: r.key.side.get(),
                origin_x: r.key.origin_x,
                origin_y: r.key.origin_y,
                score: fmt_score(r.score),
            })
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoredPatch>> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<ScoreRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        let score = row
            .score
            .parse::<f64>()
            .map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        out.push(ScoredPatch {
            image_id: row.image_id,
            key: PatchKey { side: parse_side(row.side, line)?, origin_y: row.origin_y, origin_x: row.origin_x },
            score,
        });
    }
    Ok(out)
}

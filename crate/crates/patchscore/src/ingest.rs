//! Dataset index files and PNG loading.
//!
//! A dataset directory holds `index.csv` with the header
//! `image_id,image_path,mask_path,label`. Paths are relative to the
//! directory (absolute paths are kept as is); an empty `mask_path` means the
//! image has no mask.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use patchscore_core::{luma, GrayImage, Label, Mask};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRecord {
    pub image_id: String,
    pub image_path: PathBuf,
    pub mask_path: Option<PathBuf>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub records: Vec<IndexRecord>,
}

impl DatasetIndex {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.root.join(path)
    }

    /// Same records with every path made absolute against `root`.
    pub fn absolutized(&self) -> Result<DatasetIndex> {
        let root = fs::canonicalize(&self.root).map_err(|e| Error::io(&self.root, e))?;
        let records = self
            .records
            .iter()
            .map(|r| IndexRecord {
                image_id: r.image_id.clone(),
                image_path: root.join(&r.image_path),
                mask_path: r.mask_path.as_ref().map(|m| root.join(m)),
                label: r.label,
            })
            .collect();
        Ok(DatasetIndex { root, records })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    image_id: String,
    image_path: String,
    mask_path: String,
    label: String,
}

/// Reads and validates `<root>/index.csv`. Files are only checked for
/// existence, never opened for writing.
pub fn load_index(root: &Path) -> Result<DatasetIndex> {
    let path = root.join(INDEX_FILE);
    if !path.is_file() {
        return Err(Error::MissingIndexFile(root.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.deserialize::<IndexRow>() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::MalformedRow { line, reason: e.to_string() }
        })?;
        // header is line 1
        let line = records.len() as u64 + 2;
        let label = Label::parse(row.label.trim())
            .ok_or_else(|| Error::UnknownLabel { line, value: row.label.clone() })?;
        if row.image_id.is_empty() || !seen.insert(row.image_id.clone()) {
            return Err(Error::MalformedRow {
                line,
                reason: format!("empty or duplicate image id {:?}", row.image_id),
            });
        }
        let image_path = PathBuf::from(&row.image_path);
        let mask_path = (!row.mask_path.is_empty()).then(|| PathBuf::from(&row.mask_path));
        for p in std::iter::once(&image_path).chain(mask_path.as_ref()) {
            let full = root.join(p);
            if !full.is_file() {
                return Err(Error::MissingFile(full));
            }
        }
        records.push(IndexRecord { image_id: row.image_id, image_path, mask_path, label });
    }
    Ok(DatasetIndex { root: root.to_path_buf(), records })
}

/// Writes `<root>/index.csv`; [`load_index`] reads it back unchanged.
pub fn write_index(root: &Path, index: &DatasetIndex) -> Result<()> {
    let path = root.join(INDEX_FILE);
    let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    for r in &index.records {
        writer
            .serialize(IndexRow {
                image_id: r.image_id.clone(),
                image_path: r.image_path.to_string_lossy().into_owned(),
                mask_path: r.mask_path.as_ref().map(|m| m.to_string_lossy().into_owned()).unwrap_or_default(),
                label: r.label.as_str().to_owned(),
            })
            .map_err(|e| Error::csv(&path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))
}

fn decode_rgb(path: &Path) -> Result<image::RgbImage> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|source| Error::Decode { path: path.to_path_buf(), source })?;
    Ok(img.to_rgb8())
}

/// Loads an 8-bit RGB or gray PNG as BT.601 grayscale.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let rgb = decode_rgb(path)?;
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb.pixels().map(|p| luma(p.0)).collect();
    Ok(GrayImage::new(w, h, pixels)?)
}

/// Loads a PNG mask; pixels brighter than 127 are set.
pub fn load_mask(path: &Path) -> Result<Mask> {
    let rgb = decode_rgb(path)?;
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let bits = rgb.pixels().map(|p| luma(p.0) > 127).collect();
    Ok(Mask::new(w, h, bits)?)
}

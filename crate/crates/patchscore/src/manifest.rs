//! Dataset manifests: the selected patches of one experiment dataset.
//!
//! A manifest is a CSV file preceded by `# key=value` header lines:
//!
//! ```text
//! # criterion=entropy
//! # band=high
//! # quantile=0.15
//! # side=64
//! # seed=0
//! # tool_version=0.1.0
//! patch_id,image_id,origin_x,origin_y,side,label,entropy,memd_mean,split
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use patchscore_core::{Band, Criterion, Label, PatchSide, Quantile, Split};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::{create, fmt_score, parse_side};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifestHeader {
    pub criterion: Criterion,
    pub band: Band,
    pub quantile: Quantile,
    pub side: PatchSide,
    pub seed: u64,
}

impl ManifestHeader {
    pub fn file_name(&self) -> String {
        format!(
            "manifest_{}_{}_{}_{}.csv",
            self.criterion.as_str(),
            self.band.as_str(),
            self.quantile.get(),
            self.side
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub image_id: String,
    pub origin_x: usize,
    pub origin_y: usize,
    pub side: PatchSide,
    pub label: Label,
    pub entropy: Option<f64>,
    pub memd_mean: Option<f64>,
    pub split: Split,
}

impl ManifestRow {
    pub fn patch_id(&self) -> String {
        format!("{}_{}_{}_{}", self.image_id, self.side, self.origin_x, self.origin_y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub rows: Vec<ManifestRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    patch_id: String,
    image_id: String,
    origin_x: usize,
    origin_y: usize,
    side: usize,
    label: u8,
    entropy: String,
    memd_mean: String,
    split: String,
}

fn opt_score(v: Option<f64>) -> String {
    v.map(fmt_score).unwrap_or_default()
}

fn parse_opt(s: &str, line: u64) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| Error::MalformedRow { line, reason: format!("bad score {s:?}") })
}

impl DatasetManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let h = &self.header;
        let mut file = create(path)?;
        write!(
            file,
            "# criterion={}\n# band={}\n# quantile={}\n# side={}\n# seed={}\n# tool_version={}\n",
            h.criterion.as_str(),
            h.band.as_str(),
            h.quantile.get(),
            h.side,
            h.seed,
            TOOL_VERSION
        )
        .map_err(|e| Error::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        for r in &self.rows {
            writer
                .serialize(Row {
                    patch_id: r.patch_id(),
                    image_id: r.image_id.clone(),
                    origin_x: r.origin_x,
                    origin_y: r.origin_y,
                    side: r.side.get(),
                    label: r.label.as_u8(),
                    entropy: opt_score(r.entropy),
                    memd_mean: opt_score(r.memd_mean),
                    split: r.split.as_str().to_owned(),
                })
                .map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut fields = std::collections::HashMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
                fields.insert(k.to_owned(), v.to_owned());
            }
        }
        let field = |k: &str| {
            fields
                .get(k)
                .cloned()
                .ok_or_else(|| Error::MalformedRow { line: 0, reason: format!("manifest header lacks {k}") })
        };
        let bad = |k: &str| Error::MalformedRow { line: 0, reason: format!("bad manifest header {k}") };
        let header = ManifestHeader {
            criterion: Criterion::parse(&field("criterion")?).ok_or_else(|| bad("criterion"))?,
            band: Band::parse(&field("band")?).ok_or_else(|| bad("band"))?,
            quantile: field("quantile")?
                .parse::<f64>()
                .ok()
                .and_then(|q| Quantile::new(q).ok())
                .ok_or_else(|| bad("quantile"))?,
            side: field("side")?.parse::<usize>().ok().and_then(|s| PatchSide::new(s).ok()).ok_or_else(|| bad("side"))?,
            seed: field("seed")?.parse().map_err(|_| bad("seed"))?,
        };

        let header_lines = fields.len() as u64;
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = header_lines + i as u64 + 2;
            let row = row.map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
            let label = Label::parse(&row.label.to_string())
                .ok_or_else(|| Error::UnknownLabel { line, value: row.label.to_string() })?;
            let split = Split::parse(&row.split)
                .ok_or_else(|| Error::MalformedRow { line, reason: format!("bad split {:?}", row.split) })?;
            let parsed = ManifestRow {
                image_id: row.image_id,
                origin_x: row.origin_x,
                origin_y: row.origin_y,
                side: parse_side(row.side, line)?,
                label,
                entropy: parse_opt(&row.entropy, line)?,
                memd_mean: parse_opt(&row.memd_mean, line)?,
                split,
            };
            if parsed.patch_id() != row.patch_id {
                return Err(Error::MalformedRow { line, reason: format!("patch id {:?} does not match its row", row.patch_id) });
            }
            rows.push(parsed);
        }
        Ok(Self { header, rows })
    }
}

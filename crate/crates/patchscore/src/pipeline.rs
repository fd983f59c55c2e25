//! The pipeline stages behind the CLI subcommands.
//!
//! Every stage fans out over images on the current rayon pool and collects
//! results back into canonical order (image id, side, row-major origin)
//! before anything is written, so outputs do not depend on the thread count.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use log::{info, warn};
use patchscore_core::{
    aggregate as aggregate_votes, assign_splits, balance_classes, crop, histogram, select_band,
    shannon_entropy, tile_roi, AggregateVerdict, Band, Criterion, GrayImage, ImageCandidate, Label,
    PatchPredictions, PatchSide, Quantile, ScoreTable, SelectionSpec, Split,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::{self, HistogramExport};
use crate::ingest::{load_gray, load_mask, write_index, DatasetIndex, IndexRecord};
use crate::manifest::{DatasetManifest, ManifestHeader, ManifestRow};
use crate::parallel::per_patch_memd_par;
use crate::store::{
    histogram_file, read_scores, scores_file, write_json, write_scores, PatchKey, PatchStore,
    ScoredPatch, StoredPatch, COUNTS_FILE,
};

// ---------------------------------------------------------------- extract

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideCount {
    pub side: usize,
    pub patches: u64,
    pub images: u64,
    /// Images whose region of interest yields no patch at this side.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Unusable {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub coverage_threshold: f64,
    pub sides: Vec<SideCount>,
    pub unusable: Vec<Unusable>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub patches: Vec<StoredPatch>,
    pub report: CountReport,
}

enum Tiled {
    Patches(Vec<(PatchSide, Vec<(usize, usize)>)>),
    Unusable(&'static str),
}

fn tile_record(index: &DatasetIndex, r: &IndexRecord, sides: &[PatchSide], threshold: f64) -> Result<Tiled> {
    let Some(mask_path) = &r.mask_path else {
        return Ok(Tiled::Unusable("no mask"));
    };
    let image_path = index.resolve(&r.image_path);
    let (w, h) = image::image_dimensions(&image_path)
        .map_err(|source| Error::Decode { path: image_path.clone(), source })?;
    let mask = load_mask(&index.resolve(mask_path))?;
    if mask.is_empty() {
        return Ok(Tiled::Unusable("empty mask"));
    }
    let tiles = sides
        .iter()
        .map(|&side| Ok((side, tile_roi((w as usize, h as usize), &mask, side, threshold)?)))
        .collect::<Result<_>>()?;
    Ok(Tiled::Patches(tiles))
}

/// Tiles the region of interest of every masked image at each side.
pub fn extract(index: &DatasetIndex, sides: &[PatchSide], threshold: f64) -> Result<Extraction> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Invalid(format!("coverage threshold {threshold} outside [0, 1]")));
    }
    let mut sides = sides.to_vec();
    sides.sort();
    sides.dedup();
    let mut records: Vec<&IndexRecord> = index.records.iter().collect();
    records.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let tiled: Vec<Tiled> = records
        .par_iter()
        .map(|r| tile_record(index, r, &sides, threshold))
        .collect::<Result<_>>()?;

    let mut patches = Vec::new();
    let mut counts: BTreeMap<PatchSide, SideCount> = sides
        .iter()
        .map(|&s| (s, SideCount { side: s.get(), patches: 0, images: 0, skipped: Vec::new() }))
        .collect();
    let mut unusable = Vec::new();
    for (r, t) in records.iter().zip(tiled) {
        match t {
            Tiled::Unusable(reason) => {
                warn!("skipping {}: {reason}", r.image_id);
                unusable.push(Unusable { image_id: r.image_id.clone(), reason: reason.to_owned() });
            }
            Tiled::Patches(per_side) => {
                for (side, origins) in per_side {
                    let c = counts.get_mut(&side).expect("side registered");
                    if origins.is_empty() {
                        info!("{}: no patch of side {side}", r.image_id);
                        c.skipped.push(r.image_id.clone());
                        continue;
                    }
                    c.images += 1;
                    c.patches += origins.len() as u64;
                    patches.extend(origins.into_iter().map(|(x, y)| StoredPatch {
                        image_id: r.image_id.clone(),
                        key: PatchKey { side, origin_y: y, origin_x: x },
                        label: r.label,
                    }));
                }
            }
        }
    }
    patches.sort_by(|a, b| (&a.image_id, a.key).cmp(&(&b.image_id, b.key)));
    Ok(Extraction {
        patches,
        report: CountReport { coverage_threshold: threshold, sides: counts.into_values().collect(), unusable },
    })
}

/// Runs [`extract`] and writes the patch store into `out`.
pub fn cmd_extract(index: &DatasetIndex, sides: &[PatchSide], threshold: f64, out: &Path) -> Result<CountReport> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let index = index.absolutized()?;
    let out_abs = fs::canonicalize(out).map_err(|e| Error::io(out, e))?;
    if out_abs == index.root {
        return Err(Error::Invalid("output directory must differ from the dataset directory".into()));
    }
    let extraction = extract(&index, sides, threshold)?;
    write_index(out, &DatasetIndex { root: out.to_path_buf(), records: index.records.clone() })?;
    PatchStore::write_patches(out, &extraction.patches)?;
    write_json(&out.join(COUNTS_FILE), &extraction.report)?;
    Ok(extraction.report)
}

// ------------------------------------------------------------------ score

fn crops(img: &GrayImage, keys: &[PatchKey]) -> Result<Vec<GrayImage>> {
    keys.iter()
        .map(|k| Ok(crop(img, (k.origin_x, k.origin_y), k.side.get())?))
        .collect()
}

fn score_group(img: &GrayImage, keys: &[PatchKey], criterion: Criterion, pairs: &AtomicU64) -> Result<Vec<f64>> {
    let patches = crops(img, keys)?;
    Ok(match criterion {
        Criterion::Entropy => patches.iter().map(|p| shannon_entropy(&histogram(p)).value()).collect(),
        Criterion::Memd => per_patch_memd_par(&patches, pairs)?.into_iter().map(|s| s.memd_mean).collect(),
    })
}

type SideGroups = Vec<(PatchSide, Vec<PatchKey>)>;

/// Groups the store by image so each source image is decoded once.
fn by_image(store: &PatchStore) -> Vec<(String, SideGroups)> {
    let mut images: BTreeMap<String, SideGroups> = BTreeMap::new();
    for ((image_id, side), keys) in store.groups() {
        images.entry(image_id).or_default().push((side, keys));
    }
    images.into_iter().collect()
}

/// Scores every stored patch. MEMD is the mean against the other patches of
/// the same image and side.
pub fn score(store: &PatchStore, criterion: Criterion) -> Result<Vec<ScoredPatch>> {
    let pairs = AtomicU64::new(0);
    let per_image: Vec<Vec<ScoredPatch>> = by_image(store)
        .par_iter()
        .map(|(image_id, groups)| {
            let img = load_gray(&store.image_path(image_id)?)?;
            let mut rows = Vec::new();
            for (_, keys) in groups {
                let scores = score_group(&img, keys, criterion, &pairs)?;
                rows.extend(keys.iter().zip(scores).map(|(&key, score)| ScoredPatch {
                    image_id: image_id.clone(),
                    key,
                    score,
                }));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    info!("{} pair evaluations", pairs.load(Ordering::Relaxed));
    Ok(per_image.into_iter().flatten().collect())
}

pub fn cmd_score(store: &PatchStore, criterion: Criterion) -> Result<HistogramExport> {
    let rows = score(store, criterion)?;
    write_scores(&store.dir.join(scores_file(criterion)), &rows)?;
    let export = histogram::export(criterion, &rows);
    write_json(&store.dir.join(histogram_file(criterion)), &export)?;
    Ok(export)
}

// ----------------------------------------------------------------- select

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    pub spec: SelectionSpec,
    pub seed: u64,
}

fn score_lookup(rows: Vec<ScoredPatch>) -> HashMap<(String, PatchKey), f64> {
    rows.into_iter().map(|r| ((r.image_id, r.key), r.score)).collect()
}

/// Builds one manifest per side: class-balanced images, image-level splits,
/// and the per-image quantile band of each image's patches.
pub fn select(store: &PatchStore, opts: &SelectOptions, sides: &[PatchSide]) -> Result<Vec<DatasetManifest>> {
    let criterion = opts.spec.criterion;
    let primary = score_lookup(read_scores(&store.dir.join(scores_file(criterion)))?);
    let other_criterion = match criterion {
        Criterion::Entropy => Criterion::Memd,
        Criterion::Memd => Criterion::Entropy,
    };
    let other_path = store.dir.join(scores_file(other_criterion));
    let other = if other_path.is_file() { score_lookup(read_scores(&other_path)?) } else { HashMap::new() };

    let candidates: Vec<ImageCandidate> = store
        .index
        .records
        .iter()
        .map(|r| ImageCandidate { id: r.image_id.clone(), label: r.label, has_mask: r.mask_path.is_some() })
        .collect();
    let chosen = balance_classes(&candidates, opts.seed)?;
    let splits = assign_splits(&chosen, opts.seed)?;
    let labels: HashMap<&str, Label> = store.index.records.iter().map(|r| (r.image_id.as_str(), r.label)).collect();

    let groups = store.groups();
    let mut manifests = Vec::new();
    let mut wanted: Vec<PatchSide> = sides.to_vec();
    wanted.sort();
    wanted.dedup();
    for side in wanted {
        let mut rows = Vec::new();
        for image_id in &chosen {
            let Some(keys) = groups.get(&(image_id.clone(), side)) else { continue };
            let entries = keys
                .iter()
                .enumerate()
                .map(|(i, k)| {
                    primary.get(&(image_id.clone(), *k)).map(|&s| (i, s)).ok_or_else(|| {
                        Error::Invalid(format!("{image_id}: patch {k:?} has no {} score; rerun score", criterion.as_str()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let table = ScoreTable::new(image_id.clone(), criterion, entries)?;
            for i in select_band(&table, &opts.spec) {
                let key = keys[i];
                let lookup = (image_id.clone(), key);
                let (own, sibling) = (primary.get(&lookup).copied(), other.get(&lookup).copied());
                let (entropy, memd_mean) = match criterion {
                    Criterion::Entropy => (own, sibling),
                    Criterion::Memd => (sibling, own),
                };
                rows.push(ManifestRow {
                    image_id: image_id.clone(),
                    origin_x: key.origin_x,
                    origin_y: key.origin_y,
                    side,
                    label: labels[image_id.as_str()],
                    entropy,
                    memd_mean,
                    split: splits
                        .get(image_id)
                        .ok_or_else(|| Error::Invariant(format!("{image_id} missing from split")))?,
                });
            }
        }
        manifests.push(DatasetManifest {
            header: ManifestHeader {
                criterion,
                band: opts.spec.band,
                quantile: opts.spec.quantile,
                side,
                seed: opts.seed,
            },
            rows,
        });
    }
    Ok(manifests)
}

pub fn cmd_select(store: &PatchStore, opts: &SelectOptions, sides: &[PatchSide]) -> Result<Vec<PathBuf>> {
    let manifests = select(store, opts, sides)?;
    manifests
        .iter()
        .map(|m| {
            let path = store.dir.join(m.header.file_name());
            m.write(&path)?;
            Ok(path)
        })
        .collect()
}

// -------------------------------------------------------------- aggregate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub test_images: u64,
    pub correct: u64,
    /// Rounded to 0.1; absent when the test split is empty.
    pub accuracy_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageVerdict {
    pub verdict: AggregateVerdict,
    pub truth: Label,
}

#[derive(Debug, Deserialize)]
struct PredictionRow {
    patch_id: String,
    prediction: u8,
}

pub fn read_predictions(path: &Path) -> Result<HashMap<String, u8>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = HashMap::new();
    for (i, row) in reader.deserialize::<PredictionRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::MalformedRow { line, reason: e.to_string() })?;
        if row.prediction > 1 {
            return Err(Error::MalformedRow { line, reason: format!("prediction {} is not 0 or 1", row.prediction) });
        }
        if out.insert(row.patch_id.clone(), row.prediction).is_some() {
            return Err(Error::MalformedRow { line, reason: format!("duplicate prediction for {}", row.patch_id) });
        }
    }
    Ok(out)
}

/// Image verdicts for the test split of `manifest`.
pub fn aggregate(predictions: &HashMap<String, u8>, manifest: &DatasetManifest) -> Result<(Vec<ImageVerdict>, AccuracyReport)> {
    let known: HashSet<String> = manifest.rows.iter().map(ManifestRow::patch_id).collect();
    let mut unknown: Vec<&String> = predictions.keys().filter(|id| !known.contains(*id)).collect();
    unknown.sort();
    if let Some(id) = unknown.first() {
        return Err(Error::UnknownPatch((*id).clone()));
    }

    let mut per_image: BTreeMap<&str, (Label, Vec<u8>)> = BTreeMap::new();
    for row in manifest.rows.iter().filter(|r| r.split == Split::Test) {
        let id = row.patch_id();
        let pred = *predictions.get(&id).ok_or(Error::MissingPrediction(id))?;
        per_image.entry(&row.image_id).or_insert_with(|| (row.label, Vec::new())).1.push(pred);
    }

    let mut verdicts = Vec::new();
    for (image_id, (truth, preds)) in per_image {
        let verdict = aggregate_votes(&PatchPredictions::new(image_id, preds)?);
        verdicts.push(ImageVerdict { verdict, truth });
    }
    let correct = verdicts.iter().filter(|v| v.verdict.verdict == v.truth).count() as u64;
    let total = verdicts.len() as u64;
    let accuracy_percent = (total > 0).then(|| (correct as f64 * 1000.0 / total as f64).round() / 10.0);
    Ok((verdicts, AccuracyReport { test_images: total, correct, accuracy_percent }))
}

pub const VERDICTS_FILE: &str = "verdicts.csv";
pub const ACCURACY_FILE: &str = "accuracy.json";

pub fn cmd_aggregate(predictions: &Path, manifest: &Path, out: &Path) -> Result<AccuracyReport> {
    let manifest = DatasetManifest::read(manifest)?;
    let (verdicts, report) = aggregate(&read_predictions(predictions)?, &manifest)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(VERDICTS_FILE);
    let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
    writer
        .write_record(["image_id", "label", "mean_score", "verdict"])
        .map_err(|e| Error::csv(&path, e))?;
    for v in &verdicts {
        writer
            .write_record([
                v.verdict.image_id.clone(),
                v.truth.as_u8().to_string(),
                crate::store::fmt_score(v.verdict.mean_score),
                v.verdict.verdict.as_u8().to_string(),
            ])
            .map_err(|e| Error::csv(&path, e))?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))?;
    write_json(&out.join(ACCURACY_FILE), &report)?;
    Ok(report)
}

// ------------------------------------------------------------------ bench

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub image_id: String,
    pub side: usize,
    pub patches: u64,
    /// Pair evaluations per repetition; only meaningful for MEMD.
    pub pairs: Option<u64>,
    pub samples_sec: Vec<f64>,
    pub median_sec: f64,
    pub pairs_per_sec: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub criterion: String,
    pub repetitions: usize,
    pub entries: Vec<BenchEntry>,
}

pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    patchscore_core::quantile_sorted(&s, 0.5)
}

/// Times the scoring of each (image, side) group. Images are decoded and
/// cropped before the clock starts; groups run one after another so timings
/// do not interfere.
pub fn bench(store: &PatchStore, criterion: Criterion, repetitions: usize) -> Result<BenchReport> {
    let mut entries = Vec::new();
    for (image_id, groups) in by_image(store) {
        let img = load_gray(&store.image_path(&image_id)?)?;
        for (side, keys) in groups {
            let m = keys.len() as u64;
            let expected_pairs = m * m.saturating_sub(1) / 2;
            let mut samples = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let counter = AtomicU64::new(0);
                let start = Instant::now();
                score_group(&img, &keys, criterion, &counter)?;
                samples.push(start.elapsed().as_secs_f64());
                let seen = counter.load(Ordering::Relaxed);
                if criterion == Criterion::Memd && seen != expected_pairs {
                    return Err(Error::Invariant(format!("{image_id}: {seen} pair evaluations for {m} patches")));
                }
            }
            let pairs = (criterion == Criterion::Memd).then_some(expected_pairs);
            let median_sec = median(&samples);
            entries.push(BenchEntry {
                image_id: image_id.clone(),
                side: side.get(),
                patches: m,
                pairs,
                pairs_per_sec: pairs.filter(|_| median_sec > 0.0).map(|p| p as f64 / median_sec),
                samples_sec: samples,
                median_sec,
            });
        }
    }
    Ok(BenchReport { criterion: criterion.as_str().to_owned(), repetitions, entries })
}

pub const BENCH_FILE: &str = "bench.json";

pub fn cmd_bench(store: &PatchStore, criterion: Criterion, repetitions: usize) -> Result<BenchReport> {
    let report = bench(store, criterion, repetitions)?;
    write_json(&store.dir.join(BENCH_FILE), &report)?;
    Ok(report)
}

/// Shorthand used by the CLI and tests.
pub fn selection_spec(criterion: Criterion, band: Band, quantile: f64) -> Result<SelectionSpec> {
    Ok(SelectionSpec { criterion, band, quantile: Quantile::new(quantile)? })
}

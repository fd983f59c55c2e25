mod common;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use common::{checkerboard, constant, full_mask, synthetic_corpus, write_dataset, Sample};
use patchscore::error::Error;
use patchscore::ingest::load_index;
use patchscore::manifest::DatasetManifest;
use patchscore::pipeline::{self, SelectOptions};
use patchscore::store::{read_scores, scores_file, PatchStore};
use patchscore_core::{select_band, Band, Criterion, PatchSide, ScoreTable, Split};

fn sides(list: &[usize]) -> Vec<PatchSide> {
    list.iter().map(|&s| PatchSide::new(s).unwrap()).collect()
}

fn extract_store(root: &Path, out: &Path, side_list: &[usize]) -> (pipeline::CountReport, PatchStore) {
    let index = load_index(root).unwrap();
    let report = pipeline::cmd_extract(&index, &sides(side_list), 0.5, out).unwrap();
    (report, PatchStore::open(out).unwrap())
}

fn single(id: &str, image: image::GrayImage) -> Vec<Sample> {
    let (w, h) = image.dimensions();
    vec![Sample { id: id.into(), label: "benign", image, mask: Some(full_mask(w, h)) }]
}

#[test]
fn extract_counts() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, &single("a", constant(64, 64, 100)));

    let (report, store) = extract_store(&data, &dir.path().join("out32"), &[32]);
    assert_eq!(report.sides[0].patches, 4);
    assert_eq!(store.patches.len(), 4);

    let (report, store) = extract_store(&data, &dir.path().join("out256"), &[256]);
    assert_eq!(report.sides[0].patches, 0);
    assert_eq!(report.sides[0].skipped, vec!["a".to_string()]);
    assert!(store.patches.is_empty());

    let twin = dir.path().join("twin");
    let mut samples = single("a", constant(64, 64, 100));
    samples.extend(single("b", constant(64, 64, 100)));
    write_dataset(&twin, &samples);
    let (report, _) = extract_store(&twin, &dir.path().join("out_twin"), &[32]);
    assert_eq!(report.sides[0].patches, 8);
}

#[test]
fn extract_flags_unusable_images() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(
        &data,
        &[
            Sample { id: "nomask".into(), label: "benign", image: constant(64, 64, 1), mask: None },
            Sample { id: "empty".into(), label: "benign", image: constant(64, 64, 1), mask: Some(constant(64, 64, 0)) },
        ],
    );
    let (report, store) = extract_store(&data, &dir.path().join("out"), &[32]);
    let reasons: Vec<(&str, &str)> = report.unusable.iter().map(|u| (u.image_id.as_str(), u.reason.as_str())).collect();
    assert_eq!(reasons, vec![("empty", "empty mask"), ("nomask", "no mask")]);
    assert!(store.patches.is_empty());
}

#[test]
fn extract_refuses_dataset_dir_as_output() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &single("a", constant(64, 64, 1)));
    let index = load_index(dir.path()).unwrap();
    let err = pipeline::cmd_extract(&index, &sides(&[32]), 0.5, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn score_examples() {
    let dir = tempfile::tempdir().unwrap();

    // 40x40 ROI at side 32: exactly one patch, whose MEMD mean is 0
    let data = dir.path().join("one");
    write_dataset(&data, &single("solo", checkerboard(40, 40)));
    let (_, store) = extract_store(&data, &dir.path().join("out_one"), &[32]);
    let export = pipeline::cmd_score(&store, Criterion::Memd).unwrap();
    assert_eq!(export.sides[0].counts[0], 1);
    assert_eq!(export.sides[0].total, 1);

    let data = dir.path().join("flat");
    write_dataset(&data, &single("flat", constant(96, 64, 77)));
    let (_, store) = extract_store(&data, &dir.path().join("out_flat"), &[32]);
    let rows = pipeline::score(&store, Criterion::Entropy).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.score == 0.0));

    let data = dir.path().join("check");
    write_dataset(&data, &single("check", checkerboard(64, 64)));
    let (_, store) = extract_store(&data, &dir.path().join("out_check"), &[32]);
    let rows = pipeline::score(&store, Criterion::Entropy).unwrap();
    assert!(rows.iter().all(|r| (r.score - 1.0).abs() < 1e-12));
}

#[test]
fn histogram_totals_match_score_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_corpus(&dir.path().join("data"));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[32, 64]);
    for criterion in [Criterion::Entropy, Criterion::Memd] {
        let export = pipeline::cmd_score(&store, criterion).unwrap();
        let rows = read_scores(&store.dir.join(scores_file(criterion))).unwrap();
        for h in &export.sides {
            let n = rows.iter().filter(|r| r.key.side.get() == h.side).count() as u64;
            assert_eq!(h.total, n);
            assert_eq!(h.counts.iter().sum::<u64>(), n);
        }
    }
}

#[test]
fn select_matches_in_process_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_corpus(&dir.path().join("data"));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[32]);
    pipeline::cmd_score(&store, Criterion::Entropy).unwrap();
    pipeline::cmd_score(&store, Criterion::Memd).unwrap();

    let spec = pipeline::selection_spec(Criterion::Entropy, Band::High, 0.15).unwrap();
    let opts = SelectOptions { spec, seed: 5 };
    let paths = pipeline::cmd_select(&store, &opts, &sides(&[32])).unwrap();
    let manifest = DatasetManifest::read(&paths[0]).unwrap();

    let scores = read_scores(&store.dir.join(scores_file(Criterion::Entropy))).unwrap();
    let groups = store.groups();
    let mut expected = Vec::new();
    for ((image_id, _side), keys) in &groups {
        let entries = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (i, scores.iter().find(|r| &r.image_id == image_id && r.key == *k).unwrap().score))
            .collect();
        let table = ScoreTable::new(image_id.clone(), Criterion::Entropy, entries).unwrap();
        expected.extend(select_band(&table, &spec).into_iter().map(|i| (image_id.clone(), keys[i].origin_x, keys[i].origin_y)));
    }
    let got: Vec<_> = manifest.rows.iter().map(|r| (r.image_id.clone(), r.origin_x, r.origin_y)).collect();
    assert_eq!(got, expected);
    assert!(manifest.rows.iter().all(|r| r.entropy.is_some() && r.memd_mean.is_some()));

    // split is constant per image
    let mut per_image: HashMap<&str, Split> = HashMap::new();
    for r in &manifest.rows {
        assert_eq!(*per_image.entry(&r.image_id).or_insert(r.split), r.split);
    }

    // rerun is byte-identical
    let first = fs::read(&paths[0]).unwrap();
    pipeline::cmd_select(&store, &opts, &sides(&[32])).unwrap();
    assert_eq!(fs::read(&paths[0]).unwrap(), first);
}

#[test]
fn select_without_scores_fails() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_corpus(&dir.path().join("data"));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[64]);
    let spec = pipeline::selection_spec(Criterion::Memd, Band::Low, 0.3).unwrap();
    let err = pipeline::select(&store, &SelectOptions { spec, seed: 0 }, &sides(&[64])).unwrap_err();
    assert!(matches!(err, Error::MissingFile(_)));
}

fn write_predictions(path: &Path, manifest: &DatasetManifest, predict: impl Fn(u8) -> u8) {
    let mut text = String::from("patch_id,prediction\n");
    for r in manifest.rows.iter().filter(|r| r.split == Split::Test) {
        text.push_str(&format!("{},{}\n", r.patch_id(), predict(r.label.as_u8())));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn aggregate_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_corpus(&dir.path().join("data"));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[32]);
    pipeline::cmd_score(&store, Criterion::Entropy).unwrap();
    let spec = pipeline::selection_spec(Criterion::Entropy, Band::Low, 0.3).unwrap();
    let path = &pipeline::cmd_select(&store, &SelectOptions { spec, seed: 1 }, &sides(&[32])).unwrap()[0];
    let manifest = DatasetManifest::read(path).unwrap();
    let preds = dir.path().join("preds.csv");

    write_predictions(&preds, &manifest, |label| label);
    let report = pipeline::cmd_aggregate(&preds, path, &dir.path().join("agg")).unwrap();
    assert_eq!(report.test_images, 2);
    assert_eq!(report.accuracy_percent, Some(100.0));

    write_predictions(&preds, &manifest, |label| 1 - label);
    let report = pipeline::cmd_aggregate(&preds, path, &dir.path().join("agg")).unwrap();
    assert_eq!(report.accuracy_percent, Some(0.0));
    let verdicts = fs::read_to_string(dir.path().join("agg").join(pipeline::VERDICTS_FILE)).unwrap();
    assert_eq!(verdicts.lines().count(), 3);

    // drop one test prediction
    let text = fs::read_to_string(&preds).unwrap();
    let truncated: Vec<&str> = text.lines().take(text.lines().count() - 1).collect();
    fs::write(&preds, truncated.join("\n") + "\n").unwrap();
    assert!(matches!(pipeline::cmd_aggregate(&preds, path, dir.path()), Err(Error::MissingPrediction(_))));

    fs::write(&preds, "patch_id,prediction\nghost_32_0_0,1\n").unwrap();
    assert!(matches!(pipeline::cmd_aggregate(&preds, path, dir.path()), Err(Error::UnknownPatch(_))));
}

#[test]
fn aggregate_boundary_counts_as_malignant() {
    use patchscore_core::{Label, PatchSide, Quantile};
    use patchscore::manifest::{ManifestHeader, ManifestRow};

    let side = PatchSide::new(32).unwrap();
    let row = |x| ManifestRow {
        image_id: "m".into(),
        origin_x: x,
        origin_y: 0,
        side,
        label: Label::Malignant,
        entropy: None,
        memd_mean: None,
        split: Split::Test,
    };
    let manifest = DatasetManifest {
        header: ManifestHeader {
            criterion: Criterion::Entropy,
            band: Band::Low,
            quantile: Quantile::new(0.15).unwrap(),
            side,
            seed: 0,
        },
        rows: vec![row(0), row(32)],
    };
    let preds = HashMap::from([("m_32_0_0".to_string(), 0u8), ("m_32_32_0".to_string(), 1u8)]);
    let (verdicts, report) = pipeline::aggregate(&preds, &manifest).unwrap();
    assert_eq!(verdicts[0].verdict.verdict, Label::Malignant);
    assert_eq!(verdicts[0].verdict.mean_score, 0.5);
    assert_eq!(report.accuracy_percent, Some(100.0));
}

#[test]
fn bench_reports_pairs_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, &single("a", checkerboard(160, 96)));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[32]);
    let report = pipeline::cmd_bench(&store, Criterion::Memd, 3).unwrap();
    let entry = &report.entries[0];
    assert_eq!(entry.patches, 15);
    assert_eq!(entry.pairs, Some(15 * 14 / 2));
    assert_eq!(entry.samples_sec.len(), 3);
    assert_eq!(entry.median_sec, pipeline::median(&entry.samples_sec));

    let entropy = pipeline::bench(&store, Criterion::Entropy, 1).unwrap();
    assert_eq!(entropy.entries[0].pairs, None);
}

#[test]
fn bench_on_empty_store() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_dataset(&data, &single("a", constant(20, 20, 3)));
    let (_, store) = extract_store(&data, &dir.path().join("out"), &[32]);
    assert!(pipeline::bench(&store, Criterion::Memd, 3).unwrap().entries.is_empty());
}

//! Thin client for a remote image archive.
//!
//! The endpoint is expected to serve, for an image id `ID`:
//!
//! * `GET <endpoint>/images/ID` - the image as PNG
//! * `GET <endpoint>/masks/ID` - the lesion mask as PNG, 404 when absent
//! * `GET <endpoint>/labels/ID` - `benign` or `malignant` as plain text
//!
//! Files land in `<dest>/images/ID.png`, `<dest>/masks/ID.png` and
//! `<dest>/labels/ID.txt`, and an `index.csv` is written for the ids that
//! succeeded. A file already present with the size the server reports (via
//! `HEAD`) is not downloaded again.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use log::warn;
use patchscore_core::Label;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{load_index, write_index, DatasetIndex, IndexRecord};

pub const ENDPOINT_ENV: &str = "PATCHSCORE_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FetchStatus {
    Downloaded,
    UpToDate,
    NotFound,
    NetworkError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdStatus {
    pub image_id: String,
    #[serde(flatten)]
    pub status: FetchStatus,
}

#[derive(Debug)]
pub struct FetchReport {
    pub index: DatasetIndex,
    pub statuses: Vec<IdStatus>,
}

impl FetchReport {
    pub fn all_ok(&self) -> bool {
        self.statuses
            .iter()
            .all(|s| matches!(s.status, FetchStatus::Downloaded | FetchStatus::UpToDate))
    }
}

enum Outcome {
    Fetched { mask: bool, label: Label, downloaded: bool },
    NotFound,
}

struct Client {
    agent: ureq::Agent,
    endpoint: String,
}

#[derive(PartialEq)]
enum Got {
    Wrote,
    Kept,
    Missing,
}

impl Client {
    fn new(endpoint: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(60)))
            .http_status_as_error(false)
            .build();
        Self { agent: config.into(), endpoint: endpoint.trim_end_matches('/').to_owned() }
    }

    fn remote_size(&self, url: &str) -> std::result::Result<Option<u64>, ureq::Error> {
        let resp = self.agent.head(url).call()?;
        if resp.status() != 200 {
            return Ok(None);
        }
        Ok(resp
            .headers()
            .get("content-length")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok()))
    }

    /// Downloads `url` to `dest` unless an identical-size copy exists.
    fn get(&self, url: &str, dest: &Path) -> std::result::Result<Got, ureq::Error> {
        if let Ok(meta) = fs::metadata(dest) {
            if self.remote_size(url)? == Some(meta.len()) {
                return Ok(Got::Kept);
            }
        }
        let mut resp = self.agent.get(url).call()?;
        match resp.status().as_u16() {
            200 => {}
            404 => return Ok(Got::Missing),
            code => return Err(ureq::Error::StatusCode(code)),
        }
        let bytes = resp.body_mut().with_config().limit(1 << 30).read_to_vec()?;
        fs::write(dest, bytes).map_err(ureq::Error::Io)?;
        Ok(Got::Wrote)
    }

    fn fetch_one(&self, id: &str, dest: &Path) -> std::result::Result<Outcome, String> {
        let err = |e: ureq::Error| e.to_string();
        let image = dest.join("images").join(format!("{id}.png"));
        let got_image = self.get(&format!("{}/images/{id}", self.endpoint), &image).map_err(err)?;
        if got_image == Got::Missing {
            return Ok(Outcome::NotFound);
        }
        let label_path = dest.join("labels").join(format!("{id}.txt"));
        let got_label = self.get(&format!("{}/labels/{id}", self.endpoint), &label_path).map_err(err)?;
        if got_label == Got::Missing {
            return Ok(Outcome::NotFound);
        }
        let text = fs::read_to_string(&label_path).map_err(|e| e.to_string())?;
        let label = Label::parse(text.trim()).ok_or_else(|| format!("unknown label {:?}", text.trim()))?;
        let mask = dest.join("masks").join(format!("{id}.png"));
        let got_mask = self.get(&format!("{}/masks/{id}", self.endpoint), &mask).map_err(err)?;
        let downloaded = [&got_image, &got_label, &got_mask].iter().any(|g| **g == Got::Wrote);
        Ok(Outcome::Fetched { mask: got_mask != Got::Missing, label, downloaded })
    }
}

fn mkdirs(dest: &Path) -> Result<()> {
    for sub in ["images", "masks", "labels"] {
        let dir = dest.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    Ok(())
}

/// Downloads `ids` with at most `concurrency` requests in flight. Failures
/// are recorded per id; the returned index holds the ids that succeeded.
pub fn fetch_remote(ids: &[String], endpoint: &str, dest: &Path, concurrency: usize) -> Result<FetchReport> {
    mkdirs(dest)?;
    let client = Client::new(endpoint);
    let results: Mutex<Vec<Option<std::result::Result<Outcome, String>>>> =
        Mutex::new((0..ids.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = concurrency.clamp(1, ids.len().max(1));
    if !ids.is_empty() {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(id) = ids.get(i) else { break };
                    let outcome = client.fetch_one(id, dest);
                    results.lock().expect("worker panicked")[i] = Some(outcome);
                });
            }
        });
    }

    let mut records = Vec::new();
    let mut statuses = Vec::new();
    for (id, outcome) in ids.iter().zip(results.into_inner().expect("worker panicked")) {
        let status = match outcome.expect("every id visited") {
            Ok(Outcome::Fetched { mask, label, downloaded }) => {
                records.push(IndexRecord {
                    image_id: id.clone(),
                    image_path: PathBuf::from("images").join(format!("{id}.png")),
                    mask_path: mask.then(|| PathBuf::from("masks").join(format!("{id}.png"))),
                    label,
                });
                if downloaded { FetchStatus::Downloaded } else { FetchStatus::UpToDate }
            }
            Ok(Outcome::NotFound) => {
                warn!("{id}: not found");
                FetchStatus::NotFound
            }
            Err(message) => {
                warn!("{id}: {message}");
                FetchStatus::NetworkError { message }
            }
        };
        statuses.push(IdStatus { image_id: id.clone(), status });
    }
    records.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    write_index(dest, &DatasetIndex { root: dest.to_path_buf(), records })?;
    Ok(FetchReport { index: load_index(dest)?, statuses })
}

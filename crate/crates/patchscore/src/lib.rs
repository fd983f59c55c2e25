//! Pipeline around `patchscore-core`: dataset ingestion, the on-disk patch
//! store, manifests and histograms, parallel drivers, and the stages behind
//! the `patchscore` command line.

pub mod error;
pub mod fetch;
pub mod histogram;
pub mod ingest;
pub mod manifest;
pub mod parallel;
pub mod pipeline;
pub mod store;

pub use error::{Error, Result};

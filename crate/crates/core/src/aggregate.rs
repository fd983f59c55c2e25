//! Patch-vote aggregation: an image is malignant when at least half of its
//! patches are predicted malignant.

use alloc::string::String;
use alloc::vec::Vec;

use crate::record::Label;
use crate::{Error, Result};

/// Hard 0/1 predictions for the patches of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchPredictions {
    image_id: String,
    preds: Vec<u8>,
}

impl PatchPredictions {
    pub fn new(image_id: impl Into<String>, preds: Vec<u8>) -> Result<Self> {
        let image_id = image_id.into();
        if preds.is_empty() {
            return Err(Error::EmptyPredictions(image_id));
        }
        if let Some(&value) = preds.iter().find(|&&p| p > 1) {
            return Err(Error::InvalidPrediction { image_id, value });
        }
        Ok(Self { image_id, preds })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn preds(&self) -> &[u8] {
        &self.preds
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateVerdict {
    pub image_id: String,
    pub verdict: Label,
    pub mean_score: f64,
}

pub fn aggregate(p: &PatchPredictions) -> AggregateVerdict {
    let n = p.preds.len();
    let ones = p.preds.iter().filter(|&&v| v == 1).count();
    // mean >= 0.5, decided on integers so the boundary is exact
    let verdict = if 2 * ones >= n { Label::Malignant } else { Label::Benign };
    AggregateVerdict {
        image_id: p.image_id.clone(),
        verdict,
        mean_score: ones as f64 / n as f64,
    }
}

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image dimensions {width}x{height} do not match {len} pixels")]
    InvalidDimensions { width: usize, height: usize, len: usize },
    #[error("mask is {mask_width}x{mask_height} but image is {width}x{height}")]
    DimensionMismatch {
        width: usize,
        height: usize,
        mask_width: usize,
        mask_height: usize,
    },
    #[error("mask has no bit set")]
    EmptyMask,
    #[error("patch side {0} is not one of 32, 64, 128, 256")]
    InvalidSide(usize),
    #[error("patch at ({x}, {y}) with side {side} exceeds {width}x{height} image")]
    OutOfBounds {
        x: usize,
        y: usize,
        side: usize,
        width: usize,
        height: usize,
    },
    #[error("image has no pixels")]
    EmptyImage,
    #[error("patches of one image must share a size")]
    MixedPatchSizes,
    #[error("duplicate image id {0:?}")]
    DuplicateImageId(String),
    #[error("need {needed} benign images, only {available} available")]
    InsufficientBenign { needed: usize, available: usize },
    #[error("no predictions for image {0:?}")]
    EmptyPredictions(String),
    #[error("prediction {value} for image {image_id:?} is not 0 or 1")]
    InvalidPrediction { image_id: String, value: u8 },
    #[error("quantile {0} must lie strictly between 0 and 0.5")]
    InvalidQuantile(f64),
    #[error("score table for image {0:?} is empty")]
    EmptyScoreTable(String),
    #[error("score {score} is outside the {criterion} range")]
    ScoreOutOfRange { criterion: &'static str, score: f64 },
}

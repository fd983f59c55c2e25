//! Labels, splits and the per-patch record that flows through the pipeline.

use alloc::string::String;

use crate::entropy::EntropyScore;
use crate::image::PatchSide;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Benign = 0,
    Malignant = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malignant => "malignant",
        }
    }

    /// Accepts `benign`/`malignant` and `0`/`1`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "benign" | "0" => Some(Label::Benign),
            "malignant" | "1" => Some(Label::Malignant),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One square patch of a source image.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchRecord {
    pub image_id: String,
    pub origin_x: usize,
    pub origin_y: usize,
    pub side: PatchSide,
    pub label: Label,
    pub entropy: Option<f64>,
    pub memd_mean: Option<f64>,
    pub split: Option<Split>,
}

impl PatchRecord {
    pub fn new(
        image_id: impl Into<String>,
        origin: (usize, usize),
        side: PatchSide,
        label: Label,
        image_dims: (usize, usize),
    ) -> Result<Self> {
        let (x, y) = origin;
        let s = side.get();
        if x + s > image_dims.0 || y + s > image_dims.1 {
            return Err(Error::OutOfBounds { x, y, side: s, width: image_dims.0, height: image_dims.1 });
        }
        Ok(Self {
            image_id: image_id.into(),
            origin_x: x,
            origin_y: y,
            side,
            label,
            entropy: None,
            memd_mean: None,
            split: None,
        })
    }

    /// Stable identifier `<image_id>_<side>_<x>_<y>` used by prediction files.
    pub fn patch_id(&self) -> String {
        alloc::format!("{}_{}_{}_{}", self.image_id, self.side, self.origin_x, self.origin_y)
    }

    pub fn set_entropy(&mut self, value: f64) -> Result<()> {
        if !(0.0..=EntropyScore::MAX).contains(&value) {
            return Err(Error::ScoreOutOfRange { criterion: "entropy", score: value });
        }
        self.entropy = Some(value);
        Ok(())
    }

    pub fn set_memd_mean(&mut self, value: f64) -> Result<()> {
        if !(0.0..=255.0).contains(&value) {
            return Err(Error::ScoreOutOfRange { criterion: "memd", score: value });
        }
        self.memd_mean = Some(value);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_bounds_and_scores() {
        let side = PatchSide::new(32).unwrap();
        assert!(PatchRecord::new("a", (33, 0), side, Label::Benign, (64, 64)).is_err());
        let mut r = PatchRecord::new("a", (32, 0), side, Label::Benign, (64, 64)).unwrap();
        assert_eq!(r.patch_id(), "a_32_32_0");
        assert!(r.set_entropy(8.5).is_err());
        assert!(r.set_memd_mean(-1.0).is_err());
        r.set_entropy(3.0).unwrap();
        assert_eq!(r.entropy, Some(3.0));
    }

    #[test]
    fn parse_round_trip() {
        for l in [Label::Benign, Label::Malignant] {
            assert_eq!(Label::parse(l.as_str()), Some(l));
        }
        for s in [Split::Train, Split::Val, Split::Test] {
            assert_eq!(Split::parse(s.as_str()), Some(s));
        }
        assert_eq!(Label::parse("unknown"), None);
    }
}

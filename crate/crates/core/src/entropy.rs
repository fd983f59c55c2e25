//! Shannon entropy of a grayscale patch.

use crate::image::GrayImage;

/// Pixel counts per intensity level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntensityHistogram {
    counts: [u32; 256],
    total: u64,
}

impl IntensityHistogram {
    pub fn from_pixels(pixels: &[u8]) -> Self {
        let mut counts = [0u32; 256];
        for &p in pixels {
            counts[usize::from(p)] += 1;
        }
        Self { counts, total: pixels.len() as u64 }
    }

    pub fn counts(&self) -> &[u32; 256] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Entropy in bits, always within `[0, 8]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropyScore(f64);

impl EntropyScore {
    pub const MAX: f64 = 8.0;

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn histogram(patch: &GrayImage) -> IntensityHistogram {
    IntensityHistogram::from_pixels(patch.pixels())
}

/// `-Σ p_k log2 p_k` over the non-empty bins, summed in ascending bin order.
pub fn shannon_entropy(h: &IntensityHistogram) -> EntropyScore {
    if h.total == 0 {
        return EntropyScore(0.0);
    }
    let total = h.total as f64;
    let mut acc = 0.0f64;
    for &c in h.counts.iter().filter(|&&c| c > 0) {
        let p = f64::from(c) / total;
        acc -= p * libm::log2(p);
    }
    // also turns -0.0 into 0.0
    EntropyScore(acc.clamp(0.0, EntropyScore::MAX))
}

//! Raster types, grayscale conversion and region-of-interest tiling.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(Error::InvalidDimensions { width, height, len });
    }
    Ok(())
}

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// Row-major single-channel 8-bit raster. Both scoring criteria work on this.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }
}

/// Binary region-of-interest mask; `true` marks lesion pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(Self { width, height, bits })
    }

    pub fn full(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![true; width.saturating_mul(height)])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Inclusive-exclusive bounding box `(x0, y0, x1, y1)` of the set bits.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for (i, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let (x, y) = (i % self.width, i / self.width);
            bbox = Some(match bbox {
                None => (x, y, x + 1, y + 1),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
            });
        }
        bbox
    }
}

/// One of the four supported patch side lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatchSide(usize);

impl PatchSide {
    pub const ALL: [PatchSide; 4] = [PatchSide(32), PatchSide(64), PatchSide(128), PatchSide(256)];

    pub fn new(side: usize) -> Result<Self> {
        match side {
            32 | 64 | 128 | 256 => Ok(Self(side)),
            _ => Err(Error::InvalidSide(side)),
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl core::fmt::Display for PatchSide {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// BT.601 luma of one pixel, rounded half away from zero.
///
/// Evaluated as `(299 R + 587 G + 114 B) / 1000` in integers, so the result is
/// exact for every input.
pub fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    let scaled = 299 * r + 587 * g + 114 * b;
    // scaled <= 255_000, so the quotient never exceeds 255
    ((scaled + 500) / 1000) as u8
}

pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    GrayImage {
        width: img.width,
        height: img.height,
        pixels: img.pixels.iter().copied().map(luma).collect(),
    }
}

/// Copy of the `side`x`side` square whose top-left corner is `origin`.
pub fn crop(img: &GrayImage, origin: (usize, usize), side: usize) -> Result<GrayImage> {
    let (x, y) = origin;
    let fits = side > 0
        && x.checked_add(side).is_some_and(|r| r <= img.width)
        && y.checked_add(side).is_some_and(|b| b <= img.height);
    if !fits {
        return Err(Error::OutOfBounds { x, y, side, width: img.width, height: img.height });
    }
    let mut pixels = Vec::with_capacity(side * side);
    for row in y..y + side {
        let start = row * img.width + x;
        pixels.extend_from_slice(&img.pixels[start..start + side]);
    }
    Ok(GrayImage { width: side, height: side, pixels })
}

/// Summed-area table with a zero row and column prepended.
struct Integral {
    stride: usize,
    sums: Vec<u32>,
}

impl Integral {
    fn of(mask: &Mask) -> Self {
        let stride = mask.width + 1;
        let mut sums = vec![0u32; stride * (mask.height + 1)];
        for y in 0..mask.height {
            let mut row = 0u32;
            for x in 0..mask.width {
                row += u32::from(mask.get(x, y));
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { stride, sums }
    }

    fn count(&self, x: usize, y: usize, side: usize) -> u32 {
        let s = self.stride;
        let (x1, y1) = (x + side, y + side);
        self.sums[y1 * s + x1] + self.sums[y * s + x] - self.sums[y * s + x1] - self.sums[y1 * s + x]
    }
}

/// Origins of the grid cells kept for one patch side.
///
/// The grid is non-overlapping, anchored at the top-left corner of the mask's
/// bounding box, and restricted to cells lying inside the image whose origin
/// falls inside the bounding box. A cell is kept when at least
/// `min_coverage` of its area is covered by the mask. Origins come back in
/// row-major order. An empty result means the image yields no patch at this
/// size.
pub fn tile_roi(
    dims: (usize, usize),
    mask: &Mask,
    side: PatchSide,
    min_coverage: f64,
) -> Result<Vec<(usize, usize)>> {
    let (width, height) = dims;
    if (mask.width, mask.height) != (width, height) {
        return Err(Error::DimensionMismatch {
            width,
            height,
            mask_width: mask.width,
            mask_height: mask.height,
        });
    }
    let (x0, y0, x1, y1) = mask.bounding_box().ok_or(Error::EmptyMask)?;
    let side = side.get();
    let area = (side * side) as f64;
    let integral = Integral::of(mask);

    let mut origins = Vec::new();
    let mut y = y0;
    while y < y1 && y + side <= height {
        let mut x = x0;
        while x < x1 && x + side <= width {
            if f64::from(integral.count(x, y, side)) >= min_coverage * area {
                origins.push((x, y));
            }
            x += side;
        }
        y += side;
    }
    Ok(origins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side(s: usize) -> PatchSide {
        PatchSide::new(s).unwrap()
    }

    #[test]
    fn grayscale_extremes() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([0, 0, 0]), 0);
        assert_eq!(luma([255, 0, 0]), 76);
        assert_eq!(luma([0, 255, 0]), 150);
        assert_eq!(luma([0, 0, 255]), 29);
    }

    #[test]
    fn grayscale_is_identity_on_gray() {
        for g in 0..=255u8 {
            assert_eq!(luma([g, g, g]), g);
        }
    }

    #[test]
    fn grayscale_preserves_dims() {
        let img = RgbImage::new(3, 2, vec![[10, 20, 30]; 6]).unwrap();
        let gray = to_grayscale(&img);
        assert_eq!((gray.width(), gray.height()), (3, 2));
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GrayImage::new(2, 2, vec![0; 3]).is_err());
        assert!(GrayImage::new(0, 0, vec![]).is_err());
        assert!(PatchSide::new(48).is_err());
    }

    #[test]
    fn full_mask_grid() {
        let mask = Mask::full(64, 64).unwrap();
        let origins = tile_roi((64, 64), &mask, side(32), 0.5).unwrap();
        assert_eq!(origins, vec![(0, 0), (32, 0), (0, 32), (32, 32)]);
        assert!(tile_roi((64, 64), &mask, side(256), 0.5).unwrap().is_empty());
    }

    #[test]
    fn centered_square_mask() {
        let mask = Mask::from_fn(100, 100, |x, y| (15..85).contains(&x) && (15..85).contains(&y)).unwrap();
        let origins = tile_roi((100, 100), &mask, side(32), 0.5).unwrap();
        assert_eq!(origins, vec![(15, 15), (47, 15), (15, 47), (47, 47)]);
    }

    #[test]
    fn partial_cells_follow_threshold() {
        // 48 columns set: the second column of cells is exactly half covered
        let mask = Mask::from_fn(64, 32, |x, _| x < 48).unwrap();
        assert_eq!(tile_roi((64, 32), &mask, side(32), 0.5).unwrap().len(), 2);
        assert_eq!(tile_roi((64, 32), &mask, side(32), 0.51).unwrap().len(), 1);
    }

    #[test]
    fn empty_and_mismatched_masks() {
        let empty = Mask::new(32, 32, vec![false; 1024]).unwrap();
        assert_eq!(tile_roi((32, 32), &empty, side(32), 0.5), Err(Error::EmptyMask));
        let mask = Mask::full(32, 32).unwrap();
        assert!(matches!(
            tile_roi((64, 32), &mask, side(32), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn crop_ramp() {
        let img = GrayImage::new(4, 4, (0..16).collect()).unwrap();
        assert_eq!(crop(&img, (2, 2), 2).unwrap().pixels(), &[10, 11, 14, 15]);
        assert_eq!(crop(&img, (0, 0), 4).unwrap(), img);
    }

    #[test]
    fn crop_out_of_bounds() {
        let img = GrayImage::new(40, 40, vec![0; 1600]).unwrap();
        assert!(matches!(crop(&img, (39, 0), 32), Err(Error::OutOfBounds { .. })));
        assert!(matches!(crop(&img, (0, 0), 0), Err(Error::OutOfBounds { .. })));
    }
}

#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Sample {
    pub id: String,
    pub label: &'static str,
    pub image: image::GrayImage,
    pub mask: Option<image::GrayImage>,
}

pub fn full_mask(w: u32, h: u32) -> image::GrayImage {
    image::GrayImage::from_pixel(w, h, image::Luma([255]))
}

pub fn constant(w: u32, h: u32, v: u8) -> image::GrayImage {
    image::GrayImage::from_pixel(w, h, image::Luma([v]))
}

/// Writes PNGs and `index.csv` into `root`.
pub fn write_dataset(root: &Path, samples: &[Sample]) {
    fs::create_dir_all(root).unwrap();
    let mut index = String::from("image_id,image_path,mask_path,label\n");
    for s in samples {
        let image = format!("{}.png", s.id);
        s.image.save(root.join(&image)).unwrap();
        let mask = match &s.mask {
            Some(m) => {
                let name = format!("{}_mask.png", s.id);
                m.save(root.join(&name)).unwrap();
                name
            }
            None => String::new(),
        };
        index.push_str(&format!("{},{},{},{}\n", s.id, image, mask, s.label));
    }
    fs::write(root.join("index.csv"), index).unwrap();
}

/// Twenty lesion-like images, ten per class: textured skin background with an
/// elliptical lesion of varying size, brightness and position.
pub fn synthetic_corpus(root: &Path) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut samples = Vec::new();
    for i in 0..20u32 {
        let (w, h) = (192 + 32 * (i % 3), 160 + 32 * (i % 2));
        let (cx, cy) = (w as f64 / 2.0 + rng.random_range(-12.0..12.0), h as f64 / 2.0 + rng.random_range(-12.0..12.0));
        let (rx, ry) = (rng.random_range(50.0..90.0), rng.random_range(45.0..75.0));
        let malignant = i % 2 == 0;
        let lesion_level: u8 = if malignant { rng.random_range(30..70) } else { rng.random_range(80..120) };
        let inside = |x: u32, y: u32| {
            let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
            dx * dx + dy * dy <= 1.0
        };
        let mut image = image::GrayImage::new(w, h);
        for (x, y, p) in image.enumerate_pixels_mut() {
            let base = if inside(x, y) { lesion_level } else { 190 };
            let noise: i16 = rng.random_range(-25..=25);
            p.0[0] = (base as i16 + noise).clamp(0, 255) as u8;
        }
        let mask = image::GrayImage::from_fn(w, h, |x, y| image::Luma([if inside(x, y) { 255 } else { 0 }]));
        samples.push(Sample {
            id: format!("img_{i:02}"),
            label: if malignant { "malignant" } else { "benign" },
            image,
            mask: Some(mask),
        });
    }
    write_dataset(root, &samples);
    root.to_path_buf()
}

pub fn checkerboard(w: u32, h: u32) -> image::GrayImage {
    image::GrayImage::from_fn(w, h, |x, y| image::Luma([if (x + y) % 2 == 0 { 0 } else { 255 }]))
}

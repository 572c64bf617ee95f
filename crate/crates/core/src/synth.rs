//! Deterministic synthetic imagery: JPEG encoding helpers and banknote-like
//! fixtures for the reference currency classifier.

use std::io;
use std::path::Path;

use image::codecs::jpeg::JpegEncoder;
use image::ExtendedColorType;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn encode_jpeg(width: u32, height: u32, rgb: &[u8], quality: u8) -> Vec<u8> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, quality)
        .encode(rgb, width, height, ExtendedColorType::Rgb8)
        .expect("in-memory JPEG encoding of a well-formed raster");
    out
}

pub fn solid(width: u32, height: u32, rgb: [u8; 3]) -> Vec<u8> {
    rgb.repeat(width as usize * height as usize)
}

/// Palette of a synthetic note: body, accent band, numeral patch.
fn palette(class: &str) -> [[u8; 3]; 3] {
    match class {
        "10" => [[140, 80, 40], [170, 110, 60], [90, 50, 25]],
        "20" => [[170, 200, 70], [140, 170, 50], [90, 110, 30]],
        "50" => [[60, 190, 220], [40, 150, 190], [20, 90, 120]],
        "100" => [[175, 150, 215], [150, 120, 200], [90, 70, 140]],
        "200" => [[245, 180, 30], [230, 150, 20], [150, 90, 10]],
        "500" => [[150, 152, 148], [120, 122, 118], [80, 82, 78]],
        "2000" => [[215, 60, 170], [190, 40, 150], [120, 20, 90]],
        // anything else looks like a desk scene: dark casing and a bluish screen
        _ => [[40, 40, 45], [70, 90, 140], [20, 20, 22]],
    }
}

/// Renders a note-like raster for `class`. Different `variant`s move the
/// accent band and numeral patch and reseed the luminance noise.
pub fn banknote(class: &str, variant: u64, width: u32, height: u32) -> Vec<u8> {
    let [body, accent, patch] = palette(class);
    let mut rng =
        StdRng::seed_from_u64(variant.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ class_seed(class));
    let band_x = rng.gen_range(width / 8..width / 2);
    let band_w = width / 6;
    let patch_x = rng.gen_range(width / 2..width - width / 5);
    let patch_y = rng.gen_range(0..height / 2);
    let (pw, ph) = (width / 6, height / 3);
    let mut out = Vec::with_capacity(width as usize * height as usize * 3);
    for y in 0..height {
        for x in 0..width {
            let base = if x >= band_x && x < band_x + band_w {
                accent
            } else if x >= patch_x && x < patch_x + pw && y >= patch_y && y < patch_y + ph {
                patch
            } else {
                body
            };
            let delta: i16 = rng.gen_range(-6..=6);
            out.extend(base.iter().map(|&c| (c as i16 + delta).clamp(0, 255) as u8));
        }
    }
    out
}

fn class_seed(class: &str) -> u64 {
    class.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

/// Scales brightness by `factor` and translates by (dx, dy) with edge
/// replication.
pub fn perturb(rgb: &[u8], width: u32, height: u32, factor: f64, dx: i32, dy: i32) -> Vec<u8> {
    let (w, h) = (width as i32, height as i32);
    let mut out = Vec::with_capacity(rgb.len());
    for y in 0..h {
        for x in 0..w {
            let sx = (x - dx).clamp(0, w - 1);
            let sy = (y - dy).clamp(0, h - 1);
            let i = ((sy * w + sx) * 3) as usize;
            out.extend(
                rgb[i..i + 3]
                    .iter()
                    .map(|&c| (c as f64 * factor).round().clamp(0.0, 255.0) as u8),
            );
        }
    }
    out
}

pub const NOTE_WIDTH: u32 = 96;
pub const NOTE_HEIGHT: u32 = 48;

/// Writes `<root>/<class>/<n>.jpg` for every class, variants
/// `first_variant..first_variant + per_class`.
pub fn write_currency_fixtures(
    root: &Path,
    classes: &[&str],
    per_class: u64,
    first_variant: u64,
) -> io::Result<()> {
    for class in classes {
        let dir = root.join(class);
        std::fs::create_dir_all(&dir)?;
        for v in first_variant..first_variant + per_class {
            let raster = banknote(class, v, NOTE_WIDTH, NOTE_HEIGHT);
            let jpeg = encode_jpeg(NOTE_WIDTH, NOTE_HEIGHT, &raster, 92);
            std::fs::write(dir.join(format!("{v}.jpg")), jpeg)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banknotes_are_deterministic() {
        assert_eq!(banknote("100", 3, 32, 16), banknote("100", 3, 32, 16));
        assert_ne!(banknote("100", 3, 32, 16), banknote("100", 4, 32, 16));
    }

    #[test]
    fn perturb_identity() {
        let img = banknote("10", 0, 20, 10);
        assert_eq!(perturb(&img, 20, 10, 1.0, 0, 0), img);
    }

    #[test]
    fn jpeg_has_markers() {
        let j = encode_jpeg(4, 4, &solid(4, 4, [1, 2, 3]), 80);
        assert!(crate::camsim::is_jpeg(&j));
    }
}

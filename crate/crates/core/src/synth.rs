//! Deterministic five-category synthetic corpus (14 images each, 64x64).
//!
//! Every category has its own color family and spatial structure so that the
//! color, texture and edge slots of the descriptor each separate at least one
//! pair of categories. Per-image jitter comes from a ChaCha8 stream seeded with
//! the caller's seed; images are generated in a fixed order.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image_io::{write_ppm, RgbImage};

pub const SYNTH_SIZE: usize = 64;
pub const SYNTH_PER_CATEGORY: usize = 14;
pub const SYNTH_CATEGORIES: [&str; 5] = ["checker", "gradient", "hue", "noise", "stripes"];

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// `h` in degrees, `s` and `v` in [0, 1].
fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

fn with_grain(rng: &mut ChaCha8Rng, rgb: [f64; 3], amp: f64) -> [u8; 3] {
    let g = rng.gen_range(-amp..=amp);
    rgb.map(|c| clamp_u8(c + g))
}

fn checker(rng: &mut ChaCha8Rng) -> RgbImage {
    let cell = rng.gen_range(6..=10usize);
    let phase = (rng.gen_range(0..cell), rng.gen_range(0..cell));
    let light = hsv(rng.gen_range(100.0..140.0), 0.35, rng.gen_range(0.85..0.95));
    let dark = hsv(rng.gen_range(110.0..130.0), 0.8, rng.gen_range(0.2..0.3));
    let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
    RgbImage::from_fn(SYNTH_SIZE, SYNTH_SIZE, |x, y| {
        let on = ((x + phase.0) / cell + (y + phase.1) / cell) % 2 == 0;
        with_grain(&mut noise, if on { light } else { dark }, 3.0)
    })
}

fn gradient(rng: &mut ChaCha8Rng) -> RgbImage {
    let angle = rng.gen_range(-0.3..0.3) + PI / 4.0;
    let (dx, dy) = (angle.cos(), angle.sin());
    let hue = rng.gen_range(45.0..60.0);
    let (lo, hi) = (rng.gen_range(0.15..0.25), rng.gen_range(0.85..1.0));
    let extent = (SYNTH_SIZE as f64 - 1.0) * (dx.abs() + dy.abs());
    let offset = if dx < 0.0 { -dx } else { 0.0 } + if dy < 0.0 { -dy } else { 0.0 };
    let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
    RgbImage::from_fn(SYNTH_SIZE, SYNTH_SIZE, |x, y| {
        let t = (x as f64 * dx + y as f64 * dy + offset * (SYNTH_SIZE as f64 - 1.0)) / extent;
        with_grain(&mut noise, hsv(hue, 0.85, lo + (hi - lo) * t), 2.0)
    })
}

fn hue_blob(rng: &mut ChaCha8Rng) -> RgbImage {
    let hue = rng.gen_range(-12.0..12.0);
    let center = (rng.gen_range(16.0..48.0), rng.gen_range(16.0..48.0));
    let radius = rng.gen_range(28.0..40.0);
    let sat = rng.gen_range(0.75..0.95);
    let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
    RgbImage::from_fn(SYNTH_SIZE, SYNTH_SIZE, |x, y| {
        let d = ((x as f64 - center.0).powi(2) + (y as f64 - center.1).powi(2)).sqrt();
        let v = 0.95 - 0.45 * (d / radius).min(1.0);
        with_grain(&mut noise, hsv(hue, sat, v), 2.0)
    })
}

fn noise_texture(rng: &mut ChaCha8Rng) -> RgbImage {
    let base = rng.gen_range(110.0..140.0);
    let amp = rng.gen_range(70.0..100.0);
    let tint = [
        rng.gen_range(-8.0..8.0),
        rng.gen_range(-8.0..8.0),
        rng.gen_range(-8.0..8.0),
    ];
    let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
    RgbImage::from_fn(SYNTH_SIZE, SYNTH_SIZE, |_, _| {
        let v = base + noise.gen_range(-amp..=amp);
        [
            clamp_u8(v + tint[0]),
            clamp_u8(v + tint[1]),
            clamp_u8(v + tint[2]),
        ]
    })
}

fn stripes(rng: &mut ChaCha8Rng) -> RgbImage {
    let period = rng.gen_range(3..=6usize);
    let phase = rng.gen_range(0..2 * period);
    let light = hsv(rng.gen_range(200.0..230.0), 0.45, rng.gen_range(0.85..0.95));
    let dark = hsv(rng.gen_range(220.0..240.0), 0.9, rng.gen_range(0.25..0.35));
    let mut noise = ChaCha8Rng::seed_from_u64(rng.gen());
    RgbImage::from_fn(SYNTH_SIZE, SYNTH_SIZE, |x, _| {
        let on = ((x + phase) / period) % 2 == 0;
        with_grain(&mut noise, if on { light } else { dark }, 3.0)
    })
}

/// Generates the corpus in memory as `(category, file name, image)`.
pub fn synthetic_images(seed: u64) -> Vec<(&'static str, String, RgbImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(SYNTH_CATEGORIES.len() * SYNTH_PER_CATEGORY);
    for category in SYNTH_CATEGORIES {
        let recipe: fn(&mut ChaCha8Rng) -> RgbImage = match category {
            "checker" => checker,
            "gradient" => gradient,
            "hue" => hue_blob,
            "noise" => noise_texture,
            "stripes" => stripes,
            _ => unreachable!(),
        };
        for i in 0..SYNTH_PER_CATEGORY {
            out.push((category, format!("{i:02}.ppm"), recipe(&mut rng)));
        }
    }
    out
}

/// Writes `<out_dir>/<category>/<nn>.ppm` and returns the written paths.
pub fn generate_synthetic_corpus(out_dir: impl AsRef<Path>, seed: u64) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let mut written = Vec::new();
    for (category, name, img) in synthetic_images(seed) {
        let dir = out_dir.join(category);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join(name);
        write_ppm(&path, &img)?;
        written.push(path);
    }
    Ok(written)
}

//! The 15-slot image descriptor: RGB histogram statistics, co-occurrence
//! texture statistics and Sobel edge densities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::{to_grayscale, GrayImage, RgbImage};
use crate::phong::{shade_image, PhongParams};

pub const FEATURE_DIM: usize = 15;

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "r_mean",
    "r_median",
    "r_std",
    "g_mean",
    "g_median",
    "g_std",
    "b_mean",
    "b_median",
    "b_std",
    "entropy",
    "contrast",
    "energy",
    "homogeneity",
    "v_edge_density",
    "h_edge_density",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    R,
    G,
    B,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::R, Channel::G, Channel::B];

    fn index(self) -> usize {
        match self {
            Channel::R => 0,
            Channel::G => 1,
            Channel::B => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelHistogram {
    pub counts: [u64; 256],
    pub total: u64,
}

pub fn channel_histogram(img: &RgbImage, channel: Channel) -> ChannelHistogram {
    let c = channel.index();
    let mut counts = [0u64; 256];
    for px in img.pixels() {
        counts[px[c] as usize] += 1;
    }
    ChannelHistogram {
        counts,
        total: img.pixels().len() as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mean: f64,
    pub median: f64,
    pub std: f64,
}

/// Mean, lower median and population standard deviation of a histogram.
pub fn channel_stats(h: &ChannelHistogram) -> Result<ChannelStats> {
    if h.total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let n = h.total as f64;
    let mean = h
        .counts
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum::<f64>()
        / n;

    let half = h.total.div_ceil(2);
    let mut cumulative = 0;
    let mut median = 255;
    for (v, &c) in h.counts.iter().enumerate() {
        cumulative += c;
        if cumulative >= half {
            median = v;
            break;
        }
    }

    let var = h
        .counts
        .iter()
        .enumerate()
        .map(|(v, &c)| c as f64 * (v as f64 - mean).powi(2))
        .sum::<f64>()
        / n;
    Ok(ChannelStats {
        mean,
        median: median as f64,
        std: var.sqrt(),
    })
}

fn check_levels(levels: usize) -> Result<()> {
    if !(2..=256).contains(&levels) {
        return Err(Error::InvalidParameter(format!(
            "levels must be in [2, 256], got {levels}"
        )));
    }
    Ok(())
}

/// Row-major quantized gray levels, `floor(v * levels / 256)`.
pub fn quantize_gray(gray: &GrayImage, levels: usize) -> Result<Vec<usize>> {
    check_levels(levels)?;
    Ok(gray
        .pixels()
        .iter()
        .map(|&v| v as usize * levels / 256)
        .collect())
}

/// Normalized gray-level co-occurrence matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Glcm {
    levels: usize,
    p: Vec<f64>,
}

impl Glcm {
    /// Builds a matrix from explicit row-major probabilities.
    pub fn from_probabilities(levels: usize, p: Vec<f64>) -> Result<Self> {
        check_levels(levels)?;
        if p.len() != levels * levels {
            return Err(Error::DimensionMismatch {
                left: p.len(),
                right: levels * levels,
            });
        }
        if p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "co-occurrence probabilities must be finite and >= 0".into(),
            ));
        }
        Ok(Self { levels, p })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Co-occurrence of `q(x, y)` and `q(x + dx, y + dy)` over all in-bounds pairs.
pub fn glcm(gray: &GrayImage, levels: usize, offset: (i32, i32)) -> Result<Glcm> {
    let q = quantize_gray(gray, levels)?;
    let (w, h) = (gray.width() as i64, gray.height() as i64);
    let (dx, dy) = (offset.0 as i64, offset.1 as i64);
    let mut counts = vec![0u64; levels * levels];
    let mut pairs = 0u64;
    for y in 0.max(-dy)..h.min(h - dy) {
        for x in 0.max(-dx)..w.min(w - dx) {
            let i = q[(y * w + x) as usize];
            let j = q[((y + dy) * w + x + dx) as usize];
            counts[i * levels + j] += 1;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::EmptyPairs {
            dx: offset.0,
            dy: offset.1,
            width: gray.width(),
            height: gray.height(),
        });
    }
    let total = pairs as f64;
    Ok(Glcm {
        levels,
        p: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TextureStats {
    pub entropy: f64,
    pub contrast: f64,
    pub energy: f64,
    pub homogeneity: f64,
}

/// Entropy (base 2, non-negative), contrast, energy and homogeneity of a GLCM.
pub fn texture_features(g: &Glcm) -> TextureStats {
    let mut t = TextureStats {
        entropy: 0.0,
        contrast: 0.0,
        energy: 0.0,
        homogeneity: 0.0,
    };
    for i in 0..g.levels {
        for j in 0..g.levels {
            let p = g.get(i, j);
            if p == 0.0 {
                continue;
            }
            let d = i.abs_diff(j) as f64;
            t.entropy -= p * p.log2();
            t.contrast += d * d * p;
            t.energy += p * p;
            t.homogeneity += p / (1.0 + d);
        }
    }
    // -0.0 for a single-cell matrix
    t.entropy = t.entropy.max(0.0);
    t
}

pub const SOBEL_X: [[i32; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
pub const SOBEL_Y: [[i32; 3]; 3] = [[1, 2, 1], [0, 0, 0], [-1, -2, -1]];

/// Signed Sobel responses, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
}

/// Correlates both Sobel kernels with the image, replicating edges.
pub fn sobel_gradients(gray: &GrayImage) -> GradientField {
    let (w, h) = (gray.width(), gray.height());
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut sx = 0;
            let mut sy = 0;
            for (ky, (row_x, row_y)) in SOBEL_X.iter().zip(SOBEL_Y.iter()).enumerate() {
                for kx in 0..3 {
                    let v = gray.get_clamped(x + kx as isize - 1, y + ky as isize - 1) as i32;
                    sx += row_x[kx] * v;
                    sy += row_y[kx] * v;
                }
            }
            gx.push(sx);
            gy.push(sy);
        }
    }
    GradientField {
        width: w,
        height: h,
        gx,
        gy,
    }
}

/// Fractions of pixels with `|gx| > threshold` (vertical edges) and
/// `|gy| > threshold` (horizontal edges).
pub fn edge_densities(g: &GradientField, threshold: f64) -> Result<(f64, f64)> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "edge threshold must be > 0, got {threshold}"
        )));
    }
    let n = (g.width * g.height) as f64;
    let count = |v: &[i32]| v.iter().filter(|&&r| r.abs() as f64 > threshold).count() as f64;
    Ok((count(&g.gx) / n, count(&g.gy) / n))
}

/// Options controlling descriptor extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionOpts {
    pub levels: usize,
    pub offset: (i32, i32),
    pub edge_threshold: f64,
}

impl Default for ExtractionOpts {
    fn default() -> Self {
        Self {
            levels: 8,
            offset: (1, 0),
            edge_threshold: 255.0,
        }
    }
}

impl ExtractionOpts {
    pub fn validate(&self) -> Result<()> {
        check_levels(self.levels)?;
        if !(self.edge_threshold.is_finite() && self.edge_threshold > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "edge threshold must be > 0, got {}",
                self.edge_threshold
            )));
        }
        Ok(())
    }
}

/// Fixed-order descriptor; see [`FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub [f64; FEATURE_DIM]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Checks the value ranges every extracted descriptor satisfies.
    pub fn validate(&self) -> Result<()> {
        let v = &self.0;
        let bad = |i: usize, why: &str| {
            Err(Error::InvalidParameter(format!(
                "feature {} = {} {why}",
                FEATURE_NAMES[i], v[i]
            )))
        };
        for (i, &x) in v.iter().enumerate() {
            if !x.is_finite() {
                return bad(i, "is not finite");
            }
        }
        for c in 0..3 {
            for i in [3 * c, 3 * c + 1] {
                if !(0.0..=255.0).contains(&v[i]) {
                    return bad(i, "is outside [0, 255]");
                }
            }
            if !(0.0..=127.5).contains(&v[3 * c + 2]) {
                return bad(3 * c + 2, "is outside [0, 127.5]");
            }
        }
        if v[9] < 0.0 {
            return bad(9, "is negative");
        }
        if v[10] < 0.0 {
            return bad(10, "is negative");
        }
        for i in [11, 12] {
            if !(v[i] > 0.0 && v[i] <= 1.0 + 1e-12) {
                return bad(i, "is outside (0, 1]");
            }
        }
        for i in [13, 14] {
            if !(0.0..=1.0).contains(&v[i]) {
                return bad(i, "is outside [0, 1]");
            }
        }
        Ok(())
    }
}

/// Shades (optionally), then extracts the 15-slot descriptor.
pub fn extract_features(
    img: &RgbImage,
    phong: Option<&PhongParams>,
    opts: &ExtractionOpts,
) -> Result<FeatureVector> {
    opts.validate()?;
    let shaded;
    let img = match phong {
        Some(p) => {
            p.validate()?;
            shaded = shade_image(img, p);
            &shaded
        }
        None => img,
    };

    let mut v = [0.0; FEATURE_DIM];
    for (c, channel) in Channel::ALL.into_iter().enumerate() {
        let s = channel_stats(&channel_histogram(img, channel))?;
        v[3 * c] = s.mean;
        v[3 * c + 1] = s.median;
        v[3 * c + 2] = s.std;
    }

    let gray = to_grayscale(img);
    let t = texture_features(&glcm(&gray, opts.levels, opts.offset)?);
    v[9] = t.entropy;
    v[10] = t.contrast;
    v[11] = t.energy;
    v[12] = t.homogeneity;

    let (vd, hd) = edge_densities(&sobel_gradients(&gray), opts.edge_threshold)?;
    v[13] = vd;
    v[14] = hd;
    Ok(FeatureVector(v))
}

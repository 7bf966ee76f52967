//! Phong illumination applied to photographs.
//!
//! Image intensity is treated as a height field `h = height_scale * gray / 255`;
//! per-pixel normals come from central differences of that surface. Ambient and
//! diffuse terms modulate the original color, the specular term adds white.
//!
//! [`shade_image_tiled`] evaluates normals only on a tile-corner lattice and
//! linearly interpolates them across two triangles per tile, computing `N·H`
//! and `N·L` from the interpolated (non-unit) vectors with [`tile_ndoth`].

use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_io::{to_grayscale, GrayImage, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Returns `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        [v.x, v.y, v.z]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Reflectance, light and surface parameters of the illumination model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhongParams {
    pub ka: f64,
    pub kd: f64,
    pub ks: f64,
    pub ia: f64,
    pub il: f64,
    /// Glossiness exponent, at least 1.
    pub ns: f64,
    pub light_dir: Vec3,
    pub view_dir: Vec3,
    pub height_scale: f64,
}

impl Default for PhongParams {
    fn default() -> Self {
        let s = 1.0 / 3f64.sqrt();
        Self {
            ka: 0.2,
            kd: 0.6,
            ks: 0.3,
            ia: 1.0,
            il: 1.0,
            ns: 10.0,
            light_dir: Vec3::new(s, s, s),
            view_dir: Vec3::new(0.0, 0.0, 1.0),
            height_scale: 10.0,
        }
    }
}

impl PhongParams {
    /// Ambient-only configuration that reproduces its input exactly.
    pub fn identity() -> Self {
        Self {
            ka: 1.0,
            ia: 1.0,
            kd: 0.0,
            ks: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let coefficients = [
            ("ka", self.ka),
            ("kd", self.kd),
            ("ks", self.ks),
            ("ia", self.ia),
            ("il", self.il),
        ];
        for (name, v) in coefficients {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(self.ns.is_finite() && self.ns >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ns must be >= 1, got {}",
                self.ns
            )));
        }
        if !(self.height_scale.is_finite() && self.height_scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "height_scale must be > 0, got {}",
                self.height_scale
            )));
        }
        for (name, v) in [("light_dir", self.light_dir), ("view_dir", self.view_dir)] {
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a unit vector, got length {}",
                    v.norm()
                )));
            }
        }
        if (self.light_dir + self.view_dir).norm() < 1e-12 {
            return Err(Error::InvalidParameter(
                "light_dir and view_dir are opposite; halfway vector undefined".into(),
            ));
        }
        Ok(())
    }

    /// Unit halfway vector `normalize(L + V)`.
    pub fn halfway(&self) -> Vec3 {
        (self.light_dir + self.view_dir)
            .normalized()
            .unwrap_or(Vec3::new(0.0, 0.0, 1.0))
    }
}

/// Per-pixel unit surface normals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalField {
    width: usize,
    height: usize,
    normals: Vec<Vec3>,
}

impl NormalField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn get(&self, x: usize, y: usize) -> Vec3 {
        self.normals[y * self.width + x]
    }
}

/// Normal of the height field at `(x, y)`, central differences with edge replication.
fn normal_at(gray: &GrayImage, height_scale: f64, x: usize, y: usize) -> Vec3 {
    let scale = height_scale / 255.0;
    let (xi, yi) = (x as isize, y as isize);
    let h = |dx: isize, dy: isize| gray.get_clamped(xi + dx, yi + dy) as f64 * scale;
    let dhdx = (h(1, 0) - h(-1, 0)) / 2.0;
    let dhdy = (h(0, 1) - h(0, -1)) / 2.0;
    Vec3::new(-dhdx, -dhdy, 1.0)
        .normalized()
        .expect("z component is 1")
}

pub fn height_field_normals(gray: &GrayImage, height_scale: f64) -> NormalField {
    let (w, h) = (gray.width(), gray.height());
    let normals = (0..w * h)
        .into_par_iter()
        .map(|i| normal_at(gray, height_scale, i % w, i / w))
        .collect();
    NormalField {
        width: w,
        height: h,
        normals,
    }
}

/// Scalar illumination `ka*ia + kd*il*max(N·L,0) + ks*il*max(N·H,0)^ns`.
pub fn phong_intensity(n_dot_l: f64, n_dot_h: f64, p: &PhongParams) -> f64 {
    p.ka * p.ia + p.kd * p.il * n_dot_l.max(0.0) + p.ks * p.il * n_dot_h.max(0.0).powf(p.ns)
}

fn shade_channel(c: u8, n_dot_l: f64, n_dot_h: f64, p: &PhongParams) -> u8 {
    let c = c as f64;
    let v = p.ia * p.ka * c
        + p.il * p.kd * n_dot_l.max(0.0) * c
        + 255.0 * p.il * p.ks * n_dot_h.max(0.0).powf(p.ns);
    v.round().clamp(0.0, 255.0) as u8
}

fn shade_pixel(px: [u8; 3], n_dot_l: f64, n_dot_h: f64, p: &PhongParams) -> [u8; 3] {
    px.map(|c| shade_channel(c, n_dot_l, n_dot_h, p))
}

/// Per-pixel Phong shading using exact height-field normals.
pub fn shade_image(img: &RgbImage, p: &PhongParams) -> RgbImage {
    let normals = height_field_normals(&to_grayscale(img), p.height_scale);
    let l = p.light_dir;
    let hv = p.halfway();
    let pixels: Vec<[u8; 3]> = img
        .pixels()
        .par_iter()
        .zip(normals.normals.par_iter())
        .map(|(&px, &n)| shade_pixel(px, n.dot(l), n.dot(hv), p))
        .collect();
    RgbImage::new(img.width(), img.height(), pixels).expect("same dimensions as input")
}

/// Linear interpolants `N = a·x + b·y + c` and `H = d·x + e·y + f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileInterpolant {
    pub a: Vec3,
    pub b: Vec3,
    pub c: Vec3,
    pub d: Vec3,
    pub e: Vec3,
    pub f: Vec3,
}

impl TileInterpolant {
    pub fn normal_at(&self, x: f64, y: f64) -> Vec3 {
        self.a * x + self.b * y + self.c
    }

    pub fn halfway_at(&self, x: f64, y: f64) -> Vec3 {
        self.d * x + self.e * y + self.f
    }
}

/// Cosine between the interpolated normal and halfway vectors at `(x, y)`.
pub fn tile_ndoth(t: &TileInterpolant, x: f64, y: f64) -> Result<f64> {
    let n = t.normal_at(x, y);
    let h = t.halfway_at(x, y);
    let (nn, hn) = (n.norm(), h.norm());
    if nn == 0.0 {
        return Err(Error::DegenerateInterpolant {
            which: "normal",
            x,
            y,
        });
    }
    if hn == 0.0 {
        return Err(Error::DegenerateInterpolant {
            which: "halfway",
            x,
            y,
        });
    }
    Ok((n.dot(h) / (nn * hn)).clamp(-1.0, 1.0))
}

/// Lattice cell containing coordinate `v`: `(origin, extent)`.
fn lattice_cell(v: usize, tile: usize, len: usize) -> (usize, usize) {
    let origin = v / tile * tile;
    let end = (origin + tile).min(len - 1);
    (origin, end - origin)
}

/// Affine normal interpolant over one triangle of a tile, in tile-local pixel
/// coordinates. The lower triangle holds the origin corner.
fn triangle_normal(
    corners: [Vec3; 4],
    w: usize,
    h: usize,
    dx: usize,
    dy: usize,
) -> (Vec3, Vec3, Vec3) {
    let [n00, n10, n01, n11] = corners;
    let (wf, hf) = (w as f64, h as f64);
    let u = if w == 0 { 0.0 } else { dx as f64 / wf };
    let v = if h == 0 { 0.0 } else { dy as f64 / hf };
    let lower = u + v <= 1.0 || w == 0 || h == 0;
    if lower {
        let a = if w == 0 {
            Vec3::ZERO
        } else {
            (n10 - n00) * (1.0 / wf)
        };
        let b = if h == 0 {
            Vec3::ZERO
        } else {
            (n01 - n00) * (1.0 / hf)
        };
        (a, b, n00)
    } else {
        let a = (n11 - n01) * (1.0 / wf);
        let b = (n11 - n10) * (1.0 / hf);
        (a, b, n10 + n01 - n11)
    }
}

/// Phong shading with normals sampled on a `tile`-pixel corner lattice.
///
/// `L` and `V` are directional, so the halfway interpolant is constant
/// (`d = e = 0`, `f = H`). Diffuse uses the same quotient with `f = L`.
pub fn shade_image_tiled(img: &RgbImage, p: &PhongParams, tile: usize) -> Result<RgbImage> {
    if tile < 2 {
        return Err(Error::InvalidParameter(format!(
            "tile must be >= 2, got {tile}"
        )));
    }
    let gray = to_grayscale(img);
    let (w, h) = (img.width(), img.height());
    let l = p.light_dir;
    let hv = p.halfway();

    let pixels = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let (x0, tw) = lattice_cell(x, tile, w);
            let (y0, th) = lattice_cell(y, tile, h);
            let corner = |cx: usize, cy: usize| normal_at(&gray, p.height_scale, cx, cy);
            let corners = [
                corner(x0, y0),
                corner(x0 + tw, y0),
                corner(x0, y0 + th),
                corner(x0 + tw, y0 + th),
            ];
            let (dx, dy) = (x - x0, y - y0);
            let (a, b, c) = triangle_normal(corners, tw, th, dx, dy);
            let mut interp = TileInterpolant {
                a,
                b,
                c,
                d: Vec3::ZERO,
                e: Vec3::ZERO,
                f: hv,
            };
            let (fx, fy) = (dx as f64, dy as f64);
            let n_dot_h = tile_ndoth(&interp, fx, fy)?;
            interp.f = l;
            let n_dot_l = tile_ndoth(&interp, fx, fy)?;
            Ok(shade_pixel(img.pixels()[i], n_dot_l, n_dot_h, p))
        })
        .collect::<Result<Vec<_>>>()?;
    RgbImage::new(w, h, pixels)
}

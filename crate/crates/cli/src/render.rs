//! Equirectangular preview images as binary PPM.
//!
//! Rows are spaced uniformly in colatitude and take the nearest ring;
//! columns are spaced uniformly in longitude and interpolate linearly
//! between the two neighbouring samples of that ring, wrapping around.
//! Values map linearly from `[min, max]` onto a blue → white → red ramp:
//! `t = 0` is (0, 0, 255), `t = ½` is (255, 255, 255), `t = 1` is
//! (255, 0, 0). A constant map renders at `t = ½`.

use std::f64::consts::PI;

use shtsynth::SkyMap64;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB triples, row-major from the north pole.
    pub rgb: Vec<u8>,
    pub min: f64,
    pub max: f64,
}

impl Image {
    pub fn degenerate(&self) -> bool {
        self.min == self.max
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.rgb);
        out
    }
}

pub fn ramp(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let byte = |v: f64| (255.0 * v).round() as u8;
    if t <= 0.5 {
        let w = byte(2.0 * t);
        [w, w, 255]
    } else {
        let w = byte(2.0 * (1.0 - t));
        [255, w, w]
    }
}

/// Default image size: one column per sample of the widest ring, and at
/// least one row per ring.
pub fn default_size(map: &SkyMap64) -> (usize, usize) {
    let width = map.grid.max_n_phi();
    (width, map.grid.n_rings().max(width / 2))
}

fn nearest_ring(map: &SkyMap64, theta: f64) -> usize {
    let rings = map.grid.rings();
    let i = rings.partition_point(|r| r.theta < theta);
    match (i.checked_sub(1), rings.get(i)) {
        (Some(a), Some(b)) if theta - rings[a].theta <= b.theta - theta => a,
        (Some(_), Some(_)) | (None, Some(_)) => i,
        (Some(a), None) => a,
        (None, None) => unreachable!("grid has at least one ring"),
    }
}

fn sample_at(row: &[f64], phi_0: f64, phi: f64) -> f64 {
    let n = row.len();
    let u = ((phi - phi_0) / (2.0 * PI) * n as f64).rem_euclid(n as f64);
    let j = (u.floor() as usize).min(n - 1);
    let frac = u - j as f64;
    row[j] * (1.0 - frac) + row[(j + 1) % n] * frac
}

pub fn render(map: &SkyMap64, width: usize, height: usize) -> Result<Image> {
    let (min, max) = map.min_max().ok_or_else(|| CliError::Usage("map has no samples".into()))?;
    if width == 0 || height == 0 {
        return Err(CliError::Usage("image dimensions must be positive".into()));
    }
    let mut rgb = Vec::with_capacity(3 * width * height);
    for y in 0..height {
        let theta = PI * (y as f64 + 0.5) / height as f64;
        let r = nearest_ring(map, theta);
        let ring = map.grid.ring(r);
        for x in 0..width {
            let phi = 2.0 * PI * x as f64 / width as f64;
            let v = sample_at(&map.values[r], ring.phi_0, phi);
            let t = if max > min { (v - min) / (max - min) } else { 0.5 };
            rgb.extend_from_slice(&ramp(t));
        }
    }
    Ok(Image { width, height, rgb, min, max })
}

//! Elastic deformation: uniform random displacements smoothed by a Gaussian,
//! normalized so the longest displacement vector has unit length, then
//! scaled so that `alpha` is the maximum displacement in pixels.
//!
//! Noise comes from ChaCha8 used as a counter-based generator: component `c`
//! uses stream `c`, and pixel `i` reads the 64-bit word at position `2 i`.
//! Any row can therefore be generated independently, and fields are
//! bit-identical whatever the thread count.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian;
use crate::raster::{to_luma, GrayImage};
use crate::warp::{Frame, SampleGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticSpec {
    /// Maximum displacement, pixels.
    pub alpha: f64,
    /// Smoothing standard deviation, pixels.
    pub sigma: f64,
    pub seed: u64,
}

impl ElasticSpec {
    /// Varies line character while keeping shapes: sigma 16, alpha 8 at 256².
    pub const LINE: ElasticSpec = ElasticSpec {
        alpha: 8.0,
        sigma: 16.0,
        seed: 0,
    };
    /// Bends limbs and outlines: sigma 32, alpha 24 at 256².
    pub const LIMB: ElasticSpec = ElasticSpec {
        alpha: 24.0,
        sigma: 32.0,
        seed: 0,
    };

    pub const MIN_SIGMA: f64 = 0.5;

    pub fn new(alpha: f64, sigma: f64, seed: u64) -> Self {
        Self { alpha, sigma, seed }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "elastic alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > Self::MIN_SIGMA) {
            return Err(Error::InvalidSpec(format!(
                "elastic sigma must be finite and > {}, got {}",
                Self::MIN_SIGMA,
                self.sigma
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for ElasticSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "elastic(alpha={},sigma={},seed={})",
            self.alpha, self.sigma, self.seed
        )
    }
}

/// Per-pixel offsets in pixel units, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementField {
    pub width: u32,
    pub height: u32,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DisplacementField {
    pub fn zeros(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        Self {
            width,
            height,
            dx: vec![0.0; n],
            dy: vec![0.0; n],
        }
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width as usize + x
    }

    pub fn at(&self, x: u32, y: u32) -> (f64, f64) {
        let i = self.idx(x as usize, y as usize);
        (self.dx[i], self.dy[i])
    }

    /// Bilinear lookup at a pixel coordinate, clamped to the field.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        let snap = |v: f64| {
            let r = v.round();
            if (v - r).abs() < 1e-9 {
                r
            } else {
                v
            }
        };
        let x = snap(x).clamp(0.0, (self.width - 1) as f64);
        let y = snap(y).clamp(0.0, (self.height - 1) as f64);
        let (x0, y0) = (x.floor() as usize, y.floor() as usize);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        if fx == 0.0 && fy == 0.0 {
            let i = self.idx(x0, y0);
            return (self.dx[i], self.dy[i]);
        }
        let x1 = (x0 + 1).min(self.width as usize - 1);
        let y1 = (y0 + 1).min(self.height as usize - 1);
        let lerp = |plane: &[f64]| {
            let top = plane[self.idx(x0, y0)] * (1.0 - fx) + plane[self.idx(x1, y0)] * fx;
            let bot = plane[self.idx(x0, y1)] * (1.0 - fx) + plane[self.idx(x1, y1)] * fx;
            top * (1.0 - fy) + bot * fy
        };
        (lerp(&self.dx), lerp(&self.dy))
    }

    /// Length of the longest displacement vector.
    pub fn max_displacement(&self) -> f64 {
        self.dx
            .iter()
            .zip(&self.dy)
            .fold(0.0f64, |m, (x, y)| m.max(x.hypot(*y)))
    }
}

fn uniform_noise(width: usize, height: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut plane = vec![0.0; width * height];
    plane
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(row, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            rng.set_word_pos(2 * (row * width) as u128);
            for v in out {
                let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                *v = 2.0 * unit - 1.0;
            }
        });
    plane
}

fn normalize_and_scale([dx, dy]: &mut [Vec<f64>; 2], alpha: f64) {
    let peak = dx.iter().zip(dy.iter()).fold(0.0f64, |m, (x, y)| m.max(x.hypot(*y)));
    for v in dx.iter_mut().chain(dy.iter_mut()) {
        *v = if peak > 0.0 { (*v / peak) * alpha } else { 0.0 };
    }
}

/// Deterministic smoothed random displacement field for a `w`x`h` raster.
pub fn generate_field(w: u32, h: u32, spec: &ElasticSpec) -> Result<DisplacementField> {
    spec.validate()?;
    if w == 0 || h == 0 {
        return Err(Error::InvalidSpec(format!(
            "displacement field needs positive dimensions, got {w}x{h}"
        )));
    }
    if spec.alpha == 0.0 {
        return Ok(DisplacementField::zeros(w, h));
    }
    let (wu, hu) = (w as usize, h as usize);
    let taps = gaussian::kernel(spec.sigma)?;
    let mut planes = [0u64, 1].map(|stream| {
        let noise = uniform_noise(wu, hu, spec.seed, stream);
        gaussian::convolve_separable(&noise, wu, hu, &taps)
    });
    normalize_and_scale(&mut planes, spec.alpha);
    let [dx, dy] = planes;
    Ok(DisplacementField {
        width: w,
        height: h,
        dx,
        dy,
    })
}

/// `out(p) = img(p + d(p))`, bilinear, white outside the raster.
pub fn apply_elastic(img: &GrayImage, spec: &ElasticSpec) -> Result<GrayImage> {
    let field = generate_field(img.width(), img.height(), spec)?;
    Ok(apply_field(img, &field))
}

/// Backward-warp `img` through an explicit displacement field.
pub fn apply_field(img: &GrayImage, field: &DisplacementField) -> GrayImage {
    assert_eq!(
        (img.width(), img.height()),
        (field.width, field.height),
        "field/image size mismatch"
    );
    let w = img.width() as usize;
    let mut out = vec![0u8; img.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let i = y * w + x;
            let sx = x as f64 + field.dx[i];
            let sy = y as f64 + field.dy[i];
            *o = to_luma(img.sample_bilinear(sx, sy));
        }
    });
    GrayImage::from_raw(img.width(), img.height(), out)
}

/// Sample grid equivalent to [`apply_field`], for sharing across stages.
pub fn field_grid(field: &DisplacementField) -> SampleGrid {
    let frame = Frame::new(field.width, field.height);
    SampleGrid::from_fn(frame, |p| {
        let (px, py) = frame.to_pixel(p);
        let (dx, dy) = field.sample(px, py);
        frame.to_norm(px + dx, py + dy)
    })
}

/// Minimum of `det(I + J)` over interior pixels, where `J` is the
/// central-difference Jacobian of the displacement. Positive means the
/// deformation does not fold anywhere. Fields thinner than three pixels in
/// either direction fall back to one-sided differences over every pixel.
pub fn jacobian_min(field: &DisplacementField) -> f64 {
    let (w, h) = (field.width as usize, field.height as usize);
    let grad = |plane: &[f64], x: usize, y: usize| -> (f64, f64) {
        let at = |x: usize, y: usize| plane[y * w + x];
        let gx = match w {
            1 => 0.0,
            _ if x == 0 => at(1, y) - at(0, y),
            _ if x == w - 1 => at(x, y) - at(x - 1, y),
            _ => (at(x + 1, y) - at(x - 1, y)) / 2.0,
        };
        let gy = match h {
            1 => 0.0,
            _ if y == 0 => at(x, 1) - at(x, 0),
            _ if y == h - 1 => at(x, y) - at(x, y - 1),
            _ => (at(x, y + 1) - at(x, y - 1)) / 2.0,
        };
        (gx, gy)
    };
    let (xs, ys) = if w >= 3 && h >= 3 {
        (1..w - 1, 1..h - 1)
    } else {
        (0..w, 0..h)
    };
    ys.into_par_iter()
        .map(|y| {
            xs.clone().fold(f64::INFINITY, |m, x| {
                let (dxx, dxy) = grad(&field.dx, x, y);
                let (dyx, dyy) = grad(&field.dy, x, y);
                m.min((1.0 + dxx) * (1.0 + dyy) - dxy * dyx)
            })
        })
        .reduce(|| f64::INFINITY, f64::min)
}

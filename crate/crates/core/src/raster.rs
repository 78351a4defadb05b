//! 8-bit grayscale rasters, PNG I/O and canvas canonicalization.
//!
//! Polarity is fixed: `0` is ink, `255` is paper. Every ink metric in the
//! crate counts pixels strictly below [`INK_LEVEL`].

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::{DynamicImage, ImageEncoder, ImageReader};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Luminance of blank paper.
pub const WHITE: u8 = 255;
/// Pixels darker than this are counted as ink.
pub const INK_LEVEL: u8 = 128;

/// Sample coordinates closer than this (in pixels) to a pixel centre are
/// snapped onto it, so exact permutations (identity, flips) stay lossless.
const SNAP_EPS: f64 = 1e-9;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("ink", &self.ink_count())
            .finish()
    }
}

impl GrayImage {
    /// Panics if either dimension is zero or the buffer length does not
    /// match; use [`GrayImage::try_from_raw`] for untrusted input.
    pub fn from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Self {
        Self::try_from_raw(width, height, pixels).expect("invalid raster dimensions")
    }

    pub fn try_from_raw(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidSpec(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidSpec(format!(
                "raster {width}x{height} needs {} pixels, got {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self::from_raw(width, height, vec![value; width as usize * height as usize])
    }

    pub fn white(width: u32, height: u32) -> Self {
        Self::filled(width, height, WHITE)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::from_raw(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    /// Number of ink pixels (value < [`INK_LEVEL`]).
    pub fn ink_count(&self) -> usize {
        self.pixels.iter().filter(|&&v| v < INK_LEVEL).count()
    }

    /// Mean pixel position of ink, in pixel coordinates; `None` for a blank page.
    pub fn ink_centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (i, &v) in self.pixels.iter().enumerate() {
            if v < INK_LEVEL {
                sx += (i % self.width as usize) as f64;
                sy += (i / self.width as usize) as f64;
                n += 1;
            }
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    /// Bilinear sample at a pixel-centre coordinate; taps outside the raster
    /// read white.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let x = snap(x);
        let y = snap(y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as i64, y0 as i64);
        let tap = |dx: i64, dy: i64| -> f64 {
            let (px, py) = (xi + dx, yi + dy);
            if px < 0 || py < 0 || px >= self.width as i64 || py >= self.height as i64 {
                WHITE as f64
            } else {
                self.pixels[py as usize * self.width as usize + px as usize] as f64
            }
        };
        if fx == 0.0 && fy == 0.0 {
            return tap(0, 0);
        }
        let top = tap(0, 0) * (1.0 - fx) + tap(1, 0) * fx;
        let bottom = tap(0, 1) * (1.0 - fx) + tap(1, 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Copy of the `width`x`height` window whose top-left corner is `(x, y)`.
    pub fn crop(&self, x: u32, y: u32, width: u32, height: u32) -> GrayImage {
        assert!(x + width <= self.width && y + height <= self.height);
        GrayImage::from_fn(width, height, |cx, cy| self.get(x + cx, y + cy))
    }

    /// Paste `other` with its top-left corner at `(x, y)`, clipping to bounds.
    pub fn paste(&mut self, other: &GrayImage, x: u32, y: u32) {
        for oy in 0..other.height {
            let ty = y + oy;
            if ty >= self.height {
                break;
            }
            for ox in 0..other.width {
                let tx = x + ox;
                if tx >= self.width {
                    break;
                }
                self.set(tx, ty, other.get(ox, oy));
            }
        }
    }

    /// Side-by-side concatenation; heights must match.
    pub fn hstack(left: &GrayImage, right: &GrayImage) -> GrayImage {
        assert_eq!(left.height, right.height, "hstack needs equal heights");
        let mut out = GrayImage::white(left.width + right.width, left.height);
        out.paste(left, 0, 0);
        out.paste(right, left.width, 0);
        out
    }
}

#[inline]
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < SNAP_EPS {
        r
    } else {
        v
    }
}

/// Rounds a filtered luminance back to 8 bits.
#[inline]
pub fn to_luma(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    Nearest,
    #[default]
    Bilinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CanvasPolicy {
    pub target_size: u32,
    pub pad_value: u8,
    pub resample: Resample,
}

impl Default for CanvasPolicy {
    fn default() -> Self {
        Self {
            target_size: 256,
            pad_value: WHITE,
            resample: Resample::Bilinear,
        }
    }
}

impl CanvasPolicy {
    pub const MIN_SIZE: u32 = 16;

    pub fn with_size(target_size: u32) -> Self {
        Self {
            target_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size < Self::MIN_SIZE {
            return Err(Error::Config(format!(
                "canvas target_size must be at least {}, got {}",
                Self::MIN_SIZE,
                self.target_size
            )));
        }
        Ok(())
    }
}

/// Scale to fit a `target_size` square preserving aspect ratio, centre, and
/// pad with `pad_value`. Square inputs already at the target size are
/// returned unchanged, which makes the operation idempotent.
pub fn canonicalize(img: &GrayImage, policy: &CanvasPolicy) -> GrayImage {
    let target = policy.target_size;
    let (w, h) = img.dimensions();
    if w == target && h == target {
        return img.clone();
    }
    let scale = target as f64 / w.max(h) as f64;
    let nw = ((w as f64 * scale).round() as u32).clamp(1, target);
    let nh = ((h as f64 * scale).round() as u32).clamp(1, target);
    let scaled = resize(img, nw, nh, policy.resample);
    let mut out = GrayImage::filled(target, target, policy.pad_value);
    out.paste(&scaled, (target - nw) / 2, (target - nh) / 2);
    out
}

/// Resize with pixel-centre alignment and edge clamping.
pub fn resize(img: &GrayImage, width: u32, height: u32, mode: Resample) -> GrayImage {
    let (w, h) = img.dimensions();
    if (w, h) == (width, height) {
        return img.clone();
    }
    let sx = w as f64 / width as f64;
    let sy = h as f64 / height as f64;
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    match mode {
        Resample::Nearest => GrayImage::from_fn(width, height, |x, y| {
            let src_x = (((x as f64 + 0.5) * sx).floor() as u32).min(w - 1);
            let src_y = (((y as f64 + 0.5) * sy).floor() as u32).min(h - 1);
            img.get(src_x, src_y)
        }),
        Resample::Bilinear => GrayImage::from_fn(width, height, |x, y| {
            let src_x = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let src_y = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            to_luma(img.sample_bilinear(src_x, src_y))
        }),
    }
}

/// Decode any PNG into luminance: BT.601 weights for colour, alpha
/// composited over white.
pub fn load_png(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = ImageReader::with_format(BufReader::new(file), image::ImageFormat::Png);
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    Ok(luminance(&decoded))
}

fn luminance(img: &DynamicImage) -> GrayImage {
    let (width, height) = (img.width(), img.height());
    if let DynamicImage::ImageLuma8(gray) = img {
        return GrayImage::from_raw(width, height, gray.as_raw().clone());
    }
    let rgba = img.to_rgba16();
    let pixels = rgba
        .pixels()
        .map(|p| {
            let [r, g, b, a] = p.0.map(|c| c as f64 / 65535.0);
            let luma = 0.299 * r + 0.587 * g + 0.114 * b;
            to_luma((a * luma + (1.0 - a)) * 255.0)
        })
        .collect();
    GrayImage::from_raw(width, height, pixels)
}

/// Write an 8-bit grayscale PNG.
pub fn save_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let encoder = image::codecs::png::PngEncoder::new(BufWriter::new(file));
    encoder
        .write_image(
            img.pixels(),
            img.width(),
            img.height(),
            image::ExtendedColorType::L8,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::io(path, std::io::Error::other(other.to_string())),
        })
}

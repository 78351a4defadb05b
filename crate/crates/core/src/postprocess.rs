//! Line cleanup for generated drawings: Gaussian blur followed by a global
//! Otsu threshold.

use std::cmp::Ordering;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian;
use crate::raster::{to_luma, GrayImage, INK_LEVEL};

/// Blur applied before thresholding unless overridden.
pub const DEFAULT_SIGMA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtsuResult {
    /// Pixels `<= threshold` form the dark class.
    pub threshold: u8,
    pub between_class_variance: f64,
}

/// Separable Gaussian blur, radius `ceil(3 sigma)`, clamped edges.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    let taps = gaussian::kernel(sigma)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let plane: Vec<f64> = img.pixels().iter().map(|&v| v as f64).collect();
    let out = gaussian::convolve_separable(&plane, w, h, &taps);
    Ok(GrayImage::from_raw(
        img.width(),
        img.height(),
        out.into_iter().map(to_luma).collect(),
    ))
}

pub fn histogram(img: &GrayImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in img.pixels() {
        hist[v as usize] += 1;
    }
    hist
}

/// Exhaustive Otsu threshold over all 256 cuts.
///
/// Between-class variance `ω₀ω₁(μ₀−μ₁)²` equals `D² / (N² n₀ n₁)` with
/// `D = N·S₀ − n₀·S`, so candidate cuts are compared exactly in integers.
/// Ties go to the lowest threshold; a single-level image returns that level
/// with zero variance.
pub fn otsu_threshold(img: &GrayImage) -> OtsuResult {
    otsu_from_histogram(&histogram(img))
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> OtsuResult {
    let total: u64 = hist.iter().sum();
    let sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();
    let levels: Vec<usize> = (0..256).filter(|&v| hist[v] > 0).collect();
    if levels.len() <= 1 {
        return OtsuResult {
            threshold: levels.first().copied().unwrap_or(0) as u8,
            between_class_variance: 0.0,
        };
    }

    let n = total as u128;
    let mut n0: u128 = 0;
    let mut s0: u128 = 0;
    // (threshold, |D|, n0 * n1)
    let mut best: Option<(usize, u128, u128)> = None;
    for (t, &count) in hist.iter().enumerate() {
        n0 += count as u128;
        s0 += t as u128 * count as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (n * s0).abs_diff(n0 * sum);
        let q = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bd, bq)) => cmp_ratio(d, q, bd, bq) == Ordering::Greater,
        };
        if better {
            best = Some((t, d, q));
        }
    }
    let (t, d, q) = best.expect("two levels give at least one split");
    let (d, q, n) = (d as f64, q as f64, n as f64);
    OtsuResult {
        threshold: t as u8,
        between_class_variance: d / n * (d / n) / q,
    }
}

/// Compare `d1² / q1` against `d2² / q2` exactly.
fn cmp_ratio(d1: u128, q1: u128, d2: u128, q2: u128) -> Ordering {
    let lhs = d1.checked_mul(d1).and_then(|v| v.checked_mul(q2));
    let rhs = d2.checked_mul(d2).and_then(|v| v.checked_mul(q1));
    match (lhs, rhs) {
        (Some(l), Some(r)) => l.cmp(&r),
        _ => {
            let big = |d: u128, q: u128| BigUint::from(d) * BigUint::from(d) * BigUint::from(q);
            big(d1, q2).cmp(&big(d2, q1))
        }
    }
}

/// Blur (skipped for `sigma == 0`), then Otsu: `<= threshold` becomes ink.
///
/// A single-level image carries no contrast to split; it maps to whichever
/// of ink or paper its level is closer to.
pub fn binarize(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let blurred;
    let src = if sigma > 0.0 {
        blurred = gaussian_blur(img, sigma)?;
        &blurred
    } else {
        img
    };
    let hist = histogram(src);
    let single_level = hist.iter().filter(|&&c| c > 0).count() <= 1;
    let OtsuResult { threshold, .. } = otsu_from_histogram(&hist);
    let pixels = src
        .pixels()
        .iter()
        .map(|&v| {
            let ink = if single_level {
                v < INK_LEVEL
            } else {
                v <= threshold
            };
            if ink {
                0
            } else {
                255
            }
        })
        .collect();
    Ok(GrayImage::from_raw(img.width(), img.height(), pixels))
}

//! Separable Gaussian filtering on `f64` planes, shared by the elastic field
//! generator and the line cleanup blur.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Normalized 1-D Gaussian taps with radius `ceil(3 sigma)`.
pub fn kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Convolve a row-major `width`x`height` plane with `taps` along both axes,
/// clamping reads at the borders. Each output value is computed by the same
/// sequence of operations regardless of thread count.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    assert_eq!(plane.len(), width * height);
    let radius = (taps.len() / 2) as isize;

    let mut rows = vec![0.0; plane.len()];
    rows.par_chunks_mut(width)
        .zip(plane.par_chunks(width))
        .for_each(|(out, src)| {
            for (x, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &t) in taps.iter().enumerate() {
                    let sx = (x as isize + k as isize - radius).clamp(0, width as isize - 1);
                    acc += t * src[sx as usize];
                }
                *o = acc;
            }
        });

    let mut out = vec![0.0; plane.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sy = (y as isize + k as isize - radius).clamp(0, height as isize - 1);
                acc += t * rows[sy as usize * width + x];
            }
            *o = acc;
        }
    });
    out
}

//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use inkwarp::warp::warp_point;
use inkwarp::{GrayImage, NormPoint, WarpSpec};

/// Brute-force Otsu: for every cut `t`, class weights and means straight
/// from the pixels, `ω₀ω₁(μ₀−μ₁)²` in exact rationals, lowest argmax.
pub fn otsu_oracle(img: &GrayImage) -> (u8, BigRational) {
    let px = img.pixels();
    let first = px[0];
    if px.iter().all(|&v| v == first) {
        return (first, BigRational::from_integer(0.into()));
    }
    let n = BigInt::from(px.len());
    let mut best: Option<(u8, BigRational)> = None;
    for t in 0..=255u8 {
        let (mut n0, mut s0, mut n1, mut s1) = (0i64, 0i64, 0i64, 0i64);
        for &v in px {
            if v <= t {
                n0 += 1;
                s0 += v as i64;
            } else {
                n1 += 1;
                s1 += v as i64;
            }
        }
        let var = if n0 == 0 || n1 == 0 {
            BigRational::from_integer(0.into())
        } else {
            let w0 = BigRational::new(n0.into(), n.clone());
            let w1 = BigRational::new(n1.into(), n.clone());
            let m0 = BigRational::new(s0.into(), n0.into());
            let m1 = BigRational::new(s1.into(), n1.into());
            let d = m0 - m1;
            w0 * w1 * d.clone() * d
        };
        if best.as_ref().is_none_or(|(_, b)| var > *b) {
            best = Some((t, var));
        }
    }
    best.unwrap()
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

pub fn psnr(a: &GrayImage, b: &GrayImage) -> f64 {
    let mse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum::<f64>()
        / a.len() as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// Smooth test image: a few dark Gaussian blobs on white.
pub fn blobs(seed: u64, size: u32) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let centres: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.25 * s..0.75 * s),
                rng.random_range(0.25 * s..0.75 * s),
                rng.random_range(0.08 * s..0.15 * s),
            )
        })
        .collect();
    GrayImage::from_fn(size, size, |x, y| {
        let dark: f64 = centres
            .iter()
            .map(|&(cx, cy, r)| {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                (-d2 / (2.0 * r * r)).exp()
            })
            .sum::<f64>()
            .min(1.0);
        (255.0 * (1.0 - 0.8 * dark)).round() as u8
    })
}

/// Solve `f(t) = target` for increasing `f` on `[lo, hi]`.
fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse of an engineered map's backward sampling function, found by
/// bisection on the one coordinate it moves (treating the map as a black
/// box that is monotone along that axis or ray).
pub fn numeric_inverse(spec: &WarpSpec, q: NormPoint) -> NormPoint {
    let s = |p: NormPoint| warp_point(spec, p).unwrap();
    match spec {
        WarpSpec::XStretch { .. } | WarpSpec::Spherical { .. } => {
            NormPoint::new(bisect(-1.0, 1.0, q.x, |x| s(NormPoint::new(x, q.y)).x), q.y)
        }
        WarpSpec::YStretch { .. } => {
            NormPoint::new(q.x, bisect(-1.0, 1.0, q.y, |y| s(NormPoint::new(q.x, y)).y))
        }
        WarpSpec::Daisy { .. } => {
            let rho = q.radius();
            if rho == 0.0 || rho > 1.0 {
                return q;
            }
            let (ux, uy) = (q.x / rho, q.y / rho);
            let r = bisect(0.0, 1.0, rho, |r| s(NormPoint::new(r * ux, r * uy)).radius());
            NormPoint::new(r * ux, r * uy)
        }
        other => panic!("no numeric inverse for {other}"),
    }
}

pub fn random_gray(rng: &mut ChaCha8Rng, w: u32, h: u32) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.random())
}

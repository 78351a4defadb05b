use std::sync::Arc;

use rayon::prelude::*;

use super::{NormPoint, WarpSpec};
use crate::elastic::{generate_field, DisplacementField};
use crate::error::{Error, Result};
use crate::raster::{to_luma, GrayImage};

/// Pixel grid <-> normalized coordinate conversion for a `width`x`height`
/// raster. The conversion is exactly odd-symmetric about the centre, so a
/// point reflection lands on mirrored pixel centres without rounding error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
}

impl Frame {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn of(img: &GrayImage) -> Self {
        Self::new(img.width(), img.height())
    }

    #[inline]
    pub fn to_norm(&self, px: f64, py: f64) -> NormPoint {
        let sw = (self.width - 1) as f64;
        let sh = (self.height - 1) as f64;
        let x = if sw == 0.0 { 0.0 } else { (2.0 * px - sw) / sw };
        let y = if sh == 0.0 { 0.0 } else { (sh - 2.0 * py) / sh };
        NormPoint::new(x, y)
    }

    #[inline]
    pub fn to_pixel(&self, p: NormPoint) -> (f64, f64) {
        let sw = (self.width - 1) as f64;
        let sh = (self.height - 1) as f64;
        ((p.x * sw + sw) / 2.0, (sh - p.y * sh) / 2.0)
    }
}

#[derive(Clone, Debug)]
enum Step {
    Leaf(WarpSpec),
    Field(Arc<DisplacementField>),
}

/// Evaluable backward map: output point -> source point.
///
/// Steps are stored in evaluation order, i.e. the forward chain reversed.
/// Each geometric step clamps its result to the square; displacement steps
/// work in pixel units of the frame they were generated for.
#[derive(Clone, Debug)]
pub struct SampleMap {
    steps: Vec<Step>,
    frame: Option<Frame>,
}

/// Backward map of a purely geometric spec. Specs containing elastic steps
/// need a canvas; use [`SampleMap::for_frame`].
pub fn sample_map(spec: &WarpSpec) -> Result<SampleMap> {
    spec.validate()?;
    if spec.contains_elastic() {
        return Err(Error::InvalidSpec(
            "elastic steps need a canvas size to evaluate".into(),
        ));
    }
    let mut steps = Vec::new();
    flatten(spec, None, &mut steps)?;
    Ok(SampleMap { steps, frame: None })
}

/// Evaluate `spec`'s backward map at one point, with the same domain and
/// clamping rules [`apply_warp`] uses.
pub fn warp_point(spec: &WarpSpec, p: NormPoint) -> Result<NormPoint> {
    if !p.is_finite() {
        return Err(Error::InvalidSpec(format!("non-finite point {p:?}")));
    }
    Ok(sample_map(spec)?.eval(p))
}

fn flatten(spec: &WarpSpec, frame: Option<Frame>, out: &mut Vec<Step>) -> Result<()> {
    match spec {
        WarpSpec::Compose(items) => {
            for item in items.iter().rev() {
                flatten(item, frame, out)?;
            }
        }
        WarpSpec::Elastic(e) => {
            let frame = frame.expect("frame checked by caller");
            let field = generate_field(frame.width, frame.height, e)?;
            out.push(Step::Field(Arc::new(field)));
        }
        leaf => out.push(Step::Leaf(leaf.clone())),
    }
    Ok(())
}

impl SampleMap {
    /// Resolve `spec` for a concrete raster size, generating any elastic
    /// displacement fields once.
    pub fn for_frame(spec: &WarpSpec, frame: Frame) -> Result<Self> {
        spec.validate()?;
        let mut steps = Vec::new();
        flatten(spec, Some(frame), &mut steps)?;
        Ok(Self {
            steps,
            frame: Some(frame),
        })
    }

    pub fn frame(&self) -> Option<Frame> {
        self.frame
    }

    pub fn eval(&self, p: NormPoint) -> NormPoint {
        self.steps.iter().fold(p, |p, step| match step {
            Step::Leaf(spec) => spec.eval_leaf(p).clamp_square(),
            Step::Field(field) => {
                let frame = self.frame.expect("fields only exist with a frame");
                let (px, py) = frame.to_pixel(p);
                let (dx, dy) = field.sample(px, py);
                frame.to_norm(px + dx, py + dy)
            }
        })
    }
}

/// Source pixel coordinates for every output pixel of a frame.
///
/// Built once per transform chain and reused for every stage image, so all
/// stages of a tuple are resampled through bit-identical coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    frame: Frame,
    coords: Vec<[f64; 2]>,
}

impl SampleGrid {
    pub fn build(map: &SampleMap, frame: Frame) -> Self {
        Self::from_fn(frame, |p| map.eval(p))
    }

    pub fn from_fn(frame: Frame, f: impl Fn(NormPoint) -> NormPoint + Sync) -> Self {
        let w = frame.width as usize;
        let mut coords = vec![[0.0; 2]; w * frame.height as usize];
        coords.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
            for (x, c) in row.iter_mut().enumerate() {
                let src = f(frame.to_norm(x as f64, y as f64));
                let (sx, sy) = frame.to_pixel(src);
                *c = [sx, sy];
            }
        });
        Self { frame, coords }
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Source coordinate used for output pixel `(x, y)`.
    pub fn at(&self, x: u32, y: u32) -> [f64; 2] {
        self.coords[y as usize * self.frame.width as usize + x as usize]
    }

    pub fn resample(&self, img: &GrayImage) -> GrayImage {
        assert_eq!(Frame::of(img), self.frame, "grid/image size mismatch");
        let w = self.frame.width as usize;
        let mut out = vec![0u8; self.coords.len()];
        out.par_chunks_mut(w)
            .zip(self.coords.par_chunks(w))
            .for_each(|(row, coords)| {
                for (o, &[sx, sy]) in row.iter_mut().zip(coords) {
                    *o = to_luma(img.sample_bilinear(sx, sy));
                }
            });
        GrayImage::from_raw(self.frame.width, self.frame.height, out)
    }
}

/// Backward-warp a square image: bilinear sampling, white exterior, output
/// the same size as the input.
pub fn apply_warp(img: &GrayImage, spec: &WarpSpec) -> Result<GrayImage> {
    if !img.is_square() {
        return Err(Error::NonSquareInput {
            width: img.width(),
            height: img.height(),
        });
    }
    let frame = Frame::of(img);
    let map = SampleMap::for_frame(spec, frame)?;
    Ok(SampleGrid::build(&map, frame).resample(img))
}

/// Resample through an arbitrary backward map given as a closure.
pub fn resample_with(img: &GrayImage, f: impl Fn(NormPoint) -> NormPoint + Sync) -> GrayImage {
    SampleGrid::from_fn(Frame::of(img), f).resample(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warp::{Affine, DomainMode};

    #[test]
    fn frame_round_trips_pixel_centres() {
        let f = Frame::new(256, 256);
        for c in [0.0, 1.0, 17.0, 127.0, 128.0, 255.0] {
            let (x, y) = f.to_pixel(f.to_norm(c, c));
            assert!((x - c).abs() < 1e-9 && (y - c).abs() < 1e-9);
        }
        assert_eq!(f.to_norm(0.0, 0.0), NormPoint::new(-1.0, 1.0));
        assert_eq!(f.to_norm(255.0, 255.0), NormPoint::new(1.0, -1.0));
    }

    #[test]
    fn frame_is_odd_symmetric() {
        let f = Frame::new(200, 200);
        for c in 0..200 {
            let a = f.to_norm(c as f64, c as f64);
            let b = f.to_norm((199 - c) as f64, (199 - c) as f64);
            assert_eq!(a.x, -b.x);
            assert_eq!(a.y, -b.y);
        }
    }

    #[test]
    fn identity_affine_is_pixel_exact() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 31 + y * 17) % 256) as u8);
        assert_eq!(apply_warp(&img, &WarpSpec::identity()).unwrap(), img);
    }

    #[test]
    fn point_reflection_is_a_permutation() {
        let img = GrayImage::from_fn(50, 50, |x, y| ((x * 5 + y * 3) % 256) as u8);
        let spec = WarpSpec::Affine(Affine {
            flipx: true,
            flipy: true,
            ..Affine::IDENTITY
        });
        let out = apply_warp(&img, &spec).unwrap();
        for y in 0..50 {
            for x in 0..50 {
                assert_eq!(out.get(x, y), img.get(49 - x, 49 - y));
            }
        }
    }

    #[test]
    fn white_stays_white() {
        let img = GrayImage::white(64, 64);
        for spec in [
            WarpSpec::xstretch(),
            WarpSpec::spherical().with_domain(DomainMode::Square),
            WarpSpec::daisy(3.0),
            WarpSpec::Affine(Affine::rotation(0.4)),
        ] {
            assert_eq!(apply_warp(&img, &spec).unwrap(), img);
        }
    }

    #[test]
    fn non_square_is_rejected() {
        let err = apply_warp(&GrayImage::white(10, 12), &WarpSpec::identity()).unwrap_err();
        assert!(matches!(err, Error::NonSquareInput { .. }));
    }

    #[test]
    fn elastic_needs_a_frame() {
        let spec = WarpSpec::Elastic(crate::elastic::ElasticSpec::new(8.0, 16.0, 1));
        assert!(sample_map(&spec).is_err());
        assert!(SampleMap::for_frame(&spec, Frame::new(32, 32)).is_ok());
    }

    /// A lone ink dot at normalized x = 0.25 moves to x = sqrt(0.25) = 0.5
    /// under the stretch, since the output samples the source at x|x|.
    #[test]
    fn xstretch_moves_ink_outwards() {
        let frame = Frame::new(257, 257);
        let (px, py) = frame.to_pixel(NormPoint::new(0.25, 0.0));
        assert_eq!((px, py), (160.0, 128.0));
        let mut img = GrayImage::white(257, 257);
        for dy in 0..3 {
            for dx in 0..3 {
                img.set(159 + dx, 127 + dy, 0);
            }
        }
        let out = apply_warp(&img, &WarpSpec::xstretch()).unwrap();
        let (cx, cy) = out.ink_centroid().expect("ink survives");
        let c = frame.to_norm(cx, cy);
        assert!((c.x - 0.5).abs() < 0.01, "{c:?}");
        assert!(c.y.abs() < 0.01, "{c:?}");
    }
}

//! Geometric transforms in normalized image coordinates.
//!
//! The image square is mapped onto `[-1, 1]²` with the centre at the origin
//! and `y` pointing **up**; pixel row 0 is the top of the image. Pixel
//! centres of the outermost rows/columns sit exactly on `±1`.
//!
//! Every transform is represented by its *backward* sampling map: for an
//! output point it yields the source point to read. Rotations follow the
//! usual counter-clockwise convention in this y-up frame, so
//! `affine(rot=π/2)` moves source `(0, -1)` to output `(1, 0)`.

mod map;
mod text;

pub use map::{apply_warp, resample_with, sample_map, warp_point, Frame, SampleGrid, SampleMap};
pub use text::Template;

use serde::{Deserialize, Serialize};

use crate::elastic::ElasticSpec;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormPoint {
    pub x: f64,
    pub y: f64,
}

impl NormPoint {
    pub const ORIGIN: NormPoint = NormPoint { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn radius(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        Self::new(r * theta.cos(), r * theta.sin())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    fn clamp_square(self) -> Self {
        Self::new(self.x.clamp(-1.0, 1.0), self.y.clamp(-1.0, 1.0))
    }
}

/// Where an engineered map acts.
///
/// `Disk` applies the map inside the unit disk and leaves `r > 1` untouched;
/// the stretches then act along each disk chord so the circle stays fixed.
/// `Square` applies the literal formula over the whole square.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainMode {
    #[default]
    Disk,
    Square,
}

impl DomainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainMode::Disk => "disk",
            DomainMode::Square => "square",
        }
    }
}

/// Forward affine transform `p' = R(rot) · diag(sx, sy) · F · p + (tx, ty)`
/// where `F` applies the optional axis flips.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub rot: f64,
    pub sx: f64,
    pub sy: f64,
    pub tx: f64,
    pub ty: f64,
    pub flipx: bool,
    pub flipy: bool,
}

impl Default for Affine {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Affine {
    pub const IDENTITY: Affine = Affine {
        rot: 0.0,
        sx: 1.0,
        sy: 1.0,
        tx: 0.0,
        ty: 0.0,
        flipx: false,
        flipy: false,
    };

    pub fn rotation(rot: f64) -> Self {
        Self { rot, ..Self::IDENTITY }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Self {
            sx,
            sy,
            ..Self::IDENTITY
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            tx,
            ty,
            ..Self::IDENTITY
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// Output point -> source point.
    pub fn inverse_apply(&self, p: NormPoint) -> NormPoint {
        let (dx, dy) = (p.x - self.tx, p.y - self.ty);
        let (x, y) = if self.rot == 0.0 {
            (dx, dy)
        } else {
            let (s, c) = self.rot.sin_cos();
            (c * dx + s * dy, -s * dx + c * dy)
        };
        let (mut x, mut y) = (x / self.sx, y / self.sy);
        if self.flipx {
            x = -x;
        }
        if self.flipy {
            y = -y;
        }
        NormPoint::new(x, y)
    }

    /// Source point -> output point.
    pub fn forward_apply(&self, p: NormPoint) -> NormPoint {
        let x = if self.flipx { -p.x } else { p.x } * self.sx;
        let y = if self.flipy { -p.y } else { p.y } * self.sy;
        let (x, y) = if self.rot == 0.0 {
            (x, y)
        } else {
            let (s, c) = self.rot.sin_cos();
            (c * x - s * y, s * x + c * y)
        };
        NormPoint::new(x + self.tx, y + self.ty)
    }
}

/// One declarative transform. Chains are expressed with [`WarpSpec::Compose`],
/// listed in forward order: the first element is applied to the image first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum WarpSpec {
    XStretch { domain: DomainMode },
    YStretch { domain: DomainMode },
    Spherical { domain: DomainMode },
    Daisy { exponent: f64, domain: DomainMode },
    Affine(Affine),
    Skew { kx: f64, ky: f64 },
    Elastic(ElasticSpec),
    Compose(Vec<WarpSpec>),
}

impl WarpSpec {
    pub const DEFAULT_DAISY_EXPONENT: f64 = 3.0;

    pub fn identity() -> Self {
        WarpSpec::Affine(Affine::IDENTITY)
    }

    pub fn xstretch() -> Self {
        WarpSpec::XStretch {
            domain: DomainMode::default(),
        }
    }

    pub fn ystretch() -> Self {
        WarpSpec::YStretch {
            domain: DomainMode::default(),
        }
    }

    pub fn spherical() -> Self {
        WarpSpec::Spherical {
            domain: DomainMode::default(),
        }
    }

    pub fn daisy(exponent: f64) -> Self {
        WarpSpec::Daisy {
            exponent,
            domain: DomainMode::default(),
        }
    }

    /// Same transform with the engineered-map domain replaced (recursively).
    pub fn with_domain(self, mode: DomainMode) -> Self {
        match self {
            WarpSpec::XStretch { .. } => WarpSpec::XStretch { domain: mode },
            WarpSpec::YStretch { .. } => WarpSpec::YStretch { domain: mode },
            WarpSpec::Spherical { .. } => WarpSpec::Spherical { domain: mode },
            WarpSpec::Daisy { exponent, .. } => WarpSpec::Daisy {
                exponent,
                domain: mode,
            },
            WarpSpec::Compose(items) => {
                WarpSpec::Compose(items.into_iter().map(|w| w.with_domain(mode)).collect())
            }
            other => other,
        }
    }

    /// True for the hand-designed homeomorphisms (not affine, skew or elastic).
    pub fn is_engineered(&self) -> bool {
        matches!(
            self,
            WarpSpec::XStretch { .. }
                | WarpSpec::YStretch { .. }
                | WarpSpec::Spherical { .. }
                | WarpSpec::Daisy { .. }
        )
    }

    pub fn contains_elastic(&self) -> bool {
        match self {
            WarpSpec::Elastic(_) => true,
            WarpSpec::Compose(items) => items.iter().any(WarpSpec::contains_elastic),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            WarpSpec::XStretch { .. } | WarpSpec::YStretch { .. } | WarpSpec::Spherical { .. } => {
                Ok(())
            }
            WarpSpec::Daisy { exponent, .. } => {
                finite("daisy exponent", *exponent)?;
                if *exponent <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "daisy exponent must be > 0, got {exponent}"
                    )));
                }
                Ok(())
            }
            WarpSpec::Affine(a) => {
                for (name, v) in [
                    ("rot", a.rot),
                    ("sx", a.sx),
                    ("sy", a.sy),
                    ("tx", a.tx),
                    ("ty", a.ty),
                ] {
                    finite(name, v)?;
                }
                if a.sx <= 0.0 || a.sy <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "affine scale factors must be > 0, got sx={} sy={}",
                        a.sx, a.sy
                    )));
                }
                Ok(())
            }
            WarpSpec::Skew { kx, ky } => {
                finite("kx", *kx)?;
                finite("ky", *ky)?;
                if 1.0 - kx * ky <= 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "skew kx={kx} ky={ky} is not orientation preserving (1 - kx*ky <= 0)"
                    )));
                }
                Ok(())
            }
            WarpSpec::Elastic(e) => e.validate(),
            WarpSpec::Compose(items) => {
                if items.is_empty() {
                    return Err(Error::InvalidSpec("compose list must be non-empty".into()));
                }
                items.iter().try_for_each(WarpSpec::validate)
            }
        }
    }

    /// Backward map of a single non-elastic, non-compose transform, before
    /// clamping. Callers go through [`SampleMap`].
    pub(crate) fn eval_leaf(&self, p: NormPoint) -> NormPoint {
        match *self {
            WarpSpec::XStretch { domain } => match domain {
                DomainMode::Square => NormPoint::new(p.x * p.x.abs(), p.y),
                DomainMode::Disk => gate_disk(p, |p| {
                    let half_chord = (1.0 - p.y * p.y).max(0.0).sqrt();
                    if half_chord == 0.0 {
                        return p;
                    }
                    NormPoint::new(p.x * p.x.abs() / half_chord, p.y)
                }),
            },
            WarpSpec::YStretch { domain } => match domain {
                DomainMode::Square => NormPoint::new(p.x, p.y * p.y.abs()),
                DomainMode::Disk => gate_disk(p, |p| {
                    let half_chord = (1.0 - p.x * p.x).max(0.0).sqrt();
                    if half_chord == 0.0 {
                        return p;
                    }
                    NormPoint::new(p.x, p.y * p.y.abs() / half_chord)
                }),
            },
            WarpSpec::Spherical { domain } => {
                let f = |p: NormPoint| NormPoint::new(p.x * p.radius(), p.y);
                match domain {
                    DomainMode::Square => f(p),
                    DomainMode::Disk => gate_disk(p, f),
                }
            }
            WarpSpec::Daisy { exponent, domain } => {
                let f = |p: NormPoint| {
                    let r = p.radius();
                    if r == 0.0 {
                        return NormPoint::ORIGIN;
                    }
                    let k = r.powf(exponent) / r;
                    NormPoint::new(p.x * k, p.y * k)
                };
                match domain {
                    DomainMode::Square => f(p),
                    DomainMode::Disk => gate_disk(p, f),
                }
            }
            WarpSpec::Affine(a) => a.inverse_apply(p),
            WarpSpec::Skew { kx, ky } => {
                let det = 1.0 - kx * ky;
                NormPoint::new((p.x - kx * p.y) / det, (p.y - ky * p.x) / det)
            }
            WarpSpec::Elastic(_) | WarpSpec::Compose(_) => {
                unreachable!("eval_leaf called on a non-leaf transform")
            }
        }
    }
}

#[inline]
fn gate_disk(p: NormPoint, f: impl FnOnce(NormPoint) -> NormPoint) -> NormPoint {
    if p.x * p.x + p.y * p.y > 1.0 {
        p
    } else {
        f(p)
    }
}

impl std::fmt::Display for WarpSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        text::write_spec(self, f)
    }
}

impl std::str::FromStr for WarpSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        text::parse_spec(s)
    }
}

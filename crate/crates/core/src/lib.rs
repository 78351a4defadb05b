//! Stage-consistent geometric augmentation for line drawings saved in
//! complexity stages (body, then mane, then spots), plus the tooling around
//! it: dataset assembly into side-by-side training pairs, Gaussian + Otsu
//! cleanup of generated drawings, and a runner that chains external
//! per-stage model commands.
//!
//! ```
//! use inkwarp::{synth, warp::apply_warp, WarpSpec};
//!
//! let drawing = synth::giraffe(0, 64).stage_b;
//! let spec: WarpSpec = "compose[affine(rot=0.05);xstretch()]".parse().unwrap();
//! let warped = apply_warp(&drawing, &spec).unwrap();
//! assert_eq!(warped.dimensions(), (64, 64));
//! ```

pub mod chain;
pub mod cli;
pub mod config;
pub mod elastic;
pub mod error;
mod gaussian;
pub mod pipeline;
pub mod postprocess;
pub mod raster;
pub mod synth;
pub mod warp;

pub use elastic::{DisplacementField, ElasticSpec};
pub use error::{Error, Result};
pub use raster::{CanvasPolicy, GrayImage};
pub use warp::{DomainMode, NormPoint, WarpSpec};

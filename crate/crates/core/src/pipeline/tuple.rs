use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::{canonicalize, load_png, CanvasPolicy, GrayImage};

/// Allowed ink loss between consecutive stages, as a fraction of the canvas.
pub const INK_TOLERANCE: f64 = 0.02;

/// The registered stage images saved while drawing one character.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageTuple {
    pub id: String,
    pub stage_a: PathBuf,
    pub stage_b: PathBuf,
    pub stage_c: Option<PathBuf>,
}

/// A decoded, canonicalized stage tuple.
#[derive(Clone, Debug)]
pub struct CanonicalTuple {
    pub id: String,
    /// A, B and optionally C, all `target_size` square.
    pub stages: Vec<GrayImage>,
}

impl StageTuple {
    pub fn has_stage_c(&self) -> bool {
        self.stage_c.is_some()
    }

    pub fn paths(&self) -> Vec<&Path> {
        let mut v = vec![self.stage_a.as_path(), self.stage_b.as_path()];
        v.extend(self.stage_c.as_deref());
        v
    }

    /// Decode, check registration and monotone ink, canonicalize.
    pub fn load(&self, policy: &CanvasPolicy) -> Result<CanonicalTuple> {
        let raw = self
            .paths()
            .into_iter()
            .map(load_png)
            .collect::<Result<Vec<_>>>()?;
        let dims = raw[0].dimensions();
        if let Some(bad) = raw.iter().find(|img| img.dimensions() != dims) {
            return Err(Error::InvalidTuple {
                id: self.id.clone(),
                message: format!(
                    "stage sizes differ: {}x{} vs {}x{}",
                    dims.0,
                    dims.1,
                    bad.width(),
                    bad.height()
                ),
            });
        }
        let stages: Vec<GrayImage> = raw.iter().map(|img| canonicalize(img, policy)).collect();
        check_monotone_ink(&self.id, &stages)?;
        Ok(CanonicalTuple {
            id: self.id.clone(),
            stages,
        })
    }
}

/// Later stages add detail, so ink may only drop by resampling noise.
pub(crate) fn check_monotone_ink(id: &str, stages: &[GrayImage]) -> Result<()> {
    let slack = INK_TOLERANCE * stages[0].len() as f64;
    for (i, pair) in stages.windows(2).enumerate() {
        let (before, after) = (pair[0].ink_count(), pair[1].ink_count());
        if (after as f64) < before as f64 - slack {
            return Err(Error::InvalidTuple {
                id: id.to_string(),
                message: format!(
                    "stage {} has less ink ({after}) than stage {} ({before})",
                    super::stage_letter(i + 1),
                    super::stage_letter(i),
                ),
            });
        }
    }
    Ok(())
}

/// Find `<id>_a.png` / `<id>_b.png` / optional `<id>_c.png` groups in `dir`,
/// sorted by id.
pub fn discover_tuples(dir: impl AsRef<Path>) -> Result<Vec<StageTuple>> {
    let dir = dir.as_ref();
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if let Some(id) = name.strip_suffix("_a.png") {
            ids.push(id.to_string());
        } else if let Some(id) = name.strip_suffix("_b.png") {
            if !dir.join(format!("{id}_a.png")).is_file() {
                return Err(Error::InvalidTuple {
                    id: id.to_string(),
                    message: "stage b without stage a".into(),
                });
            }
        }
    }
    ids.sort();
    ids.into_iter()
        .map(|id| {
            let stage_b = dir.join(format!("{id}_b.png"));
            if !stage_b.is_file() {
                return Err(Error::InvalidTuple {
                    id,
                    message: "stage a without stage b".into(),
                });
            }
            let c = dir.join(format!("{id}_c.png"));
            Ok(StageTuple {
                stage_a: dir.join(format!("{id}_a.png")),
                stage_b,
                stage_c: c.is_file().then_some(c),
                id,
            })
        })
        .collect()
}

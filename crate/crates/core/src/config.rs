//! TOML config files for the `dataset` and `chain` subcommands. Relative
//! paths are resolved against the config file's directory.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainInput, ChainSpec, StageCommand};
use crate::error::{Error, Result};
use crate::pipeline::{AugmentationPlan, Direction};
use crate::raster::CanvasPolicy;
use crate::warp::Template;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasConfig {
    #[serde(default = "default_size")]
    pub target_size: u32,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        Self {
            target_size: default_size(),
        }
    }
}

fn default_size() -> u32 {
    CanvasPolicy::default().target_size
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetConfig {
    pub cols: u32,
    pub rows: u32,
}

impl Default for SheetConfig {
    fn default() -> Self {
        Self { cols: 6, rows: 6 }
    }
}

/// Keys of a dataset config; everything but `originals` has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_per_original")]
    pub per_original: usize,
    /// Transform templates, e.g. `"affine(rot=-0.05..0.05)"`.
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default)]
    pub include_identity: bool,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    /// Directory of `<id>_a.png`, `<id>_b.png`, optional `<id>_c.png`.
    pub originals: Option<PathBuf>,
    /// Accept / reject id lists applied before assembly.
    pub accept: Option<PathBuf>,
    pub reject: Option<PathBuf>,
    /// Defaults to `ab`, plus `bc` and `ac` when every original has stage C.
    pub directions: Option<Vec<String>>,
    #[serde(default)]
    pub canvas: CanvasConfig,
    #[serde(default)]
    pub sheet: SheetConfig,
}

fn default_per_original() -> usize {
    AugmentationPlan::default().per_original
}

fn default_families() -> Vec<String> {
    AugmentationPlan::default()
        .families
        .iter()
        .map(|t| t.source().to_string())
        .collect()
}

fn default_split_ratio() -> f64 {
    AugmentationPlan::default().split_ratio
}

impl Default for DatasetConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

impl DatasetConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = read_toml(path)?;
        let base = base_dir(path);
        for p in [&mut cfg.originals, &mut cfg.accept, &mut cfg.reject] {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn plan(&self) -> Result<AugmentationPlan> {
        let families = self
            .families
            .iter()
            .map(|s| Template::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let plan = AugmentationPlan {
            master_seed: self.master_seed,
            per_original: self.per_original,
            families,
            include_identity: self.include_identity,
            split_ratio: self.split_ratio,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn canvas(&self) -> Result<CanvasPolicy> {
        let policy = CanvasPolicy::with_size(self.canvas.target_size);
        policy.validate()?;
        Ok(policy)
    }

    /// Configured directions, or the default for the given originals.
    pub fn directions(&self, all_have_stage_c: bool) -> Result<Vec<Direction>> {
        match &self.directions {
            Some(list) => {
                let mut dirs = list
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<Direction>>>()?;
                dirs.sort();
                dirs.dedup();
                Ok(dirs)
            }
            None if all_have_stage_c => Ok(Direction::ALL.to_vec()),
            None => Ok(vec![Direction::AtoB]),
        }
    }
}

/// Keys of a chain config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    /// A directory of PNG inputs, or a list of PNG files.
    pub inputs: InputSource,
    /// Directory of targets matched to inputs by file name.
    pub targets: Option<PathBuf>,
    pub size: Option<u32>,
    pub stages: Vec<StageCommand>,
    pub oneshot: Option<StageCommand>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    Dir(PathBuf),
    Files(Vec<PathBuf>),
}

impl ChainConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = read_toml(path)?;
        let base = base_dir(path);
        match &mut cfg.inputs {
            InputSource::Dir(d) => *d = base.join(&*d),
            InputSource::Files(files) => files.iter_mut().for_each(|f| *f = base.join(&*f)),
        }
        resolve(base, &mut cfg.targets);
        Ok(cfg)
    }

    pub fn spec(&self, default_size: u32) -> ChainSpec {
        ChainSpec {
            stages: self.stages.clone(),
            oneshot: self.oneshot.clone(),
            size: self.size.unwrap_or(default_size),
        }
    }

    /// Input files sorted by name, each paired with its target if any.
    pub fn inputs(&self) -> Result<Vec<ChainInput>> {
        let mut files = match &self.inputs {
            InputSource::Files(f) => f.clone(),
            InputSource::Dir(dir) => {
                let mut v = Vec::new();
                for e in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
                    let p = e.map_err(|e| Error::io(dir, e))?.path();
                    if p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")) {
                        v.push(p);
                    }
                }
                v
            }
        };
        files.sort();
        Ok(files
            .into_iter()
            .map(|p| {
                let target = self
                    .targets
                    .as_ref()
                    .and_then(|t| p.file_name().map(|n| t.join(n)))
                    .filter(|t| t.is_file());
                ChainInput {
                    target,
                    ..ChainInput::new(p)
                }
            })
            .collect())
    }
}

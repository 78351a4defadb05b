use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::manifest::{Manifest, ManifestEntry};
use super::tuple::CanonicalTuple;
use crate::error::{Error, Result};
use crate::raster::{load_png, save_png, GrayImage};
use crate::warp::{Frame, SampleGrid, SampleMap, WarpSpec};

/// Source coordinates of `chain` on `frame`, evaluated once and shared by
/// every stage.
pub fn stage_grid(chain: &WarpSpec, frame: Frame) -> Result<SampleGrid> {
    let map = SampleMap::for_frame(chain, frame)?;
    Ok(SampleGrid::build(&map, frame))
}

/// Warp every stage of `tuple` through the entry's chain and write the
/// results under `root`. Returns the warped stages in A, B, C order.
pub fn materialize(entry: &ManifestEntry, tuple: &CanonicalTuple, root: &Path) -> Result<Vec<GrayImage>> {
    let paths = entry.output_paths.all();
    if paths.len() != tuple.stages.len() {
        return Err(Error::InvalidTuple {
            id: tuple.id.clone(),
            message: format!(
                "{} has {} stage outputs but the original has {} stages",
                entry.example_id,
                paths.len(),
                tuple.stages.len()
            ),
        });
    }
    let chain: WarpSpec = entry.transform_chain.parse()?;
    let grid = stage_grid(&chain, Frame::of(&tuple.stages[0]))?;
    let warped: Vec<GrayImage> = tuple.stages.iter().map(|s| grid.resample(s)).collect();
    for (img, rel) in warped.iter().zip(paths) {
        let path = root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        save_png(img, &path)?;
    }
    Ok(warped)
}

/// [`materialize`] over all entries in parallel on the current rayon pool.
pub fn materialize_all(
    entries: &[ManifestEntry],
    tuples: &BTreeMap<String, CanonicalTuple>,
    root: &Path,
) -> Result<()> {
    entries.par_iter().try_for_each(|entry| {
        let tuple = tuples.get(&entry.source_id).ok_or_else(|| Error::InvalidTuple {
            id: entry.source_id.clone(),
            message: format!("no original for {}", entry.example_id),
        })?;
        materialize(entry, tuple, root).map(|_| ())
    })
}

/// Pairs of usable examples from the same original whose stage-B outputs
/// differ in fewer than `min_fraction` of their pixels.
pub fn distinctness_violations(
    manifest: &Manifest,
    root: &Path,
    min_fraction: f64,
) -> Result<Vec<(String, String, f64)>> {
    let mut by_source: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for e in manifest.usable() {
        by_source.entry(&e.source_id).or_default().push(e);
    }
    let mut out = Vec::new();
    for group in by_source.values() {
        let images = group
            .par_iter()
            .map(|e| load_png(root.join(&e.output_paths.b)))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                let frac = differing_fraction(&images[i], &images[j]);
                if frac < min_fraction {
                    out.push((group[i].example_id.clone(), group[j].example_id.clone(), frac));
                }
            }
        }
    }
    Ok(out)
}

fn differing_fraction(a: &GrayImage, b: &GrayImage) -> f64 {
    let diff = a.pixels().iter().zip(b.pixels()).filter(|(x, y)| x != y).count();
    diff as f64 / a.len() as f64
}

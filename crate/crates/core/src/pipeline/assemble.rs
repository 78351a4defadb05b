use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::manifest::{Manifest, ManifestEntry};
use super::plan::Split;
use super::{stage_letter, Direction};
use crate::error::{Error, Result};
use crate::raster::{load_png, save_png, GrayImage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AssembleCounts {
    pub direction: Direction,
    pub train: usize,
    pub val: usize,
}

impl AssembleCounts {
    pub fn total(&self) -> usize {
        self.train + self.val
    }
}

/// Write `root/<dir>/{train,val}/<example_id>.png` combined images for every
/// usable row, left half input stage, right half target stage. Any previous
/// contents of `root/<dir>` are replaced.
pub fn assemble(manifest: &Manifest, root: &Path, direction: Direction) -> Result<AssembleCounts> {
    let rows: Vec<&ManifestEntry> = manifest.usable().collect();
    if rows.is_empty() {
        return Err(Error::EmptyAfterCuration(direction.to_string()));
    }
    let (input, target) = direction.stages();
    for row in &rows {
        for stage in [input, target] {
            if row.output_paths.get(stage).is_none() {
                return Err(Error::MissingStage {
                    id: row.example_id.clone(),
                    stage: stage_letter(stage).to_ascii_uppercase(),
                    direction: direction.to_string(),
                });
            }
        }
    }

    let base = root.join(direction.dir_name());
    if base.exists() {
        std::fs::remove_dir_all(&base).map_err(|e| Error::io(&base, e))?;
    }
    for split in [Split::Train, Split::Val] {
        let dir = base.join(split.dir_name());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    rows.par_iter().try_for_each(|row| -> Result<()> {
        let load = |stage: usize| load_png(root.join(row.output_paths.get(stage).unwrap()));
        let pair = GrayImage::hstack(&load(input)?, &load(target)?);
        let path = base
            .join(row.split.dir_name())
            .join(format!("{}.png", row.example_id));
        save_png(&pair, path)
    })?;

    let train = rows.iter().filter(|r| r.split == Split::Train).count();
    Ok(AssembleCounts {
        direction,
        train,
        val: rows.len() - train,
    })
}

/// One review page and the example ids on it, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetPage {
    pub image: GrayImage,
    pub ids: Vec<String>,
    pub cols: u32,
}

const FRAME_GRAY: u8 = 192;

/// Tile the most complete stage of every row (any status) into
/// `cols × rows` grids, ordered by example id. Each cell is one canonical
/// image with a 1-px gray frame; ids go into the index file rather than
/// onto the image.
pub fn contact_sheet(manifest: &Manifest, root: &Path, cols: u32, rows: u32) -> Result<Vec<SheetPage>> {
    if cols == 0 || rows == 0 {
        return Err(Error::Config(format!("sheet grid must be non-empty, got {cols}x{rows}")));
    }
    let per_page = (cols * rows) as usize;
    manifest
        .entries
        .chunks(per_page)
        .map(|chunk| {
            let thumbs = chunk
                .par_iter()
                .map(|e| {
                    let rel = e.output_paths.c.as_deref().unwrap_or(&e.output_paths.b);
                    load_png(root.join(rel))
                })
                .collect::<Result<Vec<_>>>()?;
            let (cw, ch) = thumbs[0].dimensions();
            let mut page = GrayImage::white(cw * cols, ch * rows);
            for (i, thumb) in thumbs.iter().enumerate() {
                let (x0, y0) = ((i as u32 % cols) * cw, (i as u32 / cols) * ch);
                page.paste(thumb, x0, y0);
                for t in 0..cw {
                    page.set(x0 + t, y0, FRAME_GRAY);
                    page.set(x0 + t, y0 + ch - 1, FRAME_GRAY);
                }
                for t in 0..ch {
                    page.set(x0, y0 + t, FRAME_GRAY);
                    page.set(x0 + cw - 1, y0 + t, FRAME_GRAY);
                }
            }
            Ok(SheetPage {
                image: page,
                ids: chunk.iter().map(|e| e.example_id.clone()).collect(),
                cols,
            })
        })
        .collect()
}

/// Write `sheet_<n>.png` (from 1) and `sheet_index.txt`, replacing any
/// earlier sheets in `dir`.
pub fn write_sheets(pages: &[SheetPage], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("sheet_") && (name.ends_with(".png") || name == "sheet_index.txt") {
            std::fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
    }
    let mut index = String::from("# sheet\trow\tcol\texample_id\n");
    for (n, page) in pages.iter().enumerate() {
        let name = format!("sheet_{}.png", n + 1);
        save_png(&page.image, dir.join(&name))?;
        for (i, id) in page.ids.iter().enumerate() {
            let (r, c) = (i as u32 / page.cols, i as u32 % page.cols);
            writeln!(index, "{name}\t{r}\t{c}\t{id}").unwrap();
        }
    }
    let path = dir.join("sheet_index.txt");
    std::fs::write(&path, index).map_err(|e| Error::io(&path, e))
}

//! Dataset construction: stage tuples in, stage-consistent augmented
//! tuples and side-by-side training pairs out.
//!
//! ```text
//! out/
//!   manifest.jsonl              one row per example
//!   stages/<example_id>_a.png   warped stages (b, and c when present)
//!   ab/train/<example_id>.png   left = input stage, right = target stage
//!   ab/val/...  bc/...  ac/...
//!   sheets/sheet_<n>.png        review grids + sheet_index.txt
//! ```

mod assemble;
mod manifest;
mod materialize;
mod plan;
mod tuple;

pub use assemble::{assemble, contact_sheet, write_sheets, AssembleCounts, SheetPage};
pub use manifest::{apply_acceptlist, read_id_list, Manifest, ManifestEntry, StagePaths, Status};
pub use materialize::{distinctness_violations, materialize, materialize_all, stage_grid};
pub use plan::{entry_seed, expand_plan, split_for, AugmentationPlan, Split};
pub use tuple::{discover_tuples, CanonicalTuple, StageTuple, INK_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which stage pair a combined training image holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    AtoB,
    BtoC,
    AtoC,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::AtoB, Direction::BtoC, Direction::AtoC];

    /// Directory name under the dataset root.
    pub fn dir_name(self) -> &'static str {
        match self {
            Direction::AtoB => "ab",
            Direction::BtoC => "bc",
            Direction::AtoC => "ac",
        }
    }

    /// Stage indices (0 = A) of the input and target halves.
    pub fn stages(self) -> (usize, usize) {
        match self {
            Direction::AtoB => (0, 1),
            Direction::BtoC => (1, 2),
            Direction::AtoC => (0, 2),
        }
    }

    pub fn needs_stage_c(self) -> bool {
        self != Direction::AtoB
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::AtoB => "AtoB",
            Direction::BtoC => "BtoC",
            Direction::AtoC => "AtoC",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ab" | "atob" | "a2b" => Ok(Direction::AtoB),
            "bc" | "btoc" | "b2c" => Ok(Direction::BtoC),
            "ac" | "atoc" | "a2c" => Ok(Direction::AtoC),
            _ => Err(Error::Config(format!(
                "unknown direction `{s}` (expected ab, bc or ac)"
            ))),
        }
    }
}

pub(crate) fn stage_letter(index: usize) -> char {
    (b'a' + index as u8) as char
}

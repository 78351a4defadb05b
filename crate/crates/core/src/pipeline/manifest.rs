use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plan::Split;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    /// Not reviewed; assembled like an accepted row.
    Auto,
    Accepted,
    Rejected,
}

/// Stage outputs of one example, relative to the dataset root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePaths {
    pub a: String,
    pub b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
}

impl StagePaths {
    pub fn for_example(example_id: &str, with_c: bool) -> Self {
        let path = |s: char| format!("stages/{example_id}_{s}.png");
        Self {
            a: path('a'),
            b: path('b'),
            c: with_c.then(|| path('c')),
        }
    }

    pub fn get(&self, stage: usize) -> Option<&str> {
        match stage {
            0 => Some(&self.a),
            1 => Some(&self.b),
            2 => self.c.as_deref(),
            _ => None,
        }
    }

    pub fn all(&self) -> Vec<&str> {
        (0..3).filter_map(|i| self.get(i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub example_id: String,
    pub source_id: String,
    /// Canonical text of the forward transform chain.
    pub transform_chain: String,
    pub seed: u64,
    pub split: Split,
    pub output_paths: StagePaths,
    pub status: Status,
}

impl ManifestEntry {
    /// Rows that assembly uses.
    pub fn is_usable(&self) -> bool {
        self.status != Status::Rejected
    }
}

/// Line-delimited manifest: one JSON object per example, sorted by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.jsonl";

    pub fn new(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].example_id == w[1].example_id) {
            return Err(Error::InvalidPlan(format!(
                "duplicate example id `{}`",
                w[0].example_id
            )));
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn usable(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.is_usable())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, line)| {
                serde_json::from_str(line).map_err(|e| {
                    Error::Config(format!("{}:{}: {e}", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("manifest rows serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Mark `accept` ids accepted and `reject` ids rejected. Idempotent; rows
/// in neither list keep their status.
pub fn apply_acceptlist(manifest: &Manifest, accept: &[String], reject: &[String]) -> Result<Manifest> {
    let accept: BTreeSet<&str> = accept.iter().map(String::as_str).collect();
    let reject: BTreeSet<&str> = reject.iter().map(String::as_str).collect();
    if let Some(id) = accept.intersection(&reject).next() {
        return Err(Error::CurationConflict(id.to_string()));
    }
    let index: BTreeMap<&str, usize> = manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.example_id.as_str(), i))
        .collect();
    let mut out = manifest.clone();
    for (ids, status) in [(&accept, Status::Accepted), (&reject, Status::Rejected)] {
        for id in ids {
            let &i = index.get(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
            out.entries[i].status = status;
        }
    }
    Ok(out)
}

/// One example id per line; blank lines and `#` comments are ignored.
pub fn read_id_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

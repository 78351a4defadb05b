//! Run drawings through external per-stage model commands (A→B, then B→C)
//! and compare with a single one-shot command.
//!
//! A stage is any program that reads a PNG and writes one; its command line
//! is a template with `{in}` and `{out}` placeholders. Each input gets its
//! own directory holding every intermediate:
//!
//! ```text
//! out/<input stem>/00_input.png      canonicalized input
//! out/<input stem>/01_<stage>.png    (+ .log with the command's output)
//! out/<input stem>/oneshot_<name>.png
//! out/report.jsonl, out/summary.txt
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::postprocess::binarize;
use crate::raster::{canonicalize, load_png, save_png, CanvasPolicy, GrayImage};

fn default_timeout() -> f64 {
    300.0
}

/// One model stage as an external command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageCommand {
    pub name: String,
    /// Shell-style command line containing `{in}` and `{out}` once each.
    pub command: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

impl StageCommand {
    pub fn new(name: impl Into<String>, command: impl Into<String>, timeout_s: f64) -> Self {
        Self {
            name: name.into(),
            command: command.into(),
            timeout_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("stage `{}`: {msg}", self.name)));
        for ph in ["{in}", "{out}"] {
            let n = self.command.matches(ph).count();
            if n != 1 {
                return bad(format!("command must contain {ph} exactly once, found {n}"));
            }
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return bad(format!("timeout_s must be positive, got {}", self.timeout_s));
        }
        match shlex::split(&self.command) {
            Some(words) if !words.is_empty() => Ok(()),
            _ => bad("command line cannot be tokenized".into()),
        }
    }

    fn argv(&self, input: &Path, output: &Path) -> Vec<String> {
        let (i, o) = (input.to_string_lossy(), output.to_string_lossy());
        shlex::split(&self.command)
            .unwrap_or_default()
            .into_iter()
            .map(|w| w.replace("{in}", &i).replace("{out}", &o))
            .collect()
    }

    /// Stage name made safe for file names.
    fn file_label(&self) -> String {
        self.name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect()
    }
}

/// Run one stage on `input`, writing `output`. The command's stdout and
/// stderr go to `output` with a `.log` extension. The output must decode
/// and be `size × size`.
pub fn run_stage(cmd: &StageCommand, input: &Path, output: &Path, size: u32) -> Result<GrayImage> {
    cmd.validate()?;
    if output.exists() {
        std::fs::remove_file(output).map_err(|e| Error::io(output, e))?;
    }
    let log_path = output.with_extension("log");
    let log = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let log_err = log.try_clone().map_err(|e| Error::io(&log_path, e))?;
    let argv = cmd.argv(input, output);
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(log)
        .stderr(log_err)
        .spawn()
        .map_err(|source| Error::Spawn {
            program: argv[0].clone(),
            source,
        })?;
    let status = match child
        .wait_timeout(Duration::from_secs_f64(cmd.timeout_s))
        .map_err(|e| Error::io(&argv[0], e))?
    {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(Error::Timeout {
                stage: cmd.name.clone(),
                seconds: cmd.timeout_s,
            });
        }
    };
    if !status.success() {
        return Err(Error::CommandFailed {
            stage: cmd.name.clone(),
            status: status.to_string(),
        });
    }
    let bad = |message: String| Error::BadOutput {
        stage: cmd.name.clone(),
        path: output.to_path_buf(),
        message,
    };
    if !output.is_file() {
        return Err(bad("no output file written".into()));
    }
    let img = load_png(output).map_err(|e| bad(e.to_string()))?;
    if img.dimensions() != (size, size) {
        return Err(bad(format!(
            "expected {size}x{size}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(img)
}

/// Stages to chain, plus an optional one-shot command for comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub stages: Vec<StageCommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oneshot: Option<StageCommand>,
    pub size: u32,
}

impl ChainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("chain needs at least one stage".into()));
        }
        CanvasPolicy::with_size(self.size).validate()?;
        self.stages
            .iter()
            .chain(self.oneshot.as_ref())
            .try_for_each(StageCommand::validate)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainInput {
    pub id: String,
    pub path: PathBuf,
    pub target: Option<PathBuf>,
}

impl ChainInput {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self {
            id,
            path,
            target: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMetrics {
    pub ink_ratio_chained: f64,
    pub ink_ratio_oneshot: Option<f64>,
    /// `|ink(chained) − ink(target)| / canvas`.
    pub delta_ink_vs_target: Option<f64>,
    pub delta_ink_oneshot_vs_target: Option<f64>,
    /// Agreement of the chained output with `reference` after binarizing.
    pub pixel_agreement: f64,
    pub pixel_agreement_oneshot: Option<f64>,
    /// `"target"` when a target is configured, otherwise `"input"`.
    pub reference: String,
    pub chained_vs_oneshot: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// `spawn`, `timeout`, `command_failed`, `bad_output` or `input`.
    pub kind: String,
    pub message: String,
}

impl RecordError {
    fn from_error(err: &Error) -> Self {
        let kind = match err {
            Error::Spawn { .. } => "spawn",
            Error::Timeout { .. } => "timeout",
            Error::CommandFailed { .. } => "command_failed",
            Error::BadOutput { .. } => "bad_output",
            _ => "input",
        };
        Self {
            kind: kind.into(),
            message: err.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub id: String,
    pub input: String,
    pub intermediates: Vec<String>,
    pub chained: Option<String>,
    pub oneshot: Option<String>,
    pub target: Option<String>,
    pub metrics: Option<ChainMetrics>,
    pub error: Option<RecordError>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ChainReport {
    /// Sorted by input id.
    pub records: Vec<ChainRecord>,
}

/// Fraction of ink pixels.
pub fn ink_ratio(img: &GrayImage) -> f64 {
    img.ink_count() as f64 / img.len() as f64
}

/// `|ink(a) − ink(b)| / canvas`.
pub fn delta_ink(a: &GrayImage, b: &GrayImage) -> f64 {
    (ink_ratio(a) - ink_ratio(b)).abs()
}

/// Fraction of pixels on which the Otsu binarizations (no blur) agree.
pub fn pixel_agreement(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let (a, b) = (binarize(a, 0.0)?, binarize(b, 0.0)?);
    let same = a.pixels().iter().zip(b.pixels()).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Feed every input through `spec.stages` in order, and through the
/// one-shot command if configured. Inputs run in parallel on the current
/// rayon pool; one input failing does not affect the others.
pub fn run_chain(spec: &ChainSpec, inputs: &[ChainInput], out: &Path) -> Result<ChainReport> {
    spec.validate()?;
    let mut ids: Vec<&str> = inputs.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate input id `{}`", w[0])));
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut records: Vec<ChainRecord> = inputs
        .par_iter()
        .map(|input| {
            let mut rec = ChainRecord {
                id: input.id.clone(),
                input: input.path.to_string_lossy().into_owned(),
                target: input.target.as_ref().map(|t| t.to_string_lossy().into_owned()),
                ..Default::default()
            };
            if let Err(e) = run_one(spec, input, &out.join(&input.id), &mut rec) {
                rec.error = Some(RecordError::from_error(&e));
            }
            rec
        })
        .collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(ChainReport { records })
}

fn run_one(spec: &ChainSpec, input: &ChainInput, dir: &Path, rec: &mut ChainRecord) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let policy = CanvasPolicy::with_size(spec.size);
    let source = canonicalize(&load_png(&input.path)?, &policy);
    let mut current = dir.join("00_input.png");
    save_png(&source, &current)?;

    let mut chained = source.clone();
    for (k, stage) in spec.stages.iter().enumerate() {
        let next = dir.join(format!("{:02}_{}.png", k + 1, stage.file_label()));
        chained = run_stage(stage, &current, &next, spec.size)?;
        rec.intermediates.push(next.to_string_lossy().into_owned());
        current = next;
    }
    rec.chained = rec.intermediates.last().cloned();

    let oneshot = match &spec.oneshot {
        Some(cmd) => {
            let path = dir.join(format!("oneshot_{}.png", cmd.file_label()));
            let img = run_stage(cmd, &dir.join("00_input.png"), &path, spec.size)?;
            rec.oneshot = Some(path.to_string_lossy().into_owned());
            Some(img)
        }
        None => None,
    };
    let target = match &input.target {
        Some(p) => Some(canonicalize(&load_png(p)?, &policy)),
        None => None,
    };

    let reference = target.as_ref().unwrap_or(&source);
    rec.metrics = Some(ChainMetrics {
        ink_ratio_chained: ink_ratio(&chained),
        ink_ratio_oneshot: oneshot.as_ref().map(ink_ratio),
        delta_ink_vs_target: target.as_ref().map(|t| delta_ink(&chained, t)),
        delta_ink_oneshot_vs_target: target
            .as_ref()
            .zip(oneshot.as_ref())
            .map(|(t, o)| delta_ink(o, t)),
        pixel_agreement: pixel_agreement(&chained, reference)?,
        pixel_agreement_oneshot: oneshot
            .as_ref()
            .map(|o| pixel_agreement(o, reference))
            .transpose()?,
        reference: if target.is_some() { "target" } else { "input" }.into(),
        chained_vs_oneshot: oneshot
            .as_ref()
            .map(|o| pixel_agreement(&chained, o))
            .transpose()?,
    });
    Ok(())
}

impl ChainReport {
    pub fn failures(&self) -> impl Iterator<Item = &ChainRecord> {
        self.records.iter().filter(|r| r.error.is_some())
    }

    /// First record whose command could not be started at all.
    pub fn spawn_failure(&self) -> Option<&ChainRecord> {
        self.failures()
            .find(|r| r.error.as_ref().is_some_and(|e| e.kind == "spawn"))
    }

    pub fn to_jsonl(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect()
    }

    pub fn summary(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut s = format!(
            "{:<24} {:>8} {:>11} {:>11} {:>10} {:>10} {:>10}\n",
            "input", "status", "ink_chain", "ink_oneshot", "agreement", "delta_ink", "chain~one"
        );
        for r in &self.records {
            match (&r.metrics, &r.error) {
                (Some(m), _) => writeln!(
                    s,
                    "{:<24} {:>8} {:>11.4} {:>11} {:>10.4} {:>10} {:>10}",
                    r.id,
                    "ok",
                    m.ink_ratio_chained,
                    opt(m.ink_ratio_oneshot),
                    m.pixel_agreement,
                    opt(m.delta_ink_vs_target),
                    opt(m.chained_vs_oneshot),
                ),
                (None, Some(e)) => writeln!(s, "{:<24} {:>8} {}", r.id, e.kind, e.message),
                (None, None) => writeln!(s, "{:<24} {:>8}", r.id, "-"),
            }
            .unwrap();
        }
        let failed = self.failures().count();
        writeln!(
            s,
            "\n{} inputs, {} ok, {} failed",
            self.records.len(),
            self.records.len() - failed,
            failed
        )
        .unwrap();
        s
    }

    /// Write `report.jsonl` and `summary.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, text) in [("report.jsonl", self.to_jsonl()), ("summary.txt", self.summary())] {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

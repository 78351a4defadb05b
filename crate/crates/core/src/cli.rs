//! The `inkwarp` command line.
//!
//! Exit codes: 0 ok, 1 I/O, 2 spec or argument error, 3 invalid plan or
//! config, 4 nothing left after curation, 5 unknown or conflicting example
//! id, 6 a stage command could not be started.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::chain::run_chain;
use crate::config::{ChainConfig, DatasetConfig};
use crate::elastic::ElasticSpec;
use crate::error::{Error, Result};
use crate::pipeline::{
    apply_acceptlist, assemble, contact_sheet, discover_tuples, expand_plan, materialize_all,
    read_id_list, write_sheets, Direction, Manifest,
};
use crate::postprocess::{binarize, DEFAULT_SIGMA};
use crate::raster::{canonicalize, load_png, save_png, CanvasPolicy};
use crate::synth::{write_originals, Character};
use crate::warp::{apply_warp, Template, WarpSpec};

#[derive(Debug, Parser)]
#[command(name = "inkwarp", version, about = "Stage-consistent augmentation of staged line drawings")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Seed for randomized parameters (overrides a config's master_seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for dataset, chain, sheet and synth runs.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Canonical canvas size in pixels.
    #[arg(long, global = true)]
    pub size: Option<u32>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonicalize an image and apply a transform spec or template.
    Warp {
        input: PathBuf,
        output: PathBuf,
        /// e.g. `xstretch()` or `compose[affine(rot=0.05);spherical()]`.
        spec: String,
    },
    /// Canonicalize an image and apply an elastic deformation.
    Elastic {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = ElasticSpec::LINE.alpha)]
        alpha: f64,
        #[arg(long, default_value_t = ElasticSpec::LINE.sigma)]
        sigma: f64,
    },
    /// Expand a plan, warp every original and assemble training pairs.
    Dataset {
        config: PathBuf,
        /// Overrides the config's `originals` directory.
        #[arg(long)]
        originals: Option<PathBuf>,
    },
    /// Render review sheets for a manifest.
    Sheet {
        manifest: PathBuf,
        #[arg(long, default_value_t = 6)]
        cols: u32,
        #[arg(long, default_value_t = 6)]
        rows: u32,
    },
    /// Apply accept/reject id lists to a manifest and reassemble.
    Curate {
        manifest: PathBuf,
        #[arg(long)]
        accept: Option<PathBuf>,
        #[arg(long)]
        reject: Option<PathBuf>,
    },
    /// Gaussian blur then Otsu threshold.
    Binarize {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SIGMA, allow_negative_numbers = true)]
        sigma: f64,
    },
    /// Run inputs through chained stage commands and a one-shot command.
    Chain { config: PathBuf },
    /// Write procedurally drawn stage tuples, for trying the pipeline out.
    Synth {
        character: SynthCharacter,
        #[arg(long, default_value_t = 9)]
        count: usize,
    },
    /// Print the version.
    Version,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthCharacter {
    Flower,
    Dragon,
    Giraffe,
}

impl From<SynthCharacter> for Character {
    fn from(c: SynthCharacter) -> Self {
        match c {
            SynthCharacter::Flower => Character::Flower,
            SynthCharacter::Dragon => Character::Dragon,
            SynthCharacter::Giraffe => Character::Giraffe,
        }
    }
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Decode { .. } | Error::NonSquareInput { .. } => 1,
        Error::SpecParse { .. } | Error::InvalidSpec(_) | Error::InvalidSigma(_) => 2,
        Error::InvalidPlan(_)
        | Error::EmptyPlan
        | Error::InvalidTuple { .. }
        | Error::MissingStage { .. }
        | Error::Config(_) => 3,
        Error::EmptyAfterCuration(_) => 4,
        Error::UnknownId(_) | Error::CurationConflict(_) => 5,
        Error::Spawn { .. } => 6,
        Error::Timeout { .. } | Error::CommandFailed { .. } | Error::BadOutput { .. } => 1,
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<u8> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(match cli.global.jobs {
            Some(0) => return Err(Error::Config("--jobs must be at least 1".into())),
            Some(n) => n,
            None => 0,
        })
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(&cli.global, cli.command))
}

fn dispatch(g: &GlobalOpts, command: Command) -> Result<u8> {
    match command {
        Command::Warp { input, output, spec } => {
            cmd_warp(g, &input, &output, &spec).map(|_| 0)
        }
        Command::Elastic {
            input,
            output,
            alpha,
            sigma,
        } => {
            let spec = WarpSpec::Elastic(ElasticSpec::new(alpha, sigma, g.seed.unwrap_or(0)));
            cmd_warp(g, &input, &output, &spec.to_string()).map(|_| 0)
        }
        Command::Dataset { config, originals } => cmd_dataset(g, &config, originals).map(|_| 0),
        Command::Sheet {
            manifest,
            cols,
            rows,
        } => cmd_sheet(g, &manifest, cols, rows).map(|_| 0),
        Command::Curate {
            manifest,
            accept,
            reject,
        } => cmd_curate(g, &manifest, accept.as_deref(), reject.as_deref()).map(|_| 0),
        Command::Binarize {
            input,
            output,
            sigma,
        } => cmd_binarize(g, &input, &output, sigma).map(|_| 0),
        Command::Chain { config } => cmd_chain(g, &config),
        Command::Synth { character, count } => cmd_synth(g, character, count).map(|_| 0),
        Command::Version => {
            println!("inkwarp {}", env!("CARGO_PKG_VERSION"));
            Ok(0)
        }
    }
}

fn policy(g: &GlobalOpts) -> Result<CanvasPolicy> {
    let policy = g.size.map(CanvasPolicy::with_size).unwrap_or_default();
    policy.validate()?;
    Ok(policy)
}

fn out_dir(g: &GlobalOpts) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Record the fully resolved configuration of this run in `dir`.
fn log_run_config(dir: &Path, g: &GlobalOpts, command: &str, options: serde_json::Value) -> Result<()> {
    let record = json!({
        "tool": "inkwarp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "global": {
            "seed": g.seed,
            "out": g.out,
            "size": g.size,
            "jobs": rayon::current_num_threads(),
        },
        "options": options,
    });
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("run_config.json");
    let text = serde_json::to_string_pretty(&record).expect("json values serialize") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn cmd_warp(g: &GlobalOpts, input: &Path, output: &Path, spec: &str) -> Result<()> {
    let template = Template::parse(spec)?;
    let seed = g.seed.unwrap_or(0);
    let spec = template.instantiate(&mut ChaCha8Rng::seed_from_u64(seed))?;
    let policy = policy(g)?;
    let img = canonicalize(&load_png(input)?, &policy);
    save_png(&apply_warp(&img, &spec)?, output)?;
    log_run_config(
        parent_dir(output),
        g,
        "warp",
        json!({
            "input": input,
            "output": output,
            "template": template.source(),
            "spec": spec.to_string(),
            "seed": seed,
            "target_size": policy.target_size,
        }),
    )
}

fn cmd_binarize(g: &GlobalOpts, input: &Path, output: &Path, sigma: f64) -> Result<()> {
    let img = load_png(input)?;
    save_png(&binarize(&img, sigma)?, output)?;
    log_run_config(
        parent_dir(output),
        g,
        "binarize",
        json!({ "input": input, "output": output, "sigma": sigma }),
    )
}

fn cmd_dataset(g: &GlobalOpts, config: &Path, originals: Option<PathBuf>) -> Result<()> {
    let mut cfg = DatasetConfig::load(config)?;
    if let Some(seed) = g.seed {
        cfg.master_seed = seed;
    }
    if let Some(size) = g.size {
        cfg.canvas.target_size = size;
    }
    if originals.is_some() {
        cfg.originals = originals;
    }
    let plan = cfg.plan()?;
    let policy = cfg.canvas()?;
    let source_dir = cfg
        .originals
        .clone()
        .ok_or_else(|| Error::Config("no originals directory configured".into()))?;
    let out = out_dir(g);

    let tuples = discover_tuples(&source_dir)?;
    let entries = expand_plan(&plan, &tuples)?;
    let all_c = tuples.iter().all(|t| t.has_stage_c());
    let directions = cfg.directions(all_c)?;
    let canonical = tuples
        .par_iter()
        .map(|t| Ok((t.id.clone(), t.load(&policy)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    let stages = out.join("stages");
    if stages.exists() {
        std::fs::remove_dir_all(&stages).map_err(|e| Error::io(&stages, e))?;
    }
    materialize_all(&entries, &canonical, &out)?;

    let mut manifest = Manifest::new(entries)?;
    let accept = cfg.accept.as_ref().map(read_id_list).transpose()?.unwrap_or_default();
    let reject = cfg.reject.as_ref().map(read_id_list).transpose()?.unwrap_or_default();
    manifest = apply_acceptlist(&manifest, &accept, &reject)?;
    manifest.write(out.join(Manifest::FILE_NAME))?;

    println!(
        "{} originals, {} examples, {} usable, {} rejected",
        tuples.len(),
        manifest.len(),
        manifest.usable().count(),
        manifest.len() - manifest.usable().count()
    );
    let mut counts = Vec::new();
    for d in directions {
        let c = assemble(&manifest, &out, d)?;
        println!("{}: {} train, {} val, {} total", d, c.train, c.val, c.total());
        counts.push(c);
    }

    let pages = contact_sheet(&manifest, &out, cfg.sheet.cols, cfg.sheet.rows)?;
    write_sheets(&pages, &out.join("sheets"))?;
    println!("{} contact sheet page(s)", pages.len());

    log_run_config(
        &out,
        g,
        "dataset",
        json!({ "config_file": config, "resolved": cfg, "counts": counts }),
    )
}

fn cmd_sheet(g: &GlobalOpts, manifest_path: &Path, cols: u32, rows: u32) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    let root = parent_dir(manifest_path);
    let dir = g.out.clone().unwrap_or_else(|| root.join("sheets"));
    let pages = contact_sheet(&manifest, root, cols, rows)?;
    write_sheets(&pages, &dir)?;
    println!("{} page(s) written to {}", pages.len(), dir.display());
    log_run_config(
        &dir,
        g,
        "sheet",
        json!({ "manifest": manifest_path, "cols": cols, "rows": rows }),
    )
}

fn cmd_curate(g: &GlobalOpts, manifest_path: &Path, accept: Option<&Path>, reject: Option<&Path>) -> Result<()> {
    let manifest = Manifest::read(manifest_path)?;
    let accept_ids = accept.map(read_id_list).transpose()?.unwrap_or_default();
    let reject_ids = reject.map(read_id_list).transpose()?.unwrap_or_default();
    let curated = apply_acceptlist(&manifest, &accept_ids, &reject_ids)?;
    curated.write(manifest_path)?;
    println!(
        "{} examples, {} usable, {} rejected",
        curated.len(),
        curated.usable().count(),
        curated.len() - curated.usable().count()
    );

    // Rebuild the pair directories an earlier dataset run created.
    let root = parent_dir(manifest_path);
    for d in Direction::ALL {
        if root.join(d.dir_name()).is_dir() {
            let c = assemble(&curated, root, d)?;
            println!("{}: {} train, {} val, {} total", d, c.train, c.val, c.total());
        }
    }
    log_run_config(
        root,
        g,
        "curate",
        json!({ "manifest": manifest_path, "accept": accept, "reject": reject }),
    )
}

fn cmd_chain(g: &GlobalOpts, config: &Path) -> Result<u8> {
    let cfg = ChainConfig::load(config)?;
    let spec = cfg.spec(g.size.unwrap_or(CanvasPolicy::default().target_size));
    let inputs = cfg.inputs()?;
    let out = out_dir(g);
    let report = run_chain(&spec, &inputs, &out)?;
    report.write(&out)?;
    print!("{}", report.summary());
    log_run_config(
        &out,
        g,
        "chain",
        json!({ "config_file": config, "resolved": cfg, "size": spec.size }),
    )?;
    if let Some(rec) = report.spawn_failure() {
        let msg = rec.error.as_ref().map(|e| e.message.as_str()).unwrap_or("");
        eprintln!("inkwarp: {msg}");
        return Ok(6);
    }
    Ok(0)
}

fn cmd_synth(g: &GlobalOpts, character: SynthCharacter, count: usize) -> Result<()> {
    let size = policy(g)?.target_size;
    let seed = g.seed.unwrap_or(0);
    let dir = out_dir(g);
    let written = write_originals(character.into(), count, seed, size, &dir)?;
    println!("{} {:?} tuple(s) written to {}", written.len(), character, dir.display());
    log_run_config(
        &dir,
        g,
        "synth",
        json!({ "character": character, "count": count, "seed": seed, "size": size }),
    )
}

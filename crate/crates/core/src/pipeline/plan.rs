use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{ManifestEntry, StagePaths, Status};
use super::tuple::StageTuple;
use crate::error::{Error, Result};
use crate::warp::{Template, WarpSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
        }
    }
}

/// How many variants to derive from each original, and from which
/// transform families.
///
/// Families are sorted into three pools by what they produce: affine/skew
/// perturbations (all applied, freshly drawn, in every variant),
/// engineered homeomorphisms and elastic deformations (zero or one of each
/// per variant). Variants cycle through every homeomorphism × elastic
/// combination, "none" included, so `per_original = 72` with 2
/// homeomorphisms and 2 elastic presets gives 8 perturbation draws of each
/// of the 9 combinations.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentationPlan {
    pub master_seed: u64,
    pub per_original: usize,
    pub families: Vec<Template>,
    /// Variant 0 of every original is the untouched drawing.
    pub include_identity: bool,
    /// Fraction of examples assigned to the training split.
    pub split_ratio: f64,
}

impl Default for AugmentationPlan {
    fn default() -> Self {
        let families = [
            "affine(rot=-0.06..0.06,sx=0.92..1.08,sy=0.92..1.08,tx=-0.05..0.05,ty=-0.05..0.05)",
            "xstretch()",
            "spherical()",
            "elastic(alpha=8,sigma=16)",
            "elastic(alpha=24,sigma=32)",
        ];
        Self {
            master_seed: 0,
            per_original: 72,
            families: families
                .iter()
                .map(|s| Template::parse(s).expect("built-in family"))
                .collect(),
            include_identity: false,
            split_ratio: 0.9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Perturbation,
    Homeomorphism,
    Elastic,
}

fn role_of(spec: &WarpSpec) -> Option<Role> {
    match spec {
        WarpSpec::Affine(_) | WarpSpec::Skew { .. } => Some(Role::Perturbation),
        WarpSpec::Elastic(_) => Some(Role::Elastic),
        WarpSpec::Compose(items) => {
            let first = role_of(items.first()?)?;
            items
                .iter()
                .all(|s| role_of(s) == Some(first))
                .then_some(first)
        }
        s if s.is_engineered() => Some(Role::Homeomorphism),
        _ => None,
    }
}

struct Pools<'a> {
    perturbation: Vec<&'a Template>,
    homeomorphism: Vec<&'a Template>,
    elastic: Vec<&'a Template>,
}

impl AugmentationPlan {
    pub fn validate(&self) -> Result<()> {
        if self.per_original == 0 {
            return Err(Error::InvalidPlan("per_original must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(Error::InvalidPlan("families must not be empty".into()));
        }
        if !(0.0..=1.0).contains(&self.split_ratio) {
            return Err(Error::InvalidPlan(format!(
                "split_ratio must be in [0, 1], got {}",
                self.split_ratio
            )));
        }
        self.pools().map(|_| ())
    }

    fn pools(&self) -> Result<Pools<'_>> {
        let mut pools = Pools {
            perturbation: Vec::new(),
            homeomorphism: Vec::new(),
            elastic: Vec::new(),
        };
        for t in &self.families {
            let probe = t.instantiate(&mut ChaCha8Rng::seed_from_u64(0))?;
            match role_of(&probe) {
                Some(Role::Perturbation) => pools.perturbation.push(t),
                Some(Role::Homeomorphism) => pools.homeomorphism.push(t),
                Some(Role::Elastic) => pools.elastic.push(t),
                None => {
                    return Err(Error::InvalidPlan(format!(
                        "family `{t}` mixes perturbation, homeomorphism and elastic steps"
                    )))
                }
            }
        }
        Ok(pools)
    }

    /// Number of homeomorphism × elastic combinations variants cycle through.
    pub fn cells(&self) -> Result<usize> {
        let p = self.pools()?;
        Ok((p.homeomorphism.len() + 1) * (p.elastic.len() + 1))
    }
}

/// Deterministic per-entry seed.
pub fn entry_seed(master_seed: u64, source_id: &str, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(source_id.as_bytes());
    h.update([0]);
    h.update((index as u64).to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

/// Train/val membership from a hash of the id alone, so adding examples
/// never moves existing ones.
pub fn split_for(example_id: &str, ratio: f64) -> Split {
    let digest = Sha256::digest(example_id.as_bytes());
    let u = u64::from_le_bytes(digest[..8].try_into().unwrap()) as f64 / 2f64.powi(64);
    if u < ratio {
        Split::Train
    } else {
        Split::Val
    }
}

/// Derive every concrete transform chain of the dataset, `per_original`
/// per original in id order. Rows start with status `auto`.
pub fn expand_plan(plan: &AugmentationPlan, originals: &[StageTuple]) -> Result<Vec<ManifestEntry>> {
    plan.validate()?;
    if originals.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let mut sources: Vec<&StageTuple> = originals.iter().collect();
    sources.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = sources.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(Error::InvalidPlan(format!("duplicate original id `{}`", w[0].id)));
    }

    let pools = plan.pools()?;
    let n_elastic = pools.elastic.len() + 1;
    let cells = (pools.homeomorphism.len() + 1) * n_elastic;
    let mut entries = Vec::with_capacity(sources.len() * plan.per_original);
    for src in sources {
        for index in 0..plan.per_original {
            let seed = entry_seed(plan.master_seed, &src.id, index);
            let chain = if plan.include_identity && index == 0 {
                WarpSpec::identity()
            } else {
                let cell = (index - plan.include_identity as usize) % cells;
                draw_chain(&pools, cell / n_elastic, cell % n_elastic, seed)?
            };
            let example_id = format!("{}-{index:04}", src.id);
            entries.push(ManifestEntry {
                split: split_for(&example_id, plan.split_ratio),
                output_paths: StagePaths::for_example(&example_id, src.has_stage_c()),
                example_id,
                source_id: src.id.clone(),
                transform_chain: chain.to_string(),
                seed,
                status: Status::Auto,
            });
        }
    }
    Ok(entries)
}

fn draw_chain(pools: &Pools<'_>, homeo: usize, elastic: usize, seed: u64) -> Result<WarpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut steps = Vec::new();
    for t in &pools.perturbation {
        steps.push(t.instantiate(&mut rng)?);
    }
    if homeo > 0 {
        steps.push(pools.homeomorphism[homeo - 1].instantiate(&mut rng)?);
    }
    if elastic > 0 {
        steps.push(pools.elastic[elastic - 1].instantiate(&mut rng)?);
    }
    Ok(match steps.len() {
        0 => WarpSpec::identity(),
        1 => steps.pop().unwrap(),
        _ => WarpSpec::Compose(steps),
    })
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Run with `cargo test --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use inkwarp::chain::{run_chain, ChainInput, ChainSpec, StageCommand};
use inkwarp::elastic::{apply_elastic, generate_field, jacobian_min};
use inkwarp::pipeline::{distinctness_violations, stage_grid, Direction, Manifest, ManifestEntry, INK_TOLERANCE};
use inkwarp::postprocess::otsu_threshold;
use inkwarp::raster::{canonicalize, load_png, save_png, to_luma, CanvasPolicy};
use inkwarp::synth::{self, Character};
use inkwarp::warp::{apply_warp, resample_with, warp_point, Affine, Frame, SampleMap};
use inkwarp::{DomainMode, ElasticSpec, GrayImage, NormPoint, WarpSpec};

const BIN: &str = env!("CARGO_BIN_EXE_inkwarp");
const SIZE: u32 = 256;
const MAX_GIRAFFE_RUN: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;
type Check<'a> = &'a dyn Fn(&Workspace) -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_dataset(config: &str, originals: &Path, out: &Path, jobs: usize) -> Result<Duration, String> {
    let start = Instant::now();
    let res = Command::new(BIN)
        .arg("--jobs")
        .arg(jobs.to_string())
        .arg("--out")
        .arg(out)
        .arg("dataset")
        .arg(configs_dir().join(config))
        .arg("--originals")
        .arg(originals)
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure!(
        res.status.success(),
        "dataset {config} failed: {}",
        String::from_utf8_lossy(&res.stderr)
    );
    Ok(took)
}

fn count_pngs(dir: &Path) -> usize {
    ["train", "val"]
        .iter()
        .filter_map(|s| std::fs::read_dir(dir.join(s)).ok())
        .flat_map(|rd| rd.filter_map(|e| e.ok()))
        .filter(|e| e.path().extension().is_some_and(|x| x == "png"))
        .count()
}

/// Every file under `dir` with its bytes, keyed by relative path.
fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

struct Workspace {
    _tmp: tempfile::TempDir,
    giraffes: PathBuf,
    giraffe_out: PathBuf,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let giraffes = root.join("originals/giraffes");
        synth::write_originals(Character::Giraffe, 9, 0, SIZE, &giraffes).unwrap();
        Self {
            giraffe_out: root.join("giraffes_j1"),
            giraffes,
            root,
            _tmp: tmp,
        }
    }

    fn giraffe_manifest(&self) -> Result<Manifest, String> {
        Manifest::read(self.giraffe_out.join(Manifest::FILE_NAME)).map_err(|e| e.to_string())
    }
}

// 1. cardinality and runtime

fn dataset_counts(ws: &Workspace) -> Outcome {
    let took = run_dataset("giraffes.toml", &ws.giraffes, &ws.giraffe_out, 1)?;
    let manifest = ws.giraffe_manifest()?;
    ensure!(manifest.len() >= 405, "giraffe plan has {} rows", manifest.len());
    for d in Direction::ALL {
        let n = count_pngs(&ws.giraffe_out.join(d.dir_name()));
        ensure!(n == 398, "giraffe {d}: {n} pairs, want 398");
    }
    ensure!(took < MAX_GIRAFFE_RUN, "giraffe run took {took:?}");
    let clashes = distinctness_violations(&manifest, &ws.giraffe_out, 0.001).map_err(|e| e.to_string())?;
    ensure!(clashes.is_empty(), "near-duplicate stage-B outputs: {:?}", &clashes[..clashes.len().min(5)]);

    let flowers = ws.root.join("originals/flowers");
    synth::write_originals(Character::Flower, 30, 0, SIZE, &flowers).map_err(|e| e.to_string())?;
    let out = ws.root.join("flowers");
    run_dataset("flowers.toml", &flowers, &out, num_jobs())?;
    let n = count_pngs(&out.join("ab"));
    ensure!(n == 645, "flower AtoB: {n} pairs, want 645");

    let dragons = ws.root.join("originals/dragons");
    synth::write_originals(Character::Dragon, 20, 0, SIZE, &dragons).map_err(|e| e.to_string())?;
    let out = ws.root.join("dragons");
    run_dataset("dragons.toml", &dragons, &out, num_jobs())?;
    for d in Direction::ALL {
        let n = count_pngs(&out.join(d.dir_name()));
        ensure!(n == 645, "dragon {d}: {n} pairs, want 645");
    }
    Ok(format!(
        "giraffes {} rows -> 398 distinct per direction in {:.1}s single-threaded; flowers 645; dragons 645 x3",
        manifest.len(),
        took.as_secs_f64()
    ))
}

fn num_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

// 2. warp math

fn random_affine(rng: &mut ChaCha8Rng) -> WarpSpec {
    WarpSpec::Affine(Affine {
        rot: rng.random_range(-0.5..0.5),
        sx: rng.random_range(0.7..1.3),
        sy: rng.random_range(0.7..1.3),
        tx: rng.random_range(-0.2..0.2),
        ty: rng.random_range(-0.2..0.2),
        flipx: rng.random(),
        flipy: rng.random(),
    })
}

fn homeomorphisms(rng: &mut ChaCha8Rng) -> ([WarpSpec; 4], DomainMode) {
    let mode = if rng.random() { DomainMode::Square } else { DomainMode::Disk };
    let specs = [
        WarpSpec::xstretch().with_domain(mode),
        WarpSpec::ystretch().with_domain(mode),
        WarpSpec::spherical(),
        WarpSpec::daisy(rng.random_range(0.3..4.0)),
    ];
    (specs, mode)
}

/// Random point on the boundary of the domain a map is defined on.
fn boundary_point(rng: &mut ChaCha8Rng, mode: DomainMode) -> NormPoint {
    match mode {
        DomainMode::Disk => NormPoint::from_polar(1.0, rng.random_range(-3.2..3.2)),
        DomainMode::Square => {
            let t = rng.random_range(-1.0..=1.0);
            let side = if rng.random() { 1.0 } else { -1.0 };
            if rng.random() {
                NormPoint::new(side, t)
            } else {
                NormPoint::new(t, side)
            }
        }
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

fn warp_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    let s = |spec: &WarpSpec, p: NormPoint| warp_point(spec, p).unwrap();
    let grid: Vec<f64> = (0..1024).map(|i| -1.0 + 2.0 * i as f64 / 1023.0).collect();
    let mut worst_psnr = f64::INFINITY;
    for draw in 0..100 {
        let (homeo, mode) = homeomorphisms(&mut rng);
        for (k, spec) in homeo.iter().enumerate() {
            let domain = if k < 2 { mode } else { DomainMode::Disk };
            for _ in 0..64 {
                let p = boundary_point(&mut rng, domain);
                let q = s(spec, p);
                // disk maps fix the circle pointwise; square-mode stretches
                // slide points along the edges but keep them on the boundary
                let err = match domain {
                    DomainMode::Disk => (q.x - p.x).abs().max((q.y - p.y).abs()),
                    DomainMode::Square => (q.x.abs().max(q.y.abs()) - 1.0).abs(),
                };
                ensure!(err < 1e-12, "draw {draw}: {spec} moves boundary point {p:?} by {err:e}");
            }
        }

        let c = rng.random_range(-0.999..0.999);
        let [xs, ys, sph, daisy] = &homeo;
        for spec in [xs, sph] {
            let v: Vec<f64> = grid.iter().map(|&x| s(spec, NormPoint::new(x, c)).x).collect();
            ensure!(strictly_increasing(&v), "draw {draw}: {spec} not monotone on y={c}");
        }
        let v: Vec<f64> = grid.iter().map(|&y| s(ys, NormPoint::new(c, y)).y).collect();
        ensure!(strictly_increasing(&v), "draw {draw}: {ys} not monotone on x={c}");
        let theta = rng.random_range(-3.2..3.2);
        let v: Vec<f64> = (0..1024)
            .map(|i| s(daisy, NormPoint::from_polar(i as f64 / 1023.0, theta)).radius())
            .collect();
        ensure!(strictly_increasing(&v), "draw {draw}: {daisy} not monotone along ray {theta}");

        let pick = |rng: &mut ChaCha8Rng| match rng.random_range(0..6) {
            0..=3 => homeo[rng.random_range(0..4)].clone(),
            4 => random_affine(rng),
            _ => WarpSpec::Skew {
                kx: rng.random_range(-0.4..0.4),
                ky: rng.random_range(-0.4..0.4),
            },
        };
        let (a, b, cc) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let left = WarpSpec::Compose(vec![a.clone(), WarpSpec::Compose(vec![b.clone(), cc.clone()])]);
        let right = WarpSpec::Compose(vec![WarpSpec::Compose(vec![a, b]), cc]);
        for _ in 0..64 {
            let p = NormPoint::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (l, r) = (s(&left, p), s(&right, p));
            ensure!(
                (l.x - r.x).abs() < 1e-12 && (l.y - r.y).abs() < 1e-12,
                "draw {draw}: {left} and {right} differ at {p:?}"
            );
        }

        let side = rng.random_range(1..64);
        let img = common::random_gray(&mut rng, side, side);
        ensure!(
            apply_warp(&img, &WarpSpec::identity()).unwrap() == img,
            "draw {draw}: identity affine changed a {side}x{side} image"
        );

        let spec = &homeo[draw % 4];
        let src = common::blobs(rng.random(), 128);
        let warped = apply_warp(&src, spec).unwrap();
        let back = resample_with(&warped, |q| common::numeric_inverse(spec, q));
        let psnr = common::psnr(&back, &src);
        ensure!(psnr >= 30.0, "draw {draw}: {spec} round trip PSNR {psnr:.2} dB");
        worst_psnr = worst_psnr.min(psnr);
    }
    Ok(format!("100 draws; worst round-trip PSNR {worst_psnr:.1} dB"))
}

// 3. elastic

fn elastic_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let img = common::random_gray(&mut rng, 48, 40);
        let spec = ElasticSpec::new(0.0, rng.random_range(1.0..20.0), rng.random());
        ensure!(apply_elastic(&img, &spec).unwrap() == img, "alpha 0 changed the image");
        let square = common::random_gray(&mut rng, 40, 40);
        ensure!(
            apply_warp(&square, &WarpSpec::Elastic(spec)).unwrap() == square,
            "alpha 0 elastic warp changed the image"
        );
    }

    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    for seed in 0..20u64 {
        let spec = ElasticSpec::LINE.with_seed(seed);
        let f1 = generate_field(SIZE, SIZE, &spec).unwrap();
        let f2 = generate_field(SIZE, SIZE, &spec).unwrap();
        ensure!(bits(&f1.dx) == bits(&f2.dx) && bits(&f1.dy) == bits(&f2.dy), "seed {seed} not reproducible");
        let k = rng.random_range(0.1..5.0);
        let scaled = generate_field(SIZE, SIZE, &ElasticSpec { alpha: spec.alpha * k, ..spec }).unwrap();
        let worst = f1
            .dx
            .iter()
            .chain(&f1.dy)
            .zip(scaled.dx.iter().chain(&scaled.dy))
            .map(|(u, v)| (k * u - v).abs())
            .fold(0.0f64, f64::max);
        ensure!(worst <= 1e-9, "seed {seed}: alpha-linearity error {worst:e}");
    }

    let mut minima = Vec::new();
    for (name, preset) in [("LINE", ElasticSpec::LINE), ("LIMB", ElasticSpec::LIMB)] {
        let mut lowest = f64::INFINITY;
        for seed in 0..100 {
            let j = jacobian_min(&generate_field(SIZE, SIZE, &preset.with_seed(seed)).unwrap());
            ensure!(j > 0.0, "{name} seed {seed}: jacobian_min {j}");
            lowest = lowest.min(j);
        }
        minima.push(format!("{name} min det {lowest:.3}"));
    }

    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, many) = (pool(1), pool(num_jobs().max(4)));
    for seed in [0u64, 1, 99, u64::MAX] {
        let spec = ElasticSpec::LIMB.with_seed(seed);
        let a = one.install(|| generate_field(SIZE, SIZE, &spec).unwrap());
        let b = many.install(|| generate_field(SIZE, SIZE, &spec).unwrap());
        ensure!(bits(&a.dx) == bits(&b.dx) && bits(&a.dy) == bits(&b.dy), "seed {seed} depends on threads");
    }
    Ok(minima.join(", "))
}

// 4. Otsu

fn structured_images() -> Vec<GrayImage> {
    let mut v = vec![
        GrayImage::white(16, 16),
        GrayImage::filled(16, 16, 0),
        GrayImage::filled(9, 7, 128),
        GrayImage::from_fn(16, 16, |x, _| if x < 8 { 0 } else { 255 }),
        GrayImage::from_fn(16, 16, |x, y| if (x + y) % 2 == 0 { 10 } else { 200 }),
        GrayImage::from_fn(256, 1, |x, _| x as u8),
        GrayImage::from_fn(32, 32, |x, y| ((x * 8) ^ (y * 8)) as u8),
        GrayImage::from_fn(30, 30, |x, _| [20, 120, 220][(x / 10) as usize]),
        GrayImage::from_fn(20, 20, |x, y| if x * x + y * y < 100 { 40 } else { 250 }),
        GrayImage::from_fn(24, 8, |x, _| if x % 3 == 0 { 100 } else { 101 }),
        GrayImage::from_fn(8, 8, |x, _| if x < 4 { 254 } else { 255 }),
        GrayImage::from_fn(8, 8, |x, _| if x < 4 { 0 } else { 1 }),
    ];
    for seed in 0..3 {
        v.push(synth::giraffe(seed, 64).stage_c.unwrap());
    }
    v.push(synth::flower(1, 64).stage_b);
    v.push(synth::dragon(2, 64).stage_a);
    v.push(common::blobs(5, 48));
    v.push(inkwarp::postprocess::gaussian_blur(&synth::giraffe(4, 64).stage_b, 1.5).unwrap());
    v.push(GrayImage::from_fn(40, 40, |x, y| ((x as f64 / 6.0).sin() * (y as f64 / 4.0).cos() * 120.0 + 128.0) as u8));
    v
}

fn otsu_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let check = |img: &GrayImage, what: &str| -> Result<(), String> {
        let got = otsu_threshold(img).threshold;
        let (want, _) = common::otsu_oracle(img);
        ensure!(got == want, "{what}: threshold {got}, oracle {want}");
        Ok(())
    };
    for i in 0..1000 {
        let (w, h) = (rng.random_range(1..40), rng.random_range(1..40));
        let img = match i % 4 {
            0 => common::random_gray(&mut rng, w, h),
            1 => {
                let levels: Vec<u8> = (0..rng.random_range(1..5)).map(|_| rng.random()).collect();
                GrayImage::from_fn(w, h, |_, _| levels[rng.random_range(0..levels.len())])
            }
            2 => {
                let (lo, hi) = (rng.random_range(0..100u8), rng.random_range(150..=255u8));
                GrayImage::from_fn(w, h, |_, _| {
                    let c = if rng.random_bool(0.3) { lo } else { hi };
                    c.saturating_add_signed(rng.random_range(-20..=20))
                })
            }
            _ => {
                let base: u8 = rng.random();
                GrayImage::from_fn(w, h, |_, _| base.saturating_add(rng.random_range(0..3)))
            }
        };
        check(&img, &format!("random image {i}"))?;
    }
    let structured = structured_images();
    ensure!(structured.len() == 20, "{} structured images", structured.len());
    for (i, img) in structured.iter().enumerate() {
        check(img, &format!("structured image {i}"))?;
    }
    Ok("1000 random + 20 structured images match the oracle".into())
}

// 5. stage consistency

fn canonical_stages(originals: &Path, entry: &ManifestEntry) -> Vec<GrayImage> {
    let policy = CanvasPolicy::with_size(SIZE);
    ['a', 'b', 'c']
        .iter()
        .map(|s| originals.join(format!("{}_{s}.png", entry.source_id)))
        .filter(|p| p.is_file())
        .map(|p| canonicalize(&load_png(p).unwrap(), &policy))
        .collect()
}

fn stage_consistency(ws: &Workspace) -> Outcome {
    let manifest = ws.giraffe_manifest()?;
    let frame = Frame::new(SIZE, SIZE);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let entry = &manifest.entries[rng.random_range(0..manifest.len())];
        let chain: WarpSpec = entry.transform_chain.parse().map_err(|e| format!("{e}"))?;
        let originals = canonical_stages(&ws.giraffes, entry);
        let outputs: Vec<GrayImage> = entry
            .output_paths
            .all()
            .iter()
            .map(|p| load_png(ws.giraffe_out.join(p)).unwrap())
            .collect();
        ensure!(outputs.len() == 3, "{}: {} stage outputs", entry.example_id, outputs.len());
        // each stage gets its own independently resolved map
        let maps: Vec<SampleMap> = (0..3).map(|_| SampleMap::for_frame(&chain, frame).unwrap()).collect();
        let shared = stage_grid(&chain, frame).unwrap();
        for _ in 0..256 {
            let (x, y) = (rng.random_range(0..SIZE), rng.random_range(0..SIZE));
            let p = frame.to_norm(x as f64, y as f64);
            let probes: Vec<(f64, f64)> = maps.iter().map(|m| frame.to_pixel(m.eval(p))).collect();
            let grid = shared.at(x, y);
            for (k, &(sx, sy)) in probes.iter().enumerate() {
                ensure!(
                    sx.to_bits() == grid[0].to_bits() && sy.to_bits() == grid[1].to_bits(),
                    "{} stage {k}: probe ({x},{y}) -> ({sx},{sy}) vs shared {grid:?}",
                    entry.example_id
                );
                let want = to_luma(originals[k].sample_bilinear(sx, sy));
                ensure!(
                    outputs[k].get(x, y) == want,
                    "{} stage {k}: pixel ({x},{y}) is {} not {want}",
                    entry.example_id,
                    outputs[k].get(x, y)
                );
            }
        }
    }

    let slack = (INK_TOLERANCE * (SIZE * SIZE) as f64).floor() as usize;
    let mut checked = 0;
    for entry in manifest.usable() {
        let ink: Vec<usize> = entry
            .output_paths
            .all()
            .iter()
            .map(|p| load_png(ws.giraffe_out.join(p)).unwrap().ink_count())
            .collect();
        for w in ink.windows(2) {
            ensure!(w[0] <= w[1] + slack, "{}: ink {:?} not monotone", entry.example_id, ink);
        }
        checked += 1;
    }
    Ok(format!("50 entries x 256 probes bit-identical; ink monotone on {checked} accepted outputs"))
}

// 6. determinism

fn determinism(ws: &Workspace) -> Outcome {
    let jobs = num_jobs().max(4);
    let other = ws.root.join("giraffes_jn");
    run_dataset("giraffes.toml", &ws.giraffes, &other, jobs)?;
    let strip = |dir: &Path| {
        let mut t = tree(dir);
        t.remove(Path::new("run_config.json"));
        t
    };
    let (a, b) = (strip(&ws.giraffe_out), strip(&other));
    ensure!(a.keys().eq(b.keys()), "different file sets for --jobs 1 and --jobs {jobs}");
    if let Some(k) = a.keys().find(|k| a[*k] != b[*k]) {
        return Err(format!("{} differs between --jobs 1 and --jobs {jobs}", k.display()));
    }
    let sheets = a.keys().filter(|k| k.starts_with("sheets")).count();
    Ok(format!("{} files byte-identical for --jobs 1 vs {jobs}, including {sheets} sheet files", a.len()))
}

// 7. chain runner

fn chain_oracle(ws: &Workspace) -> Outcome {
    let inputs_dir = ws.root.join("chain_inputs");
    std::fs::create_dir_all(&inputs_dir).map_err(|e| e.to_string())?;
    let mut inputs = Vec::new();
    for i in 0..4 {
        let p = inputs_dir.join(format!("g{i}.png"));
        save_png(&synth::giraffe(10 + i, SIZE).stage_b, &p).map_err(|e| e.to_string())?;
        inputs.push(ChainInput::new(p));
    }
    let shrink = "affine(sx=0.8,sy=0.8)";
    let invert = "affine(flipx=true,flipy=true)";
    let oneshot = format!("compose[{shrink};{invert}]");
    let warp = |spec: &str| format!("{BIN} --size {SIZE} warp {{in}} {{out}} '{spec}'");
    let spec = ChainSpec {
        stages: vec![
            StageCommand::new("border", warp(shrink), 60.0),
            StageCommand::new("invert", warp(invert), 60.0),
        ],
        oneshot: Some(StageCommand::new("oneshot", warp(&oneshot), 60.0)),
        size: SIZE,
    };
    let out = ws.root.join("chain_out");
    let report = run_chain(&spec, &inputs, &out).map_err(|e| e.to_string())?;
    let oracle: WarpSpec = oneshot.parse().unwrap();
    for rec in &report.records {
        ensure!(rec.error.is_none(), "{}: {:?}", rec.id, rec.error);
        let chained = std::fs::read(rec.chained.as_ref().unwrap()).unwrap();
        let single = std::fs::read(rec.oneshot.as_ref().unwrap()).unwrap();
        ensure!(chained == single, "{}: chained output differs from one-shot", rec.id);
        let input = load_png(&rec.input).unwrap();
        let expected = apply_warp(&input, &oracle).unwrap();
        ensure!(
            load_png(rec.chained.as_ref().unwrap()).unwrap() == expected,
            "{}: chained output differs from the library composition",
            rec.id
        );
        let m = rec.metrics.as_ref().unwrap();
        ensure!(m.chained_vs_oneshot == Some(1.0), "{}: chained_vs_oneshot {:?}", rec.id, m.chained_vs_oneshot);
    }

    let identity = ChainSpec {
        stages: vec![StageCommand::new("copy", "cp {in} {out}", 60.0)],
        oneshot: None,
        size: SIZE,
    };
    let report = run_chain(&identity, &inputs, &ws.root.join("chain_identity")).map_err(|e| e.to_string())?;
    for rec in &report.records {
        let agreement = rec.metrics.as_ref().map(|m| m.pixel_agreement);
        ensure!(agreement == Some(1.0), "{}: identity agreement {agreement:?}", rec.id);
    }
    Ok(format!("{} inputs chained == one-shot == library; identity agreement 1.0", inputs.len()))
}

// 8. pair format

fn pair_format(ws: &Workspace) -> Outcome {
    let manifest = ws.giraffe_manifest()?;
    let usable: Vec<&ManifestEntry> = manifest.usable().collect();
    let frame = Frame::new(SIZE, SIZE);
    let step = usable.len() / 20;
    for entry in usable.iter().step_by(step).take(20) {
        let chain: WarpSpec = entry.transform_chain.parse().map_err(|e| format!("{e}"))?;
        let grid = stage_grid(&chain, frame).unwrap();
        let expected: Vec<GrayImage> = canonical_stages(&ws.giraffes, entry)
            .iter()
            .map(|s| grid.resample(s))
            .collect();
        for (k, rel) in entry.output_paths.all().iter().enumerate() {
            let written = load_png(ws.giraffe_out.join(rel)).unwrap();
            ensure!(written == expected[k], "{}: stage {k} file differs", entry.example_id);
        }
        for d in Direction::ALL {
            let path = ws
                .giraffe_out
                .join(d.dir_name())
                .join(entry.split.dir_name())
                .join(format!("{}.png", entry.example_id));
            let pair = load_png(&path).map_err(|e| e.to_string())?;
            ensure!(pair.dimensions() == (2 * SIZE, SIZE), "{}: {:?}", path.display(), pair.dimensions());
            let (i, t) = d.stages();
            ensure!(pair.crop(0, 0, SIZE, SIZE) == expected[i], "{}: left half", path.display());
            ensure!(pair.crop(SIZE, 0, SIZE, SIZE) == expected[t], "{}: right half", path.display());
        }
    }
    Ok("20 entries x 3 directions: 512x256, halves bit-equal to the stage images".into())
}

fn main() {
    let ws = Workspace::new();
    let criteria: [(&str, Check); 8] = [
        ("dataset cardinality", &dataset_counts),
        ("warp math", &|_| warp_suite()),
        ("elastic fields", &|_| elastic_suite()),
        ("otsu oracle", &|_| otsu_suite()),
        ("stage consistency", &stage_consistency),
        ("end-to-end determinism", &determinism),
        ("chain runner oracle", &chain_oracle),
        ("combined pair format", &pair_format),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| check(&ws)))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

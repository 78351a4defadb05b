//! Procedural cartoon line drawings saved in stages, for demos and tests.
//!
//! Each character is drawn on a white square with black strokes; later
//! stages only ever add ink to earlier ones, so `A ⊆ B ⊆ C` pixelwise.
//! Geometry is laid out on a 256-unit canvas and scaled to the requested
//! size, staying inside the inscribed disk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::StageTuple;
use crate::raster::{save_png, GrayImage};

#[derive(Clone, Debug)]
pub struct SynthTuple {
    pub stage_a: GrayImage,
    pub stage_b: GrayImage,
    pub stage_c: Option<GrayImage>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Character {
    /// A = centre, B = A + petals.
    Flower,
    /// A = body, B = A + spikes, C = B + wings.
    Dragon,
    /// A = body, B = A + mane and tail, C = B + spots.
    Giraffe,
}

impl Character {
    pub fn stages(self) -> usize {
        match self {
            Character::Flower => 2,
            Character::Dragon | Character::Giraffe => 3,
        }
    }

    pub fn draw(self, seed: u64, size: u32) -> SynthTuple {
        match self {
            Character::Flower => flower(seed, size),
            Character::Dragon => dragon(seed, size),
            Character::Giraffe => giraffe(seed, size),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Character::Flower => "flower",
            Character::Dragon => "dragon",
            Character::Giraffe => "giraffe",
        }
    }
}

/// Canvas in 256-unit coordinates.
struct Pen {
    img: GrayImage,
    scale: f64,
}

impl Pen {
    fn new(size: u32) -> Self {
        Self {
            img: GrayImage::white(size, size),
            scale: size as f64 / 256.0,
        }
    }

    fn line(&mut self, a: (f64, f64), b: (f64, f64), width: f64) {
        let s = self.scale;
        stroke(
            &mut self.img,
            (a.0 * s, a.1 * s),
            (b.0 * s, b.1 * s),
            (width * s).max(1.0),
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], width: f64) {
        for w in pts.windows(2) {
            self.line(w[0], w[1], width);
        }
    }

    fn ellipse(&mut self, c: (f64, f64), rx: f64, ry: f64, tilt: f64, width: f64) {
        let pts: Vec<_> = (0..=72)
            .map(|i| {
                let t = i as f64 / 72.0 * std::f64::consts::TAU;
                let (x, y) = (rx * t.cos(), ry * t.sin());
                let (st, ct) = tilt.sin_cos();
                (c.0 + ct * x - st * y, c.1 + st * x + ct * y)
            })
            .collect();
        self.polyline(&pts, width);
    }

    fn dot(&mut self, c: (f64, f64), r: f64) {
        let s = self.scale;
        disk(&mut self.img, (c.0 * s, c.1 * s), (r * s).max(0.75));
    }

    fn snapshot(&self) -> GrayImage {
        self.img.clone()
    }
}

/// Thick line segment in pixel coordinates.
pub fn stroke(img: &mut GrayImage, a: (f64, f64), b: (f64, f64), width: f64) {
    let half = width / 2.0;
    let (w, h) = (img.width() as f64, img.height() as f64);
    let x0 = (a.0.min(b.0) - half).floor().max(0.0) as u32;
    let x1 = (a.0.max(b.0) + half).ceil().min(w - 1.0).max(0.0) as u32;
    let y0 = (a.1.min(b.1) - half).floor().max(0.0) as u32;
    let y1 = (a.1.max(b.1) + half).ceil().min(h - 1.0).max(0.0) as u32;
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (px, py) = (x as f64 - a.0, y as f64 - a.1);
            let t = if len2 == 0.0 {
                0.0
            } else {
                ((px * vx + py * vy) / len2).clamp(0.0, 1.0)
            };
            let (dx, dy) = (px - t * vx, py - t * vy);
            if dx * dx + dy * dy <= half * half {
                img.set(x, y, 0);
            }
        }
    }
}

/// Filled disk in pixel coordinates.
pub fn disk(img: &mut GrayImage, c: (f64, f64), r: f64) {
    stroke(img, c, c, 2.0 * r);
}

/// Circle outline in pixel coordinates.
pub fn ring(img: &mut GrayImage, c: (f64, f64), r: f64, width: f64) {
    let half = width / 2.0;
    for y in 0..img.height() {
        for x in 0..img.width() {
            let d = ((x as f64 - c.0).powi(2) + (y as f64 - c.1).powi(2)).sqrt();
            if (d - r).abs() <= half {
                img.set(x, y, 0);
            }
        }
    }
}

fn jitter(rng: &mut ChaCha8Rng, amount: f64) -> f64 {
    rng.random_range(-amount..=amount)
}

pub fn giraffe(seed: u64, size: u32) -> SynthTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6769_7261_6666_6500);
    let mut pen = Pen::new(size);
    let body = (118.0 + jitter(&mut rng, 8.0), 150.0 + jitter(&mut rng, 6.0));
    let (brx, bry) = (46.0 + jitter(&mut rng, 6.0), 24.0 + jitter(&mut rng, 4.0));
    let neck_base = (body.0 + brx * 0.7, body.1 - bry * 0.6);
    let head = (
        neck_base.0 + 22.0 + jitter(&mut rng, 8.0),
        62.0 + jitter(&mut rng, 8.0),
    );
    let lw = 3.0;

    pen.ellipse(body, brx, bry, jitter(&mut rng, 0.1), lw);
    pen.line(neck_base, (head.0 - 6.0, head.1 + 8.0), lw);
    pen.line(
        (neck_base.0 + 14.0, neck_base.1 + 6.0),
        (head.0 + 6.0, head.1 + 10.0),
        lw,
    );
    pen.ellipse(head, 15.0, 9.0, 0.3, lw);
    pen.dot((head.0 + 4.0, head.1 - 2.0), 2.0);
    pen.line((head.0 - 6.0, head.1 - 8.0), (head.0 - 8.0, head.1 - 18.0), 2.0);
    pen.line((head.0 + 0.0, head.1 - 8.0), (head.0 + 1.0, head.1 - 18.0), 2.0);
    for i in 0..4 {
        let x = body.0 - brx * 0.7 + i as f64 * brx * 0.45 + jitter(&mut rng, 3.0);
        let top = body.1 + bry * 0.75;
        pen.line((x, top), (x + jitter(&mut rng, 6.0), 222.0), lw);
    }
    let a = pen.snapshot();

    // mane along the back of the neck
    let teeth = 7;
    let (n0, n1) = (neck_base, (head.0 - 6.0, head.1 + 8.0));
    let mut mane = Vec::new();
    for i in 0..=teeth * 2 {
        let t = i as f64 / (teeth * 2) as f64;
        let (x, y) = (n0.0 + (n1.0 - n0.0) * t, n0.1 + (n1.1 - n0.1) * t);
        let off = if i % 2 == 1 { 9.0 } else { 2.0 };
        mane.push((x - off, y - off * 0.3));
    }
    pen.polyline(&mane, 2.0);
    let tail_root = (body.0 - brx, body.1 - 4.0);
    let tail_tip = (tail_root.0 - 14.0, tail_root.1 + 30.0 + jitter(&mut rng, 6.0));
    pen.line(tail_root, tail_tip, 2.0);
    for k in 0..3 {
        pen.line(tail_tip, (tail_tip.0 - 5.0 + k as f64 * 5.0, tail_tip.1 + 8.0), 2.0);
    }
    let b = pen.snapshot();

    for _ in 0..6 + rng.random_range(0..4) {
        let c = (
            body.0 + jitter(&mut rng, brx * 0.6),
            body.1 + jitter(&mut rng, bry * 0.45),
        );
        pen.ellipse(c, 5.0, 4.0, 0.0, 2.0);
    }
    for i in 0..3 {
        let t = (i as f64 + 0.5) / 3.0;
        let c = (
            neck_base.0 + (head.0 - neck_base.0) * t + 3.0,
            neck_base.1 + (head.1 - neck_base.1) * t + 6.0,
        );
        pen.dot(c, 3.0);
    }
    let c = pen.snapshot();
    SynthTuple {
        stage_a: a,
        stage_b: b,
        stage_c: Some(c),
    }
}

pub fn flower(seed: u64, size: u32) -> SynthTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x666c_6f77_6572_0000);
    let mut pen = Pen::new(size);
    let c = (128.0 + jitter(&mut rng, 10.0), 128.0 + jitter(&mut rng, 10.0));
    let r = 18.0 + jitter(&mut rng, 6.0);
    pen.ellipse(c, r, r, 0.0, 3.0);
    for _ in 0..5 {
        pen.dot((c.0 + jitter(&mut rng, r * 0.5), c.1 + jitter(&mut rng, r * 0.5)), 2.0);
    }
    let a = pen.snapshot();
    let petals = rng.random_range(6..11);
    let len = 34.0 + jitter(&mut rng, 10.0);
    let phase = jitter(&mut rng, 0.5);
    for i in 0..petals {
        let t = phase + i as f64 / petals as f64 * std::f64::consts::TAU;
        let mid = r + len / 2.0 + 2.0;
        let pc = (c.0 + mid * t.cos(), c.1 + mid * t.sin());
        pen.ellipse(pc, len / 2.0, 8.0 + jitter(&mut rng, 2.0), t, 2.0);
    }
    SynthTuple {
        stage_a: a,
        stage_b: pen.snapshot(),
        stage_c: None,
    }
}

pub fn dragon(seed: u64, size: u32) -> SynthTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6472_6167_6f6e_0000);
    let mut pen = Pen::new(size);
    let body = (120.0 + jitter(&mut rng, 8.0), 150.0 + jitter(&mut rng, 8.0));
    let (brx, bry) = (42.0 + jitter(&mut rng, 5.0), 22.0 + jitter(&mut rng, 4.0));
    pen.ellipse(body, brx, bry, jitter(&mut rng, 0.15), 3.0);
    let head = (body.0 + brx + 22.0, body.1 - bry - 18.0 + jitter(&mut rng, 6.0));
    pen.line((body.0 + brx * 0.8, body.1 - bry * 0.5), head, 3.0);
    pen.ellipse(head, 14.0, 10.0, -0.2, 3.0);
    pen.dot((head.0 + 3.0, head.1 - 3.0), 2.0);
    let tail: Vec<_> = (0..=8)
        .map(|i| {
            let t = i as f64 / 8.0;
            (
                body.0 - brx - 40.0 * t,
                body.1 + 4.0 - 30.0 * t * t + 6.0 * (t * 6.0).sin(),
            )
        })
        .collect();
    pen.polyline(&tail, 3.0);
    for i in 0..4 {
        let x = body.0 - brx * 0.6 + i as f64 * brx * 0.4;
        pen.line((x, body.1 + bry * 0.8), (x + 4.0, 212.0), 3.0);
    }
    let a = pen.snapshot();
    let spikes = 5 + rng.random_range(0..3);
    for i in 0..spikes {
        let t = std::f64::consts::PI * (1.15 + 0.7 * (i as f64 + 0.5) / spikes as f64);
        let base = (body.0 + brx * t.cos(), body.1 + bry * t.sin());
        let tip = (base.0 + 5.0 * t.cos(), base.1 - 12.0);
        pen.polyline(&[(base.0 - 5.0, base.1), tip, (base.0 + 5.0, base.1)], 2.0);
    }
    let b = pen.snapshot();
    let root = (body.0 + jitter(&mut rng, 6.0), body.1 - bry + 2.0);
    let span = 50.0 + jitter(&mut rng, 10.0);
    let wing = [
        root,
        (root.0 - 14.0, root.1 - span),
        (root.0 + 8.0, root.1 - span * 0.75),
        (root.0 + 24.0, root.1 - span * 0.9),
        (root.0 + 30.0, root.1 - 6.0),
    ];
    pen.polyline(&wing, 2.0);
    pen.line(root, (root.0 + 8.0, root.1 - span * 0.75), 1.5);
    SynthTuple {
        stage_a: a,
        stage_b: b,
        stage_c: Some(pen.snapshot()),
    }
}

/// Write `count` drawings of `character` as `<name><i>_a.png` etc. into
/// `dir`, drawing `i` using seed `seed + i`.
pub fn write_originals(
    character: Character,
    count: usize,
    seed: u64,
    size: u32,
    dir: &Path,
) -> Result<Vec<StageTuple>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    (0..count)
        .map(|i| {
            let id = format!("{}{i:02}", character.name());
            let t = character.draw(seed.wrapping_add(i as u64), size);
            let path = |s: char| dir.join(format!("{id}_{s}.png"));
            save_png(&t.stage_a, path('a'))?;
            save_png(&t.stage_b, path('b'))?;
            if let Some(c) = &t.stage_c {
                save_png(c, path('c'))?;
            }
            Ok(StageTuple {
                stage_a: path('a'),
                stage_b: path('b'),
                stage_c: t.stage_c.is_some().then(|| path('c')),
                id,
            })
        })
        .collect()
}

//! Analytic street-like scenes with a known dense depth, sparsified by a
//! seeded Bernoulli mask. Stands in for LiDAR ground truth in tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::SampleRecord;
use crate::depth::{DepthMap, RgbImage, MAX_DEPTH};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthModel {
    PlanarGround,
    Spheres,
    Ridges,
}

impl DepthModel {
    pub const ALL: [DepthModel; 3] = [DepthModel::PlanarGround, DepthModel::Spheres, DepthModel::Ridges];

    pub fn name(self) -> &'static str {
        match self {
            DepthModel::PlanarGround => "planar_ground",
            DepthModel::Spheres => "spheres",
            DepthModel::Ridges => "ridges",
        }
    }
}

impl std::str::FromStr for DepthModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DepthModel::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown depth model {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub height: usize,
    pub width: usize,
    /// Target fraction of valid pixels, in `(0, 1]`.
    pub density: f64,
    pub scene_seed: u64,
    pub depth_model: DepthModel,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "density {} outside (0, 1]",
                self.density
            )));
        }
        if self.height == 0 || self.width == 0 {
            return Err(Error::InvalidParameter(format!(
                "synthetic raster {}x{} is empty",
                self.height, self.width
            )));
        }
        Ok(())
    }

    pub fn sample_id(&self) -> String {
        format!("syn_{}_{:06}", self.depth_model.name(), self.scene_seed)
    }
}

// Stream tags keep scene layout, texture, and mask draws independent.
const SCENE_STREAM: u64 = 0x5ce7e;
const MASK_STREAM: u64 = 0x3a5c;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy)]
enum Surface {
    Far,
    Ground,
    Object(usize),
}

struct Sphere {
    center: [f64; 3],
    radius: f64,
}

struct Wall {
    col_lo: f64,
    col_hi: f64,
    depth: f64,
    top: f64,
    amplitude: f64,
    period: f64,
}

struct Scene {
    focal: f64,
    cx: f64,
    cy: f64,
    cam_height: f64,
    far: f64,
    spheres: Vec<Sphere>,
    walls: Vec<Wall>,
    colors: Vec<[f64; 3]>,
    ground_color: [f64; 3],
    far_color: [f64; 3],
}

impl Scene {
    fn build(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Scene {
        let (h, w) = (spec.height as f64, spec.width as f64);
        let focal = 0.9 * w.max(h);
        let horizon = h * rng.random_range(0.30..0.45);
        let mut scene = Scene {
            focal,
            cx: w / 2.0,
            cy: horizon,
            cam_height: rng.random_range(1.4..1.8),
            far: rng.random_range(45.0..MAX_DEPTH),
            spheres: Vec::new(),
            walls: Vec::new(),
            colors: Vec::new(),
            ground_color: [0.45, 0.42, 0.38],
            far_color: [0.55, 0.7, 0.9],
        };
        let half_fov = w / (2.0 * focal);
        match spec.depth_model {
            DepthModel::PlanarGround => {}
            DepthModel::Spheres => {
                for _ in 0..rng.random_range(3..=6) {
                    let z = rng.random_range(5.0..40.0);
                    let radius = rng.random_range(0.5..3.0);
                    let x = rng.random_range(-half_fov..half_fov) * z;
                    scene.spheres.push(Sphere {
                        center: [x, scene.cam_height - radius, z],
                        radius,
                    });
                    scene.colors.push(random_color(rng));
                }
            }
            DepthModel::Ridges => {
                for _ in 0..rng.random_range(2..=4) {
                    let a = rng.random_range(0.0..w);
                    let span = rng.random_range(0.15..0.45) * w;
                    scene.walls.push(Wall {
                        col_lo: a,
                        col_hi: (a + span).min(w),
                        depth: rng.random_range(6.0..35.0),
                        top: rng.random_range(2.0..8.0),
                        amplitude: rng.random_range(0.5..3.0),
                        period: rng.random_range(0.1..0.4) * w,
                    });
                    scene.colors.push(random_color(rng));
                }
            }
        }
        scene
    }

    /// Z-depth and surface hit by the ray through pixel center (row, col).
    fn trace(&self, row: usize, col: usize) -> (f64, Surface) {
        let u = (col as f64 + 0.5 - self.cx) / self.focal;
        let v = (row as f64 + 0.5 - self.cy) / self.focal;
        let mut best = (self.far, Surface::Far);
        // Camera frame: x right, y down, z forward; ground plane at y = cam_height.
        if v > 0.0 {
            let z = self.cam_height / v;
            if z < best.0 {
                best = (z, Surface::Ground);
            }
        }
        let dir = [u, v, 1.0];
        let dd = u * u + v * v + 1.0;
        for (i, s) in self.spheres.iter().enumerate() {
            let dc = dir[0] * s.center[0] + dir[1] * s.center[1] + dir[2] * s.center[2];
            let cc: f64 = s.center.iter().map(|c| c * c).sum();
            let disc = dc * dc - dd * (cc - s.radius * s.radius);
            if disc >= 0.0 {
                let t = (dc - disc.sqrt()) / dd;
                if t > 0.0 && t < best.0 {
                    best = (t, Surface::Object(i));
                }
            }
        }
        let c = col as f64 + 0.5;
        for (i, wall) in self.walls.iter().enumerate() {
            if c < wall.col_lo || c >= wall.col_hi {
                continue;
            }
            let z = wall.depth + wall.amplitude * (std::f64::consts::TAU * (c - wall.col_lo) / wall.period).sin();
            let y = v * z;
            if y >= self.cam_height - wall.top && y <= self.cam_height && z < best.0 {
                best = (z, Surface::Object(i));
            }
        }
        (best.0.min(MAX_DEPTH), best.1)
    }

    fn shade(&self, row: usize, col: usize, depth: f64, surface: Surface) -> [f64; 3] {
        let base = match surface {
            Surface::Far => self.far_color,
            Surface::Ground => {
                // one-meter checker on the ground plane
                let x = (col as f64 + 0.5 - self.cx) / self.focal * depth;
                let checker = ((x.floor() as i64 + depth.floor() as i64).rem_euclid(2)) as f64;
                self.ground_color.map(|c| c * (0.85 + 0.15 * checker))
            }
            Surface::Object(i) => {
                let stripe = if (row / 2) % 2 == 0 { 1.0 } else { 0.9 };
                self.colors[i].map(|c| c * stripe)
            }
        };
        // exponential fog toward a bright haze gives a monotone depth cue
        let t = (-depth / 30.0).exp();
        let haze = [0.8, 0.82, 0.85];
        [0, 1, 2].map(|k| base[k] * t + haze[k] * (1.0 - t))
    }
}

fn random_color(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [rng.random_range(0.1..0.9), rng.random_range(0.1..0.9), rng.random_range(0.1..0.9)]
}

/// Renders the dense scene and image, then keeps each pixel independently
/// with probability `spec.density`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SampleRecord> {
    spec.validate()?;
    let (h, w) = (spec.height, spec.width);
    let scene = Scene::build(spec, &mut rng_for(spec.scene_seed, SCENE_STREAM));
    let n = h * w;
    let mut dense = Vec::with_capacity(n);
    let mut image = vec![0.0; 3 * n];
    for r in 0..h {
        for c in 0..w {
            let (depth, surface) = scene.trace(r, c);
            let rgb = scene.shade(r, c, depth, surface);
            let i = r * w + c;
            for k in 0..3 {
                image[k * n + i] = rgb[k];
            }
            dense.push(depth);
        }
    }
    let mut mask_rng = rng_for(spec.scene_seed, MASK_STREAM);
    let sparse: Vec<f64> = dense
        .iter()
        .map(|&d| if mask_rng.random::<f64>() < spec.density { d } else { 0.0 })
        .collect();
    Ok(SampleRecord {
        id: spec.sample_id(),
        image: Some(RgbImage::new(h, w, image)?),
        ground_truth: DepthMap::new(h, w, sparse)?,
        dense: Some(DepthMap::new(h, w, dense)?),
    })
}

/// `count` scenes cycling through the depth models; sample `i` uses scene
/// seed `seed * 1_000_003 + i`.
pub fn synthetic_dataset(count: usize, height: usize, width: usize, density: f64, seed: u64) -> Result<Vec<SampleRecord>> {
    (0..count)
        .map(|i| {
            generate_synthetic(&SyntheticSpec {
                height,
                width,
                density,
                scene_seed: seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
                depth_model: DepthModel::ALL[i % DepthModel::ALL.len()],
            })
        })
        .collect()
}

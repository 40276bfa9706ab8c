//! Brute-force oracles and fixtures shared by the integration tests and the
//! acceptance harness. The oracles never call into the library's algorithms;
//! the gradient check compares the library against finite differences.
#![allow(dead_code)]

use depthcurr::trainer::{loss_and_grad, LossKind, MaskedLoss, ModelConfig, ToyModel};
use depthcurr::{DepthMap, RgbImage, TargetSize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random sparse raster whose valid values are multiples of 1/256, so window
/// sums are exact in any summation order.
pub fn dyadic_raster(rng: &mut ChaCha8Rng, h: usize, w: usize, density: f64) -> DepthMap {
    let data = (0..h * w)
        .map(|_| {
            if rng.random_bool(density) {
                rng.random_range(1..=80 * 256) as f64 / 256.0
            } else {
                0.0
            }
        })
        .collect();
    DepthMap::new(h, w, data).unwrap()
}

pub fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> RgbImage {
    RgbImage::new(h, w, (0..3 * h * w).map(|_| rng.random()).collect()).unwrap()
}

pub fn oracle_max_pool(src: &[f64], h: usize, w: usize, kh: usize, kw: usize) -> (Vec<f64>, usize, usize) {
    let (ho, wo) = (h / kh, w / kw);
    let mut out = vec![0.0; ho * wo];
    for i in 0..ho {
        for j in 0..wo {
            let mut m = f64::NEG_INFINITY;
            for di in 0..kh {
                for dj in 0..kw {
                    let v = src[(i * kh + di) * w + j * kw + dj];
                    if v > m {
                        m = v;
                    }
                }
            }
            out[i * wo + j] = m;
        }
    }
    (out, ho, wo)
}

/// Window mean including zeros; means below 1e-3 are invalid (0).
pub fn oracle_mean_pool(src: &[f64], h: usize, w: usize, kh: usize, kw: usize) -> (Vec<f64>, usize, usize) {
    let (ho, wo) = (h / kh, w / kw);
    let mut out = vec![0.0; ho * wo];
    for i in 0..ho {
        for j in 0..wo {
            let mut s = 0.0;
            for di in 0..kh {
                for dj in 0..kw {
                    s += src[(i * kh + di) * w + j * kw + dj];
                }
            }
            let m = s / (kh * kw) as f64;
            out[i * wo + j] = if m >= 1e-3 { m.min(80.0) } else { 0.0 };
        }
    }
    (out, ho, wo)
}

/// Nearest neighbor: source index floor((i + 0.5) * in / out).
pub fn oracle_resize(src: &[f64], h: usize, w: usize, ho: usize, wo: usize) -> Vec<f64> {
    let pick = |i: usize, n_in: usize, n_out: usize| ((i as f64 + 0.5) * n_in as f64 / n_out as f64).floor() as usize;
    let mut out = Vec::with_capacity(ho * wo);
    for i in 0..ho {
        for j in 0..wo {
            out.push(src[pick(i, h, ho) * w + pick(j, w, wo)]);
        }
    }
    out
}

/// Iterated max pooling followed by nearest resize, built from the oracles.
pub fn oracle_dilate(map: &DepthMap, iterations: u32, kernel: usize, target: TargetSize) -> Vec<f64> {
    let (mut data, mut h, mut w) = (map.data().to_vec(), map.height(), map.width());
    for _ in 0..iterations {
        (data, h, w) = oracle_max_pool(&data, h, w, kernel, kernel);
    }
    oracle_resize(&data, h, w, target.height, target.width)
}

pub fn oracle_density(data: &[f64]) -> f64 {
    data.iter().filter(|&&v| v >= 1e-3).count() as f64 / data.len() as f64
}

/// Per-pixel metrics in the order delta1, delta2, delta3, abs_rel, sq_rel,
/// rms, rms_log, computed in two passes over explicit per-pixel vectors.
pub fn oracle_metrics(gt: &[f64], pred: &[f64]) -> Option<[f64; 7]> {
    let pairs: Vec<(f64, f64)> = gt
        .iter()
        .zip(pred)
        .filter(|(d, _)| **d >= 1e-3)
        .map(|(&d, &p)| (d, p.clamp(1e-3, 80.0)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let mean = |f: &dyn Fn(f64, f64) -> f64| pairs.iter().map(|&(d, p)| f(d, p)).sum::<f64>() / n;
    let frac = |t: f64| pairs.iter().filter(|&&(d, p)| d.max(p) / d.min(p) < t).count() as f64 / n;
    Some([
        frac(1.25),
        frac(1.25 * 1.25),
        frac(1.25 * 1.25 * 1.25),
        mean(&|d, p| (d - p).abs() / d),
        mean(&|d, p| (d - p).powi(2) / d),
        mean(&|d, p| (d - p).powi(2)).sqrt(),
        mean(&|d, p| (d / p).ln().powi(2)).sqrt(),
    ])
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Reference run of the patience rule: per step, the syllabus position the
/// loss was recorded under, the counter after the step, and whether the
/// syllabus ended. Stops at the end of the plan.
pub fn oracle_schedule(losses: &[f64], lambda: f64, patience: &[u32], cumulative: bool) -> Vec<(usize, u32, bool)> {
    let mut out = Vec::new();
    let (mut pos, mut counter) = (0usize, 0u32);
    let mut prev: Option<f64> = None;
    for &l in losses {
        if pos == patience.len() {
            break;
        }
        match prev {
            Some(p) if l > lambda * p => counter += 1,
            Some(_) if !cumulative => counter = 0,
            _ => {}
        }
        let ends = counter >= patience[pos];
        out.push((pos, counter, ends));
        if ends {
            pos += 1;
            counter = 0;
            prev = None;
        } else {
            prev = Some(l);
        }
    }
    out
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// Small model, two 8x8 images and sparse random targets for one seed.
pub fn gradient_fixture(seed: u64, density: f64) -> (ToyModel, Vec<RgbImage>, Vec<DepthMap>) {
    let model = ToyModel::new(ModelConfig { enc1: 2, enc2: 4, seed, zero_output_layer: false }).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let images = (0..2).map(|_| random_image(&mut r, 8, 8)).collect();
    let mut targets: Vec<DepthMap> = (0..2).map(|_| dyadic_raster(&mut r, 8, 8, density)).collect();
    if targets.iter().all(|t| t.valid_count() == 0) {
        targets[0] = DepthMap::from_fn(8, 8, |i, j| if i == j { 10.0 } else { 0.0 }).unwrap();
    }
    (model, images, targets)
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter.
pub fn max_gradient_error(seed: u64, kind: LossKind) -> f64 {
    let (mut model, images, targets) = gradient_fixture(seed, 0.3);
    let loss = MaskedLoss::new(kind);
    let analytic = loss_and_grad(&model, &images, &targets, loss).unwrap().grad;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for i in 0..model.param_count() {
        let orig = model.params()[i];
        model.params_mut()[i] = orig + h;
        let up = loss_and_grad(&model, &images, &targets, loss).unwrap().loss;
        model.params_mut()[i] = orig - h;
        let down = loss_and_grad(&model, &images, &targets, loss).unwrap().loss;
        model.params_mut()[i] = orig;
        worst = worst.max(rel_err(analytic[i], (up - down) / (2.0 * h)));
    }
    worst
}

// Output-size column of the 256x512 syllabus table, row by row.
pub const TABLE_SIZES: [(usize, usize); 31] = [
    (1, 2), (2, 4), (3, 6), (4, 8), (5, 10), (6, 13), (7, 14), (8, 16), (9, 18), (10, 20), (11, 23),
    (12, 25), (13, 26), (14, 28), (15, 30), (16, 32), (17, 34), (18, 36), (19, 39), (21, 42), (23, 46),
    (25, 51), (28, 56), (32, 64), (36, 73), (42, 85), (51, 102), (64, 128), (85, 170), (128, 256), (256, 512),
];

// Membership columns of the same table; the identity row (30) is in all.
pub const TABLE_A: [usize; 11] = [2, 5, 8, 11, 14, 17, 20, 23, 25, 28, 30];
pub const TABLE_B: [usize; 16] = [2, 4, 6, 8, 10, 12, 14, 16, 18, 19, 20, 22, 24, 26, 28, 30];
pub const TABLE_C: [usize; 10] = [6, 9, 12, 16, 20, 24, 27, 28, 29, 30];

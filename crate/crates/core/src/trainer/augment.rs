//! Paired geometric augmentation. Every transform applies the same geometry
//! to the image and the depth map and samples depth by nearest neighbor, so
//! depth values are never blended.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, RgbImage, TargetSize};
use crate::dilation::{resize_image_nearest, resize_nearest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Flip horizontally with probability 1/2.
    pub hflip: bool,
    /// Uniform rotation in `[-max, max]` degrees; 0 disables.
    pub max_rotation_deg: f64,
    /// Random crop of this size, resized back to the input size.
    pub crop: Option<TargetSize>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            hflip: true,
            max_rotation_deg: 0.0,
            crop: None,
        }
    }
}

impl AugmentConfig {
    pub fn none() -> Self {
        Self {
            hflip: false,
            max_rotation_deg: 0.0,
            crop: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.hflip && self.max_rotation_deg == 0.0 && self.crop.is_none()
    }
}

// FNV-1a; stable across platforms and releases, unlike std's hasher.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325, |h, &b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// RNG for one sample in one epoch.
pub fn augment_rng(seed: u64, sample_id: &str, epoch: u64) -> ChaCha8Rng {
    let mut key = Vec::with_capacity(sample_id.len() + 16);
    key.extend_from_slice(&seed.to_le_bytes());
    key.extend_from_slice(&epoch.to_le_bytes());
    key.extend_from_slice(sample_id.as_bytes());
    ChaCha8Rng::seed_from_u64(fnv1a(&key))
}

fn remap_plane(src: &[f64], h: usize, w: usize, map: &[Option<usize>]) -> Vec<f64> {
    debug_assert_eq!(src.len(), h * w);
    map.iter().map(|m| m.map_or(0.0, |i| src[i])).collect()
}

fn remap(image: &RgbImage, depth: &DepthMap, map: &[Option<usize>]) -> (RgbImage, DepthMap) {
    let (h, w) = (depth.height(), depth.width());
    let data = (0..RgbImage::CHANNELS)
        .flat_map(|c| remap_plane(image.plane(c), h, w, map))
        .collect();
    (
        RgbImage::new(h, w, data).expect("remap keeps the image shape"),
        DepthMap::from_normalized(h, w, remap_plane(depth.data(), h, w, map)),
    )
}

pub fn hflip(image: &RgbImage, depth: &DepthMap) -> (RgbImage, DepthMap) {
    let (h, w) = (depth.height(), depth.width());
    let map: Vec<Option<usize>> = (0..h * w).map(|i| Some(i - i % w + (w - 1 - i % w))).collect();
    remap(image, depth, &map)
}

/// Rotation about the raster center; pixels sampled from outside the source
/// become invalid depth and black image.
pub fn rotate(image: &RgbImage, depth: &DepthMap, degrees: f64) -> (RgbImage, DepthMap) {
    let (h, w) = (depth.height(), depth.width());
    let (sin, cos) = degrees.to_radians().sin_cos();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let mut map = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (y, x) = (r as f64 - cy, c as f64 - cx);
            let sx = (cos * x + sin * y + cx).round();
            let sy = (-sin * x + cos * y + cy).round();
            let inside = sx >= 0.0 && sy >= 0.0 && sx < w as f64 && sy < h as f64;
            map.push(inside.then(|| sy as usize * w + sx as usize));
        }
    }
    remap(image, depth, &map)
}

/// Crops `size` at (`top`, `left`) and resizes back to the input size.
pub fn crop_resize(image: &RgbImage, depth: &DepthMap, size: TargetSize, top: usize, left: usize) -> Result<(RgbImage, DepthMap)> {
    let full = depth.size();
    if size.height > full.height || size.width > full.width || top + size.height > full.height || left + size.width > full.width {
        return Err(Error::InvalidParameter(format!(
            "crop {size} at ({top},{left}) exceeds raster {full}"
        )));
    }
    let mut map = Vec::with_capacity(size.area());
    for r in top..top + size.height {
        for c in left..left + size.width {
            map.push(r * full.width + c);
        }
    }
    let n = full.area();
    let img_data = (0..RgbImage::CHANNELS)
        .flat_map(|ch| map.iter().map(move |&i| image.data()[ch * n + i]))
        .collect();
    let cropped_img = RgbImage::new(size.height, size.width, img_data)?;
    let cropped_depth = DepthMap::from_normalized(size.height, size.width, map.iter().map(|&i| depth.data()[i]).collect());
    Ok((resize_image_nearest(&cropped_img, full), resize_nearest(&cropped_depth, full)))
}

/// Applies the configured transforms, seeded by `(seed, sample_id, epoch)`.
pub fn augment(
    image: &RgbImage,
    depth: &DepthMap,
    config: &AugmentConfig,
    seed: u64,
    sample_id: &str,
    epoch: u64,
) -> Result<(RgbImage, DepthMap)> {
    if image.size() != depth.size() {
        return Err(Error::ShapeMismatch {
            expected: image.size().to_string(),
            actual: depth.size().to_string(),
        });
    }
    if let Some(c) = config.crop {
        if c.height > depth.height() || c.width > depth.width() {
            return Err(Error::InvalidParameter(format!(
                "crop {c} exceeds raster {}",
                depth.size()
            )));
        }
    }
    let mut rng = augment_rng(seed, sample_id, epoch);
    let mut out = (image.clone(), depth.clone());
    if let Some(c) = config.crop {
        let top = rng.random_range(0..=depth.height() - c.height);
        let left = rng.random_range(0..=depth.width() - c.width);
        out = crop_resize(&out.0, &out.1, c, top, left)?;
    }
    if config.max_rotation_deg > 0.0 {
        let a = rng.random_range(-config.max_rotation_deg..=config.max_rotation_deg);
        out = rotate(&out.0, &out.1, a);
    }
    if config.hflip && rng.random_bool(0.5) {
        out = hflip(&out.0, &out.1);
    }
    Ok(out)
}

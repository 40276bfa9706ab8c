//! Valid-aware pooling, nearest-neighbor resizing, and the pool-then-resize
//! imputation that turns a sparse depth map into a syllabus target.
//!
//! Pooling uses non-overlapping windows (stride equal to the kernel) with no
//! padding; rows and columns not covered by a full window are dropped.

use serde::{Deserialize, Serialize};

use crate::curriculum::SyllabusSpec;
use crate::depth::{DepthMap, RgbImage, TargetSize};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoolParams {
    pub kernel_h: usize,
    pub kernel_w: usize,
}

impl PoolParams {
    pub fn new(kernel_h: usize, kernel_w: usize) -> Result<Self> {
        if kernel_h == 0 || kernel_w == 0 {
            return Err(Error::InvalidParameter(format!(
                "pool kernel {kernel_h}x{kernel_w} must be at least 1x1"
            )));
        }
        Ok(Self { kernel_h, kernel_w })
    }

    pub fn square(kernel: usize) -> Result<Self> {
        Self::new(kernel, kernel)
    }

    /// Pooled dimensions of a `height x width` input, or a degenerate-pool
    /// error when the kernel does not fit.
    pub fn output_size(&self, height: usize, width: usize) -> Result<TargetSize> {
        let (oh, ow) = (height / self.kernel_h, width / self.kernel_w);
        if oh == 0 || ow == 0 {
            return Err(Error::DegeneratePool {
                kernel_h: self.kernel_h,
                kernel_w: self.kernel_w,
                height,
                width,
            });
        }
        Ok(TargetSize {
            height: oh,
            width: ow,
        })
    }
}

/// How a syllabus fills in missing pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    /// Window maximum; a window is valid iff it holds a valid pixel.
    #[default]
    MaxPool,
    /// Window mean including invalid zeros. Ablation baseline.
    MeanPool,
    /// Full-resolution Gaussian blur (sigma = kernel / 2, radius = kernel)
    /// followed by sampling each window's center pixel. Ablation baseline.
    Gaussian,
}

fn pool_with(map: &DepthMap, params: PoolParams, reduce: impl Fn(&[f64], usize, usize, usize) -> f64) -> Result<Vec<f64>> {
    let out = params.output_size(map.height(), map.width())?;
    let mut data = Vec::with_capacity(out.area());
    for i in 0..out.height {
        for j in 0..out.width {
            data.push(reduce(map.data(), map.width(), i * params.kernel_h, j * params.kernel_w));
        }
    }
    Ok(data)
}

pub fn max_pool2d(map: &DepthMap, params: PoolParams) -> Result<DepthMap> {
    let PoolParams { kernel_h, kernel_w } = params;
    let out = params.output_size(map.height(), map.width())?;
    let data = pool_with(map, params, |src, stride, r0, c0| {
        let mut best = 0.0f64;
        for r in r0..r0 + kernel_h {
            for &v in &src[r * stride + c0..r * stride + c0 + kernel_w] {
                best = best.max(v);
            }
        }
        best
    })?;
    Ok(DepthMap::from_normalized(out.height, out.width, data))
}

/// Window mean over all pixels, zeros included. Means that fall below the
/// validity threshold become invalid.
pub fn mean_pool2d(map: &DepthMap, params: PoolParams) -> Result<DepthMap> {
    let PoolParams { kernel_h, kernel_w } = params;
    let out = params.output_size(map.height(), map.width())?;
    let count = (kernel_h * kernel_w) as f64;
    let data = pool_with(map, params, |src, stride, r0, c0| {
        let mut sum = 0.0;
        for r in r0..r0 + kernel_h {
            sum += src[r * stride + c0..r * stride + c0 + kernel_w].iter().sum::<f64>();
        }
        sum / count
    })?;
    DepthMap::new(out.height, out.width, data)
}

fn gaussian_kernel(sigma: f64, radius: usize) -> Vec<f64> {
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur truncated at `radius`, edges clamped. Invalid
/// zeros are blended in like any other value.
pub fn gaussian_blur(map: &DepthMap, sigma: f64, radius: usize) -> Result<DepthMap> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gaussian sigma {sigma} must be positive")));
    }
    let kernel = gaussian_kernel(sigma, radius);
    let (h, w) = (map.height(), map.width());
    let src = map.data();
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * src[y * w + clamp(x as isize + k as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, wt)| wt * tmp[clamp(y as isize + k as isize - r, h) * w + x])
                .sum();
        }
    }
    DepthMap::new(h, w, out)
}

#[inline]
fn nearest_index(dst: usize, src_len: usize, dst_len: usize) -> usize {
    // floor((dst + 0.5) * src_len / dst_len) in exact integer arithmetic
    ((2 * dst + 1) * src_len) / (2 * dst_len)
}

pub(crate) fn resize_plane(src: &[f64], src_size: TargetSize, size: TargetSize) -> Vec<f64> {
    let cols: Vec<usize> = (0..size.width)
        .map(|j| nearest_index(j, src_size.width, size.width))
        .collect();
    let mut out = Vec::with_capacity(size.area());
    for i in 0..size.height {
        let row = nearest_index(i, src_size.height, size.height) * src_size.width;
        out.extend(cols.iter().map(|&c| src[row + c]));
    }
    out
}

/// Nearest-neighbor resize. Output values are always a subset of the input
/// values, so validity is never blended.
pub fn resize_nearest(map: &DepthMap, size: TargetSize) -> DepthMap {
    if map.size() == size {
        return map.clone();
    }
    DepthMap::from_normalized(size.height, size.width, resize_plane(map.data(), map.size(), size))
}

pub fn resize_image_nearest(image: &RgbImage, size: TargetSize) -> RgbImage {
    if image.size() == size {
        return image.clone();
    }
    let data = (0..RgbImage::CHANNELS)
        .flat_map(|c| resize_plane(image.plane(c), image.size(), size))
        .collect();
    RgbImage::new(size.height, size.width, data).expect("resized image keeps its shape")
}

/// Applies the syllabus pooling `iterations` times, then resizes to `size`.
pub fn dilate(map: &DepthMap, syllabus: &SyllabusSpec, size: TargetSize) -> Result<DepthMap> {
    dilate_with(map, syllabus, size, Imputation::MaxPool)
}

pub fn dilate_with(map: &DepthMap, syllabus: &SyllabusSpec, size: TargetSize, method: Imputation) -> Result<DepthMap> {
    let Some(kernel) = syllabus.kernel else {
        return Ok(resize_nearest(map, size));
    };
    let params = PoolParams::square(kernel)?;
    let mut current = map.clone();
    for _ in 0..syllabus.iterations {
        current = match method {
            Imputation::MaxPool => max_pool2d(&current, params)?,
            Imputation::MeanPool => mean_pool2d(&current, params)?,
            Imputation::Gaussian => {
                let out = params.output_size(current.height(), current.width())?;
                let blurred = gaussian_blur(&current, kernel as f64 / 2.0, kernel)?;
                let half = kernel / 2;
                let data = (0..out.height)
                    .flat_map(|i| (0..out.width).map(move |j| (i, j)))
                    .map(|(i, j)| blurred.get(i * kernel + half, j * kernel + half))
                    .collect();
                DepthMap::from_normalized(out.height, out.width, data)
            }
        };
    }
    Ok(resize_nearest(&current, size))
}

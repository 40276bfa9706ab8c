//! Depth rasters and the validity convention shared by every module.
//!
//! A pixel is valid when its depth is at least [`MIN_DEPTH`] meters. Missing
//! returns are stored as exactly `0.0`, so max pooling treats them as the
//! identity element and needs no separate mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest valid depth in meters.
pub const MIN_DEPTH: f64 = 1e-3;
/// Largest representable depth in meters; valid values are clamped here.
pub const MAX_DEPTH: f64 = 80.0;

#[inline]
pub fn is_valid(depth: f64) -> bool {
    depth >= MIN_DEPTH
}

/// Maps a raw depth onto the stored domain: invalid values become `0.0`,
/// valid ones are clamped to `[MIN_DEPTH, MAX_DEPTH]`.
#[inline]
pub fn normalize_depth(depth: f64) -> f64 {
    if depth >= MIN_DEPTH {
        depth.min(MAX_DEPTH)
    } else {
        0.0
    }
}

/// Raster height and width in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TargetSize {
    pub height: usize,
    pub width: usize,
}

impl TargetSize {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidTarget {
                height,
                width,
                reason: "both dimensions must be at least 1",
            });
        }
        Ok(Self { height, width })
    }

    pub fn area(&self) -> usize {
        self.height * self.width
    }
}

impl std::fmt::Display for TargetSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

impl std::str::FromStr for TargetSize {
    type Err = Error;

    /// Parses `HxW`, e.g. `256x512`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("expected HxW, got {s:?}"));
        let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let height = h.trim().parse().map_err(|_| bad())?;
        let width = w.trim().parse().map_err(|_| bad())?;
        TargetSize::new(height, width)
    }
}

/// Row-major depth raster in meters; invalid pixels hold `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DepthMap {
    /// Builds a map from raw values, normalizing them onto the stored domain.
    ///
    /// Negative or non-finite values are rejected.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions {height}x{width} must both be at least 1"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "{} values for a {height}x{width} raster",
                data.len()
            )));
        }
        let mut data = data;
        for (i, v) in data.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidRaster(format!(
                    "pixel {i} holds {v}, depths must be finite and non-negative"
                )));
            }
            *v = normalize_depth(*v);
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// All-invalid map.
    pub fn zeros(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, vec![0.0; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self::new(height, width, data)
    }

    /// Skips normalization; callers guarantee every value is already in the
    /// stored domain (produced from another `DepthMap` by selection or max).
    pub(crate) fn from_normalized(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        debug_assert!(data.iter().all(|&v| v == 0.0 || (MIN_DEPTH..=MAX_DEPTH).contains(&v)));
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn size(&self) -> TargetSize {
        TargetSize {
            height: self.height,
            width: self.width,
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&v| is_valid(v)).count()
    }

    pub fn valid_mask(&self) -> Vec<bool> {
        self.data.iter().map(|&v| is_valid(v)).collect()
    }

    /// Fraction of valid pixels.
    pub fn density(&self) -> f64 {
        density(self)
    }
}

/// Ratio of valid pixels to all pixels.
pub fn density(map: &DepthMap) -> f64 {
    map.valid_count() as f64 / (map.height * map.width) as f64
}

/// Planar RGB raster with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    height: usize,
    width: usize,
    // channel-major: [r plane, g plane, b plane]
    data: Vec<f64>,
}

impl RgbImage {
    pub const CHANNELS: usize = 3;

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidRaster(format!(
                "dimensions {height}x{width} must both be at least 1"
            )));
        }
        if data.len() != Self::CHANNELS * height * width {
            return Err(Error::InvalidRaster(format!(
                "{} values for a 3x{height}x{width} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster(format!("image value {i} is not finite")));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn size(&self) -> TargetSize {
        TargetSize {
            height: self.height,
            width: self.width,
        }
    }

    /// Channel-major planes, `3 * height * width` values.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn plane(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ingest_clamps_and_zeroes_invalid() {
        let m = DepthMap::new(1, 4, vec![0.0005, 0.001, 20.0, 100.0]).unwrap();
        assert_eq!(m.data(), &[0.0, 0.001, 20.0, 80.0]);
        assert_eq!(m.valid_count(), 3);
    }

    #[test]
    fn rejects_bad_rasters() {
        assert!(DepthMap::new(0, 3, vec![]).is_err());
        assert!(DepthMap::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DepthMap::new(1, 2, vec![1.0, -1.0]).is_err());
        assert!(DepthMap::new(1, 2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn density_extremes() {
        assert_eq!(DepthMap::new(2, 3, vec![5.0; 6]).unwrap().density(), 1.0);
        assert_eq!(DepthMap::zeros(2, 3).unwrap().density(), 0.0);
        let half = DepthMap::new(1, 4, vec![0.0, 3.0, 0.0, 7.0]).unwrap();
        assert_eq!(density(&half), 0.5);
    }

    #[test]
    fn target_size_parsing() {
        let t: TargetSize = "256x512".parse().unwrap();
        assert_eq!(t, TargetSize { height: 256, width: 512 });
        assert!("256".parse::<TargetSize>().is_err());
        assert!("0x4".parse::<TargetSize>().is_err());
    }
}

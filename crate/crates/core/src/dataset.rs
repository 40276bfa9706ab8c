//! Sample records and the on-disk dataset layout:
//!
//! ```text
//! <root>/index.csv        id,height,width
//! <root>/depth/<id>.png   16-bit ground truth
//! <root>/images/<id>.png  8-bit RGB, optional
//! <root>/dense/<id>.png   16-bit dense oracle depth, optional
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, RgbImage};
use crate::error::{Error, Result};
use crate::io::{load_depth_png, load_rgb_png, save_depth_png, save_rgb_png};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub image: Option<RgbImage>,
    pub ground_truth: DepthMap,
    /// Pre-mask depth, available for synthetic samples.
    pub dense: Option<DepthMap>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexRow {
    id: String,
    height: usize,
    width: usize,
}

pub const INDEX_FILE: &str = "index.csv";

fn sample_path(root: &Path, dir: &str, id: &str) -> PathBuf {
    root.join(dir).join(format!("{id}.png"))
}

fn check_id(id: &str) -> Result<()> {
    if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
        return Err(Error::InvalidParameter(format!("sample id {id:?} is not a plain file stem")));
    }
    Ok(())
}

pub fn save_dataset(root: impl AsRef<Path>, samples: &[SampleRecord]) -> Result<()> {
    let root = root.as_ref();
    for dir in ["depth", "images", "dense"] {
        let d = root.join(dir);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let index_path = root.join(INDEX_FILE);
    let mut writer = csv::Writer::from_path(&index_path)?;
    for s in samples {
        check_id(&s.id)?;
        writer.serialize(IndexRow {
            id: s.id.clone(),
            height: s.ground_truth.height(),
            width: s.ground_truth.width(),
        })?;
        save_depth_png(&s.ground_truth, sample_path(root, "depth", &s.id))?;
        if let Some(img) = &s.image {
            save_rgb_png(img, sample_path(root, "images", &s.id))?;
        }
        if let Some(dense) = &s.dense {
            save_depth_png(dense, sample_path(root, "dense", &s.id))?;
        }
    }
    writer.flush().map_err(|e| Error::io(&index_path, e))?;
    Ok(())
}

/// Loads every sample listed in `index.csv`. Images and dense maps are
/// picked up when their files exist.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let root = root.as_ref();
    let index_path = root.join(INDEX_FILE);
    if !index_path.exists() {
        return Err(Error::io(
            &index_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "missing dataset index"),
        ));
    }
    let mut reader = csv::Reader::from_path(&index_path)?;
    let mut samples = Vec::new();
    for row in reader.deserialize::<IndexRow>() {
        let row = row?;
        check_id(&row.id)?;
        let ground_truth = load_depth_png(sample_path(root, "depth", &row.id))?;
        if ground_truth.height() != row.height || ground_truth.width() != row.width {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} for {}", row.height, row.width, row.id),
                actual: ground_truth.size().to_string(),
            });
        }
        let image_path = sample_path(root, "images", &row.id);
        let image = image_path.exists().then(|| load_rgb_png(&image_path)).transpose()?;
        let dense_path = sample_path(root, "dense", &row.id);
        let dense = dense_path.exists().then(|| load_depth_png(&dense_path)).transpose()?;
        samples.push(SampleRecord {
            id: row.id,
            image,
            ground_truth,
            dense,
        });
    }
    Ok(samples)
}

//! Standard depth-estimation metrics over valid ground-truth pixels.
//!
//! Predictions are clamped to the valid depth range first. SqRel is the mean
//! of `(d - d̂)² / d` and RMSlog uses the natural logarithm.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::depth::{is_valid, DepthMap, MAX_DEPTH, MIN_DEPTH};
use crate::error::{Error, Result};

/// Accuracy thresholds 1.25, 1.25², 1.25³.
pub const DELTA_THRESHOLDS: [f64; 3] = [1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rms: f64,
    pub rms_log: f64,
    pub n_valid: u64,
}

/// Full-scale KITTI Eigen-split figures reported for this training scheme
/// with a 42.6M-parameter model. Documentation only; not reproducible here.
pub const REPORTED_FULL_SCALE: MetricReport = MetricReport {
    delta1: 0.940,
    delta2: 0.990,
    delta3: 0.997,
    abs_rel: 0.070,
    sq_rel: 0.294,
    rms: 2.923,
    rms_log: 0.111,
    n_valid: 0,
};

/// Inclusive-exclusive pixel rectangle restricting evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crop {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl Crop {
    /// The Garg crop as fractions of the raster size.
    pub fn garg(height: usize, width: usize) -> Self {
        let f = |n: usize, x: f64| (x * n as f64) as usize;
        Crop {
            top: f(height, 0.40810811),
            bottom: f(height, 0.99189189),
            left: f(width, 0.03594771),
            right: f(width, 0.96405229),
        }
    }

    fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..self.bottom).contains(&row) && (self.left..self.right).contains(&col)
    }
}

/// Running sums that merge exactly across samples.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricAccumulator {
    n: u64,
    within: [u64; 3],
    abs_rel: f64,
    sq_rel: f64,
    sq_err: f64,
    sq_log: f64,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, gt: &DepthMap, pred: &DepthMap, crop: Option<Crop>) -> Result<()> {
        if gt.size() != pred.size() {
            return Err(Error::ShapeMismatch {
                expected: gt.size().to_string(),
                actual: pred.size().to_string(),
            });
        }
        self.add_raw(gt, pred.data(), crop)
    }

    /// Like [`add`](Self::add) for an unvalidated row-major prediction buffer.
    pub fn add_raw(&mut self, gt: &DepthMap, pred: &[f64], crop: Option<Crop>) -> Result<()> {
        if pred.len() != gt.data().len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", gt.data().len()),
                actual: format!("{} values", pred.len()),
            });
        }
        let w = gt.width();
        for (i, (&d, &p)) in gt.data().iter().zip(pred).enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePrediction(i));
            }
            if !is_valid(d) || crop.is_some_and(|c| !c.contains(i / w, i % w)) {
                continue;
            }
            self.add_pixel(d, p);
        }
        Ok(())
    }

    #[inline]
    fn add_pixel(&mut self, d: f64, p: f64) {
        let p = p.clamp(MIN_DEPTH, MAX_DEPTH);
        let diff = d - p;
        let ratio = (d / p).max(p / d);
        for (count, t) in self.within.iter_mut().zip(DELTA_THRESHOLDS) {
            *count += u64::from(ratio < t);
        }
        self.n += 1;
        self.abs_rel += diff.abs() / d;
        self.sq_rel += diff * diff / d;
        self.sq_err += diff * diff;
        let dl = d.ln() - p.ln();
        self.sq_log += dl * dl;
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        self.n += other.n;
        for (a, b) in self.within.iter_mut().zip(other.within) {
            *a += b;
        }
        self.abs_rel += other.abs_rel;
        self.sq_rel += other.sq_rel;
        self.sq_err += other.sq_err;
        self.sq_log += other.sq_log;
    }

    pub fn n_valid(&self) -> u64 {
        self.n
    }

    pub fn finish(&self) -> Result<MetricReport> {
        if self.n == 0 {
            return Err(Error::EmptyEvaluation);
        }
        let n = self.n as f64;
        Ok(MetricReport {
            delta1: self.within[0] as f64 / n,
            delta2: self.within[1] as f64 / n,
            delta3: self.within[2] as f64 / n,
            abs_rel: self.abs_rel / n,
            sq_rel: self.sq_rel / n,
            rms: (self.sq_err / n).sqrt(),
            rms_log: (self.sq_log / n).sqrt(),
            n_valid: self.n,
        })
    }
}

/// Metrics over the valid pixels of `gt` (inside `crop`, when given).
pub fn evaluate(gt: &DepthMap, pred: &DepthMap, crop: Option<Crop>) -> Result<MetricReport> {
    let mut acc = MetricAccumulator::new();
    acc.add(gt, pred, crop)?;
    acc.finish()
}

impl MetricReport {
    pub const CSV_HEADER: [&'static str; 8] = ["delta1", "delta2", "delta3", "abs_rel", "sq_rel", "rms", "rms_log", "n_valid"];

    /// Values in the conventional table column order.
    pub fn values(&self) -> [f64; 7] {
        [self.delta1, self.delta2, self.delta3, self.abs_rel, self.sq_rel, self.rms, self.rms_log]
    }
}

pub fn write_report_csv<W: Write>(rows: &[(String, MetricReport)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["name"];
    header.extend(MetricReport::CSV_HEADER);
    w.write_record(&header)?;
    for (name, r) in rows {
        let mut rec = vec![name.clone()];
        rec.extend(r.values().iter().map(|v| format!("{v:.6}")));
        rec.push(r.n_valid.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<metrics csv>", e))?;
    Ok(())
}

use serde::{Deserialize, Serialize};

use super::model::ToyModel;
use crate::depth::{is_valid, DepthMap, RgbImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    L1,
    L2,
}

/// Loss averaged over the valid target pixels of a whole batch. Invalid
/// pixels contribute nothing to the value or the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MaskedLoss {
    pub kind: LossKind,
}

impl MaskedLoss {
    pub fn new(kind: LossKind) -> Self {
        Self { kind }
    }

    /// Per-pixel loss and its derivative with respect to the prediction.
    #[inline]
    pub fn pointwise(&self, pred: f64, target: f64) -> (f64, f64) {
        let diff = pred - target;
        match self.kind {
            LossKind::L1 => (diff.abs(), if diff > 0.0 { 1.0 } else if diff < 0.0 { -1.0 } else { 0.0 }),
            LossKind::L2 => (diff * diff, 2.0 * diff),
        }
    }

    /// Loss over predictions already computed, and dL/dprediction per pixel.
    pub fn evaluate(&self, preds: &[Vec<f64>], targets: &[DepthMap]) -> (f64, Vec<Vec<f64>>, usize) {
        let n_valid: usize = targets.iter().map(|t| t.valid_count()).sum();
        let mut total = 0.0;
        let grads = preds
            .iter()
            .zip(targets)
            .map(|(p, t)| {
                p.iter()
                    .zip(t.data())
                    .map(|(&d, &y)| {
                        if !is_valid(y) {
                            return 0.0;
                        }
                        let (l, g) = self.pointwise(d, y);
                        total += l;
                        g / n_valid as f64
                    })
                    .collect()
            })
            .collect();
        if n_valid == 0 {
            return (0.0, grads, 0);
        }
        (total / n_valid as f64, grads, n_valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    /// Gradient in the model's flat parameter layout.
    pub grad: Vec<f64>,
    pub n_valid: usize,
}

/// Batch loss and parameter gradient. An all-invalid batch yields zero loss
/// and a zero gradient; callers decide whether to warn.
pub fn loss_and_grad(model: &ToyModel, images: &[RgbImage], targets: &[DepthMap], loss: MaskedLoss) -> Result<LossOutput> {
    if images.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} targets", images.len()),
            actual: format!("{} targets", targets.len()),
        });
    }
    for (im, t) in images.iter().zip(targets) {
        if im.size() != t.size() {
            return Err(Error::ShapeMismatch {
                expected: im.size().to_string(),
                actual: t.size().to_string(),
            });
        }
    }
    let n_valid: usize = targets.iter().map(|t| t.valid_count()).sum();
    let mut grad = vec![0.0; model.param_count()];
    if n_valid == 0 {
        return Ok(LossOutput { loss: 0.0, grad, n_valid });
    }
    let scale = 1.0 / n_valid as f64;
    let mut total = 0.0;
    // Samples are reduced in batch order so results are bit-reproducible.
    for (im, t) in images.iter().zip(targets) {
        let cache = model.forward_cached(im)?;
        let mut g_depth = vec![0.0; t.data().len()];
        for ((g, &d), &y) in g_depth.iter_mut().zip(&cache.depth).zip(t.data()) {
            if is_valid(y) {
                let (l, dl) = loss.pointwise(d, y);
                total += l;
                *g = dl * scale;
            }
        }
        model.backward(&cache, &g_depth, &mut grad);
    }
    Ok(LossOutput {
        loss: total * scale,
        grad,
        n_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::model::ModelConfig;

    fn setup() -> (ToyModel, RgbImage) {
        let m = ToyModel::new(ModelConfig { enc1: 2, enc2: 4, seed: 3, zero_output_layer: false }).unwrap();
        let data = (0..3 * 64).map(|i| (i % 17) as f64 / 17.0).collect();
        (m, RgbImage::new(8, 8, data).unwrap())
    }

    #[test]
    fn perfect_prediction_has_zero_loss_and_gradient() {
        let (m, x) = setup();
        let pred = m.predict(&x).unwrap();
        let target = DepthMap::new(8, 8, pred.clone()).unwrap();
        let out = loss_and_grad(&m, &[x], &[target], MaskedLoss::default()).unwrap();
        assert_eq!(out.loss, 0.0);
        assert!(out.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn single_valid_pixel_l1() {
        let (m, x) = setup();
        let pred = m.predict(&x).unwrap();
        let mut t = vec![0.0; 64];
        t[27] = 12.5;
        let target = DepthMap::new(8, 8, t).unwrap();
        let out = loss_and_grad(&m, &[x], &[target], MaskedLoss::new(LossKind::L1)).unwrap();
        assert_eq!(out.n_valid, 1);
        assert!((out.loss - (pred[27] - 12.5).abs()).abs() < 1e-12);
    }

    #[test]
    fn all_invalid_batch_is_zero() {
        let (m, x) = setup();
        let out = loss_and_grad(&m, &[x], &[DepthMap::zeros(8, 8).unwrap()], MaskedLoss::default()).unwrap();
        assert_eq!((out.loss, out.n_valid), (0.0, 0));
        assert!(out.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn shape_mismatch() {
        let (m, x) = setup();
        let err = loss_and_grad(&m, &[x], &[DepthMap::zeros(4, 8).unwrap()], MaskedLoss::default());
        assert!(matches!(err, Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn evaluate_matches_loss_and_grad_value() {
        let (m, x) = setup();
        let t = DepthMap::from_fn(8, 8, |r, c| if (r + c) % 3 == 0 { 5.0 + r as f64 } else { 0.0 }).unwrap();
        let pred = m.predict(&x).unwrap();
        for kind in [LossKind::L1, LossKind::L2] {
            let loss = MaskedLoss::new(kind);
            let (v, _, n) = loss.evaluate(&[pred.clone()], std::slice::from_ref(&t));
            let out = loss_and_grad(&m, std::slice::from_ref(&x), std::slice::from_ref(&t), loss).unwrap();
            assert_eq!(n, out.n_valid);
            assert!((v - out.loss).abs() < 1e-12);
        }
    }
}

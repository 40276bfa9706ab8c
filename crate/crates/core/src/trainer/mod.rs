//! Curriculum training loop over the reference model.
//!
//! Each batch's ground truth is augmented together with its image, dilated
//! with the scheduler's current syllabus, and used for one optimizer step;
//! the batch loss then goes to the scheduler.

pub mod augment;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;

use std::collections::HashMap;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use augment::{augment, AugmentConfig};
pub use loss::{loss_and_grad, LossKind, LossOutput, MaskedLoss};
pub use model::{ModelConfig, ToyModel};
pub use optim::{Adam, LrSchedule};

use crate::curriculum::DEFAULT_TARGET;
use crate::dataset::SampleRecord;
use crate::depth::{DepthMap, RgbImage, TargetSize};
use crate::dilation::{dilate_with, resize_image_nearest, resize_nearest, Imputation};
use crate::error::{Error, Result};
use crate::metrics::{MetricAccumulator, MetricReport};
use crate::scheduler::{CurriculumPlan, SchedulerState, StepEvent};

pub const DEFAULT_BATCH_SIZE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub target: TargetSize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lr_decay: f64,
    /// Steps between decays; scaled from the step budget when absent.
    pub decay_interval: Option<u64>,
    pub step_budget: u64,
    pub seed: u64,
    pub loss: LossKind,
    pub augment: AugmentConfig,
    pub imputation: Imputation,
    /// Reuse dilated targets per (sample, syllabus). Only used when
    /// augmentation is disabled, since augmented targets differ every epoch.
    pub cache_dilation: bool,
    /// After the last syllabus' patience runs out, keep training on it until
    /// the step budget is spent instead of stopping.
    pub train_to_budget: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            target: DEFAULT_TARGET,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: LrSchedule::DEFAULT_INITIAL,
            lr_decay: LrSchedule::DEFAULT_DECAY_RATE,
            decay_interval: None,
            step_budget: 1000,
            seed: 0,
            loss: LossKind::L1,
            augment: AugmentConfig::default(),
            imputation: Imputation::MaxPool,
            cache_dilation: true,
            train_to_budget: false,
        }
    }
}

impl TrainConfig {
    pub fn schedule(&self) -> Result<LrSchedule> {
        let interval = self
            .decay_interval
            .unwrap_or_else(|| LrSchedule::scaled_interval(self.step_budget));
        LrSchedule::new(self.learning_rate, self.lr_decay, interval)
    }

    pub fn optimizer(&self, model: &ToyModel) -> Result<Adam> {
        Ok(Adam::new(model.param_count(), self.schedule()?))
    }

    /// Every problem with the config, empty when it is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.batch_size == 0 {
            out.push("batch size must be at least 1".into());
        }
        if self.step_budget == 0 {
            out.push("step budget must be at least 1".into());
        }
        if let Err(e) = ToyModel::check_input_size(self.target.height, self.target.width) {
            out.push(format!("target size: {e}"));
        }
        if let Err(e) = self.schedule() {
            out.push(e.to_string());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: u64,
    pub epochs: u64,
    /// Scheduler events, one per recorded loss.
    pub events: Vec<StepEvent>,
    /// Loss of every optimizer step, including steps after the curriculum
    /// finished.
    pub loss_trace: Vec<f64>,
    pub advances: usize,
    pub curriculum_finished: bool,
    /// Batches without a single valid target pixel (skipped).
    pub empty_batches: u64,
    pub final_state: SchedulerState,
}

struct Prepared<'a> {
    id: &'a str,
    image: RgbImage,
    ground_truth: DepthMap,
}

fn prepare(dataset: &[SampleRecord], target: TargetSize) -> Result<Vec<Prepared<'_>>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    dataset
        .iter()
        .map(|s| {
            let image = s
                .image
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter(format!("sample {} has no image", s.id)))?;
            Ok(Prepared {
                id: &s.id,
                image: resize_image_nearest(image, target),
                ground_truth: resize_nearest(&s.ground_truth, target),
            })
        })
        .collect()
}

/// Runs the curriculum until the scheduler finishes or the step budget is
/// spent. `model` and `optim` are updated in place.
pub fn train(
    plan: &CurriculumPlan,
    dataset: &[SampleRecord],
    model: &mut ToyModel,
    optim: &mut Adam,
    config: &TrainConfig,
) -> Result<TrainReport> {
    plan.validate()?;
    if let Some(p) = config.problems().into_iter().next() {
        return Err(Error::InvalidParameter(p));
    }
    let samples = prepare(dataset, config.target)?;
    let loss = MaskedLoss::new(config.loss);
    let use_cache = config.cache_dilation && config.augment.is_identity();
    let mut cache: HashMap<(usize, usize), DepthMap> = HashMap::new();

    let mut state = SchedulerState::new(plan)?;
    let mut report = TrainReport {
        steps: 0,
        epochs: 0,
        events: Vec::new(),
        loss_trace: Vec::new(),
        advances: 0,
        curriculum_finished: false,
        empty_batches: 0,
        final_state: state.clone(),
    };
    let last = plan.len() - 1;

    'epochs: loop {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed ^ report.epochs.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        for batch in order.chunks(config.batch_size) {
            if report.steps >= config.step_budget || (state.finished && !config.train_to_budget) {
                break 'epochs;
            }
            let position = if state.finished { last } else { state.syllabus_index };
            let syllabus = plan.syllabuses[position].syllabus;
            let mut images = Vec::with_capacity(batch.len());
            let mut targets = Vec::with_capacity(batch.len());
            for &i in batch {
                let s = &samples[i];
                if use_cache {
                    let t = match cache.get(&(i, position)) {
                        Some(t) => t.clone(),
                        None => {
                            let t = dilate_with(&s.ground_truth, &syllabus, config.target, config.imputation)?;
                            cache.insert((i, position), t.clone());
                            t
                        }
                    };
                    images.push(s.image.clone());
                    targets.push(t);
                } else {
                    let (im, gt) = augment(&s.image, &s.ground_truth, &config.augment, config.seed, s.id, report.epochs)?;
                    targets.push(dilate_with(&gt, &syllabus, config.target, config.imputation)?);
                    images.push(im);
                }
            }
            let out = loss_and_grad(model, &images, &targets, loss)?;
            report.steps += 1;
            if !out.loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step: report.steps,
                    loss: out.loss,
                });
            }
            if out.n_valid == 0 {
                warn!("step {}: batch has no valid target pixels, skipped", report.steps);
                report.empty_batches += 1;
                continue;
            }
            optim.update(model.params_mut(), &out.grad)?;
            report.loss_trace.push(out.loss);
            if !state.finished {
                let event = state.record_loss(plan, out.loss)?;
                report.advances += usize::from(event.advanced);
                report.events.push(event);
            }
        }
        report.epochs += 1;
        if state.epoch_boundary(plan) {
            report.advances += 1;
        }
    }
    report.curriculum_finished = state.finished;
    report.final_state = state;
    Ok(report)
}

/// Metrics of `model` on a dataset. Predictions are made at `target` and
/// resized to each reference map by nearest neighbor. With `dense`, the
/// samples' dense maps are the reference instead of the sparse ground truth.
pub fn evaluate_model(model: &ToyModel, dataset: &[SampleRecord], target: TargetSize, dense: bool) -> Result<MetricReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut acc = MetricAccumulator::new();
    for s in dataset {
        let reference = if dense {
            s.dense
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter(format!("sample {} has no dense map", s.id)))?
        } else {
            &s.ground_truth
        };
        let image = s
            .image
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter(format!("sample {} has no image", s.id)))?;
        let pred = model.predict(&resize_image_nearest(image, target))?;
        let pred = crate::dilation::resize_plane(&pred, target, reference.size());
        acc.add_raw(reference, &pred, None)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curriculum::{enumerate_syllabuses, select_curriculum, Selection};
    use crate::scheduler::PatienceMode;
    use crate::synthetic::synthetic_dataset;

    fn small_run(selection: &str, budget: u64, to_budget: bool) -> (TrainReport, ToyModel) {
        let target = TargetSize { height: 16, width: 32 };
        let data = synthetic_dataset(8, 16, 32, 0.2, 5).unwrap();
        let catalog = enumerate_syllabuses(target).unwrap();
        let sel = select_curriculum(&catalog, &selection.parse::<Selection>().unwrap()).unwrap();
        let plan = CurriculumPlan::uniform(sel, 2, 0.999, PatienceMode::Consecutive).unwrap();
        let mut model = ToyModel::new(ModelConfig { seed: 1, ..Default::default() }).unwrap();
        let config = TrainConfig {
            target,
            batch_size: 4,
            learning_rate: 1e-3,
            step_budget: budget,
            seed: 2,
            train_to_budget: to_budget,
            ..Default::default()
        };
        let mut opt = config.optimizer(&model).unwrap();
        let report = train(&plan, &data, &mut model, &mut opt, &config).unwrap();
        (report, model)
    }

    #[test]
    fn baseline_plan_trains() {
        let (r, _) = small_run("none", 20, true);
        assert_eq!(r.steps, 20);
        assert_eq!(r.loss_trace.len(), 20);
        assert!(r.events.iter().all(|e| e.syllabus_index == 0));
    }

    #[test]
    fn runs_are_deterministic() {
        let (a, ma) = small_run("full", 30, false);
        let (b, mb) = small_run("full", 30, false);
        assert_eq!(a, b);
        assert_eq!(
            ma.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            mb.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn stops_when_curriculum_finishes() {
        let (r, _) = small_run("0", 10_000, false);
        assert!(r.curriculum_finished);
        assert!(r.steps < 10_000);
        assert_eq!(r.advances, 2);
        assert_eq!(r.events.len() as u64, r.steps);
    }

    #[test]
    fn config_problems_are_listed() {
        let bad = TrainConfig {
            batch_size: 0,
            step_budget: 0,
            target: TargetSize { height: 6, width: 8 },
            learning_rate: -1.0,
            ..Default::default()
        };
        assert_eq!(bad.problems().len(), 4);
        assert!(TrainConfig::default().problems().is_empty());
    }

    #[test]
    fn empty_dataset_rejected() {
        let target = TargetSize { height: 16, width: 32 };
        let catalog = enumerate_syllabuses(target).unwrap();
        let plan = CurriculumPlan::uniform(select_curriculum(&catalog, &Selection::Baseline).unwrap(), 1, 0.9, PatienceMode::Consecutive).unwrap();
        let mut model = ToyModel::new(ModelConfig::default()).unwrap();
        let config = TrainConfig { target, ..Default::default() };
        let mut opt = config.optimizer(&model).unwrap();
        assert!(matches!(train(&plan, &[], &mut model, &mut opt, &config), Err(Error::EmptyDataset)));
    }

    #[test]
    fn all_invalid_batches_are_skipped() {
        let target = TargetSize { height: 8, width: 8 };
        let mut data = synthetic_dataset(2, 8, 8, 0.5, 1).unwrap();
        for s in &mut data {
            s.ground_truth = DepthMap::zeros(8, 8).unwrap();
        }
        let catalog = enumerate_syllabuses(target).unwrap();
        let plan = CurriculumPlan::uniform(select_curriculum(&catalog, &Selection::Baseline).unwrap(), 1, 0.9, PatienceMode::Consecutive).unwrap();
        let mut model = ToyModel::new(ModelConfig::default()).unwrap();
        let before = model.clone();
        let config = TrainConfig { target, batch_size: 2, step_budget: 3, ..Default::default() };
        let mut opt = config.optimizer(&model).unwrap();
        let r = train(&plan, &data, &mut model, &mut opt, &config).unwrap();
        assert_eq!((r.steps, r.empty_batches), (3, 3));
        assert!(r.events.is_empty());
        assert_eq!(model, before);
    }
}

//! Syllabus scheduler: stays on a syllabus until the training loss fails to
//! drop by the minimum-decrease factor `lambda` for `P_i` steps, then moves to
//! the next syllabus.
//!
//! A step violates the criterion when `loss > lambda * previous_loss`, where
//! both losses were recorded under the current syllabus. The first loss after
//! an advance is never compared with the previous syllabus' losses.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curriculum::{Catalog, CatalogEntry, SyllabusSpec};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.999;
pub const DEFAULT_PATIENCE: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatienceMode {
    /// A non-violating step resets the counter.
    #[default]
    Consecutive,
    /// Violations accumulate for the whole syllabus.
    Cumulative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumPlan {
    pub syllabuses: Vec<CatalogEntry>,
    pub patience: Vec<u32>,
    pub lambda: f64,
    pub mode: PatienceMode,
    /// Move to the next syllabus when a full pass over the data ends.
    pub advance_on_epoch_end: bool,
}

impl CurriculumPlan {
    pub fn new(syllabuses: Vec<CatalogEntry>, patience: Vec<u32>, lambda: f64, mode: PatienceMode) -> Result<Self> {
        let plan = Self {
            syllabuses,
            patience,
            lambda,
            mode,
            advance_on_epoch_end: false,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Same patience for every syllabus.
    pub fn uniform(syllabuses: Vec<CatalogEntry>, patience: u32, lambda: f64, mode: PatienceMode) -> Result<Self> {
        let n = syllabuses.len();
        Self::new(syllabuses, vec![patience; n], lambda, mode)
    }

    pub fn validate(&self) -> Result<()> {
        if self.syllabuses.is_empty() {
            return Err(Error::InvalidPlan("no syllabuses".into()));
        }
        if self.patience.len() != self.syllabuses.len() {
            return Err(Error::InvalidPlan(format!(
                "{} patience values for {} syllabuses",
                self.patience.len(),
                self.syllabuses.len()
            )));
        }
        if let Some(i) = self.patience.iter().position(|&p| p == 0) {
            return Err(Error::InvalidPlan(format!("patience for syllabus {i} is 0")));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidPlan(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.syllabuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllabuses.is_empty()
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            lambda: self.lambda,
            mode: self.mode,
            syllabuses: self.syllabuses.iter().map(|e| e.index).collect(),
            patience: self.patience.clone(),
            advance_on_epoch_end: self.advance_on_epoch_end,
        }
    }

    pub fn from_file(file: &PlanFile, catalog: &Catalog) -> Result<Self> {
        let syllabuses = file
            .syllabuses
            .iter()
            .map(|&i| catalog.get(i).cloned())
            .collect::<Result<Vec<_>>>()?;
        let mut plan = Self::new(syllabuses, file.patience.clone(), file.lambda, file.mode)?;
        plan.advance_on_epoch_end = file.advance_on_epoch_end;
        Ok(plan)
    }
}

/// Serialized plan: syllabuses are catalog indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub lambda: f64,
    #[serde(default)]
    pub mode: PatienceMode,
    pub syllabuses: Vec<usize>,
    pub patience: Vec<u32>,
    #[serde(default)]
    pub advance_on_epoch_end: bool,
}

impl PlanFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }
}

/// One `record_loss` call as logged to the event CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepEvent {
    pub step: u64,
    pub loss: f64,
    /// Syllabus the loss was recorded under.
    pub syllabus_index: usize,
    /// Counter after this step, before any reset caused by advancing.
    pub patience_counter: u32,
    pub advanced: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub syllabus_index: usize,
    pub patience_counter: u32,
    pub train_history: Vec<f64>,
    /// Position in `train_history` where the current syllabus started.
    pub window_start: usize,
    pub finished: bool,
}

impl SchedulerState {
    pub fn new(plan: &CurriculumPlan) -> Result<Self> {
        plan.validate()?;
        Ok(Self {
            syllabus_index: 0,
            patience_counter: 0,
            train_history: Vec::new(),
            window_start: 0,
            finished: false,
        })
    }

    pub fn current_syllabus<'p>(&self, plan: &'p CurriculumPlan) -> Result<&'p SyllabusSpec> {
        if self.finished {
            return Err(Error::SchedulerFinished);
        }
        plan.syllabuses
            .get(self.syllabus_index)
            .map(|e| &e.syllabus)
            .ok_or(Error::SchedulerFinished)
    }

    pub fn current_entry<'p>(&self, plan: &'p CurriculumPlan) -> Result<&'p CatalogEntry> {
        if self.finished {
            return Err(Error::SchedulerFinished);
        }
        plan.syllabuses.get(self.syllabus_index).ok_or(Error::SchedulerFinished)
    }

    fn advance(&mut self, plan: &CurriculumPlan) {
        self.patience_counter = 0;
        self.window_start = self.train_history.len();
        if self.syllabus_index + 1 < plan.len() {
            self.syllabus_index += 1;
        } else {
            self.finished = true;
        }
    }

    pub fn record_loss(&mut self, plan: &CurriculumPlan, loss: f64) -> Result<StepEvent> {
        if self.finished {
            return Err(Error::SchedulerFinished);
        }
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::InvalidLoss(loss));
        }
        self.train_history.push(loss);
        let step = self.train_history.len() as u64;
        let recorded_under = self.syllabus_index;
        let window = &self.train_history[self.window_start..];
        if let [.., previous, last] = window {
            if *last > plan.lambda * *previous {
                self.patience_counter += 1;
            } else if plan.mode == PatienceMode::Consecutive {
                self.patience_counter = 0;
            }
        }
        let counter = self.patience_counter;
        let advanced = counter >= plan.patience[self.syllabus_index];
        if advanced {
            self.advance(plan);
        }
        Ok(StepEvent {
            step,
            loss,
            syllabus_index: recorded_under,
            patience_counter: counter,
            advanced,
        })
    }

    /// Called when a pass over the dataset ends. Advances only when the plan
    /// asks for it; returns whether it did.
    pub fn epoch_boundary(&mut self, plan: &CurriculumPlan) -> bool {
        if !plan.advance_on_epoch_end || self.finished {
            return false;
        }
        self.advance(plan);
        true
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes `step,loss,syllabus_index,patience_counter,advanced`.
pub fn write_event_csv<W: Write>(events: &[StepEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    w.flush().map_err(|e| Error::io("<event csv>", e))?;
    Ok(())
}

pub fn read_event_csv<R: std::io::Read>(input: R) -> Result<Vec<StepEvent>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

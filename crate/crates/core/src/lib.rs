//! Curriculum learning over dilated sparse depth ground truth.
//!
//! Sparse depth maps are dilated by repeated max pooling and resized back to
//! the training resolution. A catalog of such dilations ("syllabuses") is
//! ordered from coarse to fine, and a patience-based scheduler walks a model
//! through them while training.

pub mod curriculum;
pub mod dataset;
pub mod depth;
pub mod dilation;
pub mod error;
pub mod io;
pub mod metrics;
pub mod scheduler;
pub mod synthetic;
pub mod trainer;

pub use curriculum::{
    canonical_catalog_256x512, density_profile, enumerate_syllabuses, select_curriculum, Catalog, CatalogEntry,
    CurriculumName, Membership, Selection, SyllabusSpec, DEFAULT_TARGET,
};
pub use dataset::{load_dataset, save_dataset, SampleRecord};
pub use depth::{DepthMap, RgbImage, TargetSize, MAX_DEPTH, MIN_DEPTH};
pub use dilation::{dilate, dilate_with, max_pool2d, resize_nearest, Imputation, PoolParams};
pub use error::{Error, Result};
pub use metrics::{evaluate, Crop, MetricAccumulator, MetricReport};
pub use scheduler::{CurriculumPlan, PatienceMode, PlanFile, SchedulerState, StepEvent};
pub use synthetic::{generate_synthetic, synthetic_dataset, DepthModel, SyntheticSpec};
pub use trainer::{train, TrainConfig, TrainReport};

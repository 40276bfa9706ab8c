use std::fs;
use std::path::{Path, PathBuf};

use depthcurr::io::{load_depth_png, save_depth_png};
use depthcurr::metrics::write_report_csv;
use depthcurr::scheduler::{write_event_csv, DEFAULT_LAMBDA, DEFAULT_PATIENCE};
use depthcurr::trainer::{AugmentConfig, LossKind, ModelConfig, ToyModel};
use depthcurr::{
    canonical_catalog_256x512, dilate, enumerate_syllabuses, load_dataset, resize_nearest, save_dataset,
    select_curriculum, synthetic_dataset, train as run_training, Catalog, Crop, CurriculumPlan, DepthMap, Error,
    Imputation, MetricAccumulator, PatienceMode, PlanFile, SampleRecord, Selection, TargetSize, TrainConfig,
};
use serde::Serialize;

use crate::{
    CatalogArgs, DensityArgs, EvalArgs, FormatArg, ImputationArg, LossArg, ModeArg, PredictArgs, SynthArgs, TrainArgs,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    messages: Vec<String>,
}

impl CliError {
    pub fn config(messages: Vec<String>) -> Self {
        Self { code: EXIT_CONFIG, messages }
    }

    pub fn data(e: impl ToString) -> Self {
        Self {
            code: EXIT_DATA,
            messages: vec![e.to_string()],
        }
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::InvalidTarget { .. }
            | Error::IndexOutOfRange { .. }
            | Error::EmptySelection
            | Error::InvalidPlan(_)
            | Error::DegeneratePool { .. } => EXIT_CONFIG,
            _ => EXIT_DATA,
        };
        Self {
            code,
            messages: vec![e.to_string()],
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::data(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::data(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn catalog(a: CatalogArgs) -> CliResult {
    let catalog = if a.canonical {
        canonical_catalog_256x512()
    } else {
        enumerate_syllabuses(a.target)?
    };
    if a.verify {
        let mut problems = Vec::new();
        let enumerated = enumerate_syllabuses(TargetSize::new(256, 512)?)?;
        let table = canonical_catalog_256x512();
        if enumerated.pooled_sizes() != table.pooled_sizes() {
            problems.push(format!(
                "enumerated 256x512 catalog has {} entries and differs from the syllabus table",
                enumerated.len()
            ));
        }
        if let Err(rows) = catalog.validate() {
            problems.extend(rows);
        }
        if !problems.is_empty() {
            return Err(CliError {
                code: EXIT_VERIFY,
                messages: problems,
            });
        }
        eprintln!("verified: {} entries", catalog.len());
    }
    let mut text = catalog.to_json()?;
    text.push('\n');
    write_output(a.out.as_deref(), &text)
}

pub fn synth(a: SynthArgs) -> CliResult {
    let data = synthetic_dataset(a.count, a.size.height, a.size.width, a.density, a.seed)?;
    save_dataset(&a.out, &data).map_err(CliError::data)?;
    eprintln!("wrote {} samples to {}", data.len(), a.out.display());
    Ok(())
}

fn load(dir: &Path) -> CliResult<Vec<SampleRecord>> {
    let data = load_dataset(dir).map_err(CliError::data)?;
    if data.is_empty() {
        return Err(CliError::data(Error::EmptyDataset));
    }
    Ok(data)
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRow {
    pub index: usize,
    pub label: String,
    pub mean_density: f64,
    pub std_density: f64,
}

pub fn density_rows(data: &[SampleRecord], catalog: &Catalog) -> CliResult<Vec<DensityRow>> {
    let target = catalog.target;
    let maps: Vec<DepthMap> = data.iter().map(|s| resize_nearest(&s.ground_truth, target)).collect();
    catalog
        .entries
        .iter()
        .map(|e| {
            let d: Vec<f64> = maps
                .iter()
                .map(|m| dilate(m, &e.syllabus, target).map(|x| x.density()))
                .collect::<Result<_, _>>()?;
            let n = d.len() as f64;
            let mean = d.iter().sum::<f64>() / n;
            let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            Ok(DensityRow {
                index: e.index,
                label: e.syllabus.label(),
                mean_density: mean,
                std_density: var.sqrt(),
            })
        })
        .collect()
}

pub fn density(a: DensityArgs) -> CliResult {
    let catalog = match &a.catalog {
        Some(p) => Catalog::load(p)?,
        None => enumerate_syllabuses(a.target)?,
    };
    let data = load(&a.data)?;
    let rows = density_rows(&data, &catalog)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(CliError::data)?;
    }
    let text = String::from_utf8(w.into_inner().map_err(CliError::data)?).expect("csv output is utf-8");
    write_output(a.out.as_deref(), &text)?;
    if let Some(p) = &a.svg {
        let bars: Vec<(String, f64)> = rows.iter().map(|r| (r.label.clone(), r.mean_density)).collect();
        fs::write(p, crate::svg::bar_chart(&bars, "mean density")).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn parse_widths(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts[..] {
        [a, b] => match (a.trim().parse(), b.trim().parse()) {
            (Ok(a), Ok(b)) if a > 0 && b > 0 => Ok((a, b)),
            _ => Err(format!("--widths {s:?}: expected two positive integers")),
        },
        _ => Err(format!("--widths {s:?}: expected C1,C2")),
    }
}

fn parse_patience(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().ok().filter(|&p| p >= 1))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| format!("--patience {s:?}: expected positive integers"))
}

/// Builds the plan and training config, reporting every problem at once.
fn train_setup(a: &TrainArgs, problems: &mut Vec<String>) -> Option<(CurriculumPlan, TrainConfig, ModelConfig)> {
    if a.strict && a.plan.is_none() {
        if a.lambda.is_none() {
            problems.push("--lambda is required with --strict".into());
        }
        if a.patience.is_none() {
            problems.push("--patience is required with --strict".into());
        }
    }
    if a.plan.is_some() && (a.lambda.is_some() || a.patience.is_some() || a.mode.is_some()) {
        problems.push("--lambda, --patience and --mode cannot be combined with --plan".into());
    }
    if !a.data.is_dir() {
        problems.push(format!("--data {}: not a directory", a.data.display()));
    }
    let widths = parse_widths(&a.widths).map_err(|e| problems.push(e)).ok();

    let catalog = enumerate_syllabuses(a.target).map_err(|e| problems.push(format!("--target: {e}"))).ok();
    let plan = catalog.and_then(|catalog| {
        if let Some(path) = &a.plan {
            let file = PlanFile::load(path).map_err(|e| problems.push(format!("--plan: {e}"))).ok()?;
            return CurriculumPlan::from_file(&file, &catalog).map_err(|e| problems.push(format!("--plan: {e}"))).ok();
        }
        let selection: Selection = a
            .curriculum
            .as_deref()
            .unwrap_or("A")
            .parse()
            .map_err(|e: Error| problems.push(format!("--curriculum: {e}")))
            .ok()?;
        let syllabuses = select_curriculum(&catalog, &selection).map_err(|e| problems.push(format!("--curriculum: {e}"))).ok()?;
        let patience = match &a.patience {
            None => vec![DEFAULT_PATIENCE; syllabuses.len()],
            Some(s) => {
                let p = parse_patience(s).map_err(|e| problems.push(e)).ok()?;
                match p[..] {
                    [one] => vec![one; syllabuses.len()],
                    _ => p,
                }
            }
        };
        let mode = match a.mode {
            Some(ModeArg::Cumulative) => PatienceMode::Cumulative,
            _ => PatienceMode::Consecutive,
        };
        let mut plan = CurriculumPlan::new(syllabuses, patience, a.lambda.unwrap_or(DEFAULT_LAMBDA), mode)
            .map_err(|e| problems.push(e.to_string()))
            .ok()?;
        plan.advance_on_epoch_end = a.advance_on_epoch_end;
        Some(plan)
    });

    let config = TrainConfig {
        target: a.target,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        lr_decay: a.lr_decay,
        decay_interval: a.decay_interval,
        step_budget: a.steps,
        seed: a.seed,
        loss: match a.loss {
            LossArg::L1 => LossKind::L1,
            LossArg::L2 => LossKind::L2,
        },
        augment: if a.no_augment { AugmentConfig::none() } else { AugmentConfig::default() },
        imputation: match a.imputation {
            ImputationArg::Max => Imputation::MaxPool,
            ImputationArg::Mean => Imputation::MeanPool,
            ImputationArg::Gaussian => Imputation::Gaussian,
        },
        cache_dilation: true,
        train_to_budget: a.train_to_budget,
    };
    problems.extend(config.problems());
    let (enc1, enc2) = widths?;
    Some((
        plan?,
        config,
        ModelConfig {
            enc1,
            enc2,
            seed: a.seed,
            zero_output_layer: false,
        },
    ))
}

#[derive(Debug, Serialize)]
struct TrainSummary {
    steps: u64,
    epochs: u64,
    advances: usize,
    curriculum_finished: bool,
    final_syllabus_index: usize,
    empty_batches: u64,
    final_loss: Option<f64>,
    param_count: usize,
    config: TrainConfig,
}

pub fn train(a: TrainArgs) -> CliResult {
    let mut problems = Vec::new();
    let setup = train_setup(&a, &mut problems);
    let (plan, config, model_config) = match setup {
        Some(s) if problems.is_empty() => s,
        _ => return Err(CliError::config(problems)),
    };
    let data = load(&a.data)?;
    let mut model = ToyModel::new(model_config)?;
    let mut opt = config.optimizer(&model)?;
    let report = run_training(&plan, &data, &mut model, &mut opt, &config).map_err(CliError::data)?;

    create_dir(&a.out)?;
    let path = |name: &str| -> PathBuf { a.out.join(name) };
    model.save(path("model.json")).map_err(CliError::data)?;
    plan.to_file().save(path("plan.json")).map_err(CliError::data)?;
    report.final_state.save(path("state.json")).map_err(CliError::data)?;
    let events = fs::File::create(path("events.csv")).map_err(CliError::data)?;
    write_event_csv(&report.events, events).map_err(CliError::data)?;
    let summary = TrainSummary {
        steps: report.steps,
        epochs: report.epochs,
        advances: report.advances,
        curriculum_finished: report.curriculum_finished,
        final_syllabus_index: report.final_state.syllabus_index,
        empty_batches: report.empty_batches,
        final_loss: report.loss_trace.last().copied(),
        param_count: model.param_count(),
        config,
    };
    write_output(Some(&path("summary.json")), &to_json(&summary))?;
    eprintln!(
        "trained {} steps, {} syllabus advances; outputs in {}",
        report.steps,
        report.advances,
        a.out.display()
    );
    Ok(())
}

fn predict_sample(model: &ToyModel, s: &SampleRecord, target: TargetSize) -> CliResult<DepthMap> {
    let image = s
        .image
        .as_ref()
        .ok_or_else(|| CliError::data(format!("sample {} has no image", s.id)))?;
    let input = depthcurr::dilation::resize_image_nearest(image, target);
    let pred = DepthMap::new(target.height, target.width, model.predict(&input)?)?;
    Ok(resize_nearest(&pred, s.ground_truth.size()))
}

pub fn predict(a: PredictArgs) -> CliResult {
    let model = ToyModel::load(&a.model).map_err(CliError::data)?;
    ToyModel::check_input_size(a.target.height, a.target.width)?;
    let data = load(&a.data)?;
    create_dir(&a.out)?;
    for s in &data {
        let pred = predict_sample(&model, s, a.target)?;
        save_depth_png(&pred, a.out.join(format!("{}.png", s.id))).map_err(CliError::data)?;
    }
    eprintln!("wrote {} predictions to {}", data.len(), a.out.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> CliResult {
    let model = match &a.model {
        Some(p) => {
            ToyModel::check_input_size(a.target.height, a.target.width)?;
            Some(ToyModel::load(p).map_err(CliError::data)?)
        }
        None => None,
    };
    let data = load(&a.data)?;
    let mut acc = MetricAccumulator::new();
    for s in &data {
        let reference = if a.dense {
            s.dense
                .as_ref()
                .ok_or_else(|| CliError::data(format!("sample {} has no dense map", s.id)))?
        } else {
            &s.ground_truth
        };
        let pred = match (&model, &a.pred) {
            (Some(m), _) => predict_sample(m, s, a.target)?,
            (None, Some(dir)) => load_depth_png(dir.join(format!("{}.png", s.id))).map_err(CliError::data)?,
            (None, None) => unreachable!("clap requires --pred or --model"),
        };
        // Predictions are brought to the ground-truth resolution.
        let pred = resize_nearest(&pred, reference.size());
        let crop = a.garg_crop.then(|| Crop::garg(reference.height(), reference.width()));
        acc.add(reference, &pred, crop).map_err(CliError::data)?;
    }
    let report = acc.finish().map_err(CliError::data)?;
    let text = match a.format {
        FormatArg::Json => to_json(&report),
        FormatArg::Csv => {
            let mut buf = Vec::new();
            write_report_csv(&[("all".to_string(), report)], &mut buf).map_err(CliError::data)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
    };
    write_output(a.out.as_deref(), &text)
}

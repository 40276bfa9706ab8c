//! Acceptance gate: one PASS/FAIL line per primary criterion.
//!
//! Exits 0 after printing the report. With `ACCEPTANCE_STRICT=1` any FAIL
//! makes the exit status non-zero.

mod common;

use std::time::{Duration, Instant};

use common::*;
use depthcurr::dilation::mean_pool2d;
use depthcurr::trainer::{evaluate_model, loss_and_grad, LossKind, MaskedLoss, ModelConfig, ToyModel};
use depthcurr::{
    canonical_catalog_256x512, density_profile, enumerate_syllabuses, evaluate, generate_synthetic, max_pool2d,
    resize_nearest, select_curriculum, synthetic_dataset, train, CurriculumPlan, DepthMap, DepthModel, Membership,
    PatienceMode, PoolParams, SchedulerState, Selection, SyntheticSpec, TargetSize, TrainConfig,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn table_reproduction() -> Outcome {
    let t = Instant::now();
    let c = enumerate_syllabuses(TargetSize::new(256, 512).unwrap()).map_err(|e| e.to_string())?;
    let got: Vec<(usize, usize)> = c.pooled_sizes().iter().map(|s| (s.height, s.width)).collect();
    check(got.len() == 31, format!("{} entries", got.len()))?;
    for (i, (g, w)) in got.iter().zip(TABLE_SIZES).enumerate() {
        check(*g == w, format!("row {i}: {g:?} vs {w:?}"))?;
    }
    let canonical = canonical_catalog_256x512();
    for e in &canonical.entries[..30] {
        let k = e.syllabus.kernel.unwrap();
        let (mut h, mut w) = (256, 512);
        for _ in 0..e.syllabus.iterations {
            (h, w) = (h / k, w / k);
        }
        check((h, w) == TABLE_SIZES[e.index], format!("canonical row {} recomputes to {h}x{w}", e.index))?;
    }
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok(format!("31/31 rows, {:.1?}", t.elapsed()))
}

fn membership_counts() -> Outcome {
    for c in [canonical_catalog_256x512(), enumerate_syllabuses(TargetSize::new(256, 512).unwrap()).unwrap()] {
        let a = c.members_of(Membership::A);
        let b = c.members_of(Membership::B);
        let cc = c.members_of(Membership::C);
        check(a.len() == 11 && b.len() == 16, format!("|A|={} |B|={}", a.len(), b.len()))?;
        check(a == TABLE_A && b == TABLE_B && cc == TABLE_C, "membership columns differ")?;
    }
    Ok("|A|=11 |B|=16 |C|=10, columns exact".into())
}

fn density_behavior() -> Outcome {
    let t = Instant::now();
    let target = TargetSize::new(256, 512).unwrap();
    let c = enumerate_syllabuses(target).unwrap();
    for seed in 0..20u64 {
        let spec = SyntheticSpec {
            height: 256,
            width: 512,
            density: 0.25,
            scene_seed: seed,
            depth_model: DepthModel::ALL[seed as usize % DepthModel::ALL.len()],
        };
        let gt = generate_synthetic(&spec).map_err(|e| e.to_string())?.ground_truth;
        let p = density_profile(&gt, &c, target).map_err(|e| e.to_string())?;
        for w in p.windows(2) {
            check(w[1].density <= w[0].density, format!("seed {seed}: density rises at index {}", w[1].index))?;
        }
        let raw = oracle_density(gt.data());
        check((p[30].density - raw).abs() <= 1e-12, format!("seed {seed}: identity {} vs raw {raw}", p[30].density))?;
    }
    within(t.elapsed(), Duration::from_secs(30))?;
    Ok(format!("20 seeds monotone, {:.1?}", t.elapsed()))
}

fn pooling_oracles() -> Outcome {
    let mut r = rng(2024);
    for case in 0..200 {
        let (h, w) = (r.random_range(1..=32), r.random_range(1..=32));
        let density = r.random_range(0.0..=1.0);
        let map = dyadic_raster(&mut r, h, w, density);
        let (kh, kw) = (r.random_range(1..=h), r.random_range(1..=w));
        let params = PoolParams::new(kh, kw).unwrap();
        check(max_pool2d(&map, params).unwrap().data() == oracle_max_pool(map.data(), h, w, kh, kw).0, format!("max pool case {case}"))?;
        check(mean_pool2d(&map, params).unwrap().data() == oracle_mean_pool(map.data(), h, w, kh, kw).0, format!("mean pool case {case}"))?;
        let size = TargetSize::new(r.random_range(1..=64), r.random_range(1..=64)).unwrap();
        check(
            resize_nearest(&map, size).data() == oracle_resize(map.data(), h, w, size.height, size.width),
            format!("resize case {case}"),
        )?;
    }
    Ok("200 rasters exact".into())
}

fn plan(n: usize, patience: Vec<u32>, lambda: f64, mode: PatienceMode) -> CurriculumPlan {
    let c = canonical_catalog_256x512();
    let sel = select_curriculum(&c, &Selection::Indices((31 - n..31).collect())).unwrap();
    CurriculumPlan::new(sel, patience, lambda, mode).unwrap()
}

fn run_scheduler(p: &CurriculumPlan, losses: &[f64]) -> (SchedulerState, Vec<(usize, u32, bool)>) {
    let mut s = SchedulerState::new(p).unwrap();
    let mut trace = Vec::new();
    for &l in losses {
        if s.finished {
            break;
        }
        let e = s.record_loss(p, l).unwrap();
        trace.push((e.syllabus_index, e.patience_counter, e.advanced));
    }
    (s, trace)
}

fn scheduler_conformance() -> Outcome {
    let p = plan(3, vec![2; 3], 0.99, PatienceMode::Consecutive);
    let (_, trace) = run_scheduler(&p, &[1.0, 0.95, 0.949, 0.9489]);
    check(
        trace.iter().map(|t| t.2).collect::<Vec<_>>() == [false, false, false, true],
        format!("hand trace gave {trace:?}"),
    )?;

    let mut r = rng(510);
    let sequences = 1000;
    let mut zero_lambda_advanced = 0;
    for _ in 0..sequences {
        let n = r.random_range(1..=6);
        let patience: Vec<u32> = (0..n).map(|_| r.random_range(1..=6)).collect();
        let lambda = r.random_range(0.0..=1.0);
        let mode = if r.random_bool(0.5) { PatienceMode::Cumulative } else { PatienceMode::Consecutive };
        let losses: Vec<f64> = (0..r.random_range(0..120)).map(|_| r.random_range(0.0..10.0)).collect();
        let p = plan(n, patience.clone(), lambda, mode);
        let (s, trace) = run_scheduler(&p, &losses);
        let mut last = 0;
        for &(i, _, _) in &trace {
            check(i >= last, "syllabus index decreased")?;
            last = i;
        }
        check(run_scheduler(&p, &losses) == (s.clone(), trace.clone()), "replay differs")?;
        check(
            trace == oracle_schedule(&losses, lambda, &patience, mode == PatienceMode::Cumulative),
            "trace differs from the reference rule",
        )?;

        // lambda = 0 with strictly decreasing positive losses
        let zero = plan(n, patience, 0.0, PatienceMode::Consecutive);
        let mut v = r.random_range(1.0..100.0);
        let falling: Vec<f64> = (0..50)
            .map(|_| {
                v *= r.random_range(0.5..0.999);
                v
            })
            .collect();
        let (s0, _) = run_scheduler(&zero, &falling);
        if s0.syllabus_index > 0 || s0.finished {
            zero_lambda_advanced += 1;
        }
    }
    check(
        zero_lambda_advanced == 0,
        format!(
            "hand trace and {sequences} randomized sequences conform, but lambda=0 advanced on decreasing losses in \
             {zero_lambda_advanced}/{sequences} sequences: `loss > 0 * previous` holds for every positive loss"
        ),
    )?;
    Ok(format!("hand trace + {sequences} sequences"))
}

fn gradient_correctness() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        for kind in [LossKind::L1, LossKind::L2] {
            worst = worst.max(max_gradient_error(seed, kind));
        }
        let (model, images, targets) = gradient_fixture(seed, 0.3);
        let mut r = rng(seed);
        let perturbed: Vec<DepthMap> = targets
            .iter()
            .map(|t| {
                let data = t.data().iter().map(|&v| if v == 0.0 { r.random_range(0.0..1e-3) } else { v }).collect();
                DepthMap::new(t.height(), t.width(), data).unwrap()
            })
            .collect();
        let a = loss_and_grad(&model, &images, &targets, MaskedLoss::default()).unwrap();
        let b = loss_and_grad(&model, &images, &perturbed, MaskedLoss::default()).unwrap();
        check(a.grad == b.grad, format!("seed {seed}: invalid-pixel perturbation changed the gradient"))?;
    }
    check(worst <= 1e-4, format!("max relative error {worst:e}"))?;
    Ok(format!("20 seeds, max rel err {worst:.1e}"))
}

fn metric_oracle() -> Outcome {
    for seed in 0..100 {
        let mut r = rng(seed);
        let gt = dyadic_raster(&mut r, 16, 16, 0.4);
        let pred = DepthMap::new(16, 16, gt.data().iter().map(|&d| if d > 0.0 { d * r.random_range(0.6..1.6) } else { r.random_range(0.0..100.0) }).collect()).unwrap();
        let got = evaluate(&gt, &pred, None).map_err(|e| e.to_string())?;
        let want = oracle_metrics(gt.data(), pred.data()).unwrap();
        for (k, (g, w)) in got.values().iter().zip(want).enumerate() {
            check(rel_close(*g, w, 1e-9), format!("seed {seed} column {k}: {g} vs {w}"))?;
        }
        let id = evaluate(&gt, &gt, None).unwrap();
        check(id.values() == [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0], format!("identity prediction gave {:?}", id.values()))?;
    }
    Ok("100 fixtures within 1e-9".into())
}

// Fixed smoke configuration; both runs share everything but the plan.
const SMOKE_SEED: u64 = 11;
const SMOKE_STEPS: u64 = 2000;
const SMOKE_PATIENCE: u32 = 20;
const SMOKE_LAMBDA: f64 = 0.999;
const SMOKE_BATCH: usize = 4;
const SMOKE_LR: f64 = 1e-3;
const HELD_OUT_SEED: u64 = 1011;

fn smoke_run(selection: Selection, data: &[depthcurr::SampleRecord]) -> Result<(depthcurr::TrainReport, ToyModel), String> {
    let target = TargetSize::new(64, 128).unwrap();
    let catalog = enumerate_syllabuses(target).map_err(|e| e.to_string())?;
    let sel = select_curriculum(&catalog, &selection).map_err(|e| e.to_string())?;
    let plan = CurriculumPlan::uniform(sel, SMOKE_PATIENCE, SMOKE_LAMBDA, PatienceMode::Cumulative).map_err(|e| e.to_string())?;
    let mut model = ToyModel::new(ModelConfig { seed: SMOKE_SEED, ..Default::default() }).map_err(|e| e.to_string())?;
    let config = TrainConfig {
        target,
        batch_size: SMOKE_BATCH,
        learning_rate: SMOKE_LR,
        step_budget: SMOKE_STEPS,
        seed: SMOKE_SEED,
        augment: depthcurr::trainer::AugmentConfig::none(),
        train_to_budget: true,
        ..Default::default()
    };
    let mut opt = config.optimizer(&model).map_err(|e| e.to_string())?;
    let report = train(&plan, data, &mut model, &mut opt, &config).map_err(|e| e.to_string())?;
    Ok((report, model))
}

fn end_to_end_smoke() -> Outcome {
    let target = TargetSize::new(64, 128).unwrap();
    let train_set = synthetic_dataset(64, 64, 128, 0.10, SMOKE_SEED).map_err(|e| e.to_string())?;
    let held_out = synthetic_dataset(32, 64, 128, 0.10, HELD_OUT_SEED).map_err(|e| e.to_string())?;

    let t = Instant::now();
    let (report, model) = smoke_run(Selection::Named(depthcurr::CurriculumName::A), &train_set)?;
    let curriculum_time = t.elapsed();
    let (base_report, base_model) = smoke_run(Selection::Baseline, &train_set)?;

    check(report.steps == SMOKE_STEPS && base_report.steps == SMOKE_STEPS, "a run stopped before the step budget")?;
    within(curriculum_time, Duration::from_secs(300))?;
    check(report.advances >= 1, "no syllabus advance")?;
    let dense = |m: &ToyModel, set| evaluate_model(m, set, target, true).map(|r| r.rms).map_err(|e| e.to_string());
    let (rms, base_rms) = (dense(&model, &train_set)?, dense(&base_model, &train_set)?);
    let (held, base_held) = (dense(&model, &held_out)?, dense(&base_model, &held_out)?);
    let detail = format!(
        "{} advances, dense RMS curriculum {rms:.4} vs baseline {base_rms:.4} (held-out {held:.4} vs {base_held:.4}), run {curriculum_time:.1?}",
        report.advances
    );
    check(rms <= base_rms, detail.clone())?;
    Ok(detail)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("syllabus table reproduction", table_reproduction),
        ("curriculum membership counts", membership_counts),
        ("density behavior", density_behavior),
        ("pooling/resize oracles", pooling_oracles),
        ("scheduler conformance", scheduler_conformance),
        ("gradient correctness", gradient_correctness),
        ("metric oracle equivalence", metric_oracle),
        ("end-to-end smoke", end_to_end_smoke),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match f() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

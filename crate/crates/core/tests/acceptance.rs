//! One PASS/FAIL line per acceptance criterion.
//!
//! Criterion 7 trains on the real Cornell set and only runs when
//! `GRASP_DATA_ROOT` points at it; otherwise it is reported as SKIP.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use pixgrasp::cli::DATA_ROOT_ENV;
use pixgrasp::datasets::{
    load_cornell, load_jacquard, rasterize_labels, write_cornell, write_jacquard, DatasetKind, GraspSample, Modality,
    WIDTH_SCALE,
};
use pixgrasp::evaluation::{decode_grasp_maps, extract_grasps, measure_timing, write_reports, EvalOptions, EvaluationReport};
use pixgrasp::grasp::{angle_offset, grasp_from_rect, rect_iou, GraspImage, GraspRectangle};
use pixgrasp::network::{build_network, count_parameters, NetworkConfig};
use pixgrasp::sim::{run_episode, select_tracked_grasp, synthetic_dataset, OraclePredictor, Scene, SceneObject, SimConfig};
use pixgrasp::training::{
    batch_loss, gradient_check, overfit_probe, smooth_l1, Differentiable, GradCheckOptions, ProbeConfig, ToyNetwork,
    TrainConfig,
};
use pixgrasp_nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const PROBE_SIZE: usize = 224;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parameter_budget() -> Outcome {
    let n = count_parameters(&build_network(NetworkConfig::default(), 0).map_err(err)?);
    ensure((1_300_000..=1_450_000).contains(&n), || format!("{n} parameters"))?;
    Ok(format!("{n} parameters"))
}

fn shape_contract() -> Outcome {
    for modality in [Modality::Depth, Modality::Rgb, Modality::RgbD] {
        let net = build_network(NetworkConfig::default().with_input_channels(modality.channels()), 1).map_err(err)?;
        for size in [224, 304, 320, 480] {
            let y = net.infer(&Tensor::full([1, modality.channels(), size, size], 0.25f32)).map_err(err)?;
            ensure(y.shape() == [1, 4, size, size], || format!("{modality} at {size}: {:?}", y.shape()))?;
        }
    }
    Ok("3 modalities x 4 sizes".into())
}

fn loss_correctness() -> Outcome {
    let cases = [(0.7, 0.7, 0.0), (0.5, 0.0, 0.125), (2.0, 0.0, 1.5)];
    for (x, y, want) in cases {
        let got = smooth_l1(&[x], &[y], 1.0).map_err(err)?;
        ensure((got - want).abs() < 1e-9, || format!("smooth_l1({x}, {y}) = {got}, want {want}"))?;
    }
    let gt = Tensor::full([1, 4, 6, 6], 0.2f64);
    let mut pred = gt.clone();
    pred.data_mut()[..36].iter_mut().for_each(|v| *v += 0.5);
    let total = batch_loss(&pred, &gt, 1.0).map_err(err)?.0.total;
    ensure((total - 0.125).abs() < 1e-9, || format!("quality-only offset gives {total}"))?;

    let mut toy = ToyNetwork::new(2, 4, 6, 1.0, 7);
    let branches = toy.objective(false).map_err(err)?.branches;
    let quadratic = branches.iter().filter(|&&b| b).count();
    ensure(quadratic > 0 && quadratic < branches.len(), || "toy targets cover only one branch".into())?;
    let r = gradient_check(&mut toy, &GradCheckOptions { samples_per_param: 40, ..Default::default() }).map_err(err)?;
    ensure(r.max_relative_error < 1e-4, || format!("{r:?}"))?;
    Ok(format!("max relative gradient error {:.2e} over {} weights", r.max_relative_error, r.checked))
}

/// Point-in-convex-polygon by edge cross products.
fn inside(c: &[[f64; 2]; 4], p: [f64; 2]) -> bool {
    (0..4).all(|i| {
        let (a, b) = (c[i], c[(i + 1) % 4]);
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
    })
}

fn random_rect(rng: &mut ChaCha8Rng, near: [f64; 2], spread: f64) -> GraspRectangle {
    GraspRectangle::new(
        [near[0] + rng.random_range(-spread..spread), near[1] + rng.random_range(-spread..spread)],
        rng.random_range(-PI..PI),
        rng.random_range(20.0..80.0),
        rng.random_range(10.0..40.0),
    )
}

fn geometry_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = random_rect(&mut rng, [100.0, 100.0], 10.0);
        let b = random_rect(&mut rng, a.center, 25.0);
        let (ca, cb) = (a.corners(), b.corners());
        let (mut inter, mut union) = (0usize, 0usize);
        for _ in 0..200_000 {
            let p = [rng.random_range(0.0..200.0), rng.random_range(0.0..200.0)];
            let (ia, ib) = (inside(&ca, p), inside(&cb, p));
            inter += (ia && ib) as usize;
            union += (ia || ib) as usize;
        }
        let oracle = inter as f64 / union.max(1) as f64;
        worst = worst.max((rect_iou(&a, &b, (200, 200)) - oracle).abs());
    }
    ensure(worst <= 0.02, || format!("IoU gap {worst}"))?;

    for _ in 0..1000 {
        let r = random_rect(&mut rng, [300.0, 200.0], 150.0);
        let back = grasp_from_rect(&r.corners()).map_err(err)?;
        for (x, y) in r.corners().iter().zip(back.corners().iter()) {
            ensure((x[0] - y[0]).abs() < 1e-6 && (x[1] - y[1]).abs() < 1e-6, || format!("round trip of {r:?}"))?;
        }
    }

    for _ in 0..1000 {
        let (a, b) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let k = rng.random_range(-3..=3) as f64;
        let ab = angle_offset(a, b).map_err(err)?;
        ensure(ab == angle_offset(b, a).map_err(err)?, || format!("asymmetric at ({a}, {b})"))?;
        ensure((angle_offset(a + k * PI, b).map_err(err)? - ab).abs() < 1e-9, || format!("not pi-periodic at {a}"))?;
        ensure(angle_offset(a, a + PI).map_err(err)? < 1e-9, || format!("antipodal offset at {a}"))?;
        ensure((0.0..=FRAC_PI_2).contains(&ab), || format!("offset {ab} out of range"))?;
    }
    Ok(format!("worst IoU gap {worst:.4}"))
}

fn rasterize_decode_closure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (h, w) = (160, 160);
    let (mut worst_angle, mut worst_width): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let r = GraspRectangle::new(
            [rng.random_range(50.0..110.0), rng.random_range(50.0..110.0)],
            rng.random_range(-PI..PI),
            rng.random_range(24.0..100.0),
            rng.random_range(12.0..40.0),
        );
        let labels = rasterize_labels(&[r], h, w, WIDTH_SCALE).map_err(err)?;
        let top = extract_grasps(&decode_grasp_maps(&labels, WIDTH_SCALE, 0.0), 1, 1);
        let g = top.first().ok_or_else(|| format!("no peak for {r:?}"))?;
        worst_angle = worst_angle.max(angle_offset(g.angle, r.angle).map_err(err)?);
        worst_width = worst_width.max((g.width - r.width).abs() / WIDTH_SCALE);
    }
    ensure(worst_angle < 1e-6, || format!("angle error {worst_angle}"))?;
    ensure(worst_width <= 1.0 / WIDTH_SCALE, || format!("normalized width error {worst_width}"))?;
    Ok(format!("angle error {worst_angle:.1e} rad, normalized width error {worst_width:.4}"))
}

fn probe_fixture(kind: DatasetKind, root: &Path) -> Result<Vec<GraspSample>, String> {
    let rendered = synthetic_dataset(8, PROBE_SIZE + 32, 11).map_err(err)?;
    match kind {
        DatasetKind::Cornell => write_cornell(root, &rendered).map_err(err)?,
        DatasetKind::Jacquard => write_jacquard(root, &rendered).map_err(err)?,
    }
    let samples = kind.load(root, PROBE_SIZE).map_err(err)?;
    ensure(samples.len() == 8, || format!("{} of 8 {kind} samples loaded", samples.len()))?;
    Ok(samples)
}

fn probe(kind: DatasetKind) -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let samples = probe_fixture(kind, dir.path())?;
    let cfg = ProbeConfig::default();
    let (report, _) = overfit_probe(&samples, Modality::RgbD, &NetworkConfig::default(), &cfg).map_err(err)?;
    let line = format!(
        "accuracy {:.3} after {} iterations ({:.0} s)",
        report.final_accuracy, report.iterations, report.seconds
    );
    ensure(report.solved, || line.clone())?;
    Ok(line)
}

fn cornell_training() -> Outcome {
    let root = std::env::var_os(DATA_ROOT_ENV).ok_or_else(|| format!("{DATA_ROOT_ENV} not set"))?;
    let samples = load_cornell(Path::new(&root), 224).map_err(err)?;
    let out = tempfile::tempdir().map_err(err)?;
    let summary =
        pixgrasp::training::train(&TrainConfig::default(), &NetworkConfig::default(), samples, out.path()).map_err(err)?;
    let line = format!("validation accuracy {:.4} at epoch {}", summary.best_accuracy, summary.best_epoch);
    ensure(summary.best_accuracy >= 0.85, || line.clone())?;
    Ok(line)
}

fn jacquard_substitute() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    write_jacquard(dir.path(), &synthetic_dataset(100, 160, 300).map_err(err)?).map_err(err)?;
    let first = load_jacquard(dir.path(), 128).map_err(err)?;
    ensure(first.len() >= 95, || format!("{} of 100 scenes loaded", first.len()))?;
    for s in &first {
        ensure(s.rgb.dim() == (128, 128, 3) && s.depth.dim() == (128, 128), || format!("{}: bad shape", s.id))?;
        ensure(!s.rectangles.is_empty() && s.object_id.is_some(), || format!("{}: missing labels", s.id))?;
        for r in &s.rectangles {
            let [u, v] = r.center;
            ensure((-0.5..127.5).contains(&u) && (-0.5..127.5).contains(&v), || format!("{}: {r:?}", s.id))?;
        }
    }
    ensure(first == load_jacquard(dir.path(), 128).map_err(err)?, || "loader is not deterministic".into())?;
    let probe_line = probe(DatasetKind::Jacquard)?;
    Ok(format!("{} scenes loaded; probe {probe_line}", first.len()))
}

fn simulator() -> Outcome {
    let cfg = SimConfig::default();
    let mut oracle = OraclePredictor { width_scale: WIDTH_SCALE };
    let scenes = [
        Scene::with_objects(vec![SceneObject::block("block", [0.05, -0.03], 0.4, [0.012, 0.035], 0.03)]),
        Scene::with_objects(vec![
            SceneObject::block("block", [-0.04, 0.02], -0.3, [0.012, 0.035], 0.03).with_velocity([0.02, 0.0], 0.0)
        ]),
        Scene::with_objects(vec![
            SceneObject::block("left", [-0.05, 0.0], 0.0, [0.012, 0.035], 0.03),
            SceneObject::block("right", [0.05, 0.0], 0.0, [0.012, 0.035], 0.03),
        ]),
    ];
    let mut results = Vec::new();
    for scene in &scenes {
        let a = run_episode(scene, &mut oracle, &cfg).map_err(err)?;
        let b = run_episode(scene, &mut oracle, &cfg).map_err(err)?;
        ensure(a == b, || "episode differs across two runs".into())?;
        ensure(a.success, || format!("episode failed after {:.2} s", a.duration_s))?;
        results.push(a);
    }
    let [fixed, drift, pair] = &results[..] else { unreachable!() };
    ensure(fixed.duration_s <= 5.0, || format!("static block took {:.2} s", fixed.duration_s))?;
    ensure(fixed.final_position_error <= 0.002 && fixed.final_angle_error <= 1f64.to_radians(), || {
        format!("static block ended {:.4} m, {:.3} rad off", fixed.final_position_error, fixed.final_angle_error)
    })?;
    ensure(drift.steady_state_lag < 0.01, || format!("drift lag {:.4} m", drift.steady_state_lag))?;
    ensure(pair.object_switches == 0, || format!("{} switches", pair.object_switches))?;
    Ok(format!(
        "static {:.2} s, drift lag {:.1} mm, 0 switches",
        fixed.duration_s,
        drift.steady_state_lag * 1000.0
    ))
}

fn tracking_selection() -> Outcome {
    let g = |u: f64, v: f64, quality: f64| GraspImage { u, v, angle: 0.0, width: 20.0, quality };
    let candidates = [g(101.0, 101.0, 0.8), g(200.0, 200.0, 0.9)];
    let near = select_tracked_grasp(&candidates, Some(&g(100.0, 100.0, 0.5))).map_err(err)?;
    ensure(near == candidates[0], || format!("closest: {near:?}"))?;
    let init = select_tracked_grasp(&candidates, None).map_err(err)?;
    ensure(init == candidates[1], || format!("initial: {init:?}"))?;
    let tied = [g(90.0, 100.0, 0.6), g(110.0, 100.0, 0.7)];
    let pick = select_tracked_grasp(&tied, Some(&g(100.0, 100.0, 0.5))).map_err(err)?;
    ensure(pick == tied[1], || format!("tie: {pick:?}"))?;
    ensure(select_tracked_grasp(&[], None).is_err(), || "empty candidates accepted".into())?;
    Ok("closest, initial and tie examples".into())
}

fn timing_report() -> Outcome {
    let net = build_network(NetworkConfig::default(), 0).map_err(err)?;
    let t = measure_timing(&net, 480, Modality::RgbD, 3, &EvalOptions::default()).map_err(err)?;
    let dir = tempfile::tempdir().map_err(err)?;
    let report = EvaluationReport {
        dataset: "timing".into(),
        modality: "rgbd".into(),
        input_size: 480,
        n_samples: 0,
        n_correct: 0,
        accuracy: 0.0,
        mean_inference_ms: t.forward_ms,
    };
    write_reports(dir.path(), &report, &[], Some(&t)).map_err(err)?;
    let text = std::fs::read_to_string(dir.path().join("timing.json")).map_err(err)?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(err)?;
    for key in ["forward_ms", "decode_ms", "end_to_end_ms"] {
        ensure(v[key].as_f64().is_some_and(|x| x > 0.0), || format!("timing.json lacks {key}"))?;
    }
    Ok(format!("480 RGB-D forward {:.1} ms, end to end {:.1} ms", t.forward_ms, t.end_to_end_ms))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "parameter budget", parameter_budget),
        (2, "shape contract", shape_contract),
        (3, "loss correctness", loss_correctness),
        (4, "geometry oracles", geometry_oracles),
        (5, "rasterize/decode closure", rasterize_decode_closure),
        (6, "Cornell overfit probe", || probe(DatasetKind::Cornell)),
        (7, "Cornell RGB-D 224 training", cornell_training),
        (8, "Jacquard probe and loader", jacquard_substitute),
        (9, "simulator with oracle predictor", simulator),
        (10, "tracking selection", tracking_selection),
        (11, "timing report", timing_report),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        if id == 7 && std::env::var_os(DATA_ROOT_ENV).is_none() {
            println!("SKIP criterion {id:>2} {name}: set {DATA_ROOT_ENV} to the Cornell root to run it");
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} [{secs:.0} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} [{secs:.0} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

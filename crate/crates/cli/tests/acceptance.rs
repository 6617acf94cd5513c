//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are always
//! printed, and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use cadalign::align::{object_points_canonical, reconstruct_scene};
use cadalign::embedding::{
    build_library_space, random_rank_shape_accuracy, rank_shape_accuracy, EmbeddingSpace, EmbeddingVec,
    GeometricDescriptor,
};
use cadalign::geom::{diou_3d, diou_3d_with_grad, rotated_iou_3d, OrientedBox, PointCloud, Trs, Vec3};
use cadalign::library::CadLibrary;
use cadalign::metrics::{
    alignment_correct, chamfer, evaluate_benchmark, f_score, match_predictions, AccuracyReport, BenchmarkScene,
    GroundTruthInstance, MetricConfig, PlacedPrediction, SymmetryClass,
};
use cadalign::rng::{derive_seed, rng_from_seed};
use cadalign::scenegen::{make_library, synth_scene, DegradeConfig, Family, SceneConfig, SynthScene};
use cadalign::training::{
    assign_targets, embedding_mse, focal_loss, front_face_ce, seg_bce_balanced, soften_front_face, triplet_loss,
    Detection, FeatureLevel, TripletBatch, DEFAULT_ASSIGN_K, DEFAULT_TRIPLET_MARGIN,
};
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[path = "../../core/tests/support/mod.rs"]
mod support;

use support::{central_diff, exhaustive_matching, monte_carlo_iou, random_box_pair, random_scene, rel_err, uniform};

type Check = Result<String, String>;

/// Fails the enclosing criterion with a message.
macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(got: f64, want: f64, tol: f64, what: &str) -> Result<(), String> {
    if (got - want).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: got {got}, want {want} ± {tol}"))
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn cloud(points: &[[f64; 3]]) -> PointCloud {
    PointCloud::new(points.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
}

fn cube_at(center: Vec3, yaw: f64) -> OrientedBox {
    OrientedBox::new(center, Vec3::repeat(1.0), yaw).unwrap()
}

fn c1_metric_kernels() -> Check {
    const EXACT: f64 = 1e-9;
    let x = cloud(&[[0.0, 0.0, 0.0], [0.3, 1.0, -2.0]]);
    close(ok(chamfer(&x, &x))?, 0.0, EXACT, "chamfer(X, X)")?;
    close(
        ok(chamfer(&cloud(&[[0.0; 3]]), &cloud(&[[1.0, 0.0, 0.0]])))?,
        1.0,
        EXACT,
        "chamfer single points",
    )?;
    let two = cloud(&[[0.0; 3], [2.0, 0.0, 0.0]]);
    close(
        ok(chamfer(&two, &cloud(&[[1.0, 0.0, 0.0]])))?,
        1.0,
        EXACT,
        "chamfer two vs one",
    )?;

    close(ok(f_score(&x, &x, 0.5))?, 1.0, EXACT, "f_score identical")?;
    let pred = cloud(&[[0.0; 3], [10.0, 0.0, 0.0]]);
    close(
        ok(f_score(&pred, &cloud(&[[0.0; 3]]), 0.5))?,
        2.0 / 3.0,
        EXACT,
        "f_score P=0.5 R=1",
    )?;
    close(
        ok(f_score(&cloud(&[[10.0, 0.0, 0.0]]), &cloud(&[[0.0; 3]]), 0.5))?,
        0.0,
        EXACT,
        "f_score far",
    )?;

    let unit = cube_at(Vec3::zeros(), 0.0);
    close(rotated_iou_3d(&unit, &unit), 1.0, EXACT, "iou identical")?;
    close(
        rotated_iou_3d(&unit, &cube_at(Vec3::new(10.0, 0.0, 0.0), 0.0)),
        0.0,
        EXACT,
        "iou disjoint",
    )?;
    close(
        rotated_iou_3d(&unit, &cube_at(Vec3::zeros(), FRAC_PI_4)),
        0.5f64.sqrt(),
        EXACT,
        "iou octagon",
    )?;
    close(diou_3d(&unit, &unit), 0.0, EXACT, "diou identical")?;
    let shifted = cube_at(Vec3::new(0.5, 0.0, 0.0), 0.0);
    close(
        diou_3d(&shifted, &unit),
        1.0 - 1.0 / 3.0 + 1.0 / 17.0,
        EXACT,
        "diou offset cubes",
    )?;
    ensure!(
        diou_3d(&cube_at(Vec3::new(50.0, 0.0, 0.0), 0.0), &unit) > 1.0,
        "far diou not > 1"
    );

    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (a, b) = random_box_pair(1000 + i);
        let err = (rotated_iou_3d(&a, &b) - monte_carlo_iou(&a, &b, 1_000_000, i)).abs();
        worst = worst.max(err);
    }
    ensure!(worst < 0.01, "Monte-Carlo disagreement {worst:.4}");
    Ok(format!(
        "hand examples within 1e-9; worst Monte-Carlo gap {worst:.4} over 50 pairs"
    ))
}

fn trs_at(x: f64, yaw_deg: f64, scale: f64) -> Trs {
    Trs::from_yaw(Vec3::new(x, 0.0, 0.0), yaw_deg.to_radians(), Vec3::repeat(scale)).unwrap()
}

fn c2_protocol_constants() -> Check {
    ensure!(
        ok(soften_front_face([1.0, 0.0, 0.0, 0.0], SymmetryClass::TwoFold))? == [0.5, 0.0, 0.5, 0.0],
        "two-fold softening"
    );
    for sym in [SymmetryClass::FourFold, SymmetryClass::Full] {
        ensure!(
            ok(soften_front_face([0.0, 1.0, 0.0, 0.0], sym))? == [0.25; 4],
            "{sym:?} softening"
        );
    }
    ensure!(
        ok(soften_front_face([1.0, 0.0, 0.0, 0.0], SymmetryClass::None))? == [1.0, 0.0, 0.0, 0.0],
        "no-symmetry softening"
    );

    let cfg = MetricConfig::default();
    ensure!(
        (cfg.trans_thresh, cfg.rot_thresh, cfg.scale_thresh, cfg.tau) == (0.20, 20.0, 0.20, 0.5),
        "default thresholds {cfg:?}"
    );
    let gt = GroundTruthInstance {
        category: "chair".into(),
        model_id: "m".into(),
        trs: trs_at(0.0, 0.0, 1.0),
        symmetry: SymmetryClass::None,
    };
    let correct = |trs: Trs| {
        let p = PlacedPrediction {
            category: "chair".into(),
            model_id: "m".into(),
            trs,
            confidence: 1.0,
        };
        alignment_correct(&p, &gt, &cfg).unwrap()
    };
    let cases = [
        ("translation 0.19 m", trs_at(0.19, 0.0, 1.0), true),
        ("translation 0.20 m", trs_at(0.20, 0.0, 1.0), false),
        ("translation 0.21 m", trs_at(0.21, 0.0, 1.0), false),
        ("rotation 19°", trs_at(0.0, 19.0, 1.0), true),
        ("rotation 21°", trs_at(0.0, 21.0, 1.0), false),
        ("scale 19%", trs_at(0.0, 0.0, 1.19), true),
        ("scale 21%", trs_at(0.0, 0.0, 1.21), false),
    ];
    for (what, trs, want) in cases {
        ensure!(correct(trs) == want, "{what}: expected correct={want}");
    }

    let lib = make_library(&[Family::Chair], 2, 3).unwrap();
    let m = &lib.models()[0];
    let scene = BenchmarkScene {
        scene_id: "s".into(),
        predictions: vec![],
        ground_truth: vec![GroundTruthInstance {
            category: m.category.clone(),
            model_id: m.model_id.clone(),
            trs: Trs::identity(),
            symmetry: m.symmetry,
        }],
    };
    let report = ok(evaluate_benchmark(&[scene], &lib, &cfg))?;
    let mus: Vec<f64> = report.mu_sweep.iter().map(|r| r.mu).collect();
    ensure!(mus.starts_with(&[0.5, 0.7, 0.9]), "mu sweep {mus:?}");

    ensure!(DEFAULT_TRIPLET_MARGIN == 0.1, "triplet margin {DEFAULT_TRIPLET_MARGIN}");
    let at = |x: f64, y: f64| vec![x, y];
    let origin = at(0.0, 0.0);
    let v = ok(triplet_loss(&TripletBatch::new(
        origin.clone(),
        at(0.2, 0.0),
        at(0.5, 0.0),
    )))?
    .value;
    close(v, 0.0, 1e-12, "triplet satisfied")?;
    let v = ok(triplet_loss(&TripletBatch::new(
        origin.clone(),
        at(0.5, 0.0),
        at(0.0, 0.5),
    )))?
    .value;
    close(v, 0.1, 1e-12, "triplet equal distances")?;

    ensure!(DEFAULT_ASSIGN_K == 6, "assignment k {DEFAULT_ASSIGN_K}");
    let dets: Vec<Detection> = (1..=8)
        .map(|i| {
            let p = Vec3::new(i as f64, 0.0, 0.0);
            Detection {
                location: p,
                class_logits: vec![0.0],
                bbox: OrientedBox::new(p, Vec3::repeat(1.0), 0.0).unwrap(),
                face_logits: [0.0; 4],
                embedding: EmbeddingVec::zeros(1),
                level: FeatureLevel::Two,
            }
        })
        .collect();
    let assigned = ok(assign_targets(&dets, &[Vec3::zeros()], DEFAULT_ASSIGN_K))?.assigned;
    let want: Vec<Option<usize>> = (0..8).map(|i| (i < 6).then_some(0)).collect();
    ensure!(assigned == want, "k=6 fixture assignment {assigned:?}");
    Ok("softening, strict thresholds, mu sweep, margin, k=6 fixture".into())
}

fn c3_gradients() -> Check {
    const CASES: u64 = 100;
    let mut worst = BTreeMap::<&str, f64>::new();
    let mut record = |name: &'static str, e: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(e);
    };
    for case in 0..CASES {
        let mut rng = rng_from_seed(derive_seed(101, case));
        let n = rng.random_range(1..8);
        let logits = uniform(&mut rng, n, -5.0, 5.0);
        let target = if rng.random_bool(0.25) {
            None
        } else {
            Some(rng.random_range(0..n))
        };
        let (gamma, alpha) = (rng.random_range(0.0..3.0), rng.random_range(0.1..0.9));
        let (_, g) = ok(focal_loss(&logits, target, gamma, alpha))?;
        let num = central_diff(&logits, |x| focal_loss(x, target, gamma, alpha).unwrap().0);
        record("focal", rel_err(&g, &num));

        let face: [f64; 4] = uniform(&mut rng, 4, -4.0, 4.0).try_into().unwrap();
        let raw = uniform(&mut rng, 4, 0.0, 1.0);
        let sum: f64 = raw.iter().sum();
        let soft: [f64; 4] = std::array::from_fn(|i| raw[i] / sum);
        let (_, g) = front_face_ce(&face, &soft);
        let num = central_diff(&face, |x| front_face_ce(&x.try_into().unwrap(), &soft).0);
        record("front-face", rel_err(&g, &num));

        let dim = rng.random_range(1..32);
        let (p, t) = (uniform(&mut rng, dim, -2.0, 2.0), uniform(&mut rng, dim, -2.0, 2.0));
        let (_, g) = ok(embedding_mse(&p, &t))?;
        let num = central_diff(&p, |x| embedding_mse(x, &t).unwrap().0);
        record("mse", rel_err(&g, &num));

        let n = rng.random_range(2..40);
        let probs = uniform(&mut rng, n, 0.02, 0.98);
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        let seed = derive_seed(102, case);
        let s = ok(seg_bce_balanced(&probs, &labels, seed))?;
        let num = central_diff(&probs, |x| seg_bce_balanced(x, &labels, seed).unwrap().value);
        record("segmentation", rel_err(&s.gradient, &num));
    }

    let (mut checked, mut case) = (0, 0);
    while checked < CASES {
        case += 1;
        let mut rng = rng_from_seed(derive_seed(103, case));
        let n = rng.random_range(1..16);
        let b = TripletBatch::new(
            uniform(&mut rng, n, -0.3, 0.3),
            uniform(&mut rng, n, -0.3, 0.3),
            uniform(&mut rng, n, -0.3, 0.3),
        );
        let d2 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, c)| (a - c).powi(2)).sum::<f64>();
        if (d2(&b.anchor, &b.positive) + b.margin - d2(&b.anchor, &b.negative)).abs() < 1e-3 {
            continue;
        }
        let t = ok(triplet_loss(&b))?;
        let value = |a: &[f64], p: &[f64], q: &[f64]| {
            triplet_loss(&TripletBatch::new(a.to_vec(), p.to_vec(), q.to_vec()))
                .unwrap()
                .value
        };
        let na = central_diff(&b.anchor, |x| value(x, &b.positive, &b.negative));
        let np = central_diff(&b.positive, |x| value(&b.anchor, x, &b.negative));
        let nn = central_diff(&b.negative, |x| value(&b.anchor, &b.positive, x));
        let e = rel_err(&t.grad_anchor, &na)
            .max(rel_err(&t.grad_positive, &np))
            .max(rel_err(&t.grad_negative, &nn));
        record("triplet", e);
        checked += 1;
    }

    let (mut checked, mut case) = (0, 0);
    while checked < CASES {
        case += 1;
        let mut rng = rng_from_seed(derive_seed(104, case));
        let gt = OrientedBox::new(
            Vec3::zeros(),
            Vec3::new(
                rng.random_range(0.5..2.0),
                rng.random_range(0.5..2.0),
                rng.random_range(0.5..2.0),
            ),
            rng.random_range(-PI..PI),
        )
        .unwrap();
        let mut p: Vec<f64> = uniform(&mut rng, 3, -0.4, 0.4);
        p.extend(uniform(&mut rng, 3, 0.5, 2.0));
        p.push(rng.random_range(-3.0..3.0));
        let to_box =
            |x: &[f64]| OrientedBox::new(Vec3::new(x[0], x[1], x[2]), Vec3::new(x[3], x[4], x[5]), x[6]).unwrap();
        if rotated_iou_3d(&to_box(&p), &gt) < 0.05 {
            continue;
        }
        let f = |x: &[f64]| diou_3d(&to_box(x), &gt);
        let num = central_diff(&p, f);
        let coarse: Vec<f64> = (0..7)
            .map(|i| {
                let h = 2.0 * support::STEP;
                let (mut hi, mut lo) = (p.clone(), p.clone());
                hi[i] += h;
                lo[i] -= h;
                (f(&hi) - f(&lo)) / (2.0 * h)
            })
            .collect();
        if rel_err(&num, &coarse) > 1e-5 {
            continue; // a kink lies inside the stencil
        }
        let (_, g) = diou_3d_with_grad(&to_box(&p), &gt);
        record("diou", rel_err(&g, &num));
        checked += 1;
    }

    for (name, e) in &worst {
        let limit = if *name == "diou" { 1e-3 } else { 1e-4 };
        ensure!(*e < limit, "{name} gradient relative error {e:.2e} ≥ {limit:.0e}");
    }
    let summary: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    Ok(format!("worst relative error: {}", summary.join(", ")))
}

struct Suite {
    library: CadLibrary,
    space: EmbeddingSpace,
    scenes: Vec<SynthScene>,
}

fn suite(n_scenes: u64, models_per_family: usize, cfg: &SceneConfig, seed: u64) -> Suite {
    let library = make_library(&Family::ALL, models_per_family, seed).unwrap();
    let space = build_library_space(&library, 256, seed).unwrap();
    let scenes = (0..n_scenes)
        .map(|i| synth_scene(&library, &space, cfg, format!("scene_{i:04}"), derive_seed(seed, i)).unwrap())
        .collect();
    Suite { library, space, scenes }
}

/// Places the (possibly perturbed) detections of every scene and evaluates.
fn evaluate_detections(s: &Suite, detections: &[Vec<Detection>]) -> Result<AccuracyReport, String> {
    let cats = s.library.categories();
    let scenes: Vec<BenchmarkScene> = s
        .scenes
        .iter()
        .zip(detections)
        .map(|(scene, dets)| {
            let rec = reconstruct_scene(dets, &s.space, &s.library, &cats, 0.5);
            ensure!(
                rec.failures.is_empty(),
                "{}: placement failures {:?}",
                scene.scene_id,
                rec.failures
            );
            Ok(BenchmarkScene {
                scene_id: scene.scene_id.clone(),
                predictions: rec.placed.iter().map(|p| p.to_prediction()).collect(),
                ground_truth: scene.ground_truth.clone(),
            })
        })
        .collect::<Result<_, String>>()?;
    ok(evaluate_benchmark(&scenes, &s.library, &MetricConfig::default()))
}

fn benchmark_suite() -> Suite {
    let cfg = SceneConfig {
        points_per_object: 200,
        floor_points: 200,
        ..SceneConfig::default()
    };
    suite(50, 10, &cfg, 2024)
}

fn c4_identity_pipeline() -> Check {
    let s = benchmark_suite();
    let dets: Vec<Vec<Detection>> = s.scenes.iter().map(|sc| sc.ideal_detections.clone()).collect();
    let report = evaluate_detections(&s, &dets)?;
    let mut tables = vec![
        ("alignment", &report.alignment),
        ("reconstruction", &report.reconstruction),
        ("shape", &report.shape),
    ];
    for row in &report.mu_sweep {
        tables.push(("reconstruction (sweep)", &row.reconstruction));
        tables.push(("shape (sweep)", &row.shape));
    }
    for (name, t) in tables {
        ensure!(
            t.instance == 1.0 && t.class_mean == 1.0,
            "{name}: instance {} class mean {}",
            t.instance,
            t.class_mean
        );
    }
    let n: usize = s.scenes.iter().map(|sc| sc.ground_truth.len()).sum();
    Ok(format!(
        "{} scenes, {n} objects: every accuracy 1.0 at mu {:?}",
        s.scenes.len(),
        report.mu_sweep.iter().map(|r| r.mu).collect::<Vec<_>>()
    ))
}

fn c5_perturbation() -> Check {
    let s = benchmark_suite();
    let mut accuracy = Vec::new();
    for (level, sigma) in [0.05, 0.15, 0.30].into_iter().enumerate() {
        let noise = Normal::new(0.0, sigma).unwrap();
        let dets: Vec<Vec<Detection>> = s
            .scenes
            .iter()
            .enumerate()
            .map(|(i, sc)| {
                let mut rng = rng_from_seed(derive_seed(derive_seed(5, level as u64), i as u64));
                sc.ideal_detections
                    .iter()
                    .map(|d| {
                        let mut d = d.clone();
                        let offset = Vec3::from_fn(|_, _| noise.sample(&mut rng));
                        d.bbox = OrientedBox::new(d.bbox.center() + offset, d.bbox.size(), d.bbox.yaw()).unwrap();
                        d
                    })
                    .collect()
            })
            .collect();
        accuracy.push(evaluate_detections(&s, &dets)?.alignment.instance);
    }
    let detail = format!(
        "alignment accuracy at sigma 0.05/0.15/0.30 m: {:.3}/{:.3}/{:.3}",
        accuracy[0], accuracy[1], accuracy[2]
    );
    ensure!(
        accuracy[0] > accuracy[1] && accuracy[1] > accuracy[2],
        "not strictly decreasing: {detail}"
    );
    ensure!(accuracy[0] - accuracy[2] >= 0.2, "drop below 0.2: {detail}");
    Ok(detail)
}

fn c6_retrieval() -> Check {
    let cfg = SceneConfig {
        degrade: DegradeConfig {
            noise_sigma: 0.01,
            dropout: 0.3,
            occlusion: None,
        },
        ..SceneConfig::default()
    };
    let s = suite(20, 60, &cfg, 606);
    for e in s.space.entries() {
        let hit = ok(s.space.nearest(&e.vector, Some(&e.category)))?;
        ensure!(
            hit.model_id == e.model_id,
            "self-retrieval of {} returned {}",
            e.model_id,
            hit.model_id
        );
    }
    let descriptor = GeometricDescriptor::new(256, 606);
    let mut queries = Vec::new();
    for sc in &s.scenes {
        for g in &sc.ground_truth {
            let extents = ok(s.library.get(&g.model_id))?.extents();
            let points = ok(object_points_canonical(&sc.scan, &g.trs, &extents, 0.02))?;
            queries.push((ok(descriptor.describe(&points))?, g.model_id.clone()));
        }
    }
    let metric = MetricConfig::default();
    let curve = ok(rank_shape_accuracy(&s.space, &queries, &s.library, &[1, 50], &metric))?;
    let random = ok(random_rank_shape_accuracy(&s.space, &queries, &s.library, &metric, 607))?;
    let (r1, r50) = (curve[0].accuracy, curve[1].accuracy);
    let detail = format!(
        "{} stored self-retrievals exact; {} scan queries: rank-1 {r1:.3}, rank-50 {r50:.3}, random {random:.3}",
        s.space.len(),
        queries.len()
    );
    ensure!(r1 >= r50, "rank-1 below rank-50: {detail}");
    ensure!(r1 >= random, "rank-1 below random: {detail}");
    Ok(detail)
}

fn c7_matching() -> Check {
    let cfg = MetricConfig::default();
    for scene in 0..200 {
        let (preds, gts) = random_scene(derive_seed(707, scene));
        let correct = |p: usize, g: usize| alignment_correct(&preds[p], &gts[g], &cfg).unwrap();
        let greedy = ok(match_predictions(&preds, &gts, |p, g| Ok(correct(p, g))))?;
        ensure!(
            greedy == exhaustive_matching(&preds, &gts, &correct),
            "scene {scene} differs from oracle"
        );
    }
    let gt = GroundTruthInstance {
        category: "chair".into(),
        model_id: "m".into(),
        trs: trs_at(1.0, 10.0, 1.0),
        symmetry: SymmetryClass::None,
    };
    let pred = PlacedPrediction {
        category: "chair".into(),
        model_id: "m".into(),
        trs: gt.trs,
        confidence: 0.9,
    };
    let preds = vec![pred.clone(), pred];
    let gts = vec![gt];
    let m = ok(match_predictions(&preds, &gts, |p, g| {
        alignment_correct(&preds[p], &gts[g], &cfg)
    }))?;
    let correct = m.iter().filter(|r| r.correct).count();
    ensure!(correct == 1, "duplicate fixture scored {correct}");
    Ok("200 random scenes equal the exhaustive oracle; duplicate scores once".into())
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cadalign"))
}

fn run(dir: &Path, args: &[&str]) -> Result<Output, String> {
    let out = cli()
        .current_dir(dir)
        .args(args)
        .env("CADALIGN_THREADS", "1")
        .output()
        .map_err(|e| format!("spawn: {e}"))?;
    ensure!(
        out.status.success(),
        "`cadalign {}` failed ({:?}): {}",
        args.join(" "),
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(out)
}

/// A fresh working directory under cargo's target tmpdir. It is cleared
/// before use rather than after: unlinking freshly synced files can be very
/// slow on some filesystems, and leftovers help when a criterion fails.
fn workdir(name: &str) -> Result<PathBuf, String> {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    if dir.exists() {
        ok(std::fs::remove_dir_all(&dir))?;
    }
    ok(std::fs::create_dir_all(&dir))?;
    Ok(dir)
}

fn c8_performance() -> Check {
    let dir = &workdir("performance")?;
    let setup: [&[&str]; 3] = [
        &[
            "synth",
            "--scenes",
            "300",
            "--objects",
            "10",
            "--seed",
            "8",
            "--points-per-object",
            "50",
            "--floor-points",
            "50",
            "--out",
            "data",
        ],
        &["embed", "--library", "data/library", "--seed", "8", "--out", "db.bin"],
        &[
            "align",
            "--db",
            "db.bin",
            "--detections",
            "data/detections.json",
            "--library",
            "data/library",
            "--out",
            "pred.json",
        ],
    ];
    for args in setup {
        run(dir, args)?;
    }
    let start = Instant::now();
    let out = run(
        dir,
        &[
            "evaluate",
            "--gt",
            "data",
            "--pred",
            "pred.json",
            "--library",
            "data/library",
            "--out",
            "report.json",
        ],
    )?;
    let evaluate = start.elapsed();
    let report = String::from_utf8_lossy(&out.stdout);
    ensure!(report.contains("instance"), "evaluate printed no table");
    ensure!(
        evaluate < Duration::from_secs(10),
        "evaluate took {:.2}s",
        evaluate.as_secs_f64()
    );

    let mut rng = rng_from_seed(88);
    let mut space = EmbeddingSpace::new(256);
    for i in 0..3000 {
        let v: Vec<f32> = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
        ok(space.insert(format!("m{i:04}"), ["a", "b", "c"][i % 3], ok(EmbeddingVec::new(v))?))?;
    }
    let queries: Vec<EmbeddingVec> = (0..1000)
        .map(|_| EmbeddingVec::new((0..256).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let start = Instant::now();
    let mut sink = 0.0;
    for q in &queries {
        sink += ok(space.nearest(q, None))?.distance;
    }
    let per_query = start.elapsed() / queries.len() as u32;
    ensure!(sink.is_finite(), "non-finite distance");
    ensure!(
        per_query < Duration::from_millis(1),
        "retrieval {:.3} ms/query",
        per_query.as_secs_f64() * 1e3
    );
    Ok(format!(
        "evaluate 300 scenes x 10 objects single-threaded in {:.2}s; retrieval {:.1} µs/query over 3000 x 256",
        evaluate.as_secs_f64(),
        per_query.as_secs_f64() * 1e6
    ))
}

/// Every file under `root`, relative path → contents.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn c9_determinism() -> Check {
    let commands: [&[&str]; 8] = [
        &[
            "synth",
            "--scenes",
            "4",
            "--objects",
            "4",
            "--seed",
            "9",
            "--noise",
            "0.01",
            "--dropout",
            "0.2",
            "--occlusion",
            "1,0,0,1.5",
            "--out",
            "data",
        ],
        &["embed", "--library", "data/library", "--seed", "9", "--out", "db.bin"],
        &[
            "retrieve",
            "--db",
            "db.bin",
            "--query",
            "data/scenes/scene_0000/scan.ply",
            "--category",
            "chair",
            "--k",
            "5",
            "--seed",
            "9",
        ],
        &[
            "align",
            "--db",
            "db.bin",
            "--detections",
            "data/detections.json",
            "--library",
            "data/library",
            "--out",
            "pred.json",
        ],
        &[
            "evaluate",
            "--gt",
            "data",
            "--pred",
            "pred.json",
            "--library",
            "data/library",
            "--mu-sweep",
            "--seed",
            "9",
            "--out",
            "report.json",
        ],
        &[
            "rankcurve",
            "--db",
            "db.bin",
            "--library",
            "data/library",
            "--scenes",
            "data",
            "--seed",
            "9",
            "--out",
            "rank.csv",
        ],
        &[
            "rankcurve",
            "--db",
            "db.bin",
            "--library",
            "data/library",
            "--seed",
            "9",
        ],
        &["fixtures", "--seed", "9", "--count", "20", "--out", "fixtures.json"],
    ];
    let runs: Vec<(PathBuf, Vec<Vec<u8>>)> = ["determinism_a", "determinism_b"]
        .into_iter()
        .map(|name| {
            let dir = workdir(name)?;
            let stdout = commands
                .iter()
                .map(|args| run(&dir, args).map(|o| o.stdout))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((dir, stdout))
        })
        .collect::<Result<_, String>>()?;
    let (a, b) = (snapshot(&runs[0].0), snapshot(&runs[1].0));
    ensure!(a.keys().eq(b.keys()), "output file sets differ");
    for (path, bytes) in &a {
        ensure!(&b[path] == bytes, "{} differs between runs", path.display());
    }
    for (i, (x, y)) in runs[0].1.iter().zip(&runs[1].1).enumerate() {
        ensure!(x == y, "stdout of `{}` differs between runs", commands[i][0]);
    }
    Ok(format!(
        "{} commands, {} output files byte-identical across reruns (bench excluded: timing only)",
        commands.len(),
        a.len()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    check: fn() -> Check,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "metric kernel fixtures",
            limit: Some(Duration::from_secs(30)),
            check: c1_metric_kernels,
        },
        Criterion {
            id: 2,
            name: "protocol-constant fixtures",
            limit: None,
            check: c2_protocol_constants,
        },
        Criterion {
            id: 3,
            name: "gradient suite",
            limit: Some(Duration::from_secs(60)),
            check: c3_gradients,
        },
        Criterion {
            id: 4,
            name: "identity pipeline",
            limit: Some(Duration::from_secs(60)),
            check: c4_identity_pipeline,
        },
        Criterion {
            id: 5,
            name: "perturbation monotonicity",
            limit: None,
            check: c5_perturbation,
        },
        Criterion {
            id: 6,
            name: "retrieval sanity",
            limit: None,
            check: c6_retrieval,
        },
        Criterion {
            id: 7,
            name: "matching-protocol oracle",
            limit: None,
            check: c7_matching,
        },
        Criterion {
            id: 8,
            name: "performance",
            limit: None,
            check: c8_performance,
        },
        Criterion {
            id: 9,
            name: "determinism",
            limit: None,
            check: c9_determinism,
        },
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let result = match (result, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("exceeded {}s runtime limit", limit.as_secs())),
            (r, _) => r,
        };
        let (verdict, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!(
            "{verdict} [{}] {} ({:.1}s): {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
        failed += result.is_err() as usize;
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

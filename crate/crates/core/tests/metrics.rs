use std::f64::consts::{FRAC_PI_2, PI};

use cadalign::geom::{PointCloud, Trs, Vec3};
use cadalign::library::CadLibrary;
use cadalign::metrics::{
    chamfer, evaluate_benchmark, f_score, rescaled_cad_f_score, rotation_error_sym, BenchmarkScene,
    GroundTruthInstance, MetricConfig, PlacedPrediction, SymmetryClass,
};
use cadalign::scenegen::{box_mesh, cylinder_mesh};
use nalgebra::UnitQuaternion;
use proptest::prelude::*;

fn cloud(pts: &[[f64; 3]]) -> PointCloud {
    PointCloud::new(pts.iter().map(|p| Vec3::from(*p)).collect()).unwrap()
}

/// Exhaustive nearest-neighbor F-score, independent of the grid search.
fn brute_f_score(pred: &PointCloud, gt: &PointCloud, tau: f64) -> f64 {
    let within = |a: &PointCloud, b: &PointCloud| {
        a.points()
            .iter()
            .filter(|p| b.points().iter().any(|q| (*p - q).norm() <= tau))
            .count() as f64
            / a.len() as f64
    };
    let (p, r) = (within(pred, gt), within(gt, pred));
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[test]
fn chamfer_and_f_score_hand_values() {
    let o = cloud(&[[0.0, 0.0, 0.0]]);
    assert_eq!(chamfer(&o, &cloud(&[[1.0, 0.0, 0.0]])).unwrap(), 1.0);
    assert_eq!(
        chamfer(&cloud(&[[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), &cloud(&[[1.0, 0.0, 0.0]])).unwrap(),
        1.0
    );
    let x = cloud(&[[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]]);
    assert_eq!(chamfer(&x, &x).unwrap(), 0.0);
    assert_eq!(f_score(&x, &x, 0.01).unwrap(), 1.0);
    let f = f_score(&cloud(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]), &o, 0.5).unwrap();
    assert!((f - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(f_score(&cloud(&[[10.0, 0.0, 0.0]]), &o, 0.5).unwrap(), 0.0);
}

#[test]
fn rotation_error_examples() {
    let yaw = |a: f64| UnitQuaternion::from_axis_angle(&Vec3::z_axis(), a);
    let q = yaw(0.4);
    for s in [
        SymmetryClass::None,
        SymmetryClass::TwoFold,
        SymmetryClass::FourFold,
        SymmetryClass::Full,
    ] {
        assert!(rotation_error_sym(&q, &q, s).abs() < 1e-6);
    }
    assert!(rotation_error_sym(&yaw(PI), &yaw(0.0), SymmetryClass::TwoFold).abs() < 1e-6);
    assert!((rotation_error_sym(&yaw(FRAC_PI_2), &yaw(0.0), SymmetryClass::TwoFold) - 90.0).abs() < 1e-6);
    assert!(rotation_error_sym(&yaw(FRAC_PI_2), &yaw(0.0), SymmetryClass::FourFold).abs() < 1e-6);
    assert!(rotation_error_sym(&yaw(1.234), &yaw(0.0), SymmetryClass::Full).abs() < 1e-6);
    let tilt = UnitQuaternion::from_axis_angle(&Vec3::x_axis(), 0.5);
    assert!((rotation_error_sym(&tilt, &yaw(2.0), SymmetryClass::Full) - 0.5f64.to_degrees()).abs() < 1e-6);
}

fn two_model_library() -> CadLibrary {
    let mut lib = CadLibrary::new();
    lib.insert(
        "box",
        "thing",
        SymmetryClass::FourFold,
        box_mesh(Vec3::repeat(-0.5), Vec3::repeat(0.5)).unwrap(),
    )
    .unwrap();
    lib.insert(
        "rod",
        "thing",
        SymmetryClass::Full,
        cylinder_mesh(0.05, -0.5, 0.5, 24).unwrap(),
    )
    .unwrap();
    lib
}

#[test]
fn rescale_factor_is_reported() {
    let lib = two_model_library();
    let mesh = &lib.get("box").unwrap().mesh;
    let trs = Trs::from_yaw(Vec3::zeros(), 0.0, Vec3::new(5.0, 2.0, 1.0)).unwrap();
    let r = rescaled_cad_f_score(mesh, &trs, mesh, &trs, &MetricConfig::default()).unwrap();
    assert!((r.rescale_factor - 2.0).abs() < 1e-12);
    assert_eq!(r.f_score, 1.0);
}

#[test]
fn dissimilar_model_is_aligned_but_wrong_shape() {
    let lib = two_model_library();
    let cfg = MetricConfig {
        mu: 0.9,
        ..MetricConfig::default()
    };
    let trs = Trs::from_yaw(Vec3::new(1.0, 1.0, 0.5), 0.3, Vec3::repeat(1.0)).unwrap();
    // Oracle: the perfectly aligned pair is far from the F-score threshold.
    let f = rescaled_cad_f_score(
        &lib.get("rod").unwrap().mesh,
        &trs,
        &lib.get("box").unwrap().mesh,
        &trs,
        &cfg,
    )
    .unwrap()
    .f_score;
    assert!(f < 0.9, "{f}");
    let scene = BenchmarkScene {
        scene_id: "s".into(),
        predictions: vec![PlacedPrediction {
            category: "thing".into(),
            model_id: "rod".into(),
            trs,
            confidence: 1.0,
        }],
        ground_truth: vec![GroundTruthInstance {
            category: "thing".into(),
            model_id: "box".into(),
            trs,
            symmetry: SymmetryClass::FourFold,
        }],
    };
    let report = evaluate_benchmark(&[scene], &lib, &cfg).unwrap();
    assert_eq!(report.alignment.instance, 1.0);
    assert_eq!(report.shape.instance, 0.0);
}

#[test]
fn sweep_is_monotone_and_shape_dominates_reconstruction() {
    let lib = two_model_library();
    let mut scenes = Vec::new();
    for i in 0..12 {
        let gt_trs = Trs::from_yaw(Vec3::new(i as f64, 0.0, 0.5), 0.1 * i as f64, Vec3::repeat(1.0)).unwrap();
        let offset = 0.01 * i as f64;
        let pred_trs = gt_trs
            .with_translation(gt_trs.translation() + Vec3::new(offset, 0.0, 0.0))
            .unwrap();
        scenes.push(BenchmarkScene {
            scene_id: format!("s{i}"),
            predictions: vec![PlacedPrediction {
                category: "thing".into(),
                model_id: "box".into(),
                trs: pred_trs,
                confidence: 1.0,
            }],
            ground_truth: vec![GroundTruthInstance {
                category: "thing".into(),
                model_id: "box".into(),
                trs: gt_trs,
                symmetry: SymmetryClass::FourFold,
            }],
        });
    }
    let report = evaluate_benchmark(&scenes, &lib, &MetricConfig::default()).unwrap();
    let mus: Vec<f64> = report.mu_sweep.iter().map(|e| e.mu).collect();
    assert_eq!(mus, vec![0.5, 0.7, 0.9]);
    for w in report.mu_sweep.windows(2) {
        assert!(w[0].reconstruction.instance >= w[1].reconstruction.instance);
    }
    for e in &report.mu_sweep {
        assert!(e.shape.instance >= e.reconstruction.instance);
    }
    // The largest offsets exceed tau after rescaling, so the sweep is non-trivial.
    assert!(report.mu_sweep[2].reconstruction.instance < 1.0);
    assert_eq!(report.shape.instance, 1.0);
}

#[test]
fn class_mean_is_mean_over_populated_classes() {
    let lib = two_model_library();
    let gt = |id: &str, x: f64| GroundTruthInstance {
        category: id.into(),
        model_id: "box".into(),
        trs: Trs::from_yaw(Vec3::new(x, 0.0, 0.0), 0.0, Vec3::repeat(1.0)).unwrap(),
        symmetry: SymmetryClass::None,
    };
    let pred = |g: &GroundTruthInstance| PlacedPrediction {
        category: g.category.clone(),
        model_id: g.model_id.clone(),
        trs: g.trs,
        confidence: 0.5,
    };
    let gts = vec![gt("a", 0.0), gt("a", 3.0), gt("a", 6.0), gt("b", 9.0)];
    let scene = BenchmarkScene {
        scene_id: "s".into(),
        predictions: vec![pred(&gts[0]), pred(&gts[3])],
        ground_truth: gts,
    };
    let r = evaluate_benchmark(&[scene], &lib, &MetricConfig::default()).unwrap();
    assert!((r.alignment.per_class["a"].accuracy - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(r.alignment.per_class["b"].accuracy, 1.0);
    assert!((r.alignment.class_mean - 2.0 / 3.0).abs() < 1e-12);
    assert!((r.alignment.instance - 0.5).abs() < 1e-12);
}

fn arb_cloud(max: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(prop::array::uniform3(-3.0..3.0f64), 1..max)
        .prop_map(|pts| PointCloud::new(pts.into_iter().map(Vec3::from).collect()).unwrap())
}

proptest! {
    #[test]
    fn chamfer_symmetric_and_rigid_invariant(x in arb_cloud(40), y in arb_cloud(40), yaw in -PI..PI, t in prop::array::uniform3(-5.0..5.0f64)) {
        let xy = chamfer(&x, &y).unwrap();
        prop_assert_eq!(xy, chamfer(&y, &x).unwrap());
        prop_assert_eq!(chamfer(&x, &x).unwrap(), 0.0);
        let m = Trs::from_yaw(Vec3::from(t), yaw, Vec3::repeat(1.0)).unwrap();
        let mv = |c: &PointCloud| c.map_points(|p| m.apply_point(p)).unwrap();
        prop_assert!((chamfer(&mv(&x), &mv(&y)).unwrap() - xy).abs() < 1e-9);
    }

    #[test]
    fn f_score_matches_brute_force(x in arb_cloud(60), y in arb_cloud(60), tau in 0.05..2.0f64) {
        prop_assert_eq!(f_score(&x, &y, tau).unwrap(), brute_f_score(&x, &y, tau));
    }

    #[test]
    fn f_score_order_invariant_and_monotone(x in arb_cloud(40), y in arb_cloud(40), tau in 0.05..1.0f64) {
        let mut rev = x.points().to_vec();
        rev.reverse();
        let xr = PointCloud::new(rev).unwrap();
        let f = f_score(&x, &y, tau).unwrap();
        prop_assert_eq!(f, f_score(&xr, &y, tau).unwrap());
        prop_assert!(f_score(&x, &y, tau * 1.5).unwrap() >= f);
    }
}

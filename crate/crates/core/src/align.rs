//! Detection → retrieval → placement.
//!
//! A placement rotates the canonical model by the box yaw plus a quarter turn
//! per front-face index and stretches it per axis so its tight box equals the
//! detection box.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::embedding::EmbeddingSpace;
use crate::geom::{normalize_angle, OrientedBox, PointCloud, Trs, Vec3};
use crate::library::CadLibrary;
use crate::metrics::PlacedPrediction;
use crate::training::Detection;
use crate::{Error, Result};

/// Extents below this are treated as degenerate when fitting scale.
pub const MIN_MODEL_EXTENT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedModel {
    pub model_id: String,
    pub category: String,
    pub trs: Trs,
    /// Index of the source detection in the input list.
    pub detection: usize,
    pub confidence: f64,
}

impl PlacedModel {
    pub fn to_prediction(&self) -> PlacedPrediction {
        PlacedPrediction {
            category: self.category.clone(),
            model_id: self.model_id.clone(),
            trs: self.trs,
            confidence: self.confidence,
        }
    }
}

/// Model yaw for a box whose `face`-th side is the front.
pub fn face_yaw(box_yaw: f64, face: usize) -> Result<f64> {
    if face > 3 {
        return Err(Error::InvalidInput(format!("face index {face} out of range 0..3")));
    }
    Ok(normalize_angle(box_yaw + face as f64 * FRAC_PI_2))
}

/// Per-axis model scale that makes a model of `extents` fill `box_size`.
/// Odd faces turn the model a quarter, so its x extent spans the box's y.
pub fn fit_scale(box_size: &Vec3, extents: &Vec3, face: usize) -> Result<Vec3> {
    if face > 3 {
        return Err(Error::InvalidInput(format!("face index {face} out of range 0..3")));
    }
    if extents.iter().any(|&e| !(e >= MIN_MODEL_EXTENT)) {
        return Err(Error::DegenerateExtent);
    }
    if box_size.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidInput("box size must be positive".into()));
    }
    let (bx, by) = if face % 2 == 1 {
        (box_size.y, box_size.x)
    } else {
        (box_size.x, box_size.y)
    };
    Ok(Vec3::new(bx / extents.x, by / extents.y, box_size.z / extents.z))
}

/// Placement of a canonical model (with axis-aligned bounds `model_min..model_max`)
/// that fills `bbox` with `face` in front.
pub fn placement_trs(bbox: &OrientedBox, model_min: &Vec3, model_max: &Vec3, face: usize) -> Result<Trs> {
    let extents = model_max - model_min;
    let scale = fit_scale(&bbox.size(), &extents, face)?;
    let yaw = face_yaw(bbox.yaw(), face)?;
    let unshifted = Trs::from_yaw(Vec3::zeros(), yaw, scale)?;
    let model_center = (model_min + model_max) * 0.5;
    unshifted.with_translation(bbox.center() - unshifted.apply_point(&model_center))
}

/// Retrieve the nearest model of the detection's predicted category and
/// place it in the detection box. `categories[i]` names class logit `i`.
pub fn place(
    det: &Detection,
    detection: usize,
    space: &EmbeddingSpace,
    library: &CadLibrary,
    categories: &[String],
) -> Result<PlacedModel> {
    let class = det
        .predicted_class()
        .ok_or_else(|| Error::InvalidInput("detection has no class logits".into()))?;
    let category = categories.get(class).ok_or_else(|| {
        Error::InvalidInput(format!(
            "class index {class} has no category name ({} known)",
            categories.len()
        ))
    })?;
    let neighbor = space.nearest(&det.embedding, Some(category))?;
    let model = library.get(&neighbor.model_id)?;
    let bounds = model.mesh.aabb().ok_or(Error::MeshDegenerate)?;
    let trs = placement_trs(&det.bbox, &bounds.min, &bounds.max, det.front_face())?;
    Ok(PlacedModel {
        model_id: neighbor.model_id,
        category: category.clone(),
        trs,
        detection,
        confidence: det.confidence(),
    })
}

#[derive(Debug)]
pub struct SceneReconstruction {
    /// Sorted by confidence, highest first; ties keep detection order.
    pub placed: Vec<PlacedModel>,
    /// Detections above the floor that could not be placed.
    pub failures: Vec<(usize, Error)>,
}

/// Place every detection whose confidence is at least `confidence_floor`.
/// No suppression of overlapping detections is performed.
pub fn reconstruct_scene(
    detections: &[Detection],
    space: &EmbeddingSpace,
    library: &CadLibrary,
    categories: &[String],
    confidence_floor: f64,
) -> SceneReconstruction {
    let results: Vec<(usize, Result<PlacedModel>)> = detections
        .par_iter()
        .enumerate()
        .filter(|(_, d)| d.confidence() >= confidence_floor)
        .map(|(i, d)| (i, place(d, i, space, library, categories)))
        .collect();
    let mut placed = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results {
        match r {
            Ok(p) => placed.push(p),
            Err(e) => failures.push((i, e)),
        }
    }
    placed.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    SceneReconstruction { placed, failures }
}

/// Box of a placed canonical model whose axis-aligned bounds are centered
/// on the origin with `extents`. The box yaw is the heading of the model's
/// x axis; only the yaw part of the rotation is represented.
pub fn model_box(trs: &Trs, extents: &Vec3) -> Result<OrientedBox> {
    let heading = trs.rotation() * Vec3::x();
    OrientedBox::new(
        trs.translation(),
        extents.component_mul(&trs.scale()),
        heading.y.atan2(heading.x),
    )
}

/// Labelled-foreground scan points inside the object's box (grown by
/// `margin` on every side), mapped back into the model's canonical frame.
/// Unlabelled scans use every point.
pub fn object_points_canonical(scan: &PointCloud, trs: &Trs, extents: &Vec3, margin: f64) -> Result<PointCloud> {
    let half = extents.component_mul(&trs.scale()) * 0.5 + Vec3::repeat(margin);
    let inv_rot = trs.rotation().inverse();
    let scale = trs.scale();
    let labels = scan.labels();
    let mut out = Vec::new();
    for (i, p) in scan.points().iter().enumerate() {
        if labels.is_some_and(|l| !l[i]) {
            continue;
        }
        let local = inv_rot * (p - trs.translation());
        if local.x.abs() <= half.x && local.y.abs() <= half.y && local.z.abs() <= half.z {
            out.push(local.component_div(&scale));
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCloud);
    }
    PointCloud::new(out)
}

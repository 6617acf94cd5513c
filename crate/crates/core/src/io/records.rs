//! Serialized record types. Records mirror the on-disk JSON layout and are
//! converted to and from domain types at the boundary.
//!
//! Rotations are stored as quaternions in `[w, x, y, z]` order.

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVec;
use crate::geom::{OrientedBox, Trs, Vec3};
use crate::metrics::{AccuracyReport, GroundTruthInstance, PlacedPrediction, SymmetryClass, REPORT_SCHEMA_VERSION};
use crate::training::{Detection, FeatureLevel};
use crate::{Error, Result};

use super::json::{from_versioned_str, to_canonical_string};

pub const ANNOTATION_SCHEMA_VERSION: u32 = 1;
pub const PREDICTION_SCHEMA_VERSION: u32 = 1;
pub const DETECTION_SCHEMA_VERSION: u32 = 1;

/// Stored quaternions are renormalized on load if their norm is within this
/// distance of 1 (rounding to 9 digits perturbs it slightly).
pub const STORED_QUATERNION_TOLERANCE: f64 = 1e-6;

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrsRecord {
    pub translation: [f64; 3],
    /// `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub scale: [f64; 3],
}

impl TrsRecord {
    pub fn from_trs(trs: &Trs) -> Self {
        TrsRecord {
            translation: arr(&trs.translation()),
            rotation: trs.rotation_wxyz(),
            scale: arr(&trs.scale()),
        }
    }

    pub fn to_trs(&self, location: &str) -> Result<Trs> {
        let [w, x, y, z] = self.rotation;
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > STORED_QUATERNION_TOLERANCE {
            return Err(Error::parse(
                format!("{location}.rotation"),
                format!("quaternion norm {norm} is not 1"),
            ));
        }
        Trs::from_unit(v3(self.translation), UnitQuaternion::from_quaternion(q), v3(self.scale))
            .map_err(|e| Error::parse(location, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationObject {
    pub category: String,
    pub model_id: String,
    pub trs: TrsRecord,
    /// One of `none`, `2fold`, `4fold`, `full`.
    pub symmetry: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneAnnotation {
    pub schema_version: u32,
    pub scene_id: String,
    pub objects: Vec<AnnotationObject>,
}

impl SceneAnnotation {
    pub fn from_instances(scene_id: impl Into<String>, instances: &[GroundTruthInstance]) -> Self {
        SceneAnnotation {
            schema_version: ANNOTATION_SCHEMA_VERSION,
            scene_id: scene_id.into(),
            objects: instances
                .iter()
                .map(|g| AnnotationObject {
                    category: g.category.clone(),
                    model_id: g.model_id.clone(),
                    trs: TrsRecord::from_trs(&g.trs),
                    symmetry: g.symmetry.as_str().to_string(),
                })
                .collect(),
        }
    }

    pub fn to_instances(&self) -> Result<Vec<GroundTruthInstance>> {
        self.objects
            .iter()
            .enumerate()
            .map(|(i, o)| {
                let loc = format!("objects[{i}]");
                let symmetry: SymmetryClass = o.symmetry.parse().map_err(|e| match e {
                    Error::Parse { message, .. } => Error::parse(format!("{loc}.symmetry"), message),
                    other => other,
                })?;
                Ok(GroundTruthInstance {
                    category: o.category.clone(),
                    model_id: o.model_id.clone(),
                    trs: o.trs.to_trs(&format!("{loc}.trs"))?,
                    symmetry,
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_versioned_str(text, ANNOTATION_SCHEMA_VERSION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub category: String,
    pub model_id: String,
    pub trs: TrsRecord,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePredictions {
    pub scene_id: String,
    pub predictions: Vec<PredictionRecord>,
}

impl ScenePredictions {
    pub fn from_predictions(scene_id: impl Into<String>, predictions: &[PlacedPrediction]) -> Self {
        ScenePredictions {
            scene_id: scene_id.into(),
            predictions: predictions
                .iter()
                .map(|p| PredictionRecord {
                    category: p.category.clone(),
                    model_id: p.model_id.clone(),
                    trs: TrsRecord::from_trs(&p.trs),
                    confidence: p.confidence,
                })
                .collect(),
        }
    }

    pub fn to_predictions(&self) -> Result<Vec<PlacedPrediction>> {
        self.predictions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let loc = format!("{}.predictions[{i}]", self.scene_id);
                if !p.confidence.is_finite() {
                    return Err(Error::parse(format!("{loc}.confidence"), "not finite"));
                }
                Ok(PlacedPrediction {
                    category: p.category.clone(),
                    model_id: p.model_id.clone(),
                    trs: p.trs.to_trs(&format!("{loc}.trs"))?,
                    confidence: p.confidence,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub schema_version: u32,
    pub scenes: Vec<ScenePredictions>,
}

impl PredictionSet {
    pub fn new(scenes: Vec<ScenePredictions>) -> Self {
        PredictionSet {
            schema_version: PREDICTION_SCHEMA_VERSION,
            scenes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_versioned_str(text, PREDICTION_SCHEMA_VERSION)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRecord {
    pub center: [f64; 3],
    pub size: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub location: [f64; 3],
    pub class_logits: Vec<f64>,
    pub bbox: BoxRecord,
    pub face_logits: [f64; 4],
    pub embedding: Vec<f32>,
    pub level: FeatureLevel,
}

impl DetectionRecord {
    pub fn from_detection(d: &Detection) -> Self {
        DetectionRecord {
            location: arr(&d.location),
            class_logits: d.class_logits.clone(),
            bbox: BoxRecord {
                center: arr(&d.bbox.center()),
                size: arr(&d.bbox.size()),
                yaw: d.bbox.yaw(),
            },
            face_logits: d.face_logits,
            embedding: d.embedding.as_slice().to_vec(),
            level: d.level,
        }
    }

    pub fn to_detection(&self, location: &str) -> Result<Detection> {
        let wrap = |e: Error| Error::parse(location, e.to_string());
        Ok(Detection {
            location: v3(self.location),
            class_logits: self.class_logits.clone(),
            bbox: OrientedBox::new(v3(self.bbox.center), v3(self.bbox.size), self.bbox.yaw).map_err(wrap)?,
            face_logits: self.face_logits,
            embedding: EmbeddingVec::new(self.embedding.clone()).map_err(wrap)?,
            level: self.level,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDetections {
    pub scene_id: String,
    pub detections: Vec<DetectionRecord>,
}

/// Detector output for a set of scenes. `categories[i]` names class logit `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSet {
    pub schema_version: u32,
    pub categories: Vec<String>,
    pub scenes: Vec<SceneDetections>,
}

impl DetectionSet {
    pub fn new(categories: Vec<String>, scenes: Vec<SceneDetections>) -> Self {
        DetectionSet {
            schema_version: DETECTION_SCHEMA_VERSION,
            categories,
            scenes,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        from_versioned_str(text, DETECTION_SCHEMA_VERSION)
    }
}

pub fn report_to_json(report: &AccuracyReport) -> Result<String> {
    to_canonical_string(report)
}

pub fn report_from_json(text: &str) -> Result<AccuracyReport> {
    from_versioned_str(text, REPORT_SCHEMA_VERSION)
}

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVec;
use crate::geom::{diou_3d, OrientedBox};
use crate::metrics::SymmetryClass;
use crate::{Error, Result};

use super::losses::{embedding_mse, focal_loss, front_face_ce};
use super::targets::{soften_front_face, AssignmentResult, Detection};

/// Supervision for one ground-truth object.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTarget {
    pub class_index: usize,
    pub bbox: OrientedBox,
    /// Hot index of the front-face target before symmetry softening.
    pub face: usize,
    pub symmetry: SymmetryClass,
    pub embedding: EmbeddingVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub classification: f64,
    pub bbox: f64,
    pub front_face: f64,
    pub embedding: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            classification: 1.0,
            bbox: 1.0,
            front_face: 1.0,
            embedding: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub focal_gamma: f64,
    pub focal_alpha: f64,
    pub weights: LossWeights,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            focal_gamma: 2.0,
            focal_alpha: 0.25,
            weights: LossWeights::default(),
        }
    }
}

/// Each term is already weighted and divided by `max(n_matched, 1)`; the
/// four terms sum to `total`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub classification: f64,
    pub bbox: f64,
    pub front_face: f64,
    pub embedding: f64,
    pub total: f64,
    pub n_matched: usize,
}

/// Detector loss: classification over every detection, plus box (DIoU),
/// front-face cross-entropy against the symmetry-softened target and
/// embedding MSE over matched detections, normalized by the match count.
pub fn total_loss(
    detections: &[Detection],
    targets: &[TrainingTarget],
    assignment: &AssignmentResult,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    if assignment.assigned.len() != detections.len() {
        return Err(Error::InvalidInput(format!(
            "assignment covers {} detections, got {}",
            assignment.assigned.len(),
            detections.len()
        )));
    }
    let (mut cls, mut bb, mut ff, mut emb) = (0.0, 0.0, 0.0, 0.0);
    let mut n_matched = 0;
    for (det, assigned) in detections.iter().zip(&assignment.assigned) {
        let target = match assigned {
            Some(g) => Some(
                targets
                    .get(*g)
                    .ok_or_else(|| Error::InvalidInput(format!("assignment references missing target {g}")))?,
            ),
            None => None,
        };
        let class = target.map(|t| t.class_index);
        cls += focal_loss(&det.class_logits, class, cfg.focal_gamma, cfg.focal_alpha)?.0;
        if let Some(t) = target {
            n_matched += 1;
            bb += diou_3d(&det.bbox, &t.bbox);
            if t.face > 3 {
                return Err(Error::InvalidTarget(format!("face index {} out of range", t.face)));
            }
            let mut hot = [0.0; 4];
            hot[t.face] = 1.0;
            ff += front_face_ce(&det.face_logits, &soften_front_face(hot, t.symmetry)?).0;
            emb += embedding_mse(&det.embedding.to_f64(), &t.embedding.to_f64())?.0;
        }
    }
    let norm = n_matched.max(1) as f64;
    let w = cfg.weights;
    let classification = w.classification * cls / norm;
    let bbox = w.bbox * bb / norm;
    let front_face = w.front_face * ff / norm;
    let embedding = w.embedding * emb / norm;
    Ok(LossBreakdown {
        classification,
        bbox,
        front_face,
        embedding,
        total: classification + bbox + front_face + embedding,
        n_matched,
    })
}

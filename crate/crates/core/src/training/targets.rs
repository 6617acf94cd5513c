use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingVec;
use crate::geom::{OrientedBox, Vec3};
use crate::metrics::SymmetryClass;
use crate::{Error, Result};

/// Number of nearest detections a ground-truth object may be assigned to.
pub const DEFAULT_ASSIGN_K: usize = 6;

/// Feature level a detection head output is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum FeatureLevel {
    /// Small objects.
    Two,
    /// Large objects.
    Three,
}

impl From<FeatureLevel> for u8 {
    fn from(l: FeatureLevel) -> u8 {
        match l {
            FeatureLevel::Two => 2,
            FeatureLevel::Three => 3,
        }
    }
}

impl TryFrom<u8> for FeatureLevel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            2 => Ok(FeatureLevel::Two),
            3 => Ok(FeatureLevel::Three),
            other => Err(format!("feature level must be 2 or 3, got {other}")),
        }
    }
}

/// One detection-head output at a sampled location.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub location: Vec3,
    /// One logit per category; probabilities are independent sigmoids.
    pub class_logits: Vec<f64>,
    pub bbox: OrientedBox,
    pub face_logits: [f64; 4],
    pub embedding: EmbeddingVec,
    pub level: FeatureLevel,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

impl Detection {
    pub fn class_probabilities(&self) -> Vec<f64> {
        self.class_logits.iter().map(|&x| sigmoid(x)).collect()
    }

    /// Index of the highest class logit (first on ties).
    pub fn predicted_class(&self) -> Option<usize> {
        argmax(&self.class_logits)
    }

    /// Highest class probability.
    pub fn confidence(&self) -> f64 {
        self.predicted_class().map_or(0.0, |c| sigmoid(self.class_logits[c]))
    }

    /// Index of the highest front-face logit (first on ties).
    pub fn front_face(&self) -> usize {
        argmax(&self.face_logits).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentResult {
    /// Ground-truth index per detection, `None` for background.
    pub assigned: Vec<Option<usize>>,
    pub n_matched: usize,
}

/// Detection `i` is assigned to its nearest ground-truth center iff it is
/// among that object's `k` closest detections. Distances are from detection
/// location to object center; ties resolve to the lower index.
pub fn assign_targets(detections: &[Detection], gt_centers: &[Vec3], k: usize) -> Result<AssignmentResult> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let mut eligible = vec![Vec::new(); gt_centers.len()];
    for (g, center) in gt_centers.iter().enumerate() {
        let mut by_dist: Vec<(f64, usize)> = detections
            .iter()
            .enumerate()
            .map(|(i, d)| ((d.location - center).norm(), i))
            .collect();
        by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        eligible[g] = by_dist.into_iter().take(k).map(|(_, i)| i).collect::<Vec<_>>();
    }
    let assigned: Vec<Option<usize>> = detections
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let nearest = gt_centers
                .iter()
                .enumerate()
                .map(|(g, c)| ((d.location - c).norm(), g))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))?
                .1;
            eligible[nearest].contains(&i).then_some(nearest)
        })
        .collect();
    let n_matched = assigned.iter().filter(|a| a.is_some()).count();
    Ok(AssignmentResult { assigned, n_matched })
}

/// Small classes (mean largest side below `threshold`) read level 2, the
/// rest level 3. A size exactly at the threshold goes to level 3.
pub fn level_for_class(mean_sizes: &BTreeMap<String, f64>, threshold: f64) -> Result<BTreeMap<String, FeatureLevel>> {
    mean_sizes
        .iter()
        .map(|(class, &size)| {
            if !(size > 0.0) {
                return Err(Error::InvalidInput(format!("mean size of `{class}` must be positive")));
            }
            let level = if size < threshold {
                FeatureLevel::Two
            } else {
                FeatureLevel::Three
            };
            Ok((class.clone(), level))
        })
        .collect()
}

fn symmetrize(f: &[f64; 4], sym: SymmetryClass) -> [f64; 4] {
    match sym {
        SymmetryClass::None => *f,
        SymmetryClass::TwoFold => std::array::from_fn(|i| 0.5 * (f[i] + f[(i + 2) % 4])),
        SymmetryClass::FourFold | SymmetryClass::Full => [0.25 * f.iter().sum::<f64>(); 4],
    }
}

/// Spreads a one-hot front-face target over the faces that are equivalent
/// under the object's symmetry: the opposite pair for 2-fold symmetry, all
/// four faces for 4-fold and full symmetry.
///
/// A target that was already softened for the same symmetry is returned
/// unchanged, so the operation is idempotent.
pub fn soften_front_face(target: [f64; 4], sym: SymmetryClass) -> Result<[f64; 4]> {
    let ones = target.iter().filter(|&&v| v == 1.0).count();
    let zeros = target.iter().filter(|&&v| v == 0.0).count();
    let one_hot = ones == 1 && zeros == 3;
    let sym_out = symmetrize(&target, sym);
    let is_distribution = target.iter().all(|&v| v >= 0.0) && (target.iter().sum::<f64>() - 1.0).abs() < 1e-12;
    let already_soft = sym != SymmetryClass::None
        && is_distribution
        && target.iter().zip(&sym_out).all(|(a, b)| (a - b).abs() < 1e-12);
    if one_hot {
        Ok(sym_out)
    } else if already_soft {
        Ok(target)
    } else {
        Err(Error::InvalidTarget(format!("{target:?} is not a one-hot face target")))
    }
}

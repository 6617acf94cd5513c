use std::fmt;
use std::str::FromStr;

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::geom::{Trs, Vec3};
use crate::{Error, Result};

/// Rotational symmetry of an object about the up axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "2fold")]
    TwoFold,
    #[serde(rename = "4fold")]
    FourFold,
    #[serde(rename = "full")]
    Full,
}

impl SymmetryClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SymmetryClass::None => "none",
            SymmetryClass::TwoFold => "2fold",
            SymmetryClass::FourFold => "4fold",
            SymmetryClass::Full => "full",
        }
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SymmetryClass::None),
            "2fold" => Ok(SymmetryClass::TwoFold),
            "4fold" => Ok(SymmetryClass::FourFold),
            "full" => Ok(SymmetryClass::Full),
            other => Err(Error::parse(
                "symmetry",
                format!("unknown symmetry `{other}` (expected none, 2fold, 4fold or full)"),
            )),
        }
    }
}

/// Thresholds and sampling parameters of the evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Meters.
    pub trans_thresh: f64,
    /// Degrees.
    pub rot_thresh: f64,
    /// Relative scale deviation.
    pub scale_thresh: f64,
    /// F-score distance threshold, in rescaled units.
    pub tau: f64,
    /// F-score acceptance threshold.
    pub mu: f64,
    pub fscore_samples: usize,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            trans_thresh: 0.20,
            rot_thresh: 20.0,
            scale_thresh: 0.20,
            tau: 0.5,
            mu: 0.7,
            fscore_samples: 2048,
            seed: 0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("trans_thresh", self.trans_thresh),
            ("rot_thresh", self.rot_thresh),
            ("scale_thresh", self.scale_thresh),
            ("tau", self.tau),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidInput(format!("mu must lie in (0, 1], got {}", self.mu)));
        }
        if self.fscore_samples < 16 {
            return Err(Error::InvalidInput(format!(
                "fscore_samples must be at least 16, got {}",
                self.fscore_samples
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthInstance {
    pub category: String,
    pub model_id: String,
    pub trs: Trs,
    pub symmetry: SymmetryClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacedPrediction {
    pub category: String,
    pub model_id: String,
    pub trs: Trs,
    pub confidence: f64,
}

/// Geodesic angle between two rotations in degrees.
fn geodesic_deg(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let rel = a.inverse() * b;
    let q = rel.quaternion();
    let v = q.imag().norm();
    (2.0 * v.atan2(q.w.abs())).to_degrees()
}

/// Rotation error in degrees, minimized over the object's up-axis symmetry
/// group. For [`SymmetryClass::Full`] only the tilt between the two rotated
/// up axes counts.
pub fn rotation_error_sym(pred: &UnitQuaternion<f64>, gt: &UnitQuaternion<f64>, sym: SymmetryClass) -> f64 {
    let folds = match sym {
        SymmetryClass::None => 1,
        SymmetryClass::TwoFold => 2,
        SymmetryClass::FourFold => 4,
        SymmetryClass::Full => {
            let up = Vec3::z();
            let (a, b) = (pred * up, gt * up);
            return a.cross(&b).norm().atan2(a.dot(&b)).to_degrees();
        }
    };
    (0..folds)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / folds as f64;
            let sym_rot = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), angle);
            geodesic_deg(pred, &(gt * sym_rot))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Mean over axes of `|s_pred / s_gt - 1|`.
pub fn scale_error(pred: &Vec3, gt: &Vec3) -> Result<f64> {
    if let Some(&s) = gt.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidScale(s));
    }
    Ok(pred.component_div(gt).iter().map(|r| (r - 1.0).abs()).sum::<f64>() / 3.0)
}

/// Whether a same-category prediction passes the translation, rotation and
/// scale thresholds (all strict).
pub fn alignment_correct(pred: &PlacedPrediction, gt: &GroundTruthInstance, cfg: &MetricConfig) -> Result<bool> {
    let scale_err = scale_error(&pred.trs.scale(), &gt.trs.scale())?;
    let trans_err = (pred.trs.translation() - gt.trs.translation()).norm();
    let rot_err = rotation_error_sym(&pred.trs.rotation(), &gt.trs.rotation(), gt.symmetry);
    Ok(trans_err < cfg.trans_thresh && rot_err < cfg.rot_thresh && scale_err < cfg.scale_thresh)
}

/// One prediction-to-ground-truth assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchRecord {
    pub pred: usize,
    pub gt: usize,
    pub correct: bool,
}

/// Greedy one-to-one matching of predictions to ground truth.
///
/// Predictions are visited in descending confidence (stable on input order).
/// Each claims, among unconsumed ground-truth instances of its category, the
/// nearest-center one passing `correct_fn`; failing that, the nearest-center
/// one as an incorrect match. Every ground-truth instance is consumed at most
/// once, so at most as many predictions per category count as there are
/// instances. `correct_fn(pred_idx, gt_idx)` is evaluated lazily in
/// nearest-first order.
pub fn match_predictions<F>(
    preds: &[PlacedPrediction],
    gts: &[GroundTruthInstance],
    mut correct_fn: F,
) -> Result<Vec<MatchRecord>>
where
    F: FnMut(usize, usize) -> Result<bool>,
{
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    let mut consumed = vec![false; gts.len()];
    let mut out = Vec::new();
    for p in order {
        let center = preds[p].trs.translation();
        let mut candidates: Vec<(f64, usize)> = gts
            .iter()
            .enumerate()
            .filter(|(g, gt)| !consumed[*g] && gt.category == preds[p].category)
            .map(|(g, gt)| ((gt.trs.translation() - center).norm(), g))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut chosen = MatchRecord {
            pred: p,
            gt: candidates[0].1,
            correct: false,
        };
        for &(_, g) in &candidates {
            if correct_fn(p, g)? {
                chosen.gt = g;
                chosen.correct = true;
                break;
            }
        }
        consumed[chosen.gt] = true;
        out.push(chosen);
    }
    Ok(out)
}

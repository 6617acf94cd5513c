use rand::seq::index::sample;

use crate::geom::PointCloud;
use crate::metrics::chamfer;
use crate::rng::rng_from_seed;
use crate::{Error, Result};

use super::targets::sigmoid;

/// Probability clamp for log terms on probability inputs.
pub const PROB_EPSILON: f64 = 1e-7;

pub const DEFAULT_TRIPLET_MARGIN: f64 = 0.1;

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Sigmoid focal loss summed over classes, treating each class as an
/// independent binary problem. `target = None` is background (all classes
/// negative). Returns the value and its gradient with respect to the logits.
pub fn focal_loss(logits: &[f64], target: Option<usize>, gamma: f64, alpha: f64) -> Result<(f64, Vec<f64>)> {
    if !(gamma >= 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "focal loss needs gamma >= 0 and alpha in (0,1), got {gamma}, {alpha}"
        )));
    }
    if let Some(t) = target {
        if t >= logits.len() {
            return Err(Error::InvalidInput(format!(
                "target class {t} out of range for {} logits",
                logits.len()
            )));
        }
    }
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (c, &x) in logits.iter().enumerate() {
        let p = sigmoid(x);
        let q = sigmoid(-x);
        if target == Some(c) {
            // -alpha (1-p)^gamma log p
            let w = alpha * q.powf(gamma);
            value += w * softplus(-x);
            grad.push(w * (-gamma * p * softplus(-x) - q));
        } else {
            // -(1-alpha) p^gamma log(1-p)
            let w = (1.0 - alpha) * p.powf(gamma);
            value += w * softplus(x);
            grad.push(w * (p + gamma * q * softplus(x)));
        }
    }
    Ok((value, grad))
}

/// Cross-entropy between `softmax(logits)` and a (softened) target
/// distribution. Gradient is `softmax(logits) * sum(target) - target`.
pub fn front_face_ce(logits: &[f64; 4], target: &[f64; 4]) -> (f64, [f64; 4]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum_exp: f64 = logits.iter().map(|x| (x - max).exp()).sum();
    let lse = max + sum_exp.ln();
    let mass: f64 = target.iter().sum();
    let value = target.iter().zip(logits).map(|(t, x)| t * (lse - x)).sum();
    let grad = std::array::from_fn(|i| (logits[i] - lse).exp() * mass - target[i]);
    (value, grad)
}

/// Mean squared error over components with gradient `2 (pred - target) / dim`.
pub fn embedding_mse(pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            found: pred.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("empty embedding".into()));
    }
    let n = pred.len() as f64;
    let value = pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let grad = pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect();
    Ok((value, grad))
}

/// Anchor / positive / negative embeddings with a hinge margin.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletBatch {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    pub margin: f64,
}

impl TripletBatch {
    pub fn new(anchor: Vec<f64>, positive: Vec<f64>, negative: Vec<f64>) -> Self {
        TripletBatch {
            anchor,
            positive,
            negative,
            margin: DEFAULT_TRIPLET_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletLoss {
    pub value: f64,
    pub grad_anchor: Vec<f64>,
    pub grad_positive: Vec<f64>,
    pub grad_negative: Vec<f64>,
}

/// `max(0, d²(A,P) + m - d²(A,N))` with squared L2 distances. The gradient
/// is zero when the hinge is inactive, including exactly at the hinge.
pub fn triplet_loss(batch: &TripletBatch) -> Result<TripletLoss> {
    let TripletBatch {
        anchor: a,
        positive: p,
        negative: n,
        margin,
    } = batch;
    for v in [p, n] {
        if v.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: v.len(),
            });
        }
    }
    if !(*margin > 0.0) {
        return Err(Error::InvalidInput(format!("margin must be positive, got {margin}")));
    }
    let d2 = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    let raw = d2(a, p) + margin - d2(a, n);
    let zeros = vec![0.0; a.len()];
    if raw <= 0.0 {
        return Ok(TripletLoss {
            value: 0.0,
            grad_anchor: zeros.clone(),
            grad_positive: zeros.clone(),
            grad_negative: zeros,
        });
    }
    Ok(TripletLoss {
        value: raw,
        grad_anchor: p.iter().zip(n).map(|(pi, ni)| 2.0 * (ni - pi)).collect(),
        grad_positive: a.iter().zip(p).map(|(ai, pi)| -2.0 * (ai - pi)).collect(),
        grad_negative: a.iter().zip(n).map(|(ai, ni)| 2.0 * (ai - ni)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegLoss {
    pub value: f64,
    /// Gradient with respect to each probability (zero outside the mask).
    pub gradient: Vec<f64>,
    /// Points that contributed to the loss.
    pub mask: Vec<bool>,
    /// False when one label class was absent and every point was used.
    pub balanced: bool,
}

/// Binary cross-entropy over foreground/background probabilities, with
/// foreground points randomly subsampled (seeded) down to the background
/// count when they outnumber it. Probabilities are clamped to
/// `[PROB_EPSILON, 1 - PROB_EPSILON]`.
pub fn seg_bce_balanced(probs: &[f64], labels: &[bool], seed: u64) -> Result<SegLoss> {
    if probs.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} probabilities for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!("probability {p} outside [0, 1]")));
    }
    let fg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let bg_count = labels.len() - fg.len();
    let balanced = !fg.is_empty() && bg_count > 0;
    let mut mask = vec![true; labels.len()];
    if balanced && fg.len() > bg_count {
        fg.iter().for_each(|&i| mask[i] = false);
        let mut rng = rng_from_seed(seed);
        for k in sample(&mut rng, fg.len(), bg_count) {
            mask[fg[k]] = true;
        }
    }
    let n_seg = mask.iter().filter(|&&m| m).count() as f64;
    let mut value = 0.0;
    let mut gradient = vec![0.0; probs.len()];
    for i in (0..probs.len()).filter(|&i| mask[i]) {
        let raw = probs[i];
        let x = raw.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON);
        let inside = x == raw;
        if labels[i] {
            value -= x.ln();
            if inside {
                gradient[i] = -1.0 / (x * n_seg);
            }
        } else {
            value -= (1.0 - x).ln();
            if inside {
                gradient[i] = 1.0 / ((1.0 - x) * n_seg);
            }
        }
    }
    Ok(SegLoss {
        value: value / n_seg,
        gradient,
        mask,
        balanced,
    })
}

/// Regression target for a predicted Chamfer distance between the positive
/// and negative CAD models.
#[derive(Debug, Clone, PartialEq)]
pub struct ChamferRegTarget {
    pub predicted: f64,
    pub positive_cloud: PointCloud,
    pub negative_cloud: PointCloud,
}

/// L1 error between a predicted Chamfer distance and the exact one.
pub fn chamfer_reg_loss(target: &ChamferRegTarget) -> Result<f64> {
    if !target.predicted.is_finite() {
        return Err(Error::InvalidInput("predicted Chamfer distance is not finite".into()));
    }
    Ok((target.predicted - chamfer(&target.positive_cloud, &target.negative_cloud)?).abs())
}

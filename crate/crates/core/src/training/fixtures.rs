//! Seeded loss fixtures (inputs, values and analytic gradients) for
//! regression-testing external training code.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{diou_3d_with_grad, OrientedBox, Vec3};
use crate::rng::{derive_seed, rng_from_seed, Rng as SeededRng};
use crate::Result;

use super::losses::{embedding_mse, focal_loss, front_face_ce, seg_bce_balanced, triplet_loss, TripletBatch};

pub const FIXTURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalCase {
    pub logits: Vec<f64>,
    pub target: Option<usize>,
    pub gamma: f64,
    pub alpha: f64,
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontFaceCase {
    pub logits: [f64; 4],
    pub target: [f64; 4],
    pub value: f64,
    pub gradient: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseCase {
    pub pred: Vec<f64>,
    pub target: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletCase {
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
    pub margin: f64,
    pub value: f64,
    pub grad_anchor: Vec<f64>,
    pub grad_positive: Vec<f64>,
    pub grad_negative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegCase {
    pub probs: Vec<f64>,
    pub labels: Vec<bool>,
    pub seed: u64,
    pub mask: Vec<bool>,
    pub value: f64,
    pub gradient: Vec<f64>,
}

/// Box parameters are `[cx, cy, cz, sx, sy, sz, yaw]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiouCase {
    pub pred: [f64; 7],
    pub gt: [f64; 7],
    pub value: f64,
    pub gradient: [f64; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossFixtures {
    pub schema_version: u32,
    pub seed: u64,
    pub focal: Vec<FocalCase>,
    pub front_face: Vec<FrontFaceCase>,
    pub embedding_mse: Vec<MseCase>,
    pub triplet: Vec<TripletCase>,
    pub segmentation: Vec<SegCase>,
    pub diou: Vec<DiouCase>,
}

fn normal_vec(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

fn random_box(rng: &mut SeededRng, near: Option<&OrientedBox>) -> OrientedBox {
    let base = near.map_or(Vec3::zeros(), |b| b.center());
    let spread = if near.is_some() { 0.3 } else { 1.0 };
    let center = base
        + Vec3::new(
            (rng.random::<f64>() - 0.5) * spread,
            (rng.random::<f64>() - 0.5) * spread,
            (rng.random::<f64>() - 0.5) * spread,
        );
    let size = Vec3::new(
        0.5 + rng.random::<f64>(),
        0.5 + rng.random::<f64>(),
        0.5 + rng.random::<f64>(),
    );
    OrientedBox::new(center, size, (rng.random::<f64>() * 2.0 - 1.0) * std::f64::consts::PI).unwrap()
}

fn box_params(b: &OrientedBox) -> [f64; 7] {
    [
        b.center().x,
        b.center().y,
        b.center().z,
        b.size().x,
        b.size().y,
        b.size().z,
        b.yaw(),
    ]
}

/// `count` seeded random cases per loss.
pub fn generate_loss_fixtures(seed: u64, count: usize) -> Result<LossFixtures> {
    let mut rng = rng_from_seed(seed);
    let mut fx = LossFixtures {
        schema_version: FIXTURE_SCHEMA_VERSION,
        seed,
        focal: Vec::new(),
        front_face: Vec::new(),
        embedding_mse: Vec::new(),
        triplet: Vec::new(),
        segmentation: Vec::new(),
        diou: Vec::new(),
    };
    for i in 0..count {
        let logits = normal_vec(&mut rng, 5, 4.0);
        let target = if rng.random_bool(0.3) {
            None
        } else {
            Some(rng.random_range(0..5))
        };
        let (value, gradient) = focal_loss(&logits, target, 2.0, 0.25)?;
        fx.focal.push(FocalCase {
            logits,
            target,
            gamma: 2.0,
            alpha: 0.25,
            value,
            gradient,
        });

        let logits: [f64; 4] = normal_vec(&mut rng, 4, 3.0).try_into().unwrap();
        let mut target = [0.0; 4];
        target[rng.random_range(0..4)] = 1.0;
        let (value, gradient) = front_face_ce(&logits, &target);
        fx.front_face.push(FrontFaceCase {
            logits,
            target,
            value,
            gradient,
        });

        let pred = normal_vec(&mut rng, 8, 1.0);
        let target = normal_vec(&mut rng, 8, 1.0);
        let (value, gradient) = embedding_mse(&pred, &target)?;
        fx.embedding_mse.push(MseCase {
            pred,
            target,
            value,
            gradient,
        });

        let batch = TripletBatch::new(
            normal_vec(&mut rng, 8, 0.3),
            normal_vec(&mut rng, 8, 0.3),
            normal_vec(&mut rng, 8, 0.3),
        );
        let t = triplet_loss(&batch)?;
        fx.triplet.push(TripletCase {
            anchor: batch.anchor,
            positive: batch.positive,
            negative: batch.negative,
            margin: batch.margin,
            value: t.value,
            grad_anchor: t.grad_anchor,
            grad_positive: t.grad_positive,
            grad_negative: t.grad_negative,
        });

        let n = 16;
        let probs: Vec<f64> = (0..n).map(|_| 0.05 + 0.9 * rng.random::<f64>()).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
        let seg_seed = derive_seed(seed, i as u64);
        let s = seg_bce_balanced(&probs, &labels, seg_seed)?;
        fx.segmentation.push(SegCase {
            probs,
            labels,
            seed: seg_seed,
            mask: s.mask,
            value: s.value,
            gradient: s.gradient,
        });

        let gt = random_box(&mut rng, None);
        let pred = random_box(&mut rng, Some(&gt));
        let (value, gradient) = diou_3d_with_grad(&pred, &gt);
        fx.diou.push(DiouCase {
            pred: box_params(&pred),
            gt: box_params(&gt),
            value,
            gradient,
        });
    }
    Ok(fx)
}

//! Independent oracles shared by the integration tests and the acceptance
//! suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use cadalign::geom::{box_corners, OrientedBox, Trs, Vec3};
use cadalign::metrics::{GroundTruthInstance, MatchRecord, PlacedPrediction, SymmetryClass};
use cadalign::rng::rng_from_seed;
use rand::Rng;

// Box volume by rejection sampling.

pub fn contains(b: &OrientedBox, p: &Vec3) -> bool {
    let d = p - b.center();
    let (s, c) = b.yaw().sin_cos();
    let lx = c * d.x + s * d.y;
    let ly = -s * d.x + c * d.y;
    let h = b.size() * 0.5;
    lx.abs() <= h.x && ly.abs() <= h.y && d.z.abs() <= h.z
}

/// Uniform samples in the bounding box of both boxes' corners.
pub fn monte_carlo_iou(a: &OrientedBox, b: &OrientedBox, n: usize, seed: u64) -> f64 {
    let corners: Vec<Vec3> = box_corners(a).into_iter().chain(box_corners(b)).collect();
    let lo = corners.iter().fold(Vec3::repeat(f64::INFINITY), |m, c| m.inf(c));
    let hi = corners.iter().fold(Vec3::repeat(f64::NEG_INFINITY), |m, c| m.sup(c));
    let mut rng = rng_from_seed(seed);
    let (mut inter, mut union) = (0usize, 0usize);
    for _ in 0..n {
        let p = Vec3::new(
            rng.random_range(lo.x..hi.x),
            rng.random_range(lo.y..hi.y),
            rng.random_range(lo.z..hi.z),
        );
        let (ia, ib) = (contains(a, &p), contains(b, &p));
        inter += (ia && ib) as usize;
        union += (ia || ib) as usize;
    }
    inter as f64 / union as f64
}

pub fn random_box_pair(seed: u64) -> (OrientedBox, OrientedBox) {
    let mut rng = rng_from_seed(seed);
    let one = |rng: &mut cadalign::rng::Rng, spread: f64| {
        OrientedBox::new(
            Vec3::new(
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
            ),
            Vec3::new(
                rng.random_range(0.3..2.0),
                rng.random_range(0.3..2.0),
                rng.random_range(0.3..2.0),
            ),
            rng.random_range(-PI..PI),
        )
        .unwrap()
    };
    let a = one(&mut rng, 0.3);
    let b = one(&mut rng, 0.6);
    (a, b)
}

// Finite differences.

pub const STEP: f64 = 1e-5;
pub const CASES: u64 = 100;

/// Max-norm error relative to the larger gradient (floored so that
/// near-zero gradients are compared absolutely).
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs())
        .fold(0.0, f64::max);
    let scale = analytic.iter().chain(numeric).map(|v| v.abs()).fold(1e-3, f64::max);
    diff / scale
}

pub fn central_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut hi = x.to_vec();
            let mut lo = x.to_vec();
            hi[i] += STEP;
            lo[i] -= STEP;
            (f(&hi) - f(&lo)) / (2.0 * STEP)
        })
        .collect()
}

pub fn uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

// Exhaustive matching.

pub const CATEGORIES: [&str; 2] = ["chair", "table"];

pub fn yaw_trs(x: f64, y: f64, yaw: f64, s: f64) -> Trs {
    Trs::from_yaw(Vec3::new(x, y, 0.0), yaw, Vec3::repeat(s)).unwrap()
}

pub fn random_scene(seed: u64) -> (Vec<PlacedPrediction>, Vec<GroundTruthInstance>) {
    let mut rng = rng_from_seed(seed);
    let mut gts = Vec::new();
    let mut preds = Vec::new();
    for cat in CATEGORIES {
        for _ in 0..rng.random_range(0..=4) {
            gts.push(GroundTruthInstance {
                category: cat.into(),
                model_id: "m".into(),
                trs: yaw_trs(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(-0.5..0.5),
                    1.0,
                ),
                symmetry: SymmetryClass::None,
            });
        }
        for _ in 0..rng.random_range(0..=4) {
            // Coarse confidences make ties common.
            let confidence = rng.random_range(0..4) as f64 / 4.0;
            preds.push(PlacedPrediction {
                category: cat.into(),
                model_id: "m".into(),
                trs: yaw_trs(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(0.85..1.15),
                ),
                confidence,
            });
        }
    }
    (preds, gts)
}

/// Preference of prediction `p` for ground truth `g`: correct beats
/// incorrect, then nearer, then lower index. Smaller is better.
pub fn preference(p: &PlacedPrediction, g: &GroundTruthInstance, gi: usize, correct: bool) -> (bool, f64, usize) {
    (!correct, (p.trs.translation() - g.trs.translation()).norm(), gi)
}

/// Enumerates every injective assignment of predictions (in descending
/// confidence, ties by input order) to same-category ground truth, where a
/// prediction may stay unassigned only when no same-category ground truth is
/// free, and returns the one whose sequence of preferences is
/// lexicographically best.
pub fn exhaustive_matching(
    preds: &[PlacedPrediction],
    gts: &[GroundTruthInstance],
    correct: &dyn Fn(usize, usize) -> bool,
) -> Vec<MatchRecord> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .unwrap()
            .then(a.cmp(&b))
    });

    type Key = Vec<(bool, f64, usize)>;
    #[allow(clippy::too_many_arguments)]
    fn search(
        k: usize,
        order: &[usize],
        preds: &[PlacedPrediction],
        gts: &[GroundTruthInstance],
        correct: &dyn Fn(usize, usize) -> bool,
        used: &mut Vec<bool>,
        key: &mut Key,
        chosen: &mut Vec<MatchRecord>,
        best: &mut Option<(Key, Vec<MatchRecord>)>,
    ) {
        if k == order.len() {
            let better = match best {
                None => true,
                Some((b, _)) => key.as_slice().partial_cmp(b.as_slice()) == Some(std::cmp::Ordering::Less),
            };
            if better {
                *best = Some((key.clone(), chosen.clone()));
            }
            return;
        }
        let p = order[k];
        let free: Vec<usize> = (0..gts.len())
            .filter(|&g| !used[g] && gts[g].category == preds[p].category)
            .collect();
        if free.is_empty() {
            search(k + 1, order, preds, gts, correct, used, key, chosen, best);
            return;
        }
        for g in free {
            let c = correct(p, g);
            used[g] = true;
            key.push(preference(&preds[p], &gts[g], g, c));
            chosen.push(MatchRecord {
                pred: p,
                gt: g,
                correct: c,
            });
            search(k + 1, order, preds, gts, correct, used, key, chosen, best);
            chosen.pop();
            key.pop();
            used[g] = false;
        }
    }

    let mut best = None;
    search(
        0,
        &order,
        preds,
        gts,
        correct,
        &mut vec![false; gts.len()],
        &mut Vec::new(),
        &mut Vec::new(),
        &mut best,
    );
    best.map(|(_, m)| m).unwrap_or_default()
}

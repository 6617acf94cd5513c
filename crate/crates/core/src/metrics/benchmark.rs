use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geom::{sample_surface, Vec3};
use crate::library::CadLibrary;
use crate::rng::derive_seed;
use crate::Result;

use super::pointset::rescaled_f_score_from_samples;
use super::protocol::{alignment_correct, match_predictions, GroundTruthInstance, MetricConfig, PlacedPrediction};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// F-score acceptance thresholds always reported alongside `cfg.mu`.
pub const MU_SWEEP: [f64; 3] = [0.5, 0.7, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkScene {
    pub scene_id: String,
    pub predictions: Vec<PlacedPrediction>,
    pub ground_truth: Vec<GroundTruthInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTable {
    pub per_class: BTreeMap<String, ClassAccuracy>,
    /// Correct matches over all ground-truth instances.
    pub instance: f64,
    /// Unweighted mean over classes with at least one instance.
    pub class_mean: f64,
}

impl AccuracyTable {
    fn from_counts(correct: &BTreeMap<String, usize>, totals: &BTreeMap<String, usize>) -> Self {
        let mut per_class = BTreeMap::new();
        let (mut sum_correct, mut sum_total) = (0, 0);
        for (class, &total) in totals {
            let c = correct.get(class).copied().unwrap_or(0);
            sum_correct += c;
            sum_total += total;
            per_class.insert(
                class.clone(),
                ClassAccuracy {
                    correct: c,
                    total,
                    accuracy: ratio(c, total),
                },
            );
        }
        let populated: Vec<f64> = per_class.values().filter(|c| c.total > 0).map(|c| c.accuracy).collect();
        let class_mean = if populated.is_empty() {
            0.0
        } else {
            populated.iter().sum::<f64>() / populated.len() as f64
        };
        AccuracyTable {
            per_class,
            instance: ratio(sum_correct, sum_total),
            class_mean,
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuSweepEntry {
    pub mu: f64,
    pub reconstruction: AccuracyTable,
    pub shape: AccuracyTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub schema_version: u32,
    pub config: MetricConfig,
    pub scenes: usize,
    pub alignment: AccuracyTable,
    /// At `config.mu`.
    pub reconstruction: AccuracyTable,
    /// At `config.mu`.
    pub shape: AccuracyTable,
    pub mu_sweep: Vec<MuSweepEntry>,
}

#[derive(Default)]
struct SceneCounts {
    totals: BTreeMap<String, usize>,
    alignment: BTreeMap<String, usize>,
    reconstruction: Vec<BTreeMap<String, usize>>,
    shape: Vec<BTreeMap<String, usize>>,
}

/// Runs the full protocol over every scene.
///
/// Scenes are evaluated in parallel; each scene draws its F-score samples
/// from `derive_seed(cfg.seed, scene_index)` so the report does not depend
/// on scheduling.
pub fn evaluate_benchmark(
    scenes: &[BenchmarkScene],
    library: &CadLibrary,
    cfg: &MetricConfig,
) -> Result<AccuracyReport> {
    cfg.validate()?;
    for scene in scenes {
        let ids = scene.predictions.iter().map(|p| &p.model_id);
        for id in ids.chain(scene.ground_truth.iter().map(|g| &g.model_id)) {
            library.get(id)?;
        }
    }
    let mut mus: Vec<f64> = MU_SWEEP.to_vec();
    if !mus.contains(&cfg.mu) {
        mus.push(cfg.mu);
    }
    mus.sort_by(f64::total_cmp);

    let per_scene: Vec<Result<SceneCounts>> = scenes
        .par_iter()
        .enumerate()
        .map(|(i, s)| evaluate_scene(s, library, cfg, &mus, derive_seed(cfg.seed, i as u64)))
        .collect();

    let mut totals = BTreeMap::new();
    let mut alignment = BTreeMap::new();
    let mut recon = vec![BTreeMap::new(); mus.len()];
    let mut shape = vec![BTreeMap::new(); mus.len()];
    for counts in per_scene {
        let counts = counts?;
        merge(&mut totals, &counts.totals);
        merge(&mut alignment, &counts.alignment);
        for (k, m) in counts.reconstruction.iter().enumerate() {
            merge(&mut recon[k], m);
        }
        for (k, m) in counts.shape.iter().enumerate() {
            merge(&mut shape[k], m);
        }
    }

    let table_at = |tables: &[BTreeMap<String, usize>], mu: f64| {
        let k = mus.iter().position(|&m| m == mu).expect("mu in sweep");
        AccuracyTable::from_counts(&tables[k], &totals)
    };
    Ok(AccuracyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: *cfg,
        scenes: scenes.len(),
        alignment: AccuracyTable::from_counts(&alignment, &totals),
        reconstruction: table_at(&recon, cfg.mu),
        shape: table_at(&shape, cfg.mu),
        mu_sweep: MU_SWEEP
            .iter()
            .map(|&mu| MuSweepEntry {
                mu,
                reconstruction: table_at(&recon, mu),
                shape: table_at(&shape, mu),
            })
            .collect(),
    })
}

fn merge(into: &mut BTreeMap<String, usize>, from: &BTreeMap<String, usize>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

fn evaluate_scene(
    scene: &BenchmarkScene,
    library: &CadLibrary,
    cfg: &MetricConfig,
    mus: &[f64],
    seed: u64,
) -> Result<SceneCounts> {
    let preds = &scene.predictions;
    let gts = &scene.ground_truth;
    let mut counts = SceneCounts::default();
    for g in gts {
        *counts.totals.entry(g.category.clone()).or_default() += 1;
    }
    let tally = |matches: &[super::MatchRecord]| {
        let mut m = BTreeMap::new();
        for r in matches.iter().filter(|r| r.correct) {
            *m.entry(gts[r.gt].category.clone()).or_default() += 1;
        }
        m
    };

    let aligned = match_predictions(preds, gts, |p, g| alignment_correct(&preds[p], &gts[g], cfg))?;
    counts.alignment = tally(&aligned);

    let mut samples: HashMap<&str, Vec<Vec3>> = HashMap::new();
    for id in preds.iter().map(|p| &p.model_id).chain(gts.iter().map(|g| &g.model_id)) {
        if !samples.contains_key(id.as_str()) {
            let cloud = sample_surface(&library.get(id)?.mesh, cfg.fscore_samples, seed)?;
            samples.insert(id.as_str(), cloud.into_parts().0);
        }
    }
    // F-scores are cached per (prediction, ground truth) pair and reused
    // across mu thresholds.
    let mut recon_cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut shape_cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut fscore = |p: usize, g: usize, shape: bool| -> Result<f64> {
        let cache = if shape { &mut shape_cache } else { &mut recon_cache };
        if let Some(&f) = cache.get(&(p, g)) {
            return Ok(f);
        }
        let pred_pts = &samples[preds[p].model_id.as_str()];
        let gt_pts = &samples[gts[g].model_id.as_str()];
        let gt_model = &library.get(&gts[g].model_id)?.mesh;
        let pred_trs = if shape { &gts[g].trs } else { &preds[p].trs };
        let f = rescaled_f_score_from_samples(pred_pts, pred_trs, gt_pts, &gts[g].trs, gt_model, cfg.tau)?.f_score;
        cache.insert((p, g), f);
        Ok(f)
    };

    for &mu in mus {
        let m = match_predictions(preds, gts, |p, g| Ok(fscore(p, g, false)? >= mu))?;
        counts.reconstruction.push(tally(&m));
        let m = match_predictions(preds, gts, |p, g| Ok(fscore(p, g, true)? >= mu))?;
        counts.shape.push(tally(&m));
    }
    Ok(counts)
}

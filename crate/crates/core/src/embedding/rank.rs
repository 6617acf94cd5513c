use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::geom::{sample_surface, Trs, Vec3};
use crate::library::CadLibrary;
use crate::metrics::{rescaled_f_score_from_samples, MetricConfig};
use crate::rng::rng_from_seed;
use crate::{Error, Result};

use super::{EmbeddingSpace, EmbeddingVec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankAccuracy {
    pub rank: usize,
    pub accuracy: f64,
}

/// Model-frame surface samples, drawn once per model with `cfg.seed`.
struct SampleCache<'a> {
    library: &'a CadLibrary,
    cfg: &'a MetricConfig,
    samples: HashMap<String, Vec<Vec3>>,
}

impl<'a> SampleCache<'a> {
    fn new(library: &'a CadLibrary, cfg: &'a MetricConfig) -> Self {
        SampleCache {
            library,
            cfg,
            samples: HashMap::new(),
        }
    }

    /// Shape-accuracy test: F-score with both models at the same placement.
    fn shape_match(&mut self, retrieved: &str, gt: &str) -> Result<bool> {
        for id in [retrieved, gt] {
            if !self.samples.contains_key(id) {
                let mesh = &self.library.get(id)?.mesh;
                let pts = sample_surface(mesh, self.cfg.fscore_samples, self.cfg.seed)?
                    .into_parts()
                    .0;
                self.samples.insert(id.to_string(), pts);
            }
        }
        let identity = Trs::identity();
        let f = rescaled_f_score_from_samples(
            &self.samples[retrieved],
            &identity,
            &self.samples[gt],
            &identity,
            &self.library.get(gt)?.mesh,
            self.cfg.tau,
        )?;
        Ok(f.f_score >= self.cfg.mu)
    }
}

/// Shape accuracy when every query retrieves its `N`-th nearest model of the
/// ground-truth category, for each `N` in `ranks`. When a category holds
/// fewer than `N` models the farthest one is used.
pub fn rank_shape_accuracy(
    space: &EmbeddingSpace,
    queries: &[(EmbeddingVec, String)],
    library: &CadLibrary,
    ranks: &[usize],
    cfg: &MetricConfig,
) -> Result<Vec<RankAccuracy>> {
    cfg.validate()?;
    if ranks.contains(&0) {
        return Err(Error::InvalidInput("ranks start at 1".into()));
    }
    let max_rank = ranks.iter().copied().max().unwrap_or(1);
    let mut cache = SampleCache::new(library, cfg);
    let mut correct = vec![0usize; ranks.len()];
    for (query, gt_id) in queries {
        let category = &library.get(gt_id)?.category;
        let neighbors = space.knn(query, max_rank, Some(category))?;
        for (k, &rank) in ranks.iter().enumerate() {
            let pick = &neighbors[rank.min(neighbors.len()) - 1];
            if cache.shape_match(&pick.model_id, gt_id)? {
                correct[k] += 1;
            }
        }
    }
    Ok(ranks
        .iter()
        .zip(correct)
        .map(|(&rank, c)| RankAccuracy {
            rank,
            accuracy: if queries.is_empty() {
                0.0
            } else {
                c as f64 / queries.len() as f64
            },
        })
        .collect())
}

/// Baseline: shape accuracy when each query retrieves a uniformly random
/// model of its ground-truth category.
pub fn random_rank_shape_accuracy(
    space: &EmbeddingSpace,
    queries: &[(EmbeddingVec, String)],
    library: &CadLibrary,
    cfg: &MetricConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut cache = SampleCache::new(library, cfg);
    let mut correct = 0usize;
    for (_, gt_id) in queries {
        let category = &library.get(gt_id)?.category;
        let pool: Vec<&str> = space
            .entries()
            .iter()
            .filter(|e| &e.category == category)
            .map(|e| e.model_id.as_str())
            .collect();
        if pool.is_empty() {
            return Err(Error::NoCandidates {
                category: Some(category.clone()),
            });
        }
        let pick = pool[rng.random_range(0..pool.len())];
        if cache.shape_match(pick, gt_id)? {
            correct += 1;
        }
    }
    Ok(if queries.is_empty() {
        0.0
    } else {
        correct as f64 / queries.len() as f64
    })
}

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::{Error, Result};

pub const DEFAULT_EMBEDDING_DIM: usize = 256;

/// Fixed-length embedding vector stored as 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVec(Vec<f32>);

impl EmbeddingVec {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("embedding component {i} is not finite")));
        }
        Ok(EmbeddingVec(values))
    }

    pub fn from_f64(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| v as f32).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVec(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }

    /// Squared L2 distance accumulated in `f64`.
    pub fn distance_squared(&self, other: &EmbeddingVec) -> f64 {
        squared_l2(&self.0, &other.0)
    }
}

fn squared_l2(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEntry {
    pub model_id: String,
    pub category: String,
    pub vector: EmbeddingVec,
}

/// Retrieval result. `distance` is the (non-squared) L2 distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub model_id: String,
    pub category: String,
    pub distance: f64,
}

/// Exact brute-force embedding store. Ties in distance resolve to the
/// lexicographically smallest model id, so results do not depend on
/// insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    dim: usize,
    entries: Vec<EmbeddingEntry>,
    index: HashMap<String, usize>,
}

impl EmbeddingSpace {
    pub fn new(dim: usize) -> Self {
        EmbeddingSpace {
            dim,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[EmbeddingEntry] {
        &self.entries
    }

    pub fn get(&self, model_id: &str) -> Option<&EmbeddingEntry> {
        self.index.get(model_id).map(|&i| &self.entries[i])
    }

    pub fn insert(
        &mut self,
        model_id: impl Into<String>,
        category: impl Into<String>,
        vector: EmbeddingVec,
    ) -> Result<()> {
        let model_id = model_id.into();
        if vector.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.dim(),
            });
        }
        if self.index.contains_key(&model_id) {
            return Err(Error::DuplicateModel(model_id));
        }
        self.index.insert(model_id.clone(), self.entries.len());
        self.entries.push(EmbeddingEntry {
            model_id,
            category: category.into(),
            vector,
        });
        Ok(())
    }

    fn check_query(&self, query: &EmbeddingVec) -> Result<()> {
        if query.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        Ok(())
    }

    fn candidates<'a>(&'a self, category: Option<&'a str>) -> impl Iterator<Item = &'a EmbeddingEntry> + 'a {
        self.entries
            .iter()
            .filter(move |e| category.is_none_or(|c| e.category == c))
    }

    /// Number of entries of `category` (all entries if `None`).
    pub fn pool_size(&self, category: Option<&str>) -> usize {
        self.candidates(category).count()
    }

    pub fn nearest(&self, query: &EmbeddingVec, category: Option<&str>) -> Result<Neighbor> {
        self.check_query(query)?;
        let mut best: Option<(f64, &EmbeddingEntry)> = None;
        for e in self.candidates(category) {
            let d = squared_l2(query.as_slice(), e.vector.as_slice());
            let better = match best {
                None => true,
                Some((bd, be)) => match d.total_cmp(&bd) {
                    Ordering::Less => true,
                    Ordering::Equal => e.model_id < be.model_id,
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((d, e));
            }
        }
        let (d, e) = best.ok_or_else(|| no_candidates(category))?;
        Ok(Neighbor {
            model_id: e.model_id.clone(),
            category: e.category.clone(),
            distance: d.sqrt(),
        })
    }

    /// Up to `k` nearest entries in non-decreasing distance.
    pub fn knn(&self, query: &EmbeddingVec, k: usize, category: Option<&str>) -> Result<Vec<Neighbor>> {
        self.check_query(query)?;
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        let mut scored: Vec<(f64, &EmbeddingEntry)> = self
            .candidates(category)
            .map(|e| (squared_l2(query.as_slice(), e.vector.as_slice()), e))
            .collect();
        if scored.is_empty() {
            return Err(no_candidates(category));
        }
        let by_rank = |a: &(f64, &EmbeddingEntry), b: &(f64, &EmbeddingEntry)| {
            a.0.total_cmp(&b.0).then_with(|| a.1.model_id.cmp(&b.1.model_id))
        };
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, by_rank);
            scored.truncate(k);
        }
        scored.sort_by(by_rank);
        Ok(scored
            .into_iter()
            .map(|(d, e)| Neighbor {
                model_id: e.model_id.clone(),
                category: e.category.clone(),
                distance: d.sqrt(),
            })
            .collect())
    }
}

fn no_candidates(category: Option<&str>) -> Error {
    Error::NoCandidates {
        category: category.map(str::to_string),
    }
}

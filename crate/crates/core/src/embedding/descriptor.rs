use rand_distr::{Distribution, StandardNormal};

use crate::geom::{normalize_unit_cube, sample_surface, PointCloud};
use crate::library::CadLibrary;
use crate::rng::{derive_seed, rng_from_seed};
use crate::Result;

use super::{EmbeddingSpace, EmbeddingVec};

/// Surface samples drawn per CAD model when building a descriptor space.
pub const DESCRIPTOR_SAMPLES: usize = 1024;

/// Deterministic hand-crafted shape descriptor: the point cloud is
/// normalized to the unit cube, binned into a `g³` occupancy histogram
/// (`g³ >= dim`, normalized by point count) and projected to `dim`
/// components by a fixed Gaussian matrix drawn from the seed.
///
/// This is a stand-in for a learned encoder. It makes retrieval testable
/// end-to-end but carries no learned invariances beyond translation and
/// uniform scale.
#[derive(Debug, Clone)]
pub struct GeometricDescriptor {
    dim: usize,
    grid: usize,
    projection: Vec<f64>,
}

impl GeometricDescriptor {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "descriptor dimension must be positive");
        let mut grid = 1;
        while grid * grid * grid < dim {
            grid += 1;
        }
        let cells = grid * grid * grid;
        let mut rng = rng_from_seed(seed);
        let projection = (0..dim * cells).map(|_| StandardNormal.sample(&mut rng)).collect();
        GeometricDescriptor { dim, grid, projection }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn describe(&self, cloud: &PointCloud) -> Result<EmbeddingVec> {
        let (normalized, _) = normalize_unit_cube(cloud)?;
        let g = self.grid;
        let mut counts = vec![0u32; g * g * g];
        for p in normalized.points() {
            let cell = |c: f64| (((c + 0.5) * g as f64).floor().max(0.0) as usize).min(g - 1);
            counts[(cell(p.z) * g + cell(p.y)) * g + cell(p.x)] += 1;
        }
        let n = normalized.len() as f64;
        let cells = counts.len();
        let values = (0..self.dim)
            .map(|d| {
                let row = &self.projection[d * cells..(d + 1) * cells];
                counts
                    .iter()
                    .zip(row)
                    .filter(|(&c, _)| c > 0)
                    .map(|(&c, w)| w * (c as f64 / n))
                    .sum::<f64>() as f32
            })
            .collect();
        EmbeddingVec::new(values)
    }
}

pub fn geometric_descriptor(cloud: &PointCloud, dim: usize, seed: u64) -> Result<EmbeddingVec> {
    GeometricDescriptor::new(dim, seed).describe(cloud)
}

/// Embeds every library model with the geometric descriptor. Model `i` is
/// sampled with `derive_seed(seed, i)`; all models share the projection drawn
/// from `seed`.
pub fn build_library_space(library: &CadLibrary, dim: usize, seed: u64) -> Result<EmbeddingSpace> {
    let descriptor = GeometricDescriptor::new(dim, seed);
    let mut space = EmbeddingSpace::new(dim);
    for (i, m) in library.models().iter().enumerate() {
        let cloud = sample_surface(&m.mesh, DESCRIPTOR_SAMPLES, derive_seed(seed, i as u64))?;
        space.insert(m.model_id.clone(), m.category.clone(), descriptor.describe(&cloud)?)?;
    }
    Ok(space)
}

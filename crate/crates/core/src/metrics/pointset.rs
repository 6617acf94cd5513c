use crate::geom::{sample_surface, Aabb, PointCloud, TriMesh, Trs, Vec3};
use crate::{Error, Result};

use super::MetricConfig;

/// Longest side of the placed ground-truth model after the F-score rescale.
pub const RESCALED_LONGEST_SIDE: f64 = 10.0;

/// Symmetric Chamfer distance: the mean of the two directional average
/// nearest-neighbor Euclidean distances. Exact (brute force).
pub fn chamfer(x: &PointCloud, y: &PointCloud) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(0.5 * (mean_nearest(x.points(), y.points()) + mean_nearest(y.points(), x.points())))
}

fn mean_nearest(from: &[Vec3], to: &[Vec3]) -> f64 {
    let sum: f64 = from
        .iter()
        .map(|p| {
            to.iter()
                .map(|q| (p - q).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .sum();
    sum / from.len() as f64
}

/// F-score at distance `tau`: harmonic mean of precision (predicted points
/// within `tau` of the ground truth) and recall (ground-truth points within
/// `tau` of the prediction). Distances equal to `tau` count as within.
pub fn f_score(pred: &PointCloud, gt: &PointCloud, tau: f64) -> Result<f64> {
    if pred.is_empty() || gt.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
    }
    Ok(f_score_points(pred.points(), gt.points(), tau))
}

pub(crate) fn f_score_points(pred: &[Vec3], gt: &[Vec3], tau: f64) -> f64 {
    let precision = fraction_within(pred, &RadiusGrid::new(gt, tau));
    let recall = fraction_within(gt, &RadiusGrid::new(pred, tau));
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn fraction_within(queries: &[Vec3], grid: &RadiusGrid) -> f64 {
    queries.iter().filter(|q| grid.any_within(q)).count() as f64 / queries.len() as f64
}

/// Uniform grid over a reference point set answering "is any reference point
/// within `radius` of q". Cells are at least `radius` wide so only the 27
/// surrounding cells need checking.
struct RadiusGrid<'a> {
    points: &'a [Vec3],
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<u32>,
    order: Vec<u32>,
    radius2: f64,
}

const MAX_CELLS_PER_AXIS: f64 = 128.0;

impl<'a> RadiusGrid<'a> {
    fn new(points: &'a [Vec3], radius: f64) -> Self {
        let aabb = Aabb::from_points(points).expect("non-empty reference set");
        let cell = radius.max(aabb.max_extent() / MAX_CELLS_PER_AXIS);
        let ext = aabb.extents();
        let dims = [0, 1, 2].map(|a| (ext[a] / cell).floor() as usize + 1);
        let mut grid = RadiusGrid {
            points,
            origin: aabb.min,
            cell,
            dims,
            starts: vec![0; dims[0] * dims[1] * dims[2] + 1],
            order: vec![0; points.len()],
            radius2: radius * radius,
        };
        let cells: Vec<usize> = points
            .iter()
            .map(|p| {
                let c = grid.cell_of(p);
                grid.flat([c[0] as usize, c[1] as usize, c[2] as usize])
            })
            .collect();
        for &c in &cells {
            grid.starts[c + 1] += 1;
        }
        for i in 1..grid.starts.len() {
            grid.starts[i] += grid.starts[i - 1];
        }
        let mut fill = grid.starts.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.order[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    fn cell_of(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| {
            let c = ((p[a] - self.origin[a]) / self.cell).floor() as i64;
            c.min(self.dims[a] as i64 - 1)
        })
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    fn any_within(&self, q: &Vec3) -> bool {
        let c = self.cell_of(q);
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..3 {
            let l = (c[a] - 1).max(0);
            let h = (c[a] + 1).min(self.dims[a] as i64 - 1);
            if l > h {
                return false;
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let f = self.flat([x, y, z]);
                    let range = self.starts[f] as usize..self.starts[f + 1] as usize;
                    if self.order[range]
                        .iter()
                        .any(|&i| (self.points[i as usize] - q).norm_squared() <= self.radius2)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// F-score between two placed CAD models after rescaling, with the applied
/// rescale factor exposed for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaledFScore {
    pub f_score: f64,
    pub rescale_factor: f64,
}

/// Samples both meshes, places them with their transforms, rescales both so
/// the placed ground-truth model's longest axis-aligned side is
/// [`RESCALED_LONGEST_SIDE`], then evaluates the F-score at `cfg.tau`.
///
/// Both meshes are sampled from the same seed, so identical models under
/// identical placements yield identical point sets.
pub fn rescaled_cad_f_score(
    pred_model: &TriMesh,
    pred_trs: &Trs,
    gt_model: &TriMesh,
    gt_trs: &Trs,
    cfg: &MetricConfig,
) -> Result<RescaledFScore> {
    let pred = sample_surface(pred_model, cfg.fscore_samples, cfg.seed)?;
    let gt = sample_surface(gt_model, cfg.fscore_samples, cfg.seed)?;
    rescaled_f_score_from_samples(pred.points(), pred_trs, gt.points(), gt_trs, gt_model, cfg.tau)
}

/// Same as [`rescaled_cad_f_score`] on pre-sampled model-frame points.
pub fn rescaled_f_score_from_samples(
    pred_local: &[Vec3],
    pred_trs: &Trs,
    gt_local: &[Vec3],
    gt_trs: &Trs,
    gt_model: &TriMesh,
    tau: f64,
) -> Result<RescaledFScore> {
    if pred_local.is_empty() || gt_local.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let placed_vertices: Vec<Vec3> = gt_model.vertices().iter().map(|v| gt_trs.apply_point(v)).collect();
    let side = Aabb::from_points(&placed_vertices)
        .ok_or(Error::DegenerateExtent)?
        .max_extent();
    if !(side > 1e-12) {
        return Err(Error::DegenerateExtent);
    }
    let factor = RESCALED_LONGEST_SIDE / side;
    let pred: Vec<Vec3> = pred_local.iter().map(|p| pred_trs.apply_point(p) * factor).collect();
    let gt: Vec<Vec3> = gt_local.iter().map(|p| gt_trs.apply_point(p) * factor).collect();
    Ok(RescaledFScore {
        f_score: f_score_points(&pred, &gt, tau),
        rescale_factor: factor,
    })
}

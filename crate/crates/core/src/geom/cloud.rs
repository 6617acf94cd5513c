use crate::{Error, Result};

use super::Vec3;

/// Ordered set of 3D points with optional per-point foreground labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Vec3>,
    labels: Option<Vec<bool>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        check_finite(&points)?;
        Ok(PointCloud { points, labels: None })
    }

    pub fn with_labels(points: Vec<Vec3>, labels: Vec<bool>) -> Result<Self> {
        check_finite(&points)?;
        if labels.len() != points.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                points.len()
            )));
        }
        Ok(PointCloud {
            points,
            labels: Some(labels),
        })
    }

    /// Builds a cloud from points already known to be finite.
    pub(crate) fn from_trusted(points: Vec<Vec3>, labels: Option<Vec<bool>>) -> Self {
        debug_assert!(points.iter().all(|p| p.iter().all(|c| c.is_finite())));
        PointCloud { points, labels }
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Vec3>, Option<Vec<bool>>) {
        (self.points, self.labels)
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    /// Applies `f` to every point, keeping labels.
    pub fn map_points(&self, f: impl Fn(&Vec3) -> Vec3) -> Result<PointCloud> {
        PointCloud::new(self.points.iter().map(f).collect()).map(|mut c| {
            c.labels = self.labels.clone();
            c
        })
    }

    /// Concatenates clouds. The result is labelled only if every input is.
    pub fn concat(parts: &[PointCloud]) -> PointCloud {
        let points: Vec<Vec3> = parts.iter().flat_map(|c| c.points.iter().copied()).collect();
        let labels = if parts.iter().all(|c| c.labels.is_some()) {
            Some(
                parts
                    .iter()
                    .flat_map(|c| c.labels.as_ref().unwrap().iter().copied())
                    .collect(),
            )
        } else {
            None
        };
        PointCloud { points, labels }
    }
}

fn check_finite(points: &[Vec3]) -> Result<()> {
    match points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        Some(i) => Err(Error::InvalidInput(format!("point {i} is not finite"))),
        None => Ok(()),
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Option<Aabb> {
        let mut iter = points.into_iter();
        let first = *iter.next()?;
        let (min, max) = iter.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Aabb { min, max })
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extents(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn max_extent(&self) -> f64 {
        self.extents().max()
    }
}

/// Parameters of the unit-cube normalization: `p' = (p - center) * scale_factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationInfo {
    /// Center of the original axis-aligned bounding box.
    pub center: Vec3,
    pub scale_factor: f64,
}

impl NormalizationInfo {
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        (p - self.center) * self.scale_factor
    }

    pub fn invert(&self, p: &Vec3) -> Vec3 {
        p / self.scale_factor + self.center
    }
}

/// Centers the cloud on its bounding-box center and scales it isotropically
/// so the largest axis-aligned extent becomes exactly 1.
pub fn normalize_unit_cube(cloud: &PointCloud) -> Result<(PointCloud, NormalizationInfo)> {
    let aabb = cloud.aabb().ok_or(Error::EmptyCloud)?;
    let extent = aabb.max_extent();
    if !(extent > 0.0) {
        return Err(Error::DegenerateExtent);
    }
    let info = NormalizationInfo {
        center: aabb.center(),
        scale_factor: 1.0 / extent,
    };
    let points = cloud.points.iter().map(|p| info.apply(p)).collect();
    Ok((PointCloud::from_trusted(points, cloud.labels.clone()), info))
}

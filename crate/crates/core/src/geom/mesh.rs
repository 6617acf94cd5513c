use rand::Rng as _;

use crate::rng::rng_from_seed;
use crate::{Error, Result};

use super::{Aabb, NormalizationInfo, PointCloud, Vec3};

/// Indexed triangle mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Checks vertex finiteness and index ranges. Degenerate faces are kept;
    /// call [`TriMesh::validated`] to drop them.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("vertex {i} is not finite")));
        }
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&index) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::IndexOutOfRange {
                    face: fi,
                    index,
                    count: vertices.len(),
                });
            }
        }
        Ok(TriMesh { vertices, faces })
    }

    /// Drops zero-area faces; fails if none remain.
    pub fn validated(mut self) -> Result<Self> {
        let verts = &self.vertices;
        self.faces.retain(|f| triangle_area(verts, f) > 0.0);
        if self.faces.is_empty() {
            return Err(Error::MeshDegenerate);
        }
        Ok(self)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face_area(&self, face: usize) -> f64 {
        triangle_area(&self.vertices, &self.faces[face])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(&self.vertices)
    }

    /// Appends another mesh as a separate connected component.
    pub fn merge(&mut self, other: &TriMesh) {
        let offset = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(
            other
                .faces
                .iter()
                .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
        );
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }

    /// Unit-cube normalization of the vertex set (see
    /// [`normalize_unit_cube`](super::normalize_unit_cube)).
    pub fn normalized(&self) -> Result<(TriMesh, NormalizationInfo)> {
        let aabb = self.aabb().ok_or(Error::MeshDegenerate)?;
        let extent = aabb.max_extent();
        if !(extent > 0.0) {
            return Err(Error::DegenerateExtent);
        }
        let info = NormalizationInfo {
            center: aabb.center(),
            scale_factor: 1.0 / extent,
        };
        Ok((self.map_vertices(|v| info.apply(v)), info))
    }
}

fn triangle_area(verts: &[Vec3], f: &[usize; 3]) -> f64 {
    let (a, b, c) = (verts[f[0]], verts[f[1]], verts[f[2]]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Draws `n` points uniformly over the mesh surface: triangles are chosen
/// with probability proportional to area, then a point is drawn uniformly
/// inside the triangle.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::MeshDegenerate);
    }
    let mut rng = rng_from_seed(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let target = rng.random::<f64>() * total;
        let fi = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let [ia, ib, ic] = mesh.faces[fi];
        let (a, b, c) = (mesh.vertices[ia], mesh.vertices[ib], mesh.vertices[ic]);
        let r1 = rng.random::<f64>().sqrt();
        let r2 = rng.random::<f64>();
        points.push(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    Ok(PointCloud::from_trusted(points, None))
}

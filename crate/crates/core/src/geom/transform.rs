use nalgebra::{Matrix4, Quaternion, UnitQuaternion};

use crate::{Error, Result};

use super::{PointCloud, Vec3};

/// Allowed deviation of a rotation quaternion's norm from 1.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-9;

/// 9-DoF placement: per-axis scale, then rotation, then translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trs {
    translation: Vec3,
    rotation: UnitQuaternion<f64>,
    scale: Vec3,
}

impl Trs {
    /// `rotation` is given as `[w, x, y, z]`.
    pub fn new(translation: Vec3, rotation: [f64; 4], scale: Vec3) -> Result<Self> {
        let q = Quaternion::new(rotation[0], rotation[1], rotation[2], rotation[3]);
        if !((q.norm() - 1.0).abs() <= QUATERNION_NORM_TOLERANCE) {
            return Err(Error::InvalidInput(format!(
                "rotation quaternion norm {} is not 1",
                q.norm()
            )));
        }
        Self::from_unit(translation, UnitQuaternion::new_unchecked(q), scale)
    }

    pub fn from_unit(translation: Vec3, rotation: UnitQuaternion<f64>, scale: Vec3) -> Result<Self> {
        if !translation.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("translation is not finite".into()));
        }
        if let Some(&s) = scale.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidScale(s));
        }
        Ok(Trs {
            translation,
            rotation,
            scale,
        })
    }

    /// Placement rotating only about the up axis.
    pub fn from_yaw(translation: Vec3, yaw: f64, scale: Vec3) -> Result<Self> {
        Self::from_unit(
            translation,
            UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw),
            scale,
        )
    }

    pub fn identity() -> Self {
        Trs {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
            scale: Vec3::repeat(1.0),
        }
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.rotation
    }

    /// Rotation as `[w, x, y, z]`.
    pub fn rotation_wxyz(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    pub fn scale(&self) -> Vec3 {
        self.scale
    }

    pub fn with_translation(&self, translation: Vec3) -> Result<Self> {
        Self::from_unit(translation, self.rotation, self.scale)
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        self.translation + self.rotation * self.scale.component_mul(p)
    }

    /// Homogeneous matrix `T · R · S`.
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = self.rotation.to_homogeneous();
        for c in 0..3 {
            for r in 0..3 {
                m[(r, c)] *= self.scale[c];
            }
        }
        for r in 0..3 {
            m[(r, 3)] = self.translation[r];
        }
        m
    }
}

impl Default for Trs {
    fn default() -> Self {
        Self::identity()
    }
}

pub fn apply_trs(cloud: &PointCloud, trs: &Trs) -> PointCloud {
    let points = cloud.points().iter().map(|p| trs.apply_point(p)).collect();
    PointCloud::from_trusted(points, cloud.labels().map(<[bool]>::to_vec))
}

//! Point clouds, triangle meshes, up-axis oriented boxes and 9-DoF placements.
//!
//! All coordinates are meters in a right-handed frame with +z up.

mod boxes;
mod cloud;
mod dual;
mod mesh;
mod transform;

pub use boxes::{
    box_corners, diou_3d, diou_3d_with_grad, footprint_intersection_area, rotated_iou_3d, OrientedBox, BOX_PARAM_COUNT,
};
pub use cloud::{normalize_unit_cube, Aabb, NormalizationInfo, PointCloud};
pub use dual::{Dual, Real};
pub use mesh::{sample_surface, TriMesh};
pub use transform::{apply_trs, Trs};

pub type Vec3 = nalgebra::Vector3<f64>;

use std::f64::consts::PI;

/// Wraps an angle into `[-π, π)`.
pub fn normalize_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut a = angle - two_pi * ((angle + PI) / two_pi).floor();
    if a >= PI {
        a -= two_pi;
    }
    if a < -PI {
        a += two_pi;
    }
    a
}

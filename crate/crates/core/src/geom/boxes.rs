use crate::{Error, Result};

use super::dual::{Dual, Real};
use super::{normalize_angle, Vec3};

/// Number of box parameters, ordered `[cx, cy, cz, sx, sy, sz, yaw]` in
/// gradients.
pub const BOX_PARAM_COUNT: usize = 7;

/// Box rotated about the up (z) axis only.
///
/// `size` holds full extents along the box-local axes; `yaw` is kept in
/// `[-π, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    center: Vec3,
    size: Vec3,
    yaw: f64,
}

impl OrientedBox {
    pub fn new(center: Vec3, size: Vec3, yaw: f64) -> Result<Self> {
        if !center.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(Error::InvalidInput("box center/yaw not finite".into()));
        }
        if let Some(&s) = size.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidInput(format!("box extent {s} must be positive")));
        }
        Ok(OrientedBox {
            center,
            size,
            yaw: normalize_angle(yaw),
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn size(&self) -> Vec3 {
        self.size
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn volume(&self) -> f64 {
        self.size.x * self.size.y * self.size.z
    }

    /// Tight box around `points` whose local axes are rotated by `yaw`.
    pub fn fit_points(points: &[Vec3], yaw: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let (s, c) = yaw.sin_cos();
        let to_local = |p: &Vec3| Vec3::new(c * p.x + s * p.y, -s * p.x + c * p.y, p.z);
        let mut lo = to_local(&points[0]);
        let mut hi = lo;
        for p in &points[1..] {
            let q = to_local(p);
            lo = lo.inf(&q);
            hi = hi.sup(&q);
        }
        let mid = (lo + hi) * 0.5;
        let center = Vec3::new(c * mid.x - s * mid.y, s * mid.x + c * mid.y, mid.z);
        let size = hi - lo;
        if size.iter().any(|&e| e <= 0.0) {
            return Err(Error::DegenerateExtent);
        }
        OrientedBox::new(center, size, yaw)
    }

    fn params(&self) -> [f64; BOX_PARAM_COUNT] {
        [
            self.center.x,
            self.center.y,
            self.center.z,
            self.size.x,
            self.size.y,
            self.size.z,
            self.yaw,
        ]
    }
}

/// The eight corners. Corner `i` takes the `+` half-extent on x if bit 0 of
/// `i` is set, on y if bit 1 is set and on z if bit 2 is set (so corners 0-3
/// are the bottom face and 4-7 the top face).
pub fn box_corners(b: &OrientedBox) -> [Vec3; 8] {
    let g = GenericBox::<f64>::from_params(b.params());
    let mut out = [Vec3::zeros(); 8];
    for (o, c) in out.iter_mut().zip(g.corners()) {
        *o = Vec3::new(c[0], c[1], c[2]);
    }
    out
}

/// Area of the intersection of the two boxes' footprints in the xy plane.
pub fn footprint_intersection_area(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let ga = GenericBox::<f64>::from_params(a.params());
    let gb = GenericBox::<f64>::from_params(b.params());
    polygon_area(&clip_convex(ga.footprint().to_vec(), &gb.footprint())).max(0.0)
}

/// Exact 3D IoU of two up-axis oriented boxes: footprint polygon
/// intersection times vertical overlap, over the union volume.
pub fn rotated_iou_3d(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let ga = GenericBox::<f64>::from_params(a.params());
    let gb = GenericBox::<f64>::from_params(b.params());
    iou(&ga, &gb)
}

/// DIoU loss `1 - IoU + |c_pred - c_gt|² / d²`, with `d` the diagonal of the
/// axis-aligned box enclosing all 16 corners.
pub fn diou_3d(pred: &OrientedBox, gt: &OrientedBox) -> f64 {
    let gp = GenericBox::<f64>::from_params(pred.params());
    let gg = GenericBox::<f64>::from_params(gt.params());
    diou(&gp, &gg)
}

/// DIoU value together with its gradient with respect to the predicted box
/// parameters `[cx, cy, cz, sx, sy, sz, yaw]`.
///
/// The derivative is exact wherever the overlap is smooth. At kinks (edges
/// becoming parallel, boxes starting to touch, the enclosing box switching
/// corners) it is the one-sided derivative of the branch the primal value
/// falls in.
pub fn diou_3d_with_grad(pred: &OrientedBox, gt: &OrientedBox) -> (f64, [f64; BOX_PARAM_COUNT]) {
    let p = pred.params();
    let mut vars = [Dual::<BOX_PARAM_COUNT>::constant(0.0); BOX_PARAM_COUNT];
    for (i, v) in vars.iter_mut().enumerate() {
        *v = Dual::variable(p[i], i);
    }
    let gp = GenericBox {
        c: [vars[0], vars[1], vars[2]],
        s: [vars[3], vars[4], vars[5]],
        yaw: vars[6],
    };
    let gg = GenericBox::<Dual<BOX_PARAM_COUNT>>::from_params(gt.params());
    let d = diou(&gp, &gg);
    (d.re, d.eps)
}

#[derive(Clone, Copy)]
struct GenericBox<T> {
    c: [T; 3],
    s: [T; 3],
    yaw: T,
}

impl<T: Real> GenericBox<T> {
    fn from_params(p: [f64; BOX_PARAM_COUNT]) -> Self {
        let k = T::constant;
        GenericBox {
            c: [k(p[0]), k(p[1]), k(p[2])],
            s: [k(p[3]), k(p[4]), k(p[5])],
            yaw: k(p[6]),
        }
    }

    /// Footprint corners, counter-clockwise seen from +z.
    fn footprint(&self) -> [[T; 2]; 4] {
        let half = T::constant(0.5);
        let (hx, hy) = (self.s[0] * half, self.s[1] * half);
        let (sn, cs) = (self.yaw.sin(), self.yaw.cos());
        let local = [[-hx, -hy], [hx, -hy], [hx, hy], [-hx, hy]];
        local.map(|[x, y]| [self.c[0] + cs * x - sn * y, self.c[1] + sn * x + cs * y])
    }

    fn z_range(&self) -> (T, T) {
        let h = self.s[2] * T::constant(0.5);
        (self.c[2] - h, self.c[2] + h)
    }

    fn volume(&self) -> T {
        self.s[0] * self.s[1] * self.s[2]
    }

    fn corners(&self) -> [[T; 3]; 8] {
        let fp = self.footprint();
        let (z0, z1) = self.z_range();
        // footprint order is (-,-), (+,-), (+,+), (-,+); map to bit order.
        let xy = [fp[0], fp[1], fp[3], fp[2]];
        std::array::from_fn(|i| {
            let [x, y] = xy[i & 3];
            [x, y, if i & 4 == 0 { z0 } else { z1 }]
        })
    }
}

/// Sutherland–Hodgman clipping of `subject` against a convex CCW polygon.
fn clip_convex<T: Real>(subject: Vec<[T; 2]>, clip: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut output = subject;
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let side = |p: [T; 2]| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            let (dc, dp) = (side(cur), side(prev));
            let (cur_in, prev_in) = (dc.value() >= 0.0, dp.value() >= 0.0);
            if cur_in != prev_in {
                let t = dp / (dp - dc);
                output.push([prev[0] + (cur[0] - prev[0]) * t, prev[1] + (cur[1] - prev[1]) * t]);
            }
            if cur_in {
                output.push(cur);
            }
        }
    }
    output
}

fn polygon_area<T: Real>(poly: &[[T; 2]]) -> T {
    let mut acc = T::constant(0.0);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        acc = acc + p[0] * q[1] - q[0] * p[1];
    }
    acc * T::constant(0.5)
}

fn iou<T: Real>(a: &GenericBox<T>, b: &GenericBox<T>) -> T {
    let zero = T::constant(0.0);
    let (a0, a1) = a.z_range();
    let (b0, b1) = b.z_range();
    let dz = a1.min(b1) - a0.max(b0);
    if dz.value() <= 0.0 {
        return zero;
    }
    let area = polygon_area(&clip_convex(a.footprint().to_vec(), &b.footprint()));
    if area.value() <= 0.0 {
        return zero;
    }
    let inter = area * dz;
    let union = a.volume() + b.volume() - inter;
    (inter / union).min(T::constant(1.0))
}

fn diou<T: Real>(pred: &GenericBox<T>, gt: &GenericBox<T>) -> T {
    let overlap = iou(pred, gt);
    let corners: Vec<[T; 3]> = pred.corners().into_iter().chain(gt.corners()).collect();
    let mut diag2 = T::constant(0.0);
    let mut rho2 = T::constant(0.0);
    for axis in 0..3 {
        let (lo, hi) = corners[1..]
            .iter()
            .fold((corners[0][axis], corners[0][axis]), |(lo, hi), c| {
                (lo.min(c[axis]), hi.max(c[axis]))
            });
        diag2 = diag2 + (hi - lo) * (hi - lo);
        let d = pred.c[axis] - gt.c[axis];
        rho2 = rho2 + d * d;
    }
    T::constant(1.0) - overlap + rho2 / diag2
}

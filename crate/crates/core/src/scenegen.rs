//! Deterministic synthetic CAD libraries and scenes.
//!
//! Shape families (all dimensions before unit-cube normalization, meters):
//!
//! | family  | construction                                   | parameters                                                            | symmetry                |
//! |---------|------------------------------------------------|-----------------------------------------------------------------------|-------------------------|
//! | `table` | slab top on four corner legs                   | width 0.8–1.6, depth 0.6–1.2 (square with p=0.3), height 0.6–0.9      | 4-fold if square, else 2-fold |
//! | `chair` | seat on four legs, backrest along the −x edge   | seat 0.4–0.6 × 0.4–0.6 at 0.4–0.5, backrest 0.3–0.6 high             | none                    |
//! | `bin`   | closed cylinder with a coaxial rim             | radius 0.15–0.3, height 0.3–0.8                                       | full                    |
//!
//! Every model's front faces +x in its canonical frame.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::geom::{sample_surface, OrientedBox, PointCloud, TriMesh, Trs, Vec3};
use crate::library::CadLibrary;
use crate::metrics::{GroundTruthInstance, SymmetryClass};
use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::training::{Detection, FeatureLevel};
use crate::{Error, Result};

const CYLINDER_SEGMENTS: usize = 32;
/// Logit magnitude used for the ideal detections' one-hot outputs.
pub const IDEAL_LOGIT: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Table,
    Chair,
    Bin,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Table, Family::Chair, Family::Bin];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Table => "table",
            Family::Chair => "chair",
            Family::Bin => "bin",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table" => Ok(Family::Table),
            "chair" => Ok(Family::Chair),
            "bin" => Ok(Family::Bin),
            other => Err(Error::parse("family", format!("unknown family {other:?}"))),
        }
    }
}

/// Axis-aligned box between `lo` and `hi`, outward-facing triangles.
pub fn box_mesh(lo: Vec3, hi: Vec3) -> Result<TriMesh> {
    let v = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { lo.x } else { hi.x },
                if i & 2 == 0 { lo.y } else { hi.y },
                if i & 4 == 0 { lo.z } else { hi.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3], // -z
        [4, 5, 6],
        [5, 7, 6], // +z
        [0, 1, 4],
        [1, 5, 4], // -y
        [2, 6, 3],
        [3, 6, 7], // +y
        [0, 4, 2],
        [2, 4, 6], // -x
        [1, 3, 5],
        [3, 7, 5], // +x
    ];
    TriMesh::new(v, faces)
}

/// Closed vertical cylinder on the z axis from `z0` to `z1`.
pub fn cylinder_mesh(radius: f64, z0: f64, z1: f64, segments: usize) -> Result<TriMesh> {
    let mut v = Vec::with_capacity(2 * segments + 2);
    for z in [z0, z1] {
        for k in 0..segments {
            let a = TAU * k as f64 / segments as f64;
            v.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let (bottom, top) = (v.len(), v.len() + 1);
    v.push(Vec3::new(0.0, 0.0, z0));
    v.push(Vec3::new(0.0, 0.0, z1));
    let mut faces = Vec::with_capacity(4 * segments);
    for k in 0..segments {
        let n = (k + 1) % segments;
        faces.push([k, n, segments + k]);
        faces.push([n, segments + n, segments + k]);
        faces.push([bottom, n, k]);
        faces.push([top, segments + k, segments + n]);
    }
    TriMesh::new(v, faces)
}

fn legs(mesh: &mut TriMesh, half_x: f64, half_y: f64, leg: f64, height: f64) -> Result<()> {
    for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
        let cx = sx * (half_x - leg / 2.0);
        let cy = sy * (half_y - leg / 2.0);
        mesh.merge(&box_mesh(
            Vec3::new(cx - leg / 2.0, cy - leg / 2.0, 0.0),
            Vec3::new(cx + leg / 2.0, cy + leg / 2.0, height),
        )?);
    }
    Ok(())
}

fn make_model(family: Family, rng: &mut Rng) -> Result<(TriMesh, SymmetryClass)> {
    let mut mesh = TriMesh::default();
    let sym = match family {
        Family::Table => {
            let w = rng.random_range(0.8..1.6);
            let square = rng.random_bool(0.3);
            let d = if square {
                w
            } else {
                rng.random_range(0.6..1.2_f64).min(w * 0.9)
            };
            let h = rng.random_range(0.6..0.9);
            let t = rng.random_range(0.04..0.08);
            let leg = rng.random_range(0.04..0.08);
            mesh.merge(&box_mesh(
                Vec3::new(-w / 2.0, -d / 2.0, h - t),
                Vec3::new(w / 2.0, d / 2.0, h),
            )?);
            legs(&mut mesh, w / 2.0, d / 2.0, leg, h - t)?;
            if square {
                SymmetryClass::FourFold
            } else {
                SymmetryClass::TwoFold
            }
        }
        Family::Chair => {
            let w = rng.random_range(0.4..0.6);
            let d = rng.random_range(0.4..0.6);
            let sh = rng.random_range(0.4..0.5);
            let t = rng.random_range(0.03..0.06);
            let leg = rng.random_range(0.03..0.05);
            let back = rng.random_range(0.3..0.6);
            let bt = rng.random_range(0.03..0.06);
            mesh.merge(&box_mesh(
                Vec3::new(-d / 2.0, -w / 2.0, sh - t),
                Vec3::new(d / 2.0, w / 2.0, sh),
            )?);
            legs(&mut mesh, d / 2.0, w / 2.0, leg, sh - t)?;
            mesh.merge(&box_mesh(
                Vec3::new(-d / 2.0, -w / 2.0, sh),
                Vec3::new(-d / 2.0 + bt, w / 2.0, sh + back),
            )?);
            SymmetryClass::None
        }
        Family::Bin => {
            let r = rng.random_range(0.15..0.3);
            let h = rng.random_range(0.3..0.8);
            let rim = rng.random_range(0.01..0.03);
            mesh.merge(&cylinder_mesh(r, 0.0, h, CYLINDER_SEGMENTS)?);
            mesh.merge(&cylinder_mesh(r + rim, h - 0.03, h, CYLINDER_SEGMENTS)?);
            SymmetryClass::Full
        }
    };
    let (mesh, _) = mesh.normalized()?;
    Ok((mesh, sym))
}

/// `count_per_family` models for each family, ids `"{family}_{index:04}"`,
/// category = family name. Model `i` of a family depends only on the seed,
/// the family and `i`.
pub fn make_library(families: &[Family], count_per_family: usize, seed: u64) -> Result<CadLibrary> {
    if count_per_family == 0 {
        return Err(Error::InvalidInput("count per family must be at least 1".into()));
    }
    let mut lib = CadLibrary::new();
    for &family in families {
        let family_seed = derive_seed(seed, family as u64);
        for i in 0..count_per_family {
            let mut rng = rng_from_seed(derive_seed(family_seed, i as u64));
            let (mesh, sym) = make_model(family, &mut rng)?;
            lib.insert(format!("{family}_{i:04}"), family.as_str(), sym, mesh)?;
        }
    }
    Ok(lib)
}

/// Removes points with `normal · p > offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec3,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DegradeConfig {
    pub noise_sigma: f64,
    pub dropout: f64,
    pub occlusion: Option<HalfSpace>,
}

impl DegradeConfig {
    pub fn is_identity(&self) -> bool {
        self.noise_sigma == 0.0 && self.dropout == 0.0 && self.occlusion.is_none()
    }
}

/// Gaussian jitter, then uniform dropout, then half-space removal. Labels
/// follow their points.
pub fn degrade(cloud: &PointCloud, cfg: &DegradeConfig, seed: u64) -> Result<PointCloud> {
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::InvalidInput(format!("dropout {} not in [0, 1)", cfg.dropout)));
    }
    if !(cfg.noise_sigma >= 0.0) || !cfg.noise_sigma.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise sigma {} must be non-negative",
            cfg.noise_sigma
        )));
    }
    if cfg.is_identity() {
        return Ok(cloud.clone());
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let labels = cloud.labels();
    let mut points = Vec::with_capacity(cloud.len());
    let mut kept_labels = labels.map(|_| Vec::with_capacity(cloud.len()));
    for (i, p) in cloud.points().iter().enumerate() {
        let mut q = *p;
        if cfg.noise_sigma > 0.0 {
            q += Vec3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            );
        }
        if cfg.dropout > 0.0 && rng.random::<f64>() < cfg.dropout {
            continue;
        }
        if let Some(h) = &cfg.occlusion {
            if h.normal.dot(&q) > h.offset {
                continue;
            }
        }
        points.push(q);
        if let (Some(out), Some(l)) = (kept_labels.as_mut(), labels) {
            out.push(l[i]);
        }
    }
    match kept_labels {
        Some(l) => PointCloud::with_labels(points, l),
        None => PointCloud::new(points),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub n_objects: usize,
    /// Side of the square floor; `None` grows it with the object count.
    pub room_size: Option<f64>,
    /// Isotropic object scale range applied to the unit-cube model.
    pub scale_min: f64,
    pub scale_max: f64,
    /// Extra independent per-axis stretch, as a fraction of the scale.
    pub anisotropy: f64,
    pub points_per_object: usize,
    pub floor_points: usize,
    pub max_attempts: usize,
    pub degrade: DegradeConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_objects: 5,
            room_size: None,
            scale_min: 0.6,
            scale_max: 1.4,
            anisotropy: 0.1,
            points_per_object: 2000,
            floor_points: 2000,
            max_attempts: 1000,
            degrade: DegradeConfig::default(),
        }
    }
}

impl SceneConfig {
    pub fn room_side(&self) -> f64 {
        self.room_size
            .unwrap_or_else(|| 2.0 + 3.0 * (self.n_objects.max(1) as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub scene_id: String,
    pub scan: PointCloud,
    pub ground_truth: Vec<GroundTruthInstance>,
    /// Tight box of each placed object, parallel to `ground_truth`.
    pub boxes: Vec<OrientedBox>,
    /// One exact detection per ground-truth object, same order.
    pub ideal_detections: Vec<Detection>,
}

struct Placement {
    model: usize,
    center: Vec3,
    yaw: f64,
    scale: Vec3,
    face: usize,
}

fn place_objects(library: &CadLibrary, cfg: &SceneConfig, rng: &mut Rng) -> Result<Vec<Placement>> {
    let side = cfg.room_side();
    let models = library.models();
    let indices: Vec<usize> = (0..models.len()).collect();
    let mut placed: Vec<(Placement, f64)> = Vec::with_capacity(cfg.n_objects);
    for object in 0..cfg.n_objects {
        let &model = indices.choose(rng).ok_or(Error::NoCandidates { category: None })?;
        let ext = models[model].extents();
        let s = rng.random_range(cfg.scale_min..=cfg.scale_max);
        let mut aniso = || 1.0 + cfg.anisotropy * (2.0 * rng.random::<f64>() - 1.0);
        let scale = Vec3::new(s * aniso(), s * aniso(), s * aniso());
        let yaw = rng.random_range(-PI..PI);
        let face = rng.random_range(0..4);
        let radius = 0.5 * (ext.x * scale.x).hypot(ext.y * scale.y);
        let mut found = None;
        for _ in 0..cfg.max_attempts {
            let lim = side / 2.0 - radius;
            if lim <= 0.0 {
                break;
            }
            let x = rng.random_range(-lim..=lim);
            let y = rng.random_range(-lim..=lim);
            let clear = placed
                .iter()
                .all(|(p, r)| (p.center.x - x).hypot(p.center.y - y) > r + radius);
            if clear {
                found = Some((x, y));
                break;
            }
        }
        let (x, y) = found.ok_or(Error::PlacementFailed {
            object,
            attempts: cfg.max_attempts,
        })?;
        let center = Vec3::new(x, y, 0.5 * ext.z * scale.z);
        placed.push((
            Placement {
                model,
                center,
                yaw,
                scale,
                face,
            },
            radius,
        ));
    }
    Ok(placed.into_iter().map(|(p, _)| p).collect())
}

/// Generates one scene. The scan holds surface samples of every placed
/// model (labelled foreground) and a floor plane at z = 0 (background),
/// degraded per `cfg.degrade`. Ideal detections carry one-hot class logits
/// over `library.categories()`, the exact object box, the sampled front face
/// and the model's vector from `space`.
pub fn synth_scene(
    library: &CadLibrary,
    space: &EmbeddingSpace,
    cfg: &SceneConfig,
    scene_id: impl Into<String>,
    seed: u64,
) -> Result<SynthScene> {
    if !(cfg.scale_min > 0.0 && cfg.scale_min <= cfg.scale_max) || !(0.0..1.0).contains(&cfg.anisotropy) {
        return Err(Error::InvalidInput("invalid scale range".into()));
    }
    let mut rng = rng_from_seed(seed);
    let placements = place_objects(library, cfg, &mut rng)?;
    let categories = library.categories();
    let side = cfg.room_side();

    let mut parts = Vec::with_capacity(placements.len() + 1);
    let mut ground_truth = Vec::with_capacity(placements.len());
    let mut boxes = Vec::with_capacity(placements.len());
    let mut ideal_detections = Vec::with_capacity(placements.len());
    for (i, p) in placements.iter().enumerate() {
        let model = &library.models()[p.model];
        let trs = Trs::from_yaw(p.center, p.yaw, p.scale)?;
        let ext = model.extents();
        let size = ext.component_mul(&p.scale);
        let (sx, sy) = if p.face % 2 == 1 {
            (size.y, size.x)
        } else {
            (size.x, size.y)
        };
        let bbox = OrientedBox::new(
            p.center,
            Vec3::new(sx, sy, size.z),
            p.yaw - p.face as f64 * std::f64::consts::FRAC_PI_2,
        )?;
        if cfg.points_per_object > 0 {
            let local = sample_surface(&model.mesh, cfg.points_per_object, derive_seed(seed, 1 + i as u64))?;
            let pts: Vec<Vec3> = local.points().iter().map(|q| trs.apply_point(q)).collect();
            let n = pts.len();
            parts.push(PointCloud::with_labels(pts, vec![true; n])?);
        }
        let class = categories
            .iter()
            .position(|c| *c == model.category)
            .expect("category listed by library");
        let mut class_logits = vec![-IDEAL_LOGIT; categories.len()];
        class_logits[class] = IDEAL_LOGIT;
        let mut face_logits = [-IDEAL_LOGIT; 4];
        face_logits[p.face] = IDEAL_LOGIT;
        let embedding = space
            .get(&model.model_id)
            .ok_or_else(|| Error::UnknownModel(model.model_id.clone()))?
            .vector
            .clone();
        ideal_detections.push(Detection {
            location: p.center,
            class_logits,
            bbox,
            face_logits,
            embedding,
            level: FeatureLevel::Two,
        });
        boxes.push(bbox);
        ground_truth.push(GroundTruthInstance {
            category: model.category.clone(),
            model_id: model.model_id.clone(),
            trs,
            symmetry: model.symmetry,
        });
    }
    if cfg.floor_points > 0 {
        let mut floor_rng = rng_from_seed(derive_seed(seed, 0));
        let h = side / 2.0;
        let pts: Vec<Vec3> = (0..cfg.floor_points)
            .map(|_| Vec3::new(floor_rng.random_range(-h..=h), floor_rng.random_range(-h..=h), 0.0))
            .collect();
        parts.push(PointCloud::with_labels(pts, vec![false; cfg.floor_points])?);
    }
    let scan = PointCloud::concat(&parts);
    let scan = degrade(&scan, &cfg.degrade, derive_seed(seed, u64::MAX))?;
    Ok(SynthScene {
        scene_id: scene_id.into(),
        scan,
        ground_truth,
        boxes,
        ideal_detections,
    })
}

//! Directory layouts.
//!
//! Library: `DIR/index.json` listing models, meshes under `DIR/meshes/<id>.obj`.
//! Scenes: one subdirectory per scene holding `annotation.json` and `scan.ply`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geom::PointCloud;
use crate::library::CadLibrary;
use crate::metrics::SymmetryClass;
use crate::{Error, Result};

use super::json::{from_versioned_str, to_canonical_string};
use super::records::SceneAnnotation;
use super::{obj, ply, write_atomic};

pub const LIBRARY_SCHEMA_VERSION: u32 = 1;
pub const LIBRARY_INDEX: &str = "index.json";
pub const ANNOTATION_FILE: &str = "annotation.json";
pub const SCAN_FILE: &str = "scan.ply";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryEntry {
    pub model_id: String,
    pub category: String,
    pub symmetry: SymmetryClass,
    /// Relative to the library directory.
    pub mesh: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryIndex {
    pub schema_version: u32,
    pub models: Vec<LibraryEntry>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn with_file_context(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    }
}

/// Reads a mesh, choosing the parser by extension (`.obj` or `.ply`).
pub fn parse_mesh(path: &Path) -> Result<crate::geom::TriMesh> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let r = match ext.as_deref() {
        Some("obj") => obj::parse_obj(&read_text(path)?),
        Some("ply") => ply::parse_ply_mesh(&read_bytes(path)?),
        _ => return Err(Error::UnsupportedFeature(format!("mesh format of {}", path.display()))),
    };
    r.map_err(|e| with_file_context(path, e))
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    ply::parse_ply_cloud(&read_bytes(path)?).map_err(|e| with_file_context(path, e))
}

pub fn write_point_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_atomic(path, &ply::write_ply_cloud(cloud))
}

pub fn save_library(library: &CadLibrary, dir: &Path) -> Result<()> {
    create_dir(&dir.join("meshes"))?;
    let mut models = Vec::with_capacity(library.len());
    for m in library.models() {
        let rel = format!("meshes/{}.obj", m.model_id);
        write_atomic(&dir.join(&rel), obj::write_obj(&m.mesh).as_bytes())?;
        models.push(LibraryEntry {
            model_id: m.model_id.clone(),
            category: m.category.clone(),
            symmetry: m.symmetry,
            mesh: rel,
        });
    }
    let index = LibraryIndex {
        schema_version: LIBRARY_SCHEMA_VERSION,
        models,
    };
    write_atomic(&dir.join(LIBRARY_INDEX), to_canonical_string(&index)?.as_bytes())
}

pub fn load_library(dir: &Path) -> Result<CadLibrary> {
    let index_path = dir.join(LIBRARY_INDEX);
    let index: LibraryIndex = from_versioned_str(&read_text(&index_path)?, LIBRARY_SCHEMA_VERSION)
        .map_err(|e| with_file_context(&index_path, e))?;
    let mut lib = CadLibrary::new();
    for entry in index.models {
        let mesh = parse_mesh(&dir.join(&entry.mesh))?;
        lib.insert(entry.model_id, entry.category, entry.symmetry, mesh)?;
    }
    Ok(lib)
}

pub fn write_annotation(path: &Path, annotation: &SceneAnnotation) -> Result<()> {
    write_atomic(path, annotation.to_json()?.as_bytes())
}

pub fn read_annotation(path: &Path) -> Result<SceneAnnotation> {
    SceneAnnotation::from_json(&read_text(path)?).map_err(|e| with_file_context(path, e))
}

/// Scene subdirectories of `dir` that contain an annotation, sorted by name.
pub fn scene_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.join(ANNOTATION_FILE).is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Every annotation under `dir`, sorted by directory name.
pub fn load_annotations(dir: &Path) -> Result<Vec<SceneAnnotation>> {
    scene_dirs(dir)?
        .iter()
        .map(|d| read_annotation(&d.join(ANNOTATION_FILE)))
        .collect()
}

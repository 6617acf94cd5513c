//! File formats: OBJ / PLY meshes and point clouds, canonical JSON records
//! for annotations, predictions, detections and reports, and on-disk
//! library / scene layouts.

pub mod json;
pub mod layout;
pub mod obj;
pub mod ply;
pub mod records;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

pub use json::{from_versioned_str, round_significant, to_canonical_string};
pub use layout::{
    load_annotations, load_library, parse_mesh, read_annotation, read_point_cloud, save_library, scene_dirs,
    write_annotation, write_point_cloud, LibraryEntry, LibraryIndex, ANNOTATION_FILE, SCAN_FILE,
};
pub use records::{
    report_from_json, report_to_json, AnnotationObject, BoxRecord, DetectionRecord, DetectionSet, PredictionRecord,
    PredictionSet, SceneAnnotation, SceneDetections, ScenePredictions, TrsRecord,
};

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

//! Lookup table of CAD models keyed by model id.
//!
//! Models are expected in canonical (unit-cube normalized) form: centered on
//! the origin with largest axis-aligned extent 1, so a placement's
//! translation is also the center of the placed model's box.

use std::collections::HashMap;

use crate::geom::{TriMesh, Vec3};
use crate::metrics::SymmetryClass;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryModel {
    pub model_id: String,
    pub category: String,
    pub symmetry: SymmetryClass,
    pub mesh: TriMesh,
    extents: Vec3,
}

impl LibraryModel {
    /// Axis-aligned extents of the model's vertices in its canonical frame.
    pub fn extents(&self) -> Vec3 {
        self.extents
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CadLibrary {
    models: Vec<LibraryModel>,
    index: HashMap<String, usize>,
}

impl CadLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        model_id: impl Into<String>,
        category: impl Into<String>,
        symmetry: SymmetryClass,
        mesh: TriMesh,
    ) -> Result<()> {
        let model_id = model_id.into();
        if self.index.contains_key(&model_id) {
            return Err(Error::DuplicateModel(model_id));
        }
        let mesh = mesh.validated()?;
        let extents = mesh.aabb().ok_or(Error::MeshDegenerate)?.extents();
        self.index.insert(model_id.clone(), self.models.len());
        self.models.push(LibraryModel {
            model_id,
            category: category.into(),
            symmetry,
            mesh,
            extents,
        });
        Ok(())
    }

    pub fn get(&self, model_id: &str) -> Result<&LibraryModel> {
        self.index
            .get(model_id)
            .map(|&i| &self.models[i])
            .ok_or_else(|| Error::UnknownModel(model_id.to_string()))
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.index.contains_key(model_id)
    }

    pub fn models(&self) -> &[LibraryModel] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Distinct categories in first-seen order.
    pub fn categories(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.models {
            if !out.contains(&m.category) {
                out.push(m.category.clone());
            }
        }
        out
    }
}

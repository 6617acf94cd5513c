//! Geometry, losses, retrieval and evaluation for single-stage CAD retrieval
//! and alignment on point clouds.
//!
//! The crate is organized bottom-up:
//!
//! - [`geom`]: point clouds, meshes, oriented boxes, 9-DoF transforms and
//!   rotated-box overlap.
//! - [`metrics`]: Chamfer distance, F-score, and the alignment /
//!   reconstruction / shape accuracies with their matching protocol.
//! - [`embedding`]: exact nearest-neighbor retrieval over shape embeddings.
//! - [`training`]: target assignment and every training loss with analytic
//!   gradients.
//! - [`align`]: placing retrieved CAD models inside predicted boxes.
//! - [`scenegen`]: deterministic synthetic libraries and scenes.
//! - [`io`]: mesh readers and canonical JSON / binary file formats.

pub mod align;
pub mod embedding;
pub mod error;
pub mod geom;
pub mod io;
pub mod library;
pub mod metrics;
pub mod rng;
pub mod scenegen;
pub mod training;

pub use error::{Error, Result};

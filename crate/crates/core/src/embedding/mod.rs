//! Shape-embedding store with exact, category-filtered nearest-neighbor
//! retrieval.

mod db;
mod descriptor;
mod rank;
mod space;

pub use db::{load, save, DB_MAGIC, DB_VERSION};
pub use descriptor::{build_library_space, geometric_descriptor, GeometricDescriptor, DESCRIPTOR_SAMPLES};
pub use rank::{random_rank_shape_accuracy, rank_shape_accuracy, RankAccuracy};
pub use space::{EmbeddingEntry, EmbeddingSpace, EmbeddingVec, Neighbor, DEFAULT_EMBEDDING_DIM};

//! Training-target construction and the detector / encoder losses as pure
//! numeric functions with analytic gradients, for validating an external
//! training implementation against a reference.
//!
//! Front-face convention: face 0 is the box-local +x face and indices grow
//! counter-clockwise seen from +z (1 = +y, 2 = -x, 3 = -y).

mod fixtures;
mod losses;
mod targets;
mod total;

pub use fixtures::{generate_loss_fixtures, LossFixtures, FIXTURE_SCHEMA_VERSION};
pub use losses::{
    chamfer_reg_loss, embedding_mse, focal_loss, front_face_ce, seg_bce_balanced, triplet_loss, ChamferRegTarget,
    SegLoss, TripletBatch, TripletLoss, DEFAULT_TRIPLET_MARGIN, PROB_EPSILON,
};
pub use targets::{
    assign_targets, level_for_class, soften_front_face, AssignmentResult, Detection, FeatureLevel, DEFAULT_ASSIGN_K,
};
pub use total::{total_loss, LossBreakdown, LossConfig, LossWeights, TrainingTarget};

//! Benchmark accuracies for CAD alignment: alignment accuracy (translation,
//! rotation and scale thresholds), reconstruction accuracy (F-score of the
//! two placed CAD models) and shape accuracy (F-score with both models at
//! the ground-truth placement), plus the point-set kernels they rely on.

mod benchmark;
mod pointset;
mod protocol;

pub use benchmark::{
    evaluate_benchmark, AccuracyReport, AccuracyTable, BenchmarkScene, ClassAccuracy, MuSweepEntry, MU_SWEEP,
    REPORT_SCHEMA_VERSION,
};
pub use pointset::{
    chamfer, f_score, rescaled_cad_f_score, rescaled_f_score_from_samples, RescaledFScore, RESCALED_LONGEST_SIDE,
};
pub use protocol::{
    alignment_correct, match_predictions, rotation_error_sym, scale_error, GroundTruthInstance, MatchRecord,
    MetricConfig, PlacedPrediction, SymmetryClass,
};

use std::fmt::Write as _;

use cadalign::metrics::{AccuracyReport, AccuracyTable};

fn table(out: &mut String, title: &str, t: &AccuracyTable) {
    writeln!(out, "{title}").unwrap();
    writeln!(
        out,
        "  {:<16} {:>8} {:>8} {:>9}",
        "class", "correct", "total", "accuracy"
    )
    .unwrap();
    for (class, c) in &t.per_class {
        writeln!(
            out,
            "  {:<16} {:>8} {:>8} {:>9.4}",
            class, c.correct, c.total, c.accuracy
        )
        .unwrap();
    }
    let (correct, total) = t
        .per_class
        .values()
        .fold((0, 0), |(a, b), c| (a + c.correct, b + c.total));
    writeln!(out, "  {:<16} {:>8} {:>8} {:>9.4}", "class mean", "", "", t.class_mean).unwrap();
    writeln!(
        out,
        "  {:<16} {:>8} {:>8} {:>9.4}",
        "instance", correct, total, t.instance
    )
    .unwrap();
}

/// Human-readable summary: per-class, class-mean and instance accuracy for
/// alignment, reconstruction and shape, plus the threshold sweep if asked.
pub fn format_report(r: &AccuracyReport, mu_sweep: bool) -> String {
    let c = &r.config;
    let mut out = String::new();
    writeln!(
        out,
        "scenes: {}  (translation < {} m, rotation < {} deg, scale < {}; tau = {}, mu = {})",
        r.scenes, c.trans_thresh, c.rot_thresh, c.scale_thresh, c.tau, c.mu
    )
    .unwrap();
    table(&mut out, "alignment accuracy", &r.alignment);
    table(
        &mut out,
        &format!("reconstruction accuracy (mu = {})", c.mu),
        &r.reconstruction,
    );
    table(&mut out, &format!("shape accuracy (mu = {})", c.mu), &r.shape);
    if mu_sweep {
        writeln!(out, "mu sweep (instance accuracy)").unwrap();
        writeln!(out, "  {:<6} {:>14} {:>9}", "mu", "reconstruction", "shape").unwrap();
        for e in &r.mu_sweep {
            writeln!(
                out,
                "  {:<6} {:>14.4} {:>9.4}",
                e.mu, e.reconstruction.instance, e.shape.instance
            )
            .unwrap();
        }
    }
    out
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use cadalign::align::{object_points_canonical, reconstruct_scene};
use cadalign::embedding::{
    self, build_library_space, random_rank_shape_accuracy, rank_shape_accuracy, EmbeddingSpace, EmbeddingVec,
    GeometricDescriptor, DEFAULT_EMBEDDING_DIM, DESCRIPTOR_SAMPLES,
};
use cadalign::geom::{sample_surface, PointCloud, Vec3};
use cadalign::io::{
    self, layout, load_library, read_point_cloud, report_to_json, round_significant, save_library, scene_dirs,
    to_canonical_string, write_annotation, write_atomic, write_point_cloud, DetectionRecord, DetectionSet,
    PredictionSet, SceneAnnotation, SceneDetections, ScenePredictions, ANNOTATION_FILE, SCAN_FILE,
};
use cadalign::library::CadLibrary;
use cadalign::metrics::{evaluate_benchmark, BenchmarkScene, MetricConfig};
use cadalign::rng::derive_seed;
use cadalign::scenegen::{make_library, synth_scene, DegradeConfig, Family, HalfSpace, SceneConfig};
use cadalign::training::generate_loss_fixtures;
use cadalign::{Error, Result};
use clap::Args;
use rayon::prelude::*;

use crate::report::format_report;

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Error::InvalidInput(format!("invalid {what} `{t}`")))
        })
        .collect()
}

/// Scene directories under `dir`, or under `dir/scenes` when `dir` is a
/// `synth` output root.
fn resolve_scene_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let direct = scene_dirs(dir)?;
    if direct.is_empty() && dir.join("scenes").is_dir() {
        return scene_dirs(&dir.join("scenes"));
    }
    Ok(direct)
}

fn metric_config(tau: f64, mu: f64, samples: usize, seed: u64) -> Result<MetricConfig> {
    let cfg = MetricConfig {
        tau,
        mu,
        fscore_samples: samples,
        seed,
        ..MetricConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Comma-separated shape families (table, chair, bin).
    #[arg(long, default_value = "table,chair,bin")]
    families: String,
    #[arg(long, default_value_t = 10)]
    models_per_family: usize,
    #[arg(long, default_value_t = 10)]
    scenes: usize,
    #[arg(long, default_value_t = 5)]
    objects: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embedding dimension of the ideal detections' vectors.
    #[arg(long, default_value_t = DEFAULT_EMBEDDING_DIM)]
    dim: usize,
    /// Gaussian scan jitter in meters.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Fraction of scan points dropped.
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
    /// Remove scan points with `n·p > d`, given as `nx,ny,nz,d`.
    #[arg(long)]
    occlusion: Option<String>,
    #[arg(long, default_value_t = 2000)]
    points_per_object: usize,
    #[arg(long, default_value_t = 2000)]
    floor_points: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let families: Vec<Family> = parse_list(&a.families, "family")?;
    if families.is_empty() {
        return Err(Error::InvalidInput("no families given".into()));
    }
    let occlusion = match &a.occlusion {
        None => None,
        Some(s) => {
            let v: Vec<f64> = parse_list(s, "occlusion component")?;
            if v.len() != 4 {
                return Err(Error::InvalidInput("occlusion takes nx,ny,nz,d".into()));
            }
            Some(HalfSpace {
                normal: Vec3::new(v[0], v[1], v[2]),
                offset: v[3],
            })
        }
    };
    let cfg = SceneConfig {
        n_objects: a.objects,
        points_per_object: a.points_per_object,
        floor_points: a.floor_points,
        degrade: DegradeConfig {
            noise_sigma: a.noise,
            dropout: a.dropout,
            occlusion,
        },
        ..SceneConfig::default()
    };
    let library = make_library(&families, a.models_per_family, a.seed)?;
    let space = build_library_space(&library, a.dim, a.seed)?;
    let scenes = (0..a.scenes)
        .into_par_iter()
        .map(|i| {
            synth_scene(
                &library,
                &space,
                &cfg,
                format!("scene_{i:04}"),
                derive_seed(a.seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    layout::create_dir(&a.out)?;
    save_library(&library, &a.out.join("library"))?;
    let scenes_dir = a.out.join("scenes");
    scenes
        .par_iter()
        .map(|s| {
            let dir = scenes_dir.join(&s.scene_id);
            layout::create_dir(&dir)?;
            write_annotation(
                &dir.join(ANNOTATION_FILE),
                &SceneAnnotation::from_instances(&s.scene_id, &s.ground_truth),
            )?;
            write_point_cloud(&dir.join(SCAN_FILE), &s.scan)
        })
        .collect::<Result<Vec<_>>>()?;
    let detections = DetectionSet::new(
        library.categories(),
        scenes
            .iter()
            .map(|s| SceneDetections {
                scene_id: s.scene_id.clone(),
                detections: s.ideal_detections.iter().map(DetectionRecord::from_detection).collect(),
            })
            .collect(),
    );
    write_atomic(&a.out.join("detections.json"), detections.to_json()?.as_bytes())?;
    println!(
        "wrote {} models and {} scenes to {}",
        library.len(),
        scenes.len(),
        a.out.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    library: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EMBEDDING_DIM)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

pub fn embed(a: EmbedArgs) -> Result<()> {
    if a.dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    let library = load_library(&a.library)?;
    let space = build_library_space(&library, a.dim, a.seed)?;
    embedding::save(&space, &a.out)?;
    println!(
        "embedded {} models (dim {}) into {}",
        space.len(),
        space.dim(),
        a.out.display()
    );
    Ok(())
}

fn read_query(path: &Path, seed: u64) -> Result<PointCloud> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("obj") => sample_surface(&layout::parse_mesh(path)?, DESCRIPTOR_SAMPLES, seed),
        Some("ply") => {
            let data = io::ply::parse_ply(&layout::read_bytes(path)?)?;
            if data.faces.is_empty() {
                read_point_cloud(path)
            } else {
                sample_surface(&layout::parse_mesh(path)?, DESCRIPTOR_SAMPLES, seed)
            }
        }
        _ => Err(Error::UnsupportedFeature(format!("query format of {}", path.display()))),
    }
}

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    #[arg(long)]
    db: PathBuf,
    /// Point cloud (PLY) or mesh (OBJ / PLY with faces) to describe.
    #[arg(long)]
    query: PathBuf,
    /// Restrict retrieval to one category.
    #[arg(long)]
    category: Option<String>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Descriptor seed; must match the one used by `embed`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

pub fn retrieve(a: RetrieveArgs) -> Result<()> {
    let space = embedding::load(&a.db)?;
    let cloud = read_query(&a.query, a.seed)?;
    let query = GeometricDescriptor::new(space.dim(), a.seed).describe(&cloud)?;
    for n in space.knn(&query, a.k, a.category.as_deref())? {
        println!("{}\t{}\t{}", n.model_id, n.category, round_significant(n.distance));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    library: PathBuf,
    /// Detections below this confidence are ignored.
    #[arg(long, default_value_t = 0.5)]
    confidence_floor: f64,
    #[arg(long)]
    out: PathBuf,
}

pub fn align(a: AlignArgs) -> Result<()> {
    let space = embedding::load(&a.db)?;
    let library = load_library(&a.library)?;
    let set = DetectionSet::from_json(&layout::read_text(&a.detections)?)?;
    let mut scenes = Vec::with_capacity(set.scenes.len());
    let mut placed_total = 0;
    for scene in &set.scenes {
        let dets = scene
            .detections
            .iter()
            .enumerate()
            .map(|(i, d)| d.to_detection(&format!("{}.detections[{i}]", scene.scene_id)))
            .collect::<Result<Vec<_>>>()?;
        let rec = reconstruct_scene(&dets, &space, &library, &set.categories, a.confidence_floor);
        for (i, e) in &rec.failures {
            let warning = serde_json::json!({
                "warning": e.kind(),
                "scene_id": scene.scene_id,
                "detection": i,
                "message": e.to_string(),
            });
            eprintln!("{warning}");
        }
        placed_total += rec.placed.len();
        let preds: Vec<_> = rec.placed.iter().map(|p| p.to_prediction()).collect();
        scenes.push(ScenePredictions::from_predictions(&scene.scene_id, &preds));
    }
    write_atomic(&a.out, PredictionSet::new(scenes).to_json()?.as_bytes())?;
    println!("placed {placed_total} models in {} scenes", set.scenes.len());
    Ok(())
}

fn load_benchmark(gt: &Path, predictions: Option<&PredictionSet>) -> Result<Vec<BenchmarkScene>> {
    let dirs = resolve_scene_dirs(gt)?;
    let annotations = dirs
        .iter()
        .map(|d| layout::read_annotation(&d.join(ANNOTATION_FILE)))
        .collect::<Result<Vec<_>>>()?;
    let mut scenes = Vec::with_capacity(annotations.len());
    for ann in &annotations {
        let ground_truth = ann.to_instances()?;
        let predictions = match predictions {
            None => ground_truth
                .iter()
                .map(|g| cadalign::metrics::PlacedPrediction {
                    category: g.category.clone(),
                    model_id: g.model_id.clone(),
                    trs: g.trs,
                    confidence: 1.0,
                })
                .collect(),
            Some(set) => match set.scenes.iter().find(|s| s.scene_id == ann.scene_id) {
                Some(s) => s.to_predictions()?,
                None => Vec::new(),
            },
        };
        scenes.push(BenchmarkScene {
            scene_id: ann.scene_id.clone(),
            predictions,
            ground_truth,
        });
    }
    if let Some(set) = predictions {
        for s in &set.scenes {
            if !annotations.iter().any(|a| a.scene_id == s.scene_id) {
                return Err(Error::InvalidInput(format!(
                    "predictions reference scene `{}` with no annotation",
                    s.scene_id
                )));
            }
        }
    }
    Ok(scenes)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of scene annotations (or a `synth` output root).
    #[arg(long)]
    gt: PathBuf,
    /// Predictions JSON. Without it the annotations are scored against
    /// themselves, a sanity check that must yield 1.0 everywhere.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long)]
    library: PathBuf,
    /// F-score distance threshold (after rescaling the GT model's longest side to 10).
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// F-score acceptance threshold.
    #[arg(long, default_value_t = 0.7)]
    mu: f64,
    /// Print the reconstruction / shape accuracy at every swept threshold.
    #[arg(long)]
    mu_sweep: bool,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = metric_config(a.tau, a.mu, a.samples, a.seed)?;
    let library = load_library(&a.library)?;
    let preds = match &a.pred {
        Some(path) => Some(PredictionSet::from_json(&layout::read_text(path)?)?),
        None => None,
    };
    let scenes = load_benchmark(&a.gt, preds.as_ref())?;
    let report = evaluate_benchmark(&scenes, &library, &cfg)?;
    if let Some(out) = &a.out {
        write_atomic(out, report_to_json(&report)?.as_bytes())?;
    }
    print!("{}", format_report(&report, a.mu_sweep));
    Ok(())
}

#[derive(Debug, Args)]
pub struct RankcurveArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    library: PathBuf,
    #[arg(long, default_value = "1,2,5,10,50")]
    ranks: String,
    /// Query with the observed scan points of every annotated object in
    /// these scenes; without it every database entry queries itself.
    #[arg(long)]
    scenes: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 0.7)]
    mu: f64,
    #[arg(long, default_value_t = 2048)]
    samples: usize,
    /// Seeds the descriptor (must match `embed`), sampling and the random baseline.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// One query per annotated object: its foreground scan points mapped into
/// the model frame by the annotated pose.
pub fn scene_queries(
    dirs: &[PathBuf],
    library: &CadLibrary,
    descriptor: &GeometricDescriptor,
) -> Result<Vec<(EmbeddingVec, String)>> {
    let per_scene = dirs
        .par_iter()
        .map(|d| {
            let ann = layout::read_annotation(&d.join(ANNOTATION_FILE))?;
            let scan = read_point_cloud(&d.join(SCAN_FILE))?;
            let mut out = Vec::new();
            for g in ann.to_instances()? {
                let extents = library.get(&g.model_id)?.extents();
                match object_points_canonical(&scan, &g.trs, &extents, 0.02) {
                    Ok(cloud) => out.push((descriptor.describe(&cloud)?, g.model_id)),
                    Err(Error::EmptyCloud) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_scene.into_iter().flatten().collect())
}

pub fn rankcurve(a: RankcurveArgs) -> Result<()> {
    let ranks: Vec<usize> = parse_list(&a.ranks, "rank")?;
    let cfg = metric_config(a.tau, a.mu, a.samples, a.seed)?;
    let space = embedding::load(&a.db)?;
    let library = load_library(&a.library)?;
    let queries = match &a.scenes {
        Some(dir) => scene_queries(
            &resolve_scene_dirs(dir)?,
            &library,
            &GeometricDescriptor::new(space.dim(), a.seed),
        )?,
        None => space
            .entries()
            .iter()
            .map(|e| (e.vector.clone(), e.model_id.clone()))
            .collect(),
    };
    let curve = rank_shape_accuracy(&space, &queries, &library, &ranks, &cfg)?;
    let random = random_rank_shape_accuracy(&space, &queries, &library, &cfg, a.seed)?;
    let mut csv = String::from("rank,accuracy,random_accuracy\n");
    for r in &curve {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.rank,
            round_significant(r.accuracy),
            round_significant(random)
        ));
    }
    match &a.out {
        Some(p) => write_atomic(p, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    db: PathBuf,
    /// Scene directory (or `synth` output root) used for the evaluation timing.
    #[arg(long)]
    scenes: PathBuf,
    /// Library directory; defaults to `library/` next to or inside `--scenes`.
    #[arg(long)]
    library: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    queries: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn find_library(scenes: &Path) -> Result<PathBuf> {
    let candidates = [Some(scenes.join("library")), scenes.parent().map(|p| p.join("library"))];
    candidates
        .into_iter()
        .flatten()
        .find(|p| p.join(layout::LIBRARY_INDEX).is_file())
        .ok_or_else(|| Error::InvalidInput(format!("no library found near {}; pass --library", scenes.display())))
}

fn time_retrieval(space: &EmbeddingSpace, n: usize, seed: u64) -> Result<f64> {
    if space.is_empty() || n == 0 {
        return Err(Error::InvalidInput(
            "retrieval timing needs a non-empty database and queries".into(),
        ));
    }
    let queries: Vec<(EmbeddingVec, &str)> = (0..n)
        .map(|i| {
            let e = &space.entries()[derive_seed(seed, i as u64) as usize % space.len()];
            let v: Vec<f32> = e.vector.as_slice().iter().map(|x| x * 1.01).collect();
            Ok((EmbeddingVec::new(v)?, e.category.as_str()))
        })
        .collect::<Result<_>>()?;
    let start = Instant::now();
    for (q, c) in &queries {
        std::hint::black_box(space.nearest(q, Some(c))?);
    }
    Ok(start.elapsed().as_secs_f64() * 1e6 / n as f64)
}

pub fn bench(a: BenchArgs) -> Result<()> {
    let space = embedding::load(&a.db)?;
    let library_dir = match a.library {
        Some(p) => p,
        None => find_library(&a.scenes)?,
    };
    let library = load_library(&library_dir)?;
    let us_per_query = time_retrieval(&space, a.queries, a.seed)?;
    let scenes = load_benchmark(&a.scenes, None)?;
    let cfg = MetricConfig {
        seed: a.seed,
        ..MetricConfig::default()
    };
    let start = Instant::now();
    evaluate_benchmark(&scenes, &library, &cfg)?;
    let eval_s = start.elapsed().as_secs_f64();
    println!(
        "retrieval: {us_per_query:.2} us/query over {} entries ({} queries)",
        space.len(),
        a.queries
    );
    println!(
        "evaluation: {:.2} ms/scene over {} scenes ({:.3} s total, threads: {})",
        eval_s * 1e3 / scenes.len().max(1) as f64,
        scenes.len(),
        eval_s,
        rayon::current_num_threads()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct FixturesArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cases per loss.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn fixtures(a: FixturesArgs) -> Result<()> {
    let fx = generate_loss_fixtures(a.seed, a.count)?;
    write_atomic(&a.out, to_canonical_string(&fx)?.as_bytes())?;
    println!("wrote {} cases per loss to {}", a.count, a.out.display());
    Ok(())
}

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flowcomp::evalkit::{
    cda_multiseed, davies_bouldin, load_embeddings, load_labels, silhouette, CdaMode,
    LabeledEmbeddingSet, Labels, SeedResult,
};
use flowcomp::gvf::{EdgeSource, DEFAULT_ITERATIONS, DEFAULT_MU};
use flowcomp::imagecore::{load_image, to_grayscale};
use flowcomp::io::{encode_fcf2, write_atomic, write_fcf1, write_flow, write_gray_png};
use flowcomp::saliency::load_saliency;
use flowcomp::gvf::solve_dual_stream;
use flowcomp::{Analysis, RgbImage, SaliencySource};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::corpus::{describe, descriptors_csv, list_images, load_all, stem, thread_pool, Failure};

/// Result of a corpus command: how many items succeeded and which failed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub succeeded: usize,
    pub failures: Vec<Failure>,
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn report_failures(&self) {
        for f in &self.failures {
            eprintln!("failed: {}: {}", f.item.display(), f.message);
        }
    }
}

fn split_loaded(paths: &[PathBuf], pool: &rayon::ThreadPool) -> (Vec<(PathBuf, RgbImage)>, Vec<Failure>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (p, r) in load_all(paths, pool) {
        match r {
            Ok(img) => ok.push((p, img)),
            Err(e) => failed.push(Failure {
                item: p,
                message: e.to_string(),
            }),
        }
    }
    (ok, failed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SaliencyFormat {
    Png,
    Fcf,
}

/// Writes one saliency map per image at the image's own resolution.
pub fn cmd_saliency(
    input: &Path,
    generator: &str,
    output: &Path,
    format: SaliencyFormat,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let cfg = PipelineConfig {
        saliency_source: generator.to_string(),
        ..cfg.clone()
    };
    let source = cfg.saliency()?;
    if matches!(source, SaliencySource::File(_)) {
        bail!("the saliency command generates maps; 'file:' sources are only for reading");
    }
    let paths = list_images(input)?;
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let pool = thread_pool()?;
    let results: Vec<(PathBuf, flowcomp::Result<()>)> = pool.install(|| {
        use rayon::prelude::*;
        paths
            .par_iter()
            .map(|p| {
                let r = load_image(p).and_then(|img| {
                    let s = source.saliency_for(&to_grayscale(&img), &stem(p))?;
                    match format {
                        SaliencyFormat::Png => write_gray_png(&output.join(format!("{}.png", stem(p))), &s),
                        SaliencyFormat::Fcf => write_fcf1(&output.join(format!("{}.fcf", stem(p))), &s),
                    }
                });
                (p.clone(), r)
            })
            .collect()
    });
    let mut outcome = Outcome::default();
    for (p, r) in results {
        match r {
            Ok(()) => outcome.succeeded += 1,
            Err(e) => outcome.failures.push(Failure {
                item: p,
                message: e.to_string(),
            }),
        }
    }
    println!(
        "saliency ({}): {} written, {} failed, output {}",
        source,
        outcome.succeeded,
        outcome.failures.len(),
        output.display()
    );
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvfSummary {
    pub image: PathBuf,
    pub baseline_energy: [f64; 2],
    pub enhanced_energy: [f64; 2],
    pub config: PipelineConfig,
}

/// Solves both streams for one image and writes `baseline.fcf`,
/// `enhanced.fcf`, `average.fcf`, `tensor.fcf` and `gvf.json` into `output`.
pub fn cmd_gvf(
    image: &Path,
    saliency_file: Option<&Path>,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<GvfSummary> {
    let analysis_cfg = cfg.analysis()?;
    let img = load_image(image)?;
    let gray = to_grayscale(&img).resize(analysis_cfg.grid, analysis_cfg.grid)?;
    let saliency = match saliency_file {
        Some(f) => load_saliency(f, analysis_cfg.grid, analysis_cfg.grid)?,
        None => analysis_cfg.saliency.saliency_for(&gray, &stem(image))?,
    };
    let streams = solve_dual_stream(&gray, &saliency, &analysis_cfg.gvf, analysis_cfg.canny)
        .with_context(|| format!("processing {}", image.display()))?;
    let a = Analysis { gray, streams };
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    write_flow(&output.join("baseline.fcf"), &a.streams.baseline)?;
    write_flow(&output.join("enhanced.fcf"), &a.streams.enhanced)?;
    write_flow(&output.join("average.fcf"), &a.streams.average())?;
    let t = a.tensor(cfg.tensor_size)?;
    let [s, u, v] = &t.channels;
    write_atomic(&output.join("tensor.fcf"), &encode_fcf2(&[s, u, v])?)?;

    let p = &analysis_cfg.gvf;
    let (b0, b1) = a.streams.baseline_energy(p.mu)?;
    let (e0, e1) = a.streams.enhanced_energy(p.mu, p.beta)?;
    println!("baseline energy: iteration 0 = {b0}, iteration {} = {b1}", p.iterations);
    println!("enhanced energy: iteration 0 = {e0}, iteration {} = {e1}", p.iterations);
    let summary = GvfSummary {
        image: image.to_path_buf(),
        baseline_energy: [b0, b1],
        enhanced_energy: [e0, e1],
        config: cfg.clone(),
    };
    write_json(&output.join("gvf.json"), &summary)?;
    Ok(summary)
}

/// Writes the descriptor CSV for every image in `images`.
pub fn cmd_embed(
    images: &Path,
    labels: Option<&Path>,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    let analysis_cfg = cfg.analysis()?;
    let paths = list_images(images)?;
    let pool = thread_pool()?;
    let (loaded, mut failures) = split_loaded(&paths, &pool);
    let (rows, more) = describe(&loaded, &analysis_cfg, &pool);
    failures.extend(more);
    failures.sort_by(|a, b| a.item.cmp(&b.item));

    if let Some(l) = labels {
        let labels = load_labels(l, true)?;
        for id in rows.keys().filter(|id| !labels.contains_key(*id)) {
            log::warn!("image '{id}' has no labels");
        }
        for id in labels.keys().filter(|id| !rows.contains_key(*id)) {
            log::warn!("labeled id '{id}' has no image");
        }
    }
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    write_atomic(output, descriptors_csv(&rows).as_bytes())?;
    println!(
        "embed: {} descriptors written to {}, {} failed",
        rows.len(),
        output.display(),
        failures.len()
    );
    Ok(Outcome {
        succeeded: rows.len(),
        failures,
    })
}

/// JSON evaluation report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: CdaMode,
    pub seeds: Vec<SeedResult>,
    pub mean: f64,
    pub std: f64,
    pub cv: f64,
    /// `null` when fewer than two composition classes are present.
    pub dbi: Option<f64>,
    pub silhouette: Option<f64>,
    pub embedding_dim: usize,
    pub n_images: usize,
    pub config: PipelineConfig,
}

pub fn evaluate(data: &LabeledEmbeddingSet, mode: CdaMode, cfg: &PipelineConfig) -> Result<EvalReport> {
    let cda = cda_multiseed(data, mode, &cfg.seeds, cfg.per_anchor)?;
    let clustering = |r: flowcomp::Result<f64>, name: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            log::warn!("{name} not computed: {e}");
            None
        }
    };
    Ok(EvalReport {
        mode,
        seeds: cda.per_seed,
        mean: cda.mean,
        std: cda.std,
        cv: cda.cv,
        dbi: clustering(davies_bouldin(data), "DBI"),
        silhouette: clustering(silhouette(data), "silhouette"),
        embedding_dim: data.dim(),
        n_images: data.len(),
        config: cfg.clone(),
    })
}

fn print_report(r: &EvalReport) {
    for s in &r.seeds {
        println!("seed {}: accuracy {:.4} over {} triplets", s.seed, s.accuracy, s.n_triplets);
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "{}: mean {:.4} std {:.4} cv {:.4} | DBI {} | silhouette {} | {} images, dim {}",
        r.mode,
        r.mean,
        r.std,
        r.cv,
        fmt(r.dbi),
        fmt(r.silhouette),
        r.n_images,
        r.embedding_dim
    );
}

pub fn cmd_eval(
    embeddings: &Path,
    labels: &Path,
    mode: CdaMode,
    free_classes: bool,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let emb = load_embeddings(embeddings).with_context(|| format!("loading {}", embeddings.display()))?;
    let lab: Labels =
        load_labels(labels, free_classes).with_context(|| format!("loading {}", labels.display()))?;
    let data = LabeledEmbeddingSet::join(&emb, &lab)?;
    let report = evaluate(&data, mode, cfg)?;
    print_report(&report);
    write_json(output, &report)?;
    Ok(report)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub const ABLATION_MU: [f64; 3] = [0.05, 0.15, 0.25];
pub const ABLATION_ITERATIONS: [usize; 3] = [10, 30, 50];

/// One cell of the ablation sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationCell {
    pub name: String,
    pub mu: f64,
    pub iterations: usize,
    pub edge_source: EdgeSource,
}

/// The 3x3 smoothness/iteration grid with the configured edge source, then
/// the three edge sources at the default smoothness and iteration count.
pub fn ablation_cells(grid_edge_source: EdgeSource) -> Vec<AblationCell> {
    let mut cells = Vec::with_capacity(12);
    for mu in ABLATION_MU {
        for iterations in ABLATION_ITERATIONS {
            cells.push(AblationCell {
                name: format!("mu{mu}_it{iterations}"),
                mu,
                iterations,
                edge_source: grid_edge_source,
            });
        }
    }
    for edge_source in EdgeSource::ALL {
        cells.push(AblationCell {
            name: format!("edge_{edge_source}"),
            mu: DEFAULT_MU,
            iterations: DEFAULT_ITERATIONS,
            edge_source,
        });
    }
    cells
}

/// Runs every ablation cell over the corpus and writes `<cell>.json` for
/// each into `output`.
pub fn cmd_ablate(
    images: &Path,
    labels: &Path,
    mode: CdaMode,
    free_classes: bool,
    output: &Path,
    cfg: &PipelineConfig,
) -> Result<Outcome> {
    cfg.validate()?;
    let lab = load_labels(labels, free_classes)?;
    let paths = list_images(images)?;
    let pool = thread_pool()?;
    let (loaded, failures) = split_loaded(&paths, &pool);
    std::fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
    let mut outcome = Outcome {
        succeeded: 0,
        failures,
    };
    for cell in ablation_cells(cfg.edge_source) {
        let cell_cfg = PipelineConfig {
            mu: cell.mu,
            iterations: cell.iterations,
            edge_source: cell.edge_source,
            ..cfg.clone()
        };
        let (rows, failed) = describe(&loaded, &cell_cfg.analysis()?, &pool);
        outcome.failures.extend(failed.into_iter().map(|f| Failure {
            message: format!("[{}] {}", cell.name, f.message),
            ..f
        }));
        let emb = flowcomp::evalkit::parse_embeddings(&descriptors_csv(&rows))?;
        let data = LabeledEmbeddingSet::join(&emb, &lab)?;
        let report = evaluate(&data, mode, &cell_cfg)?;
        write_json(&output.join(format!("{}.json", cell.name)), &report)?;
        println!("{:<16} {} mean {:.4} (cv {:.4})", cell.name, mode, report.mean, report.cv);
        outcome.succeeded += 1;
    }
    Ok(outcome)
}

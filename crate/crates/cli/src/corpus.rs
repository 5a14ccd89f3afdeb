use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use flowcomp::imagecore::load_image;
use flowcomp::{analyze, AnalysisConfig, FlowDescriptor, RgbImage};
use rayon::prelude::*;

pub const THREADS_ENV: &str = "FLOWCOMP_THREADS";

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Worker pool bounded by `FLOWCOMP_THREADS` (all cores when unset or 0).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .with_context(|| format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))?,
        _ => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(n).build()?)
}

/// A per-item failure: the offending file and a description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    pub item: PathBuf,
    pub message: String,
}

/// Image files directly inside `dir`, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    let mut out = Vec::new();
    for e in entries {
        let path = e.with_context(|| format!("reading directory {}", dir.display()))?.path();
        let is_image = path
            .extension()
            .and_then(|x| x.to_str())
            .is_some_and(|x| IMAGE_EXTENSIONS.contains(&x.to_ascii_lowercase().as_str()));
        if is_image && path.is_file() {
            out.push(path);
        }
    }
    if out.is_empty() {
        bail!("no images found in {}", dir.display());
    }
    out.sort();
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Loads every image in parallel; the result keeps the input order.
pub fn load_all(
    paths: &[PathBuf],
    pool: &rayon::ThreadPool,
) -> Vec<(PathBuf, flowcomp::Result<RgbImage>)> {
    pool.install(|| {
        paths
            .par_iter()
            .map(|p| (p.clone(), load_image(p)))
            .collect()
    })
}

/// Descriptors keyed by image stem, plus the items that failed.
pub fn describe(
    images: &[(PathBuf, RgbImage)],
    cfg: &AnalysisConfig,
    pool: &rayon::ThreadPool,
) -> (BTreeMap<String, FlowDescriptor>, Vec<Failure>) {
    let results: Vec<(PathBuf, flowcomp::Result<FlowDescriptor>)> = pool.install(|| {
        images
            .par_iter()
            .map(|(p, img)| {
                let d = analyze(img, &stem(p), cfg).and_then(|a| a.descriptor());
                (p.clone(), d)
            })
            .collect()
    });
    let mut rows = BTreeMap::new();
    let mut failures = Vec::new();
    for (path, r) in results {
        match r {
            Ok(d) => {
                let id = stem(&path);
                match rows.entry(id) {
                    Entry::Occupied(e) => failures.push(Failure {
                        item: path,
                        message: format!("duplicate image id '{}'", e.key()),
                    }),
                    Entry::Vacant(e) => {
                        e.insert(d);
                    }
                }
            }
            Err(e) => failures.push(Failure {
                item: path,
                message: e.to_string(),
            }),
        }
    }
    (rows, failures)
}

/// `id,v1,...,vD` lines in id order, values in shortest round-trip form.
pub fn descriptors_csv(rows: &BTreeMap<String, FlowDescriptor>) -> String {
    let mut out = String::new();
    for (id, d) in rows {
        out.push_str(id);
        for v in d.values() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

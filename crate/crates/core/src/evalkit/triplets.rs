use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{Entry, LabeledEmbeddingSet};
use super::rng::SplitMix64;
use crate::error::{Error, Result};

pub const DEFAULT_SEEDS: [u64; 5] = [42, 43, 44, 45, 46];
pub const DEFAULT_PER_ANCHOR: usize = 12;
/// Coefficient of variation above which a report is flagged.
pub const CV_WARN_THRESHOLD: f64 = 0.03;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdaMode {
    /// Negative shares no composition class with the anchor.
    Cda1,
    /// As `Cda1`, and the negative also shares a semantic label with the
    /// anchor.
    Cda2,
}

impl fmt::Display for CdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CdaMode::Cda1 => "cda1",
            CdaMode::Cda2 => "cda2",
        })
    }
}

impl FromStr for CdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cda1" => Ok(CdaMode::Cda1),
            "cda2" => Ok(CdaMode::Cda2),
            other => Err(Error::InvalidParameter(format!("unknown CDA mode '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Triplet {
    pub anchor_id: String,
    pub positive_id: String,
    pub negative_id: String,
}

pub fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

fn valid_positive(anchor: &Entry, p: &Entry) -> bool {
    anchor.shares_composition(p)
}

fn valid_negative(anchor: &Entry, n: &Entry, mode: CdaMode) -> bool {
    !anchor.shares_composition(n) && (mode == CdaMode::Cda1 || anchor.shares_semantic(n))
}

fn candidates(data: &LabeledEmbeddingSet, a: usize, mode: CdaMode) -> (Vec<usize>, Vec<usize>) {
    let entries = data.entries();
    let anchor = &entries[a];
    let pos = (0..entries.len())
        .filter(|&j| j != a && valid_positive(anchor, &entries[j]))
        .collect();
    let neg = (0..entries.len())
        .filter(|&j| valid_negative(anchor, &entries[j], mode))
        .collect();
    (pos, neg)
}

fn triplet(data: &LabeledEmbeddingSet, a: usize, p: usize, n: usize) -> Triplet {
    let e = data.entries();
    Triplet {
        anchor_id: e[a].id.clone(),
        positive_id: e[p].id.clone(),
        negative_id: e[n].id.clone(),
    }
}

/// Seeded triplet sampling.
///
/// Anchors are visited in id order. For an anchor with at least one valid
/// positive and one valid negative (candidate lists in id order),
/// `per_anchor` triplets are drawn with replacement: positive index first,
/// then negative index, each via [`SplitMix64::below`]. Anchors without
/// candidates draw nothing and consume no random numbers.
pub fn sample_triplets(
    data: &LabeledEmbeddingSet,
    mode: CdaMode,
    seed: u64,
    per_anchor: usize,
) -> Result<Vec<Triplet>> {
    if per_anchor == 0 {
        return Err(Error::InvalidParameter("per_anchor must be >= 1".into()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    for a in 0..data.len() {
        let (pos, neg) = candidates(data, a, mode);
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        for _ in 0..per_anchor {
            let p = pos[rng.below(pos.len())];
            let n = neg[rng.below(neg.len())];
            out.push(triplet(data, a, p, n));
        }
    }
    if out.is_empty() {
        return Err(Error::NoValidTriplets);
    }
    Ok(out)
}

/// Every valid triplet, anchors then positives then negatives in id order.
pub fn enumerate_triplets(data: &LabeledEmbeddingSet, mode: CdaMode) -> Vec<Triplet> {
    let mut out = Vec::new();
    for a in 0..data.len() {
        let (pos, neg) = candidates(data, a, mode);
        for &p in &pos {
            for &n in &neg {
                out.push(triplet(data, a, p, n));
            }
        }
    }
    out
}

/// Fraction of triplets with `d(a, p) < d(a, n)`. Ties count as failures.
pub fn cda(data: &LabeledEmbeddingSet, triplets: &[Triplet]) -> Result<f64> {
    if triplets.is_empty() {
        return Err(Error::NoValidTriplets);
    }
    let index: HashMap<&str, &[f64]> = data
        .entries()
        .iter()
        .map(|e| (e.id.as_str(), e.embedding.as_slice()))
        .collect();
    let get = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    };
    let mut hits = 0usize;
    for t in triplets {
        let a = get(&t.anchor_id)?;
        let dp = l2_distance(a, get(&t.positive_id)?)?;
        let dn = l2_distance(a, get(&t.negative_id)?)?;
        if dp < dn {
            hits += 1;
        }
    }
    Ok(hits as f64 / triplets.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy: f64,
    pub n_triplets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdaReport {
    pub mode: CdaMode,
    pub per_seed: Vec<SeedResult>,
    pub mean: f64,
    /// Population standard deviation across seeds.
    pub std: f64,
    /// `std / mean`, or 0 when the mean is 0.
    pub cv: f64,
}

impl CdaReport {
    pub fn cv_exceeds_threshold(&self) -> bool {
        self.cv >= CV_WARN_THRESHOLD
    }
}

pub fn cda_multiseed(
    data: &LabeledEmbeddingSet,
    mode: CdaMode,
    seeds: &[u64],
    per_anchor: usize,
) -> Result<CdaReport> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let t = sample_triplets(data, mode, seed, per_anchor)?;
            Ok(SeedResult {
                seed,
                accuracy: cda(data, &t)?,
                n_triplets: t.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_seed.len() as f64;
    let mean = per_seed.iter().map(|s| s.accuracy).sum::<f64>() / n;
    let std = (per_seed
        .iter()
        .map(|s| (s.accuracy - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let cv = if mean > 0.0 { std / mean } else { 0.0 };
    let report = CdaReport {
        mode,
        per_seed,
        mean,
        std,
        cv,
    };
    if report.cv_exceeds_threshold() {
        log::warn!(
            "{mode}: coefficient of variation {:.4} is at or above {CV_WARN_THRESHOLD}",
            report.cv
        );
    }
    Ok(report)
}

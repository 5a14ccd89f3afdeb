//! Embedding evaluation: triplet accuracy (CDA-1 / CDA-2) with seeded
//! sampling, and Davies-Bouldin / silhouette clustering scores.

mod cluster;
mod data;
mod rng;
mod triplets;

pub use cluster::{davies_bouldin, davies_bouldin_index, silhouette, silhouette_score};
pub use data::{
    canonical_class, load_embeddings, load_labels, parse_embeddings, parse_labels, Embeddings,
    Entry, LabelSet, LabeledEmbeddingSet, Labels, KUPCP_CLASSES,
};
pub use rng::SplitMix64;
pub use triplets::{
    cda, cda_multiseed, enumerate_triplets, l2_distance, sample_triplets, CdaMode, CdaReport,
    SeedResult, Triplet, CV_WARN_THRESHOLD, DEFAULT_PER_ANCHOR, DEFAULT_SEEDS,
};

//! Gradient vector flow fields for image composition analysis.
//!
//! The crate computes a baseline and a saliency-enhanced gradient vector
//! flow (GVF) field from an image, summarizes both streams with multi-scale
//! divergence, curl and magnitude statistics, and evaluates the resulting
//! embeddings with triplet accuracy (CDA-1 / CDA-2) and clustering metrics.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evalkit;
pub mod field;
pub mod flowfeat;
pub mod gvf;
pub mod imagecore;
pub mod io;
pub mod pipeline;
pub mod saliency;
pub mod synth;

pub use error::{Error, Result};
pub use field::{FlowField, ScalarField};
pub use flowfeat::{FlowDescriptor, FlowStats, ScaleFeatures, DESCRIPTOR_LEN};
pub use gvf::{EdgeSource, GvfParams, InputTensor};
pub use imagecore::{GrayImage, RgbImage};
pub use pipeline::{analyze, Analysis, AnalysisConfig, SaliencySource};
pub use saliency::SaliencyMap;

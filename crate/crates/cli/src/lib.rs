//! Library side of the `flowcomp` command-line tool.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod render;

pub use commands::{
    ablation_cells, cmd_ablate, cmd_embed, cmd_eval, cmd_gvf, cmd_saliency, evaluate, EvalReport,
    GvfSummary, Outcome, SaliencyFormat,
};
pub use config::{Overrides, PipelineConfig};
pub use render::{render, QuiverStyle, RenderKind};

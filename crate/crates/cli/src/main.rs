use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use flowcomp::evalkit::CdaMode;
use flowcomp_cli::{
    cmd_ablate, cmd_embed, cmd_eval, cmd_gvf, cmd_saliency, render, Outcome, Overrides,
    PipelineConfig, QuiverStyle, RenderKind, SaliencyFormat,
};

#[derive(Parser)]
#[command(name = "flowcomp", version, about = "Gradient vector flow composition analysis")]
struct Cli {
    /// Flat JSON config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one saliency map per image in a directory.
    Saliency {
        #[arg(long)]
        input: PathBuf,
        /// uniform, center or edge; defaults to the configured saliency source.
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "png")]
        format: SaliencyFormat,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Solve the baseline and saliency-enhanced GVF streams for one image.
    Gvf {
        #[arg(long)]
        image: PathBuf,
        /// Saliency map file (PNG or FCF1); otherwise --saliency-source is used.
        #[arg(long)]
        saliency: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write flow descriptors for every image in a directory as CSV.
    Embed {
        #[arg(long)]
        images: PathBuf,
        /// Label file; only used to warn about unlabeled images.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Triplet accuracy and clustering scores for an embedding file.
    Eval {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "cda1")]
        mode: CdaMode,
        /// Accept composition class names outside the KU-PCP set.
        #[arg(long)]
        free_classes: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render a field from a flow file, raw field or image as a grayscale PNG.
    Render {
        #[arg(long)]
        input: PathBuf,
        /// div, curl, mag, saliency or quiver.
        #[arg(long)]
        kind: RenderKind,
        #[arg(long)]
        output: PathBuf,
        /// Quiver: output pixels per flow sample.
        #[arg(long, default_value_t = QuiverStyle::default().scale)]
        scale: usize,
        /// Quiver: flow samples between arrows.
        #[arg(long, default_value_t = QuiverStyle::default().stride)]
        stride: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep smoothness x iterations and edge sources; one JSON report per cell.
    Ablate {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "cda1")]
        mode: CdaMode,
        #[arg(long)]
        free_classes: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn config(path: Option<&Path>, o: &Overrides) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::resolve(path)?;
    o.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn finish(outcome: Outcome) -> ExitCode {
    outcome.report_failures();
    if outcome.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let path = cli.config.as_deref();
    Ok(match cli.command {
        Command::Saliency {
            input,
            generator,
            output,
            format,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.join("saliency"));
            let generator = generator.unwrap_or_else(|| cfg.saliency_source.clone());
            finish(cmd_saliency(&input, &generator, &out, format, &cfg)?)
        }
        Command::Gvf {
            image,
            saliency,
            output,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.join("gvf"));
            cmd_gvf(&image, saliency.as_deref(), &out, &cfg)?;
            ExitCode::SUCCESS
        }
        Command::Embed {
            images,
            labels,
            output,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.join("descriptors.csv"));
            finish(cmd_embed(&images, labels.as_deref(), &out, &cfg)?)
        }
        Command::Eval {
            embeddings,
            labels,
            mode,
            free_classes,
            output,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.join(format!("report_{mode}.json")));
            cmd_eval(&embeddings, &labels, mode, free_classes, &out, &cfg)?;
            ExitCode::SUCCESS
        }
        Command::Render {
            input,
            kind,
            output,
            scale,
            stride,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            render(&input, kind, &output, &cfg.analysis()?, QuiverStyle { scale, stride })?;
            ExitCode::SUCCESS
        }
        Command::Ablate {
            images,
            labels,
            mode,
            free_classes,
            output,
            overrides,
        } => {
            let cfg = config(path, &overrides)?;
            let out = output.unwrap_or_else(|| cfg.output_dir.join("ablation"));
            finish(cmd_ablate(&images, &labels, mode, free_classes, &out, &cfg)?)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

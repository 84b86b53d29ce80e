use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ce_surf::cli::{default_poses, run_pipeline, PipelineConfig};
use ce_surf::preprocess::Kernel3x3;
use ce_surf::viewer::{RenderSettings, ViewPose};

/// Reconstruct, render and export a 3D surface from a capsule-endoscopy frame.
#[derive(Debug, Parser)]
#[command(name = "ce-surf", version)]
struct Args {
    /// Input frame (8-bit PNG or PPM).
    input: PathBuf,

    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,

    /// Integer upscaling ratio.
    #[arg(long, default_value_t = 2)]
    scale: usize,

    /// Standard-deviation multiplier for the rescaling bounds.
    #[arg(long, default_value_t = 2.0)]
    k_sigma: f64,

    /// Smoothing kernel as nine comma-separated weights, row-major.
    #[arg(long)]
    kernel: Option<Kernel3x3>,

    /// Brightest-channel level at or below which a pixel is background.
    #[arg(long, default_value_t = 10)]
    mask_threshold: u8,

    /// View azimuth in degrees; repeat together with --el for several views.
    #[arg(long, allow_negative_numbers = true)]
    az: Vec<f64>,

    /// View elevation in degrees, in [-90, 90].
    #[arg(long, allow_negative_numbers = true)]
    el: Vec<f64>,

    /// Skip upscaling, rescaling and smoothing.
    #[arg(long)]
    no_preprocess: bool,

    /// Also write a watertight binary STL.
    #[arg(long)]
    stl: bool,

    /// Height scale for the STL solid (default: relief = 20% of the longer side).
    #[arg(long)]
    z_scale: Option<f64>,

    /// Base thickness below the lowest point of the STL solid.
    #[arg(long)]
    base_offset: Option<f64>,

    /// Width and height of the rendered views in pixels.
    #[arg(long, default_value_t = 720)]
    render_size: usize,

    /// Height exaggeration applied when rendering.
    #[arg(long, default_value_t = 1.0)]
    z_exaggeration: f64,
}

fn build_config(args: Args) -> Result<PipelineConfig, String> {
    if args.az.len() != args.el.len() {
        return Err(format!(
            "[config] --az given {} times but --el {} times; pass them in pairs",
            args.az.len(),
            args.el.len()
        ));
    }
    let poses = if args.az.is_empty() {
        default_poses()
    } else {
        args.az
            .iter()
            .zip(&args.el)
            .map(|(&az, &el)| ViewPose::new(az, el))
            .collect::<Result<_, _>>()
            .map_err(|e| format!("[config] {e}"))?
    };
    let threads = match std::env::var("CE_SURF_THREADS") {
        Ok(v) => v.trim().parse().map_err(|_| {
            format!("[config] CE_SURF_THREADS must be a non-negative integer, got {v:?}")
        })?,
        Err(_) => 0,
    };

    let mut cfg = PipelineConfig::new(args.input, args.output);
    cfg.scale_ratio = args.scale;
    cfg.k_sigma = args.k_sigma;
    cfg.kernel = args.kernel.unwrap_or_default();
    cfg.mask_threshold = args.mask_threshold;
    cfg.poses = poses;
    cfg.preprocess_enabled = !args.no_preprocess;
    cfg.stl_enabled = args.stl;
    cfg.z_scale = args.z_scale;
    cfg.base_offset = args.base_offset;
    cfg.render = RenderSettings {
        out_width: args.render_size,
        out_height: args.render_size,
        z_exaggeration: args.z_exaggeration,
        ..RenderSettings::default()
    };
    cfg.threads = threads;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match build_config(args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("ce-surf: {msg}");
            return ExitCode::FAILURE;
        }
    };
    match run_pipeline(&cfg) {
        Ok(manifest) => {
            for name in manifest.outputs() {
                println!("{}", cfg.output_dir.join(name).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ce-surf: {e}");
            ExitCode::FAILURE
        }
    }
}

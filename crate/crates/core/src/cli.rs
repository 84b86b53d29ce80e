//! End-to-end pipeline: load, preprocess, build the surface, render each
//! requested pose and optionally export a printable STL, then write a
//! line-oriented `key=value` manifest of everything produced.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::error::Error;
use crate::preprocess::{
    compute_stats, convolve2d, convolve2d_rgb, lanczos_upscale_rgb, rescale_outliers, Kernel3x3,
};
use crate::printmesh::{
    default_base_offset, default_z_scale, export_stl, surface_to_mesh, validate_mesh,
};
use crate::raster::{load_image, rgb_to_gray, save_gray, save_image};
use crate::surface::{
    build_color_grid, build_surface, extract_background_mask, DEFAULT_MASK_THRESHOLD,
};
use crate::viewer::{render_surface, RenderSettings, ViewPose};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Pipeline stage, used to tag failures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Output,
    Load,
    Upscale,
    Grayscale,
    Rescale,
    Convolve,
    Mask,
    Surface,
    Render,
    Mesh,
    Manifest,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Output => "output",
            Stage::Load => "load",
            Stage::Upscale => "upscale",
            Stage::Grayscale => "grayscale",
            Stage::Rescale => "rescale",
            Stage::Convolve => "convolve",
            Stage::Mask => "mask",
            Stage::Surface => "surface",
            Stage::Render => "render",
            Stage::Mesh => "mesh",
            Stage::Manifest => "manifest",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for crate::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub scale_ratio: usize,
    pub k_sigma: f64,
    pub kernel: Kernel3x3,
    pub mask_threshold: u8,
    pub poses: Vec<ViewPose>,
    pub preprocess_enabled: bool,
    pub stl_enabled: bool,
    /// `None` picks [`default_z_scale`].
    pub z_scale: Option<f64>,
    /// `None` picks [`default_base_offset`].
    pub base_offset: Option<f64>,
    pub render: RenderSettings,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
}

/// The two line-of-sight angles compared in the reference experiment:
/// azimuth 0 with elevations -80 and 0 degrees.
pub fn default_poses() -> Vec<ViewPose> {
    vec![
        ViewPose::new(0.0, -80.0).expect("valid pose"),
        ViewPose::new(0.0, 0.0).expect("valid pose"),
    ]
}

impl PipelineConfig {
    pub fn new(input_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_path: input_path.into(),
            output_dir: output_dir.into(),
            scale_ratio: 2,
            k_sigma: 2.0,
            kernel: Kernel3x3::box_blur(),
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            poses: default_poses(),
            preprocess_enabled: true,
            stl_enabled: false,
            z_scale: None,
            base_offset: None,
            render: RenderSettings::default(),
            threads: 0,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.scale_ratio < 1 {
            return Err(Error::invalid("scale ratio must be at least 1"));
        }
        if !(self.k_sigma.is_finite() && self.k_sigma > 0.0) {
            return Err(Error::invalid(format!(
                "k-sigma must be > 0, got {}",
                self.k_sigma
            )));
        }
        if self.poses.is_empty() {
            return Err(Error::invalid("at least one view pose is required"));
        }
        let mut names: Vec<String> = self.poses.iter().map(render_file_name).collect();
        names.sort();
        if names.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::invalid("duplicate view poses"));
        }
        for (name, v) in [("z-scale", self.z_scale), ("base-offset", self.base_offset)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        self.render.validate()
    }
}

pub fn render_file_name(pose: &ViewPose) -> String {
    format!(
        "render_az{}_el{}.png",
        pose.azimuth_deg(),
        pose.elevation_deg()
    )
}

/// Ordered `key=value` records describing one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunManifest {
    pub records: Vec<(String, String)>,
}

impl RunManifest {
    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.records.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.records
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// File names listed under `output`.
    pub fn outputs(&self) -> Vec<&str> {
        self.records
            .iter()
            .filter(|(k, _)| k == "output")
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn to_text(&self) -> String {
        self.records
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> Self {
        let records = text
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { records }
    }
}

/// Tracks written files so a failed run can remove its partial outputs.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn write(
        &mut self,
        name: &str,
        stage: Stage,
        f: impl FnOnce(&Path) -> crate::Result<()>,
    ) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        f(&path).stage(stage)
    }

    fn remove_all(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

struct Timer {
    records: Vec<(String, u128)>,
}

impl Timer {
    fn time<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.records
            .push((stage.name().to_string(), start.elapsed().as_micros()));
        out
    }
}

/// Runs the whole pipeline. On failure every file written so far is removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    cfg.validate().stage(Stage::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
        .stage(Stage::Config)?;

    fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| Error::io(&cfg.output_dir, e))
        .stage(Stage::Output)?;
    let mut outputs = Outputs {
        dir: &cfg.output_dir,
        written: Vec::new(),
    };
    let result = pool.install(|| execute(cfg, &mut outputs));
    if result.is_err() {
        outputs.remove_all();
    }
    result
}

fn execute(cfg: &PipelineConfig, out: &mut Outputs<'_>) -> Result<RunManifest, PipelineError> {
    let mut timer = Timer {
        records: Vec::new(),
    };
    let mut m = RunManifest::default();
    m.push("format", "ce-surf-manifest/1");
    m.push("tool", concat!("ce-surf ", env!("CARGO_PKG_VERSION")));

    let (input, digest) = timer
        .time(Stage::Load, || -> crate::Result<_> {
            let bytes = fs::read(&cfg.input_path).map_err(|e| Error::io(&cfg.input_path, e))?;
            let digest: String = Sha256::digest(&bytes)
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect();
            Ok((load_image(&cfg.input_path)?, digest))
        })
        .stage(Stage::Load)?;
    m.push("input", cfg.input_path.display());
    m.push("input.sha256", digest);
    m.push(
        "input.size",
        format!("{}x{}", input.width(), input.height()),
    );

    m.push("config.preprocess", cfg.preprocess_enabled);
    m.push("config.scale_ratio", cfg.scale_ratio);
    m.push("config.k_sigma", cfg.k_sigma);
    m.push("config.kernel", cfg.kernel);
    m.push("config.mask_threshold", cfg.mask_threshold);
    let poses: Vec<String> = cfg
        .poses
        .iter()
        .map(|p| format!("{}:{}", p.azimuth_deg(), p.elevation_deg()))
        .collect();
    m.push("config.poses", poses.join(";"));
    m.push(
        "config.render_size",
        format!("{}x{}", cfg.render.out_width, cfg.render.out_height),
    );
    m.push("config.z_exaggeration", cfg.render.z_exaggeration);

    // Z path: luma of the (upscaled) color frame, rescaled and smoothed.
    // C path: the same color frame smoothed with the same kernel.
    let (color, gray) = if cfg.preprocess_enabled {
        let up = timer
            .time(Stage::Upscale, || {
                lanczos_upscale_rgb(&input, cfg.scale_ratio)
            })
            .stage(Stage::Upscale)?;
        let luma = timer.time(Stage::Grayscale, || rgb_to_gray(&up));
        let stats = compute_stats(&luma);
        m.push("stats.mean", stats.mean);
        m.push("stats.std", stats.std);
        let rescaled = timer
            .time(Stage::Rescale, || rescale_outliers(&luma, cfg.k_sigma))
            .stage(Stage::Rescale)?;
        let (gray, color) = timer.time(Stage::Convolve, || {
            (
                convolve2d(&rescaled, &cfg.kernel),
                convolve2d_rgb(&up, &cfg.kernel),
            )
        });
        m.push("pipeline.gray_path", "upscale,luma,rescale,convolve");
        m.push("pipeline.color_path", "upscale,convolve");
        (color, gray)
    } else {
        let gray = timer.time(Stage::Grayscale, || rgb_to_gray(&input));
        m.push("pipeline.gray_path", "luma");
        m.push("pipeline.color_path", "none");
        (input, gray)
    };
    m.push(
        "pipeline.size",
        format!("{}x{}", gray.width(), gray.height()),
    );

    out.write("color.png", Stage::Output, |p| save_image(&color, p))?;
    m.push("output", "color.png");
    out.write("gray.png", Stage::Output, |p| save_gray(&gray, p))?;
    m.push("output", "gray.png");

    let cgrid = timer
        .time(Stage::Mask, || {
            let mask = extract_background_mask(&color, cfg.mask_threshold);
            m.push("mask.background_pixels", mask.background_count());
            build_color_grid(&color, &mask)
        })
        .stage(Stage::Mask)?;
    out.write("colorgrid.png", Stage::Output, |p| save_image(&cgrid, p))?;
    m.push("output", "colorgrid.png");

    let surf = timer
        .time(Stage::Surface, || build_surface(&gray, &cgrid))
        .stage(Stage::Surface)?;
    out.write("surface.cesg", Stage::Output, |p| surf.save(p))?;
    m.push("output", "surface.cesg");

    let renders = timer
        .time(Stage::Render, || {
            cfg.poses
                .par_iter()
                .map(|pose| render_surface(&surf, pose, &cfg.render))
                .collect::<crate::Result<Vec<_>>>()
        })
        .stage(Stage::Render)?;
    for (pose, img) in cfg.poses.iter().zip(&renders) {
        let name = render_file_name(pose);
        out.write(&name, Stage::Output, |p| save_image(img, p))?;
        m.push("output", name);
    }

    m.push("config.stl", cfg.stl_enabled);
    if cfg.stl_enabled {
        let z_scale = cfg.z_scale.unwrap_or_else(|| default_z_scale(&surf));
        let base_offset = cfg
            .base_offset
            .unwrap_or_else(|| default_base_offset(&surf));
        m.push("config.z_scale", z_scale);
        m.push("config.base_offset", base_offset);
        let mesh = timer
            .time(Stage::Mesh, || surface_to_mesh(&surf, base_offset, z_scale))
            .stage(Stage::Mesh)?;
        let report = validate_mesh(&mesh);
        if !report.passes() {
            return Err(PipelineError {
                stage: Stage::Mesh,
                source: Error::invalid(format!(
                    "mesh is not watertight: {}",
                    report.failures().join("; ")
                )),
            });
        }
        m.push("mesh.vertices", report.vertex_count);
        m.push("mesh.triangles", report.face_count);
        m.push("mesh.volume", report.signed_volume);
        out.write("mesh.stl", Stage::Output, |p| export_stl(&mesh, p))?;
        m.push("output", "mesh.stl");
    }

    m.push("output", MANIFEST_FILE);
    for (stage, us) in &timer.records {
        m.push(format!("timing.{stage}_us"), us);
    }
    let text = m.to_text();
    out.write(MANIFEST_FILE, Stage::Manifest, |p| {
        fs::write(p, text).map_err(|e| Error::io(p, e))
    })?;
    Ok(m)
}

//! Line-of-sight camera and orthographic z-buffered software rasterizer.
//!
//! The camera follows the usual `view(az, el)` plotting convention: the
//! azimuth is measured counterclockwise about `+z` starting from the `-y`
//! axis, and the elevation is the angle between the line of sight and the
//! `x-y` plane. The line of sight points from the plot center toward the
//! viewer.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::RasterImage;
use crate::surface::SurfaceGrid;

/// Fraction of the output frame the projected surface is scaled to fill.
pub const FIT_FRACTION: f64 = 0.95;

const BAND_ROWS: usize = 32;
/// Twice-area (px²) below which a projected triangle is drawn as its edges only.
const DEGENERATE_AREA2: f64 = 1e-9;
const EDGE_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewPose {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl ViewPose {
    /// Azimuth is wrapped into `[0, 360)`; elevation must lie in `[-90, 90]`.
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() {
            return Err(Error::invalid(format!(
                "azimuth must be finite, got {azimuth_deg}"
            )));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::invalid(format!(
                "elevation must lie in [-90, 90], got {elevation_deg}"
            )));
        }
        let mut az = azimuth_deg.rem_euclid(360.0);
        if az >= 360.0 {
            az = 0.0;
        }
        Ok(Self {
            azimuth_deg: az,
            elevation_deg,
        })
    }

    pub fn azimuth_deg(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> f64 {
        self.elevation_deg
    }

    /// Orthonormal `(right, up, toward_viewer)` basis of the view.
    fn basis(&self) -> [[f64; 3]; 3] {
        let (saz, caz) = self.azimuth_deg.to_radians().sin_cos();
        let (sel, cel) = self.elevation_deg.to_radians().sin_cos();
        [
            [caz, saz, 0.0],
            [-sel * saz, sel * caz, cel],
            [cel * saz, -cel * caz, sel],
        ]
    }
}

/// Unit vector from the plot center toward the viewer:
/// `(cos el sin az, -cos el cos az, sin el)`.
pub fn line_of_sight(pose: &ViewPose) -> [f64; 3] {
    pose.basis()[2]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderSettings {
    pub out_width: usize,
    pub out_height: usize,
    pub background: [u8; 3],
    pub z_exaggeration: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            out_width: 720,
            out_height: 720,
            background: [0, 0, 0],
            z_exaggeration: 1.0,
        }
    }
}

impl RenderSettings {
    pub fn validate(&self) -> Result<()> {
        if self.out_width < 16 || self.out_height < 16 {
            return Err(Error::invalid(format!(
                "render size must be at least 16x16, got {}x{}",
                self.out_width, self.out_height
            )));
        }
        if !(self.z_exaggeration.is_finite() && self.z_exaggeration > 0.0) {
            return Err(Error::invalid(format!(
                "z exaggeration must be > 0, got {}",
                self.z_exaggeration
            )));
        }
        Ok(())
    }
}

/// Screen-space vertex: pixel column, pixel row, depth toward the viewer.
#[derive(Clone, Copy, Debug)]
struct ScreenVertex {
    x: f64,
    y: f64,
    depth: f64,
}

/// A filled triangle, or a segment when `verts[2] == u32::MAX`.
#[derive(Clone, Copy, Debug)]
struct Primitive {
    verts: [u32; 3],
    color: [u8; 3],
}

const NO_VERTEX: u32 = u32::MAX;

fn project(surf: &SurfaceGrid, pose: &ViewPose, settings: &RenderSettings) -> Vec<ScreenVertex> {
    let [right, up, toward] = pose.basis();
    let dot = |a: &[f64; 3], p: &[f64; 3]| a[0] * p[0] + a[1] * p[1] + a[2] * p[2];

    let world: Vec<[f64; 3]> = surf
        .xgrid()
        .iter()
        .zip(surf.ygrid())
        .zip(surf.zgrid())
        .map(|((&x, &y), &z)| [x, y, z * settings.z_exaggeration])
        .collect();

    let mut sx = Vec::with_capacity(world.len());
    let mut sy = Vec::with_capacity(world.len());
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &world {
        let (u, v) = (dot(&right, p), dot(&up, p));
        xmin = xmin.min(u);
        xmax = xmax.max(u);
        ymin = ymin.min(v);
        ymax = ymax.max(v);
        sx.push(u);
        sy.push(v);
    }

    let (w, h) = (settings.out_width as f64, settings.out_height as f64);
    let (bw, bh) = (xmax - xmin, ymax - ymin);
    let scale = match (bw > 0.0, bh > 0.0) {
        (true, true) => (FIT_FRACTION * w / bw).min(FIT_FRACTION * h / bh),
        (true, false) => FIT_FRACTION * w / bw,
        (false, true) => FIT_FRACTION * h / bh,
        (false, false) => 1.0,
    };
    let (cx, cy) = (0.5 * (xmin + xmax), 0.5 * (ymin + ymax));

    world
        .iter()
        .zip(sx.iter().zip(&sy))
        .map(|(p, (&u, &v))| ScreenVertex {
            x: 0.5 * w + scale * (u - cx),
            y: 0.5 * h - scale * (v - cy),
            depth: dot(&toward, p),
        })
        .collect()
}

fn mean_color(colors: &[[u8; 3]], background: [u8; 3]) -> [u8; 3] {
    let n = colors.len() as u32;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let sum: u32 = colors.iter().map(|p| p[c] as u32).sum();
        *o = ((sum + n / 2) / n) as u8;
    }
    // Keep covered pixels distinguishable from the background.
    if out == background {
        out[2] = if out[2] == 255 { 254 } else { out[2] + 1 };
    }
    out
}

/// Triangles in row-major cell order, lower-left triangle of each cell
/// first; single-row or single-column surfaces become a line strip.
fn primitives(surf: &SurfaceGrid, background: [u8; 3]) -> Vec<Primitive> {
    let (w, h) = surf.dimensions();
    let idx = |i: usize, j: usize| (i * w + j) as u32;
    let col = |i: usize, j: usize| surf.color(i, j);
    let mut prims = Vec::new();
    if w >= 2 && h >= 2 {
        prims.reserve(2 * (w - 1) * (h - 1));
        for i in 0..h - 1 {
            for j in 0..w - 1 {
                prims.push(Primitive {
                    verts: [idx(i, j), idx(i, j + 1), idx(i + 1, j)],
                    color: mean_color(&[col(i, j), col(i, j + 1), col(i + 1, j)], background),
                });
                prims.push(Primitive {
                    verts: [idx(i, j + 1), idx(i + 1, j + 1), idx(i + 1, j)],
                    color: mean_color(
                        &[col(i, j + 1), col(i + 1, j + 1), col(i + 1, j)],
                        background,
                    ),
                });
            }
        }
    } else {
        let n = w * h;
        let at = |k: usize| if w == 1 { (k, 0) } else { (0, k) };
        if n == 1 {
            prims.push(Primitive {
                verts: [0, 0, NO_VERTEX],
                color: mean_color(&[col(0, 0)], background),
            });
        }
        for k in 1..n {
            let (a, b) = (at(k - 1), at(k));
            prims.push(Primitive {
                verts: [idx(a.0, a.1), idx(b.0, b.1), NO_VERTEX],
                color: mean_color(&[col(a.0, a.1), col(b.0, b.1)], background),
            });
        }
    }
    prims
}

fn edge(a: &ScreenVertex, b: &ScreenVertex, px: f64, py: f64) -> f64 {
    (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x)
}

/// One horizontal band of the frame buffer.
struct Band<'a> {
    row0: usize,
    width: usize,
    color: &'a mut [u8],
    depth: &'a mut [f64],
}

impl Band<'_> {
    fn rows(&self) -> usize {
        self.depth.len() / self.width
    }

    fn plot(&mut self, col: isize, row: isize, depth: f64, color: [u8; 3]) {
        if col < 0 || row < self.row0 as isize || col >= self.width as isize {
            return;
        }
        let r = row as usize - self.row0;
        if r >= self.rows() {
            return;
        }
        let k = r * self.width + col as usize;
        if depth > self.depth[k] {
            self.depth[k] = depth;
            self.color[3 * k..3 * k + 3].copy_from_slice(&color);
        }
    }

    fn segment(&mut self, a: &ScreenVertex, b: &ScreenVertex, color: [u8; 3]) {
        let steps = (b.x - a.x).abs().max((b.y - a.y).abs()).ceil() as usize;
        for k in 0..=steps {
            let t = if steps == 0 {
                0.0
            } else {
                k as f64 / steps as f64
            };
            let x = a.x + t * (b.x - a.x);
            let y = a.y + t * (b.y - a.y);
            let d = a.depth + t * (b.depth - a.depth);
            self.plot(x.floor() as isize, y.floor() as isize, d, color);
        }
    }

    fn triangle(&mut self, v: [&ScreenVertex; 3], color: [u8; 3]) {
        self.segment(v[0], v[1], color);
        self.segment(v[1], v[2], color);
        self.segment(v[2], v[0], color);
        let area2 = edge(v[0], v[1], v[2].x, v[2].y);
        if area2.abs() < DEGENERATE_AREA2 {
            return;
        }
        let sign = area2.signum();
        let xmin = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let xmax = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let ymin = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let ymax = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);

        let c0 = ((xmin - 0.5).ceil().max(0.0)) as usize;
        let c1 = ((xmax - 0.5).floor().min(self.width as f64 - 1.0)) as isize;
        let r0 = ((ymin - 0.5).ceil().max(self.row0 as f64)) as usize;
        let r1 = ((ymax - 0.5).floor()).min((self.row0 + self.rows()) as f64 - 1.0) as isize;
        if c1 < c0 as isize || r1 < r0 as isize {
            return;
        }
        for row in r0..=r1 as usize {
            let py = row as f64 + 0.5;
            for col in c0..=c1 as usize {
                let px = col as f64 + 0.5;
                let w0 = edge(v[1], v[2], px, py) * sign;
                let w1 = edge(v[2], v[0], px, py) * sign;
                let w2 = edge(v[0], v[1], px, py) * sign;
                if w0 < -EDGE_EPS || w1 < -EDGE_EPS || w2 < -EDGE_EPS {
                    continue;
                }
                let depth = (w0 * v[0].depth + w1 * v[1].depth + w2 * v[2].depth) / (area2 * sign);
                self.plot(col as isize, row as isize, depth, color);
            }
        }
    }
}

/// Renders the surface orthographically along the pose's line of sight.
///
/// Each grid cell is split into two flat-shaded triangles whose color is the
/// mean of their corner colors. A triangle covers the pixels whose centers
/// it contains plus every pixel its edges pass through, so surfaces seen
/// edge-on still leave a one-pixel trace. Hidden surfaces are removed with a z-buffer
/// in which a strictly closer fragment wins, so on ties the earlier
/// primitive is kept. The projection is centered and scaled to fill
/// [`FIT_FRACTION`] of the frame.
pub fn render_surface(
    surf: &SurfaceGrid,
    pose: &ViewPose,
    settings: &RenderSettings,
) -> Result<RasterImage> {
    settings.validate()?;
    let verts = project(surf, pose, settings);
    let prims = primitives(surf, settings.background);
    let (w, h) = (settings.out_width, settings.out_height);

    let n_bands = h.div_ceil(BAND_ROWS);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); n_bands];
    for (k, p) in prims.iter().enumerate() {
        let ys = p
            .verts
            .iter()
            .filter(|&&v| v != NO_VERTEX)
            .map(|&v| verts[v as usize].y);
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
            (lo.min(y), hi.max(y))
        });
        if hi < 0.0 || lo >= h as f64 {
            continue;
        }
        let b0 = (lo.max(0.0) as usize / BAND_ROWS).min(n_bands - 1);
        let b1 = (hi.max(0.0) as usize / BAND_ROWS).min(n_bands - 1);
        for bin in &mut bins[b0..=b1] {
            bin.push(k as u32);
        }
    }

    let mut color: Vec<u8> = settings
        .background
        .iter()
        .copied()
        .cycle()
        .take(w * h * 3)
        .collect();
    let mut depth = vec![f64::NEG_INFINITY; w * h];

    color
        .par_chunks_mut(BAND_ROWS * w * 3)
        .zip(depth.par_chunks_mut(BAND_ROWS * w))
        .zip(bins.par_iter())
        .enumerate()
        .for_each(|(b, ((color, depth), bin))| {
            let mut band = Band {
                row0: b * BAND_ROWS,
                width: w,
                color,
                depth,
            };
            for &k in bin {
                let p = &prims[k as usize];
                let [a, b, c] = p.verts;
                if c == NO_VERTEX {
                    band.segment(&verts[a as usize], &verts[b as usize], p.color);
                } else {
                    band.triangle(
                        [&verts[a as usize], &verts[b as usize], &verts[c as usize]],
                        p.color,
                    );
                }
            }
        });

    RasterImage::from_rgb(w, h, color)
}

/// Fraction of pixels whose color differs from `background`.
pub fn coverage_fraction(render: &RasterImage, background: [u8; 3]) -> f64 {
    let total = render.width() * render.height();
    let covered = render.pixels().filter(|&p| p != background).count();
    covered as f64 / total as f64
}

/// Inclusive `(row_min, row_max, col_min, col_max)` of non-background pixels.
pub fn coverage_bounds(
    render: &RasterImage,
    background: [u8; 3],
) -> Option<(usize, usize, usize, usize)> {
    let mut bounds: Option<(usize, usize, usize, usize)> = None;
    for row in 0..render.height() {
        for col in 0..render.width() {
            if render.pixel(row, col) != background {
                bounds = Some(match bounds {
                    None => (row, row, col, col),
                    Some((r0, r1, c0, c1)) => (r0.min(row), r1.max(row), c0.min(col), c1.max(col)),
                });
            }
        }
    }
    bounds
}

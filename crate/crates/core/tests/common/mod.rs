//! Fixtures and brute-force oracles shared by the integration tests.
//!
//! The oracles are deliberately naive and never call into the code paths
//! they check.
#![allow(dead_code)]

use std::f64::consts::PI;

use ce_surf::raster::{GrayImage, RasterImage};
use ce_surf::surface::{build_surface, SurfaceGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::new(
        w,
        h,
        (0..w * h).map(|_| rng.gen_range(0.0..255.0)).collect(),
    )
    .unwrap()
}

pub fn random_rgb(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RasterImage {
    RasterImage::from_rgb(w, h, (0..w * h * 3).map(|_| rng.gen()).collect()).unwrap()
}

fn clamp_index(i: isize, len: usize) -> usize {
    i.max(0).min(len as isize - 1) as usize
}

/// Lanczos-3 window written out from its definition.
pub fn lanczos3(x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if x.abs() >= 3.0 {
        return 0.0;
    }
    let a = PI * x;
    let b = PI * x / 3.0;
    (a.sin() / a) * (b.sin() / b)
}

/// Direct 2D evaluation over the full 6×6 = 36-pixel neighborhood with the
/// product weights normalized as a whole.
pub fn lanczos_upscale_bruteforce(src: &GrayImage, ratio: usize) -> Vec<f64> {
    let (w, h) = src.dimensions();
    let mut out = Vec::with_capacity(w * h * ratio * ratio);
    for oy in 0..h * ratio {
        let sy = (oy as f64 + 0.5) / ratio as f64 - 0.5;
        for ox in 0..w * ratio {
            let sx = (ox as f64 + 0.5) / ratio as f64 - 0.5;
            let (mut acc, mut norm) = (0.0, 0.0);
            for iy in (sy.floor() as isize - 2)..=(sy.floor() as isize + 3) {
                for ix in (sx.floor() as isize - 2)..=(sx.floor() as isize + 3) {
                    let wgt = lanczos3(sx - ix as f64) * lanczos3(sy - iy as f64);
                    acc += wgt * src.get(clamp_index(iy, h), clamp_index(ix, w));
                    norm += wgt;
                }
            }
            out.push(acc / norm);
        }
    }
    out
}

/// `y(i, j) = sum_m sum_n h(m, n) x(i - m, j - n)` with replicated borders.
pub fn convolve_bruteforce(x: &GrayImage, h: &[[f64; 3]; 3]) -> Vec<f64> {
    let (w, ht) = x.dimensions();
    let mut out = vec![0.0; w * ht];
    for i in 0..ht as isize {
        for j in 0..w as isize {
            let mut y = 0.0;
            for m in -1isize..=1 {
                for n in -1isize..=1 {
                    let xi = clamp_index(i - m, ht);
                    let xj = clamp_index(j - n, w);
                    y += h[(m + 1) as usize][(n + 1) as usize] * x.get(xi, xj);
                }
            }
            out[i as usize * w + j as usize] = y;
        }
    }
    out
}

/// Mean, population deviation, clamp to `mean ± k·std`, affine to `[0, 255]`.
pub fn rescale_bruteforce(v: &[f64], k: f64) -> Vec<f64> {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    let rho = (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n).sqrt();
    if rho == 0.0 {
        return v.to_vec();
    }
    let (lo, hi) = (mu - k * rho, mu + k * rho);
    v.iter()
        .map(|&x| {
            let c = if x < lo {
                lo
            } else if x > hi {
                hi
            } else {
                x
            };
            (c - lo) / (hi - lo) * 255.0
        })
        .collect()
}

pub const DISC_COLOR: [u8; 3] = [200, 40, 60];

/// Disc of `diameter` pixels centered in a black square of side `size`.
pub fn disc_on_black(size: usize, diameter: usize) -> RasterImage {
    RasterImage::from_fn(size, size, |r, c| {
        if in_disc(size, diameter, r, c) {
            DISC_COLOR
        } else {
            [0, 0, 0]
        }
    })
    .unwrap()
}

pub fn in_disc(size: usize, diameter: usize, r: usize, c: usize) -> bool {
    let center = (size as f64 - 1.0) / 2.0;
    let radius = diameter as f64 / 2.0;
    let (dy, dx) = (r as f64 - center, c as f64 - center);
    dx * dx + dy * dy <= radius * radius
}

pub const DOME_SIZE: usize = 256;
pub const DOME_RADIUS: f64 = 120.0;
pub const DOME_COLOR: [u8; 3] = [210, 120, 100];

/// Hemisphere intensity image: `255 * sqrt(1 - r²/R²)` inside radius `R`,
/// zero outside, centered on the grid so it is symmetric under 90° turns.
pub fn hemisphere_gray() -> GrayImage {
    let c = (DOME_SIZE as f64 - 1.0) / 2.0;
    GrayImage::from_fn(DOME_SIZE, DOME_SIZE, |r, col| {
        let d2 = ((r as f64 - c).powi(2) + (col as f64 - c).powi(2)) / (DOME_RADIUS * DOME_RADIUS);
        if d2 < 1.0 {
            255.0 * (1.0 - d2).sqrt()
        } else {
            0.0
        }
    })
    .unwrap()
}

pub fn hemisphere_surface() -> SurfaceGrid {
    let color = RasterImage::filled(DOME_SIZE, DOME_SIZE, DOME_COLOR).unwrap();
    build_surface(&hemisphere_gray(), &color).unwrap()
}

/// Height scale that keeps the dome's relief far below its footprint.
pub const DOME_Z_EXAGGERATION: f64 = 0.02;

/// Projected vertical extent of the surface's bounding box, world units:
/// `|sin el| * Yrange + |cos el| * Zrange`.
pub fn analytic_vertical_extent(el_deg: f64, yrange: f64, zrange: f64) -> f64 {
    let el = el_deg.to_radians();
    el.sin().abs() * yrange + el.cos().abs() * zrange
}

/// Pixel height the analytic extent occupies once the projection is fitted
/// to 95% of a `size`×`size` frame (azimuth 0: horizontal extent is Xrange).
pub fn analytic_pixel_height(
    el_deg: f64,
    xrange: f64,
    yrange: f64,
    zrange: f64,
    size: usize,
) -> f64 {
    let v = analytic_vertical_extent(el_deg, yrange, zrange);
    let scale = 0.95 * (size as f64 / xrange).min(size as f64 / v);
    scale * v
}

/// Pixel height of the exact projected extent at azimuth 0, found by
/// projecting every vertex onto the screen's vertical axis.
pub fn projected_pixel_height(
    surf: &SurfaceGrid,
    el_deg: f64,
    z_exaggeration: f64,
    size: usize,
) -> f64 {
    let (sel, cel) = el_deg.to_radians().sin_cos();
    let (w, h) = surf.dimensions();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..h {
        for j in 0..w {
            let v = sel * i as f64 + cel * surf.z(i, j) * z_exaggeration;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let xrange = (w - 1) as f64;
    let v = hi - lo;
    let scale = 0.95 * (size as f64 / xrange).min(size as f64 / v);
    scale * v
}

/// One facet as read back from a binary STL file.
#[derive(Debug)]
pub struct StlFacet {
    pub normal: [f32; 3],
    pub vertices: [[f32; 3]; 3],
    pub attribute: u16,
}

/// Minimal binary STL reader.
pub fn read_stl(bytes: &[u8]) -> Result<(Vec<u8>, Vec<StlFacet>), String> {
    if bytes.len() < 84 {
        return Err("shorter than header".into());
    }
    let header = bytes[..80].to_vec();
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(format!(
            "size {} does not match {count} facets",
            bytes.len()
        ));
    }
    let f = |off: usize| {
        f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
    };
    let facets = (0..count)
        .map(|k| {
            let base = 84 + 50 * k;
            let v = |i: usize| [f(base + 12 * i), f(base + 12 * i + 4), f(base + 12 * i + 8)];
            StlFacet {
                normal: v(0),
                vertices: [v(1), v(2), v(3)],
                attribute: u16::from_le_bytes([bytes[base + 48], bytes[base + 49]]),
            }
        })
        .collect();
    Ok((header, facets))
}

/// Unit normal of a wound triangle, in double precision.
pub fn winding_normal(t: [[f64; 3]; 3]) -> [f64; 3] {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let l = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    [n[0] / l, n[1] / l, n[2] / l]
}

/// Random smooth-ish height field with a uniform color.
pub fn random_surface(rng: &mut ChaCha8Rng, w: usize, h: usize) -> SurfaceGrid {
    let gray = random_gray(rng, w, h);
    let color = RasterImage::filled(w, h, [90, 90, 90]).unwrap();
    build_surface(&gray, &color).unwrap()
}

/// Writes a small synthetic endoscopy-like frame: bright textured disc on black.
pub fn synthetic_frame(size: usize, seed: u64) -> RasterImage {
    let mut r = rng(seed);
    let c = (size as f64 - 1.0) / 2.0;
    let radius = 0.45 * size as f64;
    RasterImage::from_fn(size, size, |row, col| {
        let (dy, dx) = (row as f64 - c, col as f64 - c);
        let d = (dx * dx + dy * dy).sqrt();
        if d > radius {
            [r.gen_range(0..4), r.gen_range(0..4), r.gen_range(0..4)]
        } else {
            let shade = 0.6 + 0.4 * (1.0 - d / radius);
            let n: f64 = r.gen_range(-12.0..12.0);
            let ch = |base: f64| (base * shade + n).clamp(0.0, 255.0) as u8;
            [ch(200.0), ch(110.0), ch(90.0)]
        }
    })
    .unwrap()
}

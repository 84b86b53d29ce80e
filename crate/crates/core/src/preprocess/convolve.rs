use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, RasterImage};

/// 3×3 convolution kernel, stored row-major.
///
/// `weight(m, n)` addresses the tap at row offset `m` and column offset `n`,
/// both in `-1..=1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel3x3 {
    weights: [[f64; 3]; 3],
}

impl Kernel3x3 {
    pub fn new(weights: [[f64; 3]; 3]) -> Result<Self> {
        if weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::invalid("kernel weights must be finite"));
        }
        Ok(Self { weights })
    }

    pub fn from_row_major(w: &[f64]) -> Result<Self> {
        if w.len() != 9 {
            return Err(Error::invalid(format!(
                "a 3x3 kernel needs 9 weights, got {}",
                w.len()
            )));
        }
        Self::new([[w[0], w[1], w[2]], [w[3], w[4], w[5]], [w[6], w[7], w[8]]])
    }

    /// Uniform 1/9 box blur.
    pub fn box_blur() -> Self {
        Self {
            weights: [[1.0 / 9.0; 3]; 3],
        }
    }

    /// Center tap 1, all others 0.
    pub fn identity() -> Self {
        let mut weights = [[0.0; 3]; 3];
        weights[1][1] = 1.0;
        Self { weights }
    }

    pub fn weight(&self, m: isize, n: isize) -> f64 {
        self.weights[(m + 1) as usize][(n + 1) as usize]
    }

    pub fn weights(&self) -> &[[f64; 3]; 3] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().flatten().sum()
    }
}

impl Default for Kernel3x3 {
    fn default() -> Self {
        Self::box_blur()
    }
}

/// Nine comma-separated reals, row-major.
impl FromStr for Kernel3x3 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let w = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad kernel weight {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_row_major(&w)
    }
}

impl fmt::Display for Kernel3x3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, w) in self.weights.iter().flatten().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        Ok(())
    }
}

/// True 2D convolution over the 3×3 support with edge replication:
/// `y(i, j) = sum_m sum_n h(m, n) * x(i - m, j - n)`.
pub fn convolve2d(img: &GrayImage, kernel: &Kernel3x3) -> GrayImage {
    let (w, h) = img.dimensions();
    let x = img.values();
    let clamp_row = |i: isize| i.clamp(0, h as isize - 1) as usize;
    let clamp_col = |j: isize| j.clamp(0, w as isize - 1) as usize;

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(i, line)| {
        // Source rows for m = -1, 0, 1.
        let rows = [-1isize, 0, 1].map(|m| {
            let r = clamp_row(i as isize - m);
            &x[r * w..(r + 1) * w]
        });
        for (j, o) in line.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (mi, src) in rows.iter().enumerate() {
                for n in -1isize..=1 {
                    acc += kernel.weights[mi][(n + 1) as usize] * src[clamp_col(j as isize - n)];
                }
            }
            *o = acc;
        }
    });
    GrayImage::from_raw(w, h, out)
}

/// Convolves each color plane with the same kernel.
pub fn convolve2d_rgb(img: &RasterImage, kernel: &Kernel3x3) -> RasterImage {
    let [r, g, b] = img.to_planes();
    RasterImage::from_planes(&[
        convolve2d(&r, kernel),
        convolve2d(&g, kernel),
        convolve2d(&b, kernel),
    ])
    .expect("planes share dimensions")
}

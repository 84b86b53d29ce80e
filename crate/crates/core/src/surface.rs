//! Colored height-field surface built from a preprocessed frame.
//!
//! `X` and `Y` are the meshgrid of pixel indices, `Z` is the grayscale
//! intensity and `C` is the color image with its black background whitened
//! through the background mask.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, RasterImage};

/// Default `max(R, G, B)` level at or below which a pixel counts as background.
pub const DEFAULT_MASK_THRESHOLD: u8 = 10;

/// Magic bytes of the binary surface dump.
pub const CESG_MAGIC: [u8; 4] = *b"CESG";

/// `true` where a pixel belongs to the black background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackgroundMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl BackgroundMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn is_background(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.width + col]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn background_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// The foreground set.
    pub fn complement(&self) -> BackgroundMask {
        BackgroundMask {
            width: self.width,
            height: self.height,
            flags: self.flags.iter().map(|f| !f).collect(),
        }
    }
}

/// Flags every pixel whose brightest channel is `<= threshold`.
pub fn extract_background_mask(img: &RasterImage, threshold: u8) -> BackgroundMask {
    BackgroundMask {
        width: img.width(),
        height: img.height(),
        flags: img
            .pixels()
            .map(|p| p.into_iter().max().unwrap_or(0) <= threshold)
            .collect(),
    }
}

/// Whitens the background: a full-scale (255) plane that is nonzero only on
/// background pixels is added to each channel with saturation, so background
/// pixels become `(255, 255, 255)` and foreground pixels are untouched.
pub fn build_color_grid(img: &RasterImage, mask: &BackgroundMask) -> Result<RasterImage> {
    if img.dimensions() != mask.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: img.dimensions(),
            actual: mask.dimensions(),
        });
    }
    let addend: Vec<u8> = mask
        .flags
        .iter()
        .map(|&bg| if bg { 255 } else { 0 })
        .collect();
    let data = img
        .as_bytes()
        .chunks_exact(3)
        .zip(&addend)
        .flat_map(|(px, &a)| {
            [
                px[0].saturating_add(a),
                px[1].saturating_add(a),
                px[2].saturating_add(a),
            ]
        })
        .collect();
    RasterImage::from_rgb(img.width(), img.height(), data)
}

/// The four `X`, `Y`, `Z`, `C` grids of a colored parametric surface.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    width: usize,
    height: usize,
    xgrid: Vec<f64>,
    ygrid: Vec<f64>,
    zgrid: Vec<f64>,
    color: RasterImage,
}

impl SurfaceGrid {
    fn assemble(zgrid: Vec<f64>, color: RasterImage) -> Self {
        let (width, height) = color.dimensions();
        let mut xgrid = Vec::with_capacity(width * height);
        let mut ygrid = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                xgrid.push(j as f64);
                ygrid.push(i as f64);
            }
        }
        Self {
            width,
            height,
            xgrid,
            ygrid,
            zgrid,
            color,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn x(&self, row: usize, col: usize) -> f64 {
        self.xgrid[row * self.width + col]
    }

    pub fn y(&self, row: usize, col: usize) -> f64 {
        self.ygrid[row * self.width + col]
    }

    pub fn z(&self, row: usize, col: usize) -> f64 {
        self.zgrid[row * self.width + col]
    }

    pub fn color(&self, row: usize, col: usize) -> [u8; 3] {
        self.color.pixel(row, col)
    }

    pub fn xgrid(&self) -> &[f64] {
        &self.xgrid
    }

    pub fn ygrid(&self) -> &[f64] {
        &self.ygrid
    }

    pub fn zgrid(&self) -> &[f64] {
        &self.zgrid
    }

    pub fn colorgrid(&self) -> &RasterImage {
        &self.color
    }

    /// `(min, max)` of the height grid.
    pub fn z_range(&self) -> (f64, f64) {
        self.zgrid
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
                (lo.min(z), hi.max(z))
            })
    }

    /// Writes the `CESG` dump: magic, `u32` width, `u32` height, row-major
    /// `f32` heights, then RGB8 colors. All integers and floats little-endian.
    pub fn write_cesg<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&CESG_MAGIC)?;
        w.write_all(&(self.width as u32).to_le_bytes())?;
        w.write_all(&(self.height as u32).to_le_bytes())?;
        for &z in &self.zgrid {
            w.write_all(&(z as f32).to_le_bytes())?;
        }
        w.write_all(self.color.as_bytes())?;
        w.flush()
    }

    /// Parses a `CESG` dump. Heights come back at `f32` precision.
    pub fn read_cesg<R: Read>(mut r: R) -> Result<Self> {
        let bad = |m: &str| Error::invalid(format!("malformed surface dump: {m}"));
        let mut head = [0u8; 12];
        r.read_exact(&mut head).map_err(|_| bad("short header"))?;
        if head[..4] != CESG_MAGIC {
            return Err(bad("wrong magic"));
        }
        let width = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
        let n = width
            .checked_mul(height)
            .filter(|&n| n > 0)
            .ok_or_else(|| bad("bad dimensions"))?;
        let mut zbytes = vec![0u8; n * 4];
        r.read_exact(&mut zbytes)
            .map_err(|_| bad("truncated height grid"))?;
        let zgrid: Vec<f64> = zbytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if zgrid.iter().any(|z| !z.is_finite()) {
            return Err(bad("non-finite height"));
        }
        let mut rgb = vec![0u8; n * 3];
        r.read_exact(&mut rgb)
            .map_err(|_| bad("truncated color grid"))?;
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(|_| bad("read failure"))? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Self::assemble(
            zgrid,
            RasterImage::from_rgb(width, height, rgb)?,
        ))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_cesg(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_cesg(BufReader::new(file))
    }
}

/// Pairs a height image with a color grid of the same size.
pub fn build_surface(gray: &GrayImage, color: &RasterImage) -> Result<SurfaceGrid> {
    if gray.dimensions() != color.dimensions() {
        return Err(Error::DimensionMismatch {
            expected: gray.dimensions(),
            actual: color.dimensions(),
        });
    }
    Ok(SurfaceGrid::assemble(gray.values().to_vec(), color.clone()))
}

//! RGB and grayscale image containers, lossless file I/O and luma conversion.
//!
//! [`RasterImage`] holds 8-bit interleaved RGB samples and is what the
//! pipeline reads from disk and what the renderer produces. [`GrayImage`]
//! holds `f64` intensities on the `[0, 255]` display scale; quantization to
//! 8 bits only happens when a gray image is written out.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ColorType, ExtendedColorType, ImageEncoder, ImageReader};

use crate::error::{Error, Result};

/// Rec.601 luma weights for R, G and B.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RasterImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RasterImage {
    /// Creates an image filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = rgb
            .iter()
            .copied()
            .cycle()
            .take(width * height * 3)
            .collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Wraps interleaved `RGBRGB...` bytes in row-major order.
    pub fn from_rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "expected {} RGB bytes for {width}x{height}, got {}",
                width * height * 3,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for row in 0..height {
            for col in 0..width {
                data.extend_from_slice(&f(row, col));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
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

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let i = (row * self.width + col) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// Splits into red, green and blue planes at working precision.
    pub fn to_planes(&self) -> [GrayImage; 3] {
        let plane = |c: usize| GrayImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .skip(c)
                .step_by(3)
                .map(|&v| v as f64)
                .collect(),
        };
        [plane(0), plane(1), plane(2)]
    }

    /// Recombines three planes, rounding and saturating each sample to `[0, 255]`.
    pub fn from_planes(planes: &[GrayImage; 3]) -> Result<Self> {
        let (w, h) = planes[0].dimensions();
        for p in &planes[1..] {
            if p.dimensions() != (w, h) {
                return Err(Error::DimensionMismatch {
                    expected: (w, h),
                    actual: p.dimensions(),
                });
            }
        }
        let mut data = Vec::with_capacity(w * h * 3);
        for i in 0..w * h {
            for p in planes {
                data.push(quantize(p.data[i]));
            }
        }
        Ok(Self {
            width: w,
            height: h,
            data,
        })
    }
}

/// Real-valued single-channel image, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} samples for {width}x{height}, got {}",
                width * height,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {bad}")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self::new(width, height, data)
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

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f` to every sample. The result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Unchecked constructor for internal kernels whose output is finite by construction.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
        }
    }

    /// Replicates the gray level into an 8-bit RGB image.
    pub fn to_raster(&self) -> RasterImage {
        let data = self
            .data
            .iter()
            .flat_map(|&v| {
                let q = quantize(v);
                [q, q, q]
            })
            .collect();
        RasterImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::invalid(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Rounds to the nearest integer level and saturates into `[0, 255]`.
pub fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Reads an 8-bit RGB, RGBA, gray or gray+alpha PNG/PPM file. Alpha is dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::IoError(source) => Error::io(path, source),
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            format: u.to_string(),
        },
        other => Error::Decode {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    })?;
    let rgb = match decoded.color() {
        ColorType::Rgb8 | ColorType::Rgba8 | ColorType::L8 | ColorType::La8 => decoded.to_rgb8(),
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                format: format!("{other:?} (only 8-bit channels are accepted)"),
            })
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    RasterImage::from_rgb(w, h, rgb.into_raw())
}

/// Writes `img` as an 8-bit RGB PNG.
pub fn save_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    write_png(
        path.as_ref(),
        &img.data,
        img.width,
        img.height,
        ExtendedColorType::Rgb8,
    )
}

/// Writes a gray image as an 8-bit single-channel PNG.
pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    write_png(
        path.as_ref(),
        &bytes,
        img.width,
        img.height,
        ExtendedColorType::L8,
    )
}

fn write_png(
    path: &Path,
    bytes: &[u8],
    width: usize,
    height: usize,
    color: ExtendedColorType,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    PngEncoder::new(&mut out)
        .write_image(bytes, width as u32, height as u32, color)
        .map_err(|e| match e {
            image::ImageError::IoError(source) => Error::io(path, source),
            other => Error::Encode {
                path: path.to_path_buf(),
                message: other.to_string(),
            },
        })?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Per-pixel Rec.601 luma, kept at `f64` precision.
pub fn rgb_to_gray(img: &RasterImage) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = img
        .pixels()
        .map(|[r, g, b]| wr * r as f64 + wg * g as f64 + wb * b as f64)
        .collect();
    GrayImage::from_raw(img.width, img.height, data)
}

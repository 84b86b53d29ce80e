//! Capsule-endoscopy surface pipeline.
//!
//! A single 2D endoscopy frame is upscaled with a Lanczos-3 resampler,
//! rescaled around its mean/standard deviation, smoothed with a 3×3
//! convolution and turned into a colored height field whose height is the
//! grayscale intensity. The height field can be rendered orthographically
//! from any azimuth/elevation line of sight, or closed into a watertight
//! solid and written as binary STL for printing.
//!
//! Stage modules:
//!
//! * [`raster`]: RGB / grayscale images, PNG and PPM I/O, luma conversion.
//! * [`preprocess`]: Lanczos upscaling, statistics, outlier rescaling, convolution.
//! * [`surface`]: background mask, color grid and the `X/Y/Z/C` surface grid.
//! * [`viewer`]: line-of-sight camera and z-buffered software rasterizer.
//! * [`printmesh`]: solidification, mesh validation and binary STL.
//! * [`cli`]: end-to-end pipeline driver used by the `ce-surf` binary.

pub mod cli;
pub mod error;
pub mod preprocess;
pub mod printmesh;
pub mod raster;
pub mod surface;
pub mod viewer;

pub use error::{Error, Result};

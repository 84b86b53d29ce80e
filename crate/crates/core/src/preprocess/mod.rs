//! Frame preprocessing: Lanczos-3 upscaling, mean/standard-deviation
//! statistics, outlier rescaling and 3×3 convolution smoothing.
//!
//! Every operation works on [`GrayImage`](crate::raster::GrayImage) planes at
//! `f64` precision. The `_rgb` variants split a color image into its three
//! planes, process them independently and quantize on recombination.

mod convolve;
mod lanczos;
mod stats;

pub use convolve::{convolve2d, convolve2d_rgb, Kernel3x3};
pub use lanczos::{lanczos_kernel, lanczos_upscale, lanczos_upscale_rgb, LANCZOS_LOBES};
pub use stats::{compute_stats, rescale_outliers, RescaleBounds, StatsSummary};

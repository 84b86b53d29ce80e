use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Mean and population standard deviation of a sample vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsSummary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl StatsSummary {
    /// Two-pass mean / population deviation (divisor `N`).
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("statistics of an empty sample set"));
        }
        let n = samples.len() as f64;
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo == hi {
            return Ok(Self {
                mean: lo,
                std: 0.0,
                count: samples.len(),
            });
        }
        let mean = (samples.iter().sum::<f64>() / n).clamp(lo, hi);
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(Self {
            mean,
            std: var.sqrt(),
            count: samples.len(),
        })
    }
}

pub fn compute_stats(img: &GrayImage) -> StatsSummary {
    StatsSummary::from_samples(img.values()).expect("images are never empty")
}

/// Clamp interval `[mean - k*std, mean + k*std]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RescaleBounds {
    pub lower: f64,
    pub upper: f64,
    pub k: f64,
}

impl RescaleBounds {
    pub fn new(stats: &StatsSummary, k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid(format!(
                "sigma multiplier must be > 0, got {k}"
            )));
        }
        Ok(Self {
            lower: stats.mean - k * stats.std,
            upper: stats.mean + k * stats.std,
            k,
        })
    }

    /// Clamps `v` into the bounds and maps `[lower, upper]` onto `[0, 255]`.
    pub fn apply(&self, v: f64) -> f64 {
        let span = self.upper - self.lower;
        let t = (v.clamp(self.lower, self.upper) - self.lower) / span;
        (255.0 * t).clamp(0.0, 255.0)
    }
}

/// Outlier removal by rescaling: intensities beyond `k` standard deviations
/// from the mean are clipped, then the kept interval is stretched to `[0, 255]`.
///
/// A constant image (zero deviation) is returned unchanged.
pub fn rescale_outliers(img: &GrayImage, k: f64) -> Result<GrayImage> {
    let stats = compute_stats(img);
    let bounds = RescaleBounds::new(&stats, k)?;
    if stats.std == 0.0 || bounds.upper <= bounds.lower {
        return Ok(img.clone());
    }
    img.map(|v| bounds.apply(v))
}

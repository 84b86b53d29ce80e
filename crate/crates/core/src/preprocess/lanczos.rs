use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{GrayImage, RasterImage};

/// Number of lobes of the windowed sinc; also the kernel's support radius.
pub const LANCZOS_LOBES: usize = 3;

const TAPS: usize = 2 * LANCZOS_LOBES;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Lanczos-3 window: `sinc(x) * sinc(x / 3)` on `|x| < 3`, zero elsewhere.
pub fn lanczos_kernel(x: f64) -> f64 {
    let a = LANCZOS_LOBES as f64;
    if x.abs() >= a {
        0.0
    } else if x.fract() == 0.0 {
        // Exact zeros at the nonzero integers; sin(k*pi) is not.
        if x == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        sinc(x) * sinc(x / a)
    }
}

/// Six (clamped source index, normalized weight) taps for one output sample.
#[derive(Clone, Copy, Debug)]
struct Taps {
    index: [usize; TAPS],
    weight: [f64; TAPS],
}

fn axis_taps(src_len: usize, ratio: usize) -> Vec<Taps> {
    let last = src_len as isize - 1;
    (0..src_len * ratio)
        .map(|o| {
            // Half-pixel-center mapping of output sample `o` into source space.
            let s = (o as f64 + 0.5) / ratio as f64 - 0.5;
            let first = s.floor() as isize - (LANCZOS_LOBES as isize - 1);
            let mut taps = Taps {
                index: [0; TAPS],
                weight: [0.0; TAPS],
            };
            let mut sum = 0.0;
            for t in 0..TAPS {
                let idx = first + t as isize;
                let w = lanczos_kernel(s - idx as f64);
                taps.index[t] = idx.clamp(0, last) as usize;
                taps.weight[t] = w;
                sum += w;
            }
            for w in &mut taps.weight {
                *w /= sum;
            }
            taps
        })
        .collect()
}

/// Upscales by an integer `ratio` with a separable Lanczos-3 resampler.
///
/// Each output sample is the weighted sum of a 6×6 source neighborhood with
/// edge-replicated borders; weights are renormalized per sample so constant
/// images are reproduced exactly.
pub fn lanczos_upscale(src: &GrayImage, ratio: usize) -> Result<GrayImage> {
    if ratio == 0 {
        return Err(Error::invalid("upscale ratio must be at least 1"));
    }
    let (w, h) = src.dimensions();
    let (ow, oh) = (w * ratio, h * ratio);
    let xtaps = axis_taps(w, ratio);
    let ytaps = axis_taps(h, ratio);
    let values = src.values();

    // Horizontal pass: h rows of width ow.
    let mut horiz = vec![0.0; ow * h];
    horiz.par_chunks_mut(ow).enumerate().for_each(|(row, out)| {
        let line = &values[row * w..(row + 1) * w];
        for (o, taps) in out.iter_mut().zip(&xtaps) {
            *o = taps
                .index
                .iter()
                .zip(&taps.weight)
                .map(|(&i, &wt)| wt * line[i])
                .sum();
        }
    });

    // Vertical pass.
    let mut out = vec![0.0; ow * oh];
    out.par_chunks_mut(ow)
        .zip(ytaps.par_iter())
        .for_each(|(line, taps)| {
            for (col, o) in line.iter_mut().enumerate() {
                *o = taps
                    .index
                    .iter()
                    .zip(&taps.weight)
                    .map(|(&r, &wt)| wt * horiz[r * ow + col])
                    .sum();
            }
        });

    Ok(GrayImage::from_raw(ow, oh, out))
}

/// Upscales each color plane independently; results are rounded and saturated.
pub fn lanczos_upscale_rgb(src: &RasterImage, ratio: usize) -> Result<RasterImage> {
    let [r, g, b] = src.to_planes();
    RasterImage::from_planes(&[
        lanczos_upscale(&r, ratio)?,
        lanczos_upscale(&g, ratio)?,
        lanczos_upscale(&b, ratio)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kernel_reference_values() {
        assert_eq!(lanczos_kernel(0.0), 1.0);
        for x in [1.0, 2.0, 3.0, -1.0, -2.0, -3.0, 4.5, -7.0] {
            assert_eq!(lanczos_kernel(x), 0.0, "x = {x}");
        }
        // sinc(1/2) * sinc(1/6) = (2/pi) * (3/pi)
        let expected = 6.0 / (PI * PI);
        assert!((lanczos_kernel(0.5) - expected).abs() < 1e-15);
        assert!((lanczos_kernel(0.5) - 0.60793).abs() < 5e-6);
    }

    #[test]
    fn zero_ratio_is_rejected() {
        let img = GrayImage::filled(2, 2, 1.0).unwrap();
        assert!(matches!(
            lanczos_upscale(&img, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ratio_one_is_identity() {
        let img = GrayImage::from_fn(7, 5, |r, c| (r * 31 + c * 7) as f64 % 13.0).unwrap();
        let up = lanczos_upscale(&img, 1).unwrap();
        for (a, b) in img.values().iter().zip(up.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_128_doubles_to_constant() {
        let img = GrayImage::filled(9, 4, 128.0).unwrap();
        let up = lanczos_upscale(&img, 2).unwrap();
        assert_eq!(up.dimensions(), (18, 8));
        assert!(up.values().iter().all(|v| (v - 128.0).abs() < 1e-9));
    }

    #[test]
    fn rgb_planes_are_independent() {
        let img = RasterImage::filled(3, 3, [10, 200, 90]).unwrap();
        let up = lanczos_upscale_rgb(&img, 3).unwrap();
        assert_eq!(up.dimensions(), (9, 9));
        assert!(up.pixels().all(|p| p == [10, 200, 90]));
    }

    proptest! {
        #[test]
        fn kernel_is_even(x in -5.0f64..5.0) {
            prop_assert_eq!(lanczos_kernel(x), lanczos_kernel(-x));
        }

        #[test]
        fn kernel_has_compact_support(x in 3.0f64..1e6) {
            prop_assert_eq!(lanczos_kernel(x), 0.0);
            prop_assert_eq!(lanczos_kernel(-x), 0.0);
        }

        #[test]
        fn upscale_commutes_with_shift(
            seed in proptest::collection::vec(0.0f64..255.0, 20),
            c in -100.0f64..100.0,
            ratio in 1usize..4,
        ) {
            let img = GrayImage::new(5, 4, seed).unwrap();
            let shifted = img.map(|v| v + c).unwrap();
            let a = lanczos_upscale(&img, ratio).unwrap();
            let b = lanczos_upscale(&shifted, ratio).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x + c - y).abs() <= 1e-9);
            }
        }
    }
}

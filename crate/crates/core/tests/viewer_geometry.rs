mod common;

use ce_surf::raster::RasterImage;
use ce_surf::viewer::{
    coverage_bounds, coverage_fraction, render_surface, RenderSettings, ViewPose,
};

const BG: [u8; 3] = [0, 0, 0];

fn dome_settings(size: usize) -> RenderSettings {
    RenderSettings {
        out_width: size,
        out_height: size,
        background: BG,
        z_exaggeration: common::DOME_Z_EXAGGERATION,
    }
}

fn render(az: f64, el: f64, size: usize) -> RasterImage {
    render_surface(
        &common::hemisphere_surface(),
        &ViewPose::new(az, el).unwrap(),
        &dome_settings(size),
    )
    .unwrap()
}

fn dome_ranges() -> (f64, f64, f64) {
    let s = common::hemisphere_surface();
    let (lo, hi) = s.z_range();
    let side = (common::DOME_SIZE - 1) as f64;
    (side, side, (hi - lo) * common::DOME_Z_EXAGGERATION)
}

fn measured_height(el: f64, size: usize) -> f64 {
    let (r0, r1, _, _) = coverage_bounds(&render(0.0, el, size), BG).unwrap();
    (r1 - r0 + 1) as f64
}

#[test]
fn bounding_box_height_matches_analytic_extent() {
    let (xr, yr, zr) = dome_ranges();
    for el in [-80.0, 0.0] {
        let measured = measured_height(el, 512);
        let expected = common::analytic_pixel_height(el, xr, yr, zr, 512);
        assert!(
            (measured - expected).abs() <= 3.0,
            "el {el}: measured {measured}, analytic {expected}"
        );
    }
}

#[test]
fn bounding_box_height_matches_projected_vertices() {
    let surf = common::hemisphere_surface();
    for el in [-90.0, -80.0, -45.0, -10.0, 0.0, 30.0, 60.0, 80.0] {
        let measured = measured_height(el, 512);
        let expected = common::projected_pixel_height(&surf, el, common::DOME_Z_EXAGGERATION, 512);
        assert!(
            (measured - expected).abs() <= 2.0,
            "el {el}: measured {measured}, projected {expected}"
        );
    }
}

#[test]
fn edge_on_view_is_much_smaller_than_steep_view() {
    let steep = coverage_fraction(&render(0.0, -80.0, 512), BG);
    let flat = coverage_fraction(&render(0.0, 0.0, 512), BG);
    assert!(flat / steep < 0.35, "ratio {}", flat / steep);
}

#[test]
fn coverage_is_invariant_under_quarter_turns() {
    for el in [-80.0, -40.0, -10.0, 0.0, 20.0, 60.0, 90.0] {
        for az in [0.0, 30.0, 135.0] {
            let a = coverage_fraction(&render(az, el, 256), BG);
            let b = coverage_fraction(&render(az + 90.0, el, 256), BG);
            assert!(
                (a - b).abs() <= 0.01 * a.max(b),
                "az {az} el {el}: {a} vs {b}"
            );
        }
    }
}

#[test]
fn coverage_shrinks_toward_edge_on() {
    for sign in [1.0, -1.0] {
        let mut prev = f64::INFINITY;
        for step in (0..=9).rev() {
            let el = sign * 10.0 * step as f64;
            let c = coverage_fraction(&render(0.0, el, 256), BG);
            assert!(c <= prev, "el {el}: {c} > {prev}");
            prev = c;
        }
    }
}

#[test]
fn renders_are_deterministic() {
    let a = render(25.0, -35.0, 200);
    let b = render(25.0, -35.0, 200);
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn render_is_independent_of_thread_count() {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| render(10.0, 20.0, 300));
    let b = many.install(|| render(10.0, 20.0, 300));
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn covered_pixels_carry_surface_color() {
    let img = render(0.0, 90.0, 128);
    assert!(img.pixels().all(|p| p == BG || p == common::DOME_COLOR));
}

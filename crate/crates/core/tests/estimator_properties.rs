use proptest::prelude::*;

use ccgen::calib::{synth_table_diagonal, SynthConfig};
use ccgen::estimators::{gray_world, EstimatorConfig, Plane};
use ccgen::genimg::{generate_image, random_scene, GenerationRequest, SamplePolicy};
use ccgen::metrics::recovery_error;
use ccgen::{IlluminantKind, IlluminantSpec, ImageBuffer, LinearImage, Rgb, SensorModel};

fn methods() -> Vec<EstimatorConfig> {
    vec![
        EstimatorConfig::white_patch(100.0),
        EstimatorConfig::white_patch(95.0),
        EstimatorConfig::gray_world(),
        EstimatorConfig::shades_of_gray(2.0),
        EstimatorConfig::shades_of_gray(8.0),
        EstimatorConfig::gray_edge(1.0, 1, 1.0),
        EstimatorConfig::gray_edge(2.0, 2, 0.0),
    ]
}

fn image(w: usize, values: &[f64]) -> LinearImage {
    let h = values.len() / (3 * w);
    ImageBuffer::from_fn(w, h, |x, y| {
        let i = 3 * (y * w + x);
        Rgb::new(values[i], values[i + 1], values[i + 2])
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn estimates_are_unit_nonnegative_and_scale_invariant(
        values in prop::collection::vec(0.01f64..1.0, 3 * 8 * 6),
        s in 1e-3f64..1e3,
    ) {
        let img = image(8, &values);
        let scaled = img.map(|p| p.map(|v| v * s));
        for m in methods() {
            let a = m.estimate(&img).unwrap();
            let b = m.estimate(&scaled).unwrap();
            prop_assert!((a.norm() - 1.0).abs() < 1e-12, "{}: norm {}", m.label(), a.norm());
            prop_assert!(a.to_array().iter().all(|v| *v >= 0.0));
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                prop_assert!((x - y).abs() < 1e-12, "{}: {a:?} vs {b:?}", m.label());
            }
        }
    }

    #[test]
    fn gray_world_correction_is_neutral(seed in 0u64..1000, rgb in prop::array::uniform3(0.1f64..1.0)) {
        let il = IlluminantSpec::from_rgb("e", IlluminantKind::Grid, Rgb::from_array(rgb), None, None).unwrap();
        let table = synth_table_diagonal(
            &[il],
            &SensorModel::identity("id"),
            &SynthConfig { samples_per_cell: 1, ..Default::default() },
        )
        .unwrap();
        let src = random_scene(16, 16, seed).unwrap();
        let out = generate_image(&GenerationRequest {
            source: &src,
            illuminant: "e",
            table: &table,
            seed,
            sample_policy: SamplePolicy::RandomOfS,
        })
        .unwrap();
        let img = out.image.to_linear::<f64>(1.0);
        let e = gray_world(&img).unwrap();
        let corrected = img.map(|p| Rgb::new(p.r / e.r, p.g / e.g, p.b / e.b));
        let again = gray_world(&corrected).unwrap();
        let neutral = Rgb::splat(1.0 / 3f64.sqrt());
        for (x, y) in again.to_array().iter().zip(neutral.to_array()) {
            prop_assert!((x - y).abs() < 1e-6);
        }
        prop_assert!(recovery_error(again, neutral).unwrap() < 1e-4);
    }
}

#[test]
fn central_differences_track_smooth_fields() {
    // slowly varying sums of sinusoids: truncation error of the stencils stays far below 1e-6
    for trial in 0..20u64 {
        let f = |k: u64| 0.001 + 0.004 * ((trial * 7 + k * 13) % 17) as f64 / 16.0;
        let (wx, wy, wz, ph) = (f(1), f(2), f(3), trial as f64 * 0.37);
        let field = |x: f64, y: f64| (wx * x + ph).sin() + (wy * y).cos() + (wz * (x + y)).sin();
        let grad = |x: f64, y: f64| {
            [
                wx * (wx * x + ph).cos() + wz * (wz * (x + y)).cos(),
                -wy * (wy * y).sin() + wz * (wz * (x + y)).cos(),
            ]
        };
        let hess = |x: f64, y: f64| {
            let s = -wz * wz * (wz * (x + y)).sin();
            [
                -wx * wx * (wx * x + ph).sin() + s,
                -wy * wy * (wy * y).cos() + s,
                s,
            ]
        };
        let plane = Plane::from_fn(40, 30, |x, y| field(x as f64, y as f64));
        let mags = plane.derivative_magnitude(1);
        for y in 1..29 {
            for x in 1..39 {
                let (xf, yf) = (x as f64, y as f64);
                let [dx, dy, dxx, dyy, dxy] = plane.derivatives_at(x, y);
                let g = grad(xf, yf);
                let h = hess(xf, yf);
                let dev = [dx - g[0], dy - g[1], dxx - h[0], dyy - h[1], dxy - h[2]];
                assert!(
                    dev.iter().all(|d| d.abs() < 1e-6),
                    "trial {trial} ({x},{y}): {dev:?}"
                );
                assert!((mags[y * 40 + x] - g[0].hypot(g[1])).abs() < 1e-6);
            }
        }
    }
}

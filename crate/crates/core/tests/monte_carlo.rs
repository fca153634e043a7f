//! Closed forms against seeded Monte Carlo draws. Each comparison uses
//! 4 standard errors, since several run per test.

use nalgebra::DMatrix;
use stabgeo::moments::{ball_probability, box_probability, laplace_abs, mixed_abs_moment_2d, orthant_probability_2d, scalar_moment};
use stabgeo::simulate::{estimate_measure_from_batch, mc_functional, sample_vector, SampleBatch};
use stabgeo::{Kind, QuadLevels, StableModel};

const N: usize = 400_000;

fn tilted() -> StableModel {
    StableModel::symmetric_atoms(1.5, vec![(vec![1.0, 0.0], 1.0), (vec![0.6, 0.8], 0.5), (vec![0.6, -0.8], 0.25)])
        .unwrap()
}

fn agree(batch: &SampleBatch, f: impl Fn(&[f64]) -> f64 + Sync + Send, want: f64, what: &str) {
    let mc = mc_functional(batch, f).unwrap();
    let z = mc.z_score(want);
    assert!(z < 4.0, "{what}: formula {want} vs MC {} ± {}, z = {z}", mc.mean, mc.se);
}

#[test]
fn probabilities_match_draws() {
    let lv = QuadLevels::default();
    let c = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.3, 0.5, 1.5, -0.4, 0.3, -0.4, 1.0]);
    for model in [tilted(), StableModel::sub_gaussian(1.2, c).unwrap()] {
        let batch = sample_vector(&model, N, 21).unwrap();
        let a: Vec<f64> = (0..model.dim()).map(|i| 0.7 + 0.4 * i as f64).collect();
        let p = box_probability(&model, &a, &lv).unwrap().value;
        agree(&batch, |x| x.iter().zip(&a).all(|(v, b)| v.abs() <= *b) as u8 as f64, p, "box");
        let p = ball_probability(&model, 1.3, &lv).unwrap().value;
        agree(&batch, |x| (x.iter().map(|v| v * v).sum::<f64>() <= 1.69) as u8 as f64, p, "ball");
        let lam: Vec<f64> = (0..model.dim()).map(|i| 0.5 + 0.3 * i as f64).collect();
        let p = laplace_abs(&model, &lam, &lv).unwrap().value;
        agree(&batch, |x| (-x.iter().zip(&lam).map(|(v, l)| l * v.abs()).sum::<f64>()).exp(), p, "laplace");
    }
}

#[test]
fn planar_moments_match_draws() {
    let model = tilted();
    let batch = sample_vector(&model, N, 22).unwrap();
    let u = [0.3, -0.9];
    let m = scalar_moment(&model, &u, 0.4).unwrap().value;
    agree(&batch, |x| (x[0] * u[0] + x[1] * u[1]).abs().powf(0.4), m, "scalar moment");
    let m = mixed_abs_moment_2d(&model, 0.3, 0.2).unwrap().value;
    agree(&batch, |x| x[0].abs().powf(0.3) * x[1].abs().powf(0.2), m, "mixed moment");
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, -0.2, 1.0]);
    let p = orthant_probability_2d(&model, &a).unwrap().value;
    let inv = a.clone().try_inverse().unwrap();
    agree(
        &batch,
        |x| {
            let y = &inv * nalgebra::Vector2::new(x[0], x[1]);
            (y[0] >= 0.0 && y[1] >= 0.0) as u8 as f64
        },
        p,
        "orthant",
    );
}

#[test]
fn tail_estimate_recovers_cauchy_gauge() {
    let model = StableModel::isotropic_scaled(2, 1.0, 1.0).unwrap();
    let batch = sample_vector(&model, 100_000, 23).unwrap();
    let (measure, k) = estimate_measure_from_batch(&batch, 20.0, Kind::Symmetric, None).unwrap();
    assert!(k > 1000);
    for t in 0..16 {
        let a = t as f64 * std::f64::consts::PI / 16.0;
        let g = measure.gauge_pow(&[a.cos(), a.sin()], 1.0);
        assert!((g - 1.0).abs() < 0.1, "angle {a}: estimated gauge {g}");
    }
}

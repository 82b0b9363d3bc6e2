use rayon::prelude::*;
use shallow_lake_core::sde::rng::brownian_increments;
use shallow_lake_core::sde::{simulate_path_indexed, simulate_path_with_increments};
use shallow_lake_core::{simulate_kernel, Integrator, LakeParams, PathConfig, Policy};

/// Mean and standard error of `f(Z_1)` over `n` kernel paths on a 10-step grid.
fn kernel_moment(params: &LakeParams, n: u64, f: impl Fn(f64) -> f64 + Sync) -> (f64, f64) {
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| f(*simulate_kernel(&grid, 99, k, params).unwrap().last().unwrap()))
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn kernel_first_moment() {
    let p = LakeParams::standard();
    let (mean, se) = kernel_moment(&p, 1_000_000, |z| z);
    let exact = (-0.65f64).exp();
    assert!((exact - 0.522_045_776_761_016).abs() < 1e-12);
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn kernel_second_moment() {
    let p = LakeParams::standard();
    let (mean, se) = kernel_moment(&p, 1_000_000, |z| z * z);
    let exact = (0.01f64 - 1.3).exp();
    assert!((mean - exact).abs() <= 3.0 * se, "{mean} vs {exact} (se {se})");
}

#[test]
fn kernel_without_noise_is_deterministic() {
    let p = LakeParams::standard().with_sigma(0.0);
    let grid = [0.0, 0.5, 2.0];
    let z = simulate_kernel(&grid, 1, 0, &p).unwrap();
    for (t, z) in grid.iter().zip(z) {
        assert!((z - (-0.65 * t).exp()).abs() < 1e-15);
    }
}

/// The integral representation `x_t = x0 Z_t + ∫ Z_t/Z_s (u + x_s^2/(1+x_s^2)) ds`
/// evaluated on the path's own states with the trapezoid rule, against the
/// simulated path.
fn representation_gap(dt: f64) -> f64 {
    let p = LakeParams::standard().with_sigma(0.2);
    let cfg = PathConfig::new(10.0, dt, Integrator::KernelQuadrature, 21).unwrap();
    let base = brownian_increments(21, 0, (10.0 / 0.0025f64).round() as usize, 0.0025);
    let per = (dt / 0.0025).round() as usize;
    let inc: Vec<f64> = base.chunks(per).map(|c| c.iter().sum()).collect();
    let policy = Policy::constant(0.3).unwrap();
    let path = simulate_path_with_increments(0.4, &policy, &cfg, &p, &inc).unwrap();
    let load = |x: f64| 0.3 + x * x / (1.0 + x * x);
    let mut worst = 0.0f64;
    for k in 1..path.x.len() {
        let zt = path.z[k];
        let mut integral = 0.0;
        for j in 0..k {
            let a = zt / path.z[j] * load(path.x[j]);
            let b = zt / path.z[j + 1] * load(path.x[j + 1]);
            integral += 0.5 * dt * (a + b);
        }
        worst = worst.max((0.4 * zt + integral - path.x[k]).abs());
    }
    worst
}

#[test]
fn path_satisfies_integral_representation() {
    let coarse = representation_gap(0.04);
    let fine = representation_gap(0.02);
    let finer = representation_gap(0.01);
    assert!(coarse < 0.01, "{coarse}");
    // first order: each halving of dt halves the gap
    for (a, b) in [(coarse, fine), (fine, finer)] {
        assert!(b < 0.55 * a && b > 0.45 * a, "{a} -> {b}");
    }
}

#[test]
fn kernel_quadrature_paths_are_nonnegative() {
    let p = LakeParams::standard().with_sigma(1.0);
    let cfg = PathConfig::new(20.0, 0.05, Integrator::KernelQuadrature, 4).unwrap();
    let policy = Policy::constant(0.01).unwrap();
    let negatives: usize = (0..10_000u64)
        .into_par_iter()
        .map(|k| {
            let path = simulate_path_indexed(0.05, &policy, &cfg, &p, k).unwrap();
            path.x.iter().filter(|&&x| x < 0.0).count()
        })
        .sum();
    assert_eq!(negatives, 0);
}

#[test]
fn euler_clamping_vanishes_with_step() {
    let p = LakeParams::standard().with_sigma(0.2);
    let clamps = |dt: f64| -> usize {
        let cfg = PathConfig::new(20.0, dt, Integrator::EulerMaruyama, 8).unwrap();
        (0..500u64)
            .map(|k| {
                simulate_path_indexed(0.5, &Policy::benchmark(), &cfg, &p, k)
                    .unwrap()
                    .clamped_steps
            })
            .sum()
    };
    let (coarse, fine) = (clamps(0.1), clamps(0.05));
    assert!(2 * fine <= coarse, "{coarse} -> {fine}");
}

#[test]
fn coupled_paths_stay_ordered() {
    let p = LakeParams::standard().with_sigma(0.3);
    let cfg = PathConfig::new(30.0, 0.01, Integrator::KernelQuadrature, 12).unwrap();
    let policy = Policy::constant(0.2).unwrap();
    for k in 0..50 {
        let lower = simulate_path_indexed(0.2, &policy, &cfg, &p, k).unwrap();
        let upper = simulate_path_indexed(1.2, &policy, &cfg, &p, k).unwrap();
        for ((x, y), z) in lower.x.iter().zip(&upper.x).zip(&lower.z) {
            assert!(y - x >= 1.0 * z - 1e-12, "{y} - {x} < {z}");
        }
    }
}

use super::rng::{normal, path_rng};
use crate::error::{Error, Result};
use crate::model::LakeParams;

/// `Z_{t+dt}/Z_t = exp(sigma dW - (b + sigma^2/2) dt)` for the increment `dw`.
#[inline]
pub fn kernel_step(dw: f64, dt: f64, params: &LakeParams) -> f64 {
    let s = params.sigma;
    (s * dw - (params.b + 0.5 * s * s) * dt).exp()
}

/// Samples `Z_t = exp(sigma W_t - (b + sigma^2/2) t)` on `t_grid` (path
/// `path_index` of the run seeded by `seed`). Exact at every node: the
/// Brownian increments are drawn with the true interval lengths.
pub fn simulate_kernel(
    t_grid: &[f64],
    seed: u64,
    path_index: u64,
    params: &LakeParams,
) -> Result<Vec<f64>> {
    match t_grid.first() {
        Some(&0.0) => {}
        _ => return Err(Error::Config("time grid must start at 0".into())),
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("time grid must be strictly increasing".into()));
    }
    let mut rng = path_rng(seed, path_index);
    let mut z = 1.0;
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(z);
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        z *= kernel_step(dt.sqrt() * normal(&mut rng), dt, params);
        out.push(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_one_and_is_deterministic_without_noise() {
        let p = LakeParams::new(0.03, 0.65, 1.0, 0.0).unwrap();
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let z = simulate_kernel(&grid, 1, 0, &p).unwrap();
        assert_eq!(z[0], 1.0);
        for (t, zt) in grid.iter().zip(&z) {
            assert!((zt - (-0.65 * t).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let p = LakeParams::standard();
        assert!(simulate_kernel(&[0.1, 0.2], 1, 0, &p).is_err());
        assert!(simulate_kernel(&[0.0, 0.2, 0.2], 1, 0, &p).is_err());
        assert!(simulate_kernel(&[], 1, 0, &p).is_err());
    }
}

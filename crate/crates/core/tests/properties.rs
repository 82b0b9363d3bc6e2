use proptest::prelude::*;
use shallow_lake_core::hjb::{DiffusionForm, Scheme};
use shallow_lake_core::model::{
    asymptotic_value, control_objective, hamiltonian, optimal_control,
};
use shallow_lake_core::LakeParams;

fn feasible_params() -> impl Strategy<Value = LakeParams> {
    (0.01f64..1.0, 0.05f64..2.0, 0.2f64..3.0, 0.0f64..1.0).prop_filter_map(
        "infeasible",
        |(rho, b, c, frac)| {
            // sigma^2 strictly inside (0, rho + 2b)
            let sigma = (frac * 0.95 * (rho + 2.0 * b)).sqrt();
            LakeParams::new(rho, b, c, sigma).ok()
        },
    )
}

/// Brute-force sup of the control objective: a geometric grid over
/// `[1e-6, 1e6]`, then a fine grid around the best point.
fn brute_force_sup(x: f64, p: f64, pp: f64, params: &LakeParams) -> f64 {
    let obj = |u: f64| control_objective(x, u, p, pp, params);
    let coarse = 4000;
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut best_u = 1e-6;
    let mut best = f64::NEG_INFINITY;
    for k in 0..=coarse {
        let u = (lo + (hi - lo) * k as f64 / coarse as f64).exp();
        let v = obj(u);
        if v > best {
            best = v;
            best_u = u;
        }
    }
    let step = (hi - lo) / coarse as f64;
    let fine = 20_000;
    for k in 0..=fine {
        let u = (best_u.ln() - step + 2.0 * step * k as f64 / fine as f64).exp();
        best = best.max(obj(u));
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_the_sup_over_controls(
        params in feasible_params(),
        x in 0.0f64..20.0,
        p in -50.0f64..-0.02,
        pp in -10.0f64..10.0,
    ) {
        let h = hamiltonian(x, p, pp, &params).unwrap();
        let brute = brute_force_sup(x, p, pp, &params);
        prop_assert!(brute <= h + 1e-9 * (1.0 + h.abs()));
        prop_assert!((h - brute).abs() <= 1e-6 * (1.0 + h.abs()), "{h} vs {brute}");
    }

    #[test]
    fn optimal_control_is_stationary(p in -1e3f64..-1e-3) {
        let u = optimal_control(p).unwrap();
        let derivative = 1.0 / u + p;
        prop_assert!(derivative.abs() <= 4.0 * f64::EPSILON * p.abs());
    }

    #[test]
    fn asymptotic_value_shift_identity(x in 0.0f64..100.0) {
        let params = LakeParams::standard();
        let e = params.asymptotics().unwrap();
        let y = x + e.shift;
        let lhs = asymptotic_value(x, &params).unwrap() + e.a * y * y + y.ln() / params.rho;
        let rhs = e.k - (2.0 * e.a).ln() / params.rho;
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    /// Under the monotonicity condition the node residual is strictly
    /// increasing in the node value and non-increasing in both neighbours.
    #[test]
    fn node_residual_is_monotone(
        params in feasible_params(),
        dx in 1e-3f64..0.2,
        i in 0usize..400,
        right in -300.0f64..300.0,
        gap in 1e-6f64..5.0,
        left_gap in -5.0f64..5.0,
        bump in 1e-6f64..1.0,
        flat in any::<bool>(),
    ) {
        let diffusion = if flat { DiffusionForm::Flat } else { DiffusionForm::X2 };
        let scheme = Scheme::new(params, dx, diffusion);
        let x = i as f64 * dx;
        prop_assume!(scheme.monotonicity_margin(x) >= 0.0);
        let left = right + gap + left_gap.abs();
        let g = |w: f64, r: f64, l: f64| scheme.residual(x, w, r, l).unwrap();

        let mut prev = f64::NEG_INFINITY;
        for k in 1..=100 {
            let w = right + gap * (k as f64 / 50.0);
            let r = g(w, right, left);
            prop_assert!(r > prev, "not increasing in w at k = {k}");
            prev = r;
        }
        let w = right + gap;
        let base = g(w, right, left);
        prop_assert!(g(w, right - bump, left) >= base);
        prop_assert!(g(w, right, left - bump) >= base);
        prop_assert!(g(w, right + 0.5 * gap, left + bump) <= base);
    }
}

#[test]
fn node_residual_limits() {
    let params = LakeParams::standard();
    let scheme = Scheme::new(params, 0.01, DiffusionForm::X2);
    let (x, right, left) = (1.0, -80.0, -79.0);
    assert!(scheme.residual(x, right + 1e-12, right, left).unwrap() < -1e-3);
    assert!(scheme.residual(x, 1e6, right, left).unwrap() > 1e-3);
}

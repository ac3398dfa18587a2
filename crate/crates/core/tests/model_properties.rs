use degvis_core::model::{GasModel, Viscosity};
use proptest::prelude::*;

/// `(γ, α)` with `γ > 1`, `α > 0` and `α ≤ γ ≤ α + 1`.
fn admissible_exponents() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..3.0, 0.0f64..=1.0).prop_map(|(alpha, s)| {
        let lo = alpha.max(1.0 + 1e-6);
        (lo + s * (alpha + 1.0 - lo), alpha)
    })
}

fn eps() -> impl Strategy<Value = f64> {
    (-6.0f64..-0.01).prop_map(|e| 10f64.powf(e))
}

fn density() -> impl Strategy<Value = f64> {
    (-4.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn steady_states_solve_the_potential_equation(
        (gamma, alpha) in admissible_exponents(), eps in eps(), rho in density()
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let f = m.coefficients_f(eps, rho).unwrap();
        let p = m.pressure(rho).unwrap();
        let residual = f.f1 * (-p) - f.f2 * p * p + f.f3;
        let scale = (f.f1 * p).abs() + (f.f2 * p * p).abs() + f.f3.abs();
        prop_assert!(residual.abs() <= 1e-10 * scale, "{residual} vs {scale}");
    }

    #[test]
    fn regularized_viscosity_dominates_and_is_continuous(
        (gamma, alpha) in admissible_exponents(), eps in eps(), rho in density()
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let v = Viscosity::new(m, eps).unwrap();
        prop_assert!(v.value(rho) >= m.mu(rho));
        prop_assert!(v.value(rho) >= eps * rho.powf(m.alpha_star()));
        let kink = m.deregularization_density(eps);
        let (below, above) = (v.value(kink * (1.0 - 1e-9)), v.value(kink * (1.0 + 1e-9)));
        prop_assert!((below - above).abs() <= 1e-7 * above);
    }

    #[test]
    fn physical_branch_is_exact_above_the_threshold(
        (gamma, alpha) in admissible_exponents(), eps in eps(), lift in 1e-9f64..10.0
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let rho = m.deregularization_density(eps) * (1.0 + lift);
        prop_assert_eq!(m.mu_eps(eps, rho).unwrap(), m.mu(rho));
        prop_assert_eq!(m.mu_eps_deriv(eps, rho).unwrap(), alpha * rho.powf(alpha - 1.0));
    }

    #[test]
    fn slope_matches_the_active_branch(
        (gamma, alpha) in admissible_exponents(), eps in eps(), rho in density()
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let v = Viscosity::new(m, eps).unwrap();
        let kink = m.deregularization_density(eps);
        prop_assume!((rho / kink - 1.0).abs() > 1e-3);
        let h = 1e-6 * rho;
        let fd = (v.value(rho + h) - v.value(rho - h)) / (2.0 * h);
        prop_assert!((v.slope(rho) - fd).abs() <= 1e-5 * fd.abs().max(1e-300));
        prop_assert!(v.slope(rho) >= 0.0);
    }

    #[test]
    fn velocity_gradient_round_trips(
        (gamma, alpha) in admissible_exponents(), eps in eps(), rho in density(), du in -50.0f64..50.0
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let v = Viscosity::new(m, eps).unwrap();
        let w = v.active_potential(rho, du);
        let back = m.velocity_gradient_identity(eps, rho, w).unwrap();
        let scale = du.abs() + m.pressure(rho).unwrap() / v.value(rho);
        prop_assert!((back - du).abs() <= 1e-12 * scale);
    }

    #[test]
    fn j_coefficients_obey_the_branch_bounds(
        (gamma, alpha) in admissible_exponents(), eps in eps(), rho in density()
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let j = m.j_coefficients(eps, rho).unwrap();
        let gap = alpha - m.alpha_star();
        let a1 = (gamma - 2.0 * (m.alpha_star() + 1.0)).abs() * eps.powf((gamma - alpha) / gap);
        let a2 = (gamma - (m.alpha_star() + 1.0)).abs() * eps.powf((2.0 * gamma - alpha) / gap);
        prop_assert!(j.j1 <= a1 * (1.0 + 1e-9) + 1e-300, "{} > {}", j.j1, a1);
        prop_assert!(j.j2 <= a2 * (1.0 + 1e-9) + 1e-300, "{} > {}", j.j2, a2);
    }

    #[test]
    fn theory_constants_are_ordered(
        (gamma, alpha) in admissible_exponents(), horizon in 0.05f64..5.0, kappa0 in 0.01f64..3.0
    ) {
        let m = GasModel::new(gamma, alpha).unwrap();
        let b = match m.theory_bounds(horizon, kappa0) {
            Ok(b) => b,
            Err(_) => {
                // only allowed when the constants are below the f64 range
                prop_assert!(gamma > alpha);
                let (a_star, t) = (m.alpha_star(), horizon);
                let gap = alpha - a_star;
                let power = gap / (gamma - alpha);
                let ln_eps_gamma = -power * (1.0 + t * (gamma - a_star - 1.0).abs()).ln();
                let c = 2.0 * (t * (gamma - 2.0 * (a_star + 1.0)).abs()).exp();
                let base = (2f64.powf(alpha) - 1.0) / (alpha * (2f64.powf(gamma) + c) * t);
                let ln_delta_1 = ln_eps_gamma.min(power * base.ln());
                prop_assert!(ln_delta_1 / gap.min(1.0) < f64::MIN_POSITIVE.ln() + 1.0, "{ln_delta_1}");
                return Ok(());
            }
        };
        prop_assert!(b.delta_1 > 0.0 && b.delta_1 <= b.eps_gamma && b.eps_gamma <= 1.0);
        prop_assert!(b.delta_t <= b.delta_1);
        prop_assert!(b.kappa_t > 0.0 && b.kappa_t < kappa0);
        prop_assert!(b.c_gamma >= 2.0);
        // below δ_T the regularization threshold sits under the density floor
        let threshold = m.deregularization_density(b.delta_t);
        prop_assert!(threshold <= b.kappa_t * (1.0 + 1e-12));
    }
}

#[test]
fn invalid_exponents_are_rejected() {
    assert!(GasModel::new(1.0, 0.5).is_err());
    assert!(GasModel::new(2.0, 0.0).is_err());
    assert!(GasModel::new(3.5, 1.0).is_err());
    assert!(GasModel::new(1.5, 2.0).is_err());
    assert!(GasModel::new(f64::NAN, 1.0).is_err());
}

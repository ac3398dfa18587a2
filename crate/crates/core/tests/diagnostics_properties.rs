use degvis_core::diagnostics::{
    active_potential, bd_energies, comparison_solution, density_floor_ode_check, discrete_hk_norm,
    discrete_seminorm, gronwall_envelope, w_equation_residual,
};
use degvis_core::model::{GasModel, Viscosity};
use degvis_core::profiles::{make_initial_family, FarFieldStates, InitialFamily, PulseParams};
use degvis_core::solver::{Grid1D, SimState};
use proptest::prelude::*;

fn wavy_state(grid: &Grid1D, a: f64, b: f64, shift: f64) -> SimState {
    let xs = grid.coordinates();
    SimState {
        t: 0.0,
        rho: xs.iter().map(|x| 1.0 + a * (x + 0.3).sin()).collect(),
        u: xs.iter().map(|x| b * (2.0 * x).cos() + shift).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bd_energies_are_galilean_invariant(
        a in 0.0f64..0.5, b in -1.0f64..1.0, shift in -5.0f64..5.0, eps in 0.01f64..0.5
    ) {
        let visc = Viscosity::new(GasModel::shallow_water(), eps).unwrap();
        let grid = Grid1D::new(3.0, 96).unwrap();
        let rest = wavy_state(&grid, a, b, 0.0);
        let moving = wavy_state(&grid, a, b, shift);
        let rho_bar = vec![1.0; grid.nodes()];
        let (e1, e2) = bd_energies(&visc, &grid, &rest, &rho_bar, &vec![0.0; grid.nodes()]).unwrap();
        let (f1, f2) = bd_energies(&visc, &grid, &moving, &rho_bar, &vec![shift; grid.nodes()]).unwrap();
        prop_assert!((e1 - f1).abs() <= 1e-12 * (1.0 + e1));
        prop_assert!((e2 - f2).abs() <= 1e-12 * (1.0 + e2));
        prop_assert!(e1 >= 0.0 && e2 >= 0.0);
    }

    #[test]
    fn zeroth_order_norm_is_the_l2_norm(values in prop::collection::vec(-10.0f64..10.0, 17..60)) {
        let grid = Grid1D::new(2.0, values.len() - 1).unwrap();
        let dx = grid.dx();
        let n = values.len();
        let mut sq = 0.0;
        for (i, v) in values.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            sq += w * v * v * dx;
        }
        let h0 = discrete_hk_norm(&values, &grid, 0).unwrap();
        prop_assert!((h0 - sq.sqrt()).abs() <= 1e-12 * (1.0 + h0));
        // norms grow with the order
        let mut prev = h0;
        for k in 1..=4 {
            let hk = discrete_hk_norm(&values, &grid, k).unwrap();
            prop_assert!(hk >= prev);
            prev = hk;
        }
    }

    #[test]
    fn comparison_solution_with_constant_growth_is_exponential(
        rate in -2.0f64..2.0, y0 in -3.0f64..3.0
    ) {
        let times: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let j1 = vec![rate; times.len()];
        let zero = vec![0.0; times.len()];
        let y = comparison_solution(y0, &j1, &zero, &times);
        for (t, v) in times.iter().zip(&y) {
            prop_assert!((v - y0 * (rate * t).exp()).abs() <= 1e-12 * (1.0 + v.abs()));
        }
        let flat = comparison_solution(y0, &zero, &zero, &times);
        prop_assert!(flat.iter().all(|v| *v == y0));
    }

    #[test]
    fn envelope_stays_under_the_chain_bound(
        series in prop::collection::vec(-3.0f64..1.5, 5..80),
        eps_exp in -4.0f64..-0.1,
        frac in 0.0f64..=1.0,
        horizon in 0.1f64..3.0,
    ) {
        let model = GasModel::shallow_water();
        let eps = 10f64.powf(eps_exp);
        let rho: Vec<f64> = series.iter().map(|e| 10f64.powf(*e)).collect();
        let times: Vec<f64> = (0..rho.len()).map(|k| horizon * k as f64 / (rho.len() - 1) as f64).collect();
        let w0 = frac * eps.powf(model.theta());
        let env = gronwall_envelope(&model, eps, w0, &rho, &times).unwrap();
        for v in &env.envelope {
            prop_assert!(*v <= env.chain_bound * (1.0 + 1e-10), "{} > {}", v, env.chain_bound);
        }
    }

    #[test]
    fn pulses_start_below_the_potential_scale(
        amplitude in 0.0f64..30.0,
        order in 4u32..8,
        rho_plus in 0.3f64..2.0,
        eps_frac in 0.01f64..=1.0,
    ) {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(6.0, 256).unwrap();
        let p = PulseParams {
            far_field: FarFieldStates { rho_minus: 1.5, rho_plus, u_minus: 0.25, u_plus: 0.0 },
            order,
            amplitude,
            width: 0.75,
            center: 0.0,
            rho_bump: 0.0,
            enforce_mono_w0: true,
        };
        let Ok(data) = make_initial_family(&InitialFamily::CompressivePulse(p), &model, &grid) else {
            return Ok(());
        };
        let bounds = model.theory_bounds(1.0, 0.3).unwrap();
        let eps = eps_frac * bounds.eps_gamma;
        let visc = Viscosity::new(model, eps).unwrap();
        let state = SimState { t: 0.0, rho: data.rho0.clone(), u: data.u0.clone() };
        let sup = active_potential(&visc, &grid, &state).into_iter().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sup <= eps.powf(model.theta()), "{sup}");
    }
}

#[test]
fn first_seminorm_of_a_sine_converges() {
    // ‖cos‖ on [−π, π] is √π; the stencil trims O(dx) at each end
    let grid = Grid1D::new(std::f64::consts::PI, 2048).unwrap();
    let tol = 4.0 * grid.dx();
    let f: Vec<f64> = grid.coordinates().iter().map(|x| x.sin()).collect();
    let h1 = discrete_seminorm(&f, &grid, 1).unwrap();
    assert!((h1 - std::f64::consts::PI.sqrt()).abs() < tol, "{h1}");
    let h2 = discrete_seminorm(&f, &grid, 2).unwrap();
    assert!((h2 - std::f64::consts::PI.sqrt()).abs() < tol, "{h2}");
    assert!(discrete_hk_norm(&f, &grid, 5).is_err());
    assert!(discrete_hk_norm(&f[..5], &grid, 3).is_err());
}

#[test]
fn constant_states_have_no_w_residual() {
    let visc = Viscosity::new(GasModel::new(1.5, 1.0).unwrap(), 0.1).unwrap();
    let grid = Grid1D::new(2.0, 64).unwrap();
    let a = SimState {
        t: 0.0,
        rho: vec![0.8; 65],
        u: vec![0.0; 65],
    };
    let mut b = a.clone();
    b.t = 0.3;
    let r = w_equation_residual(&visc, &grid, &a, &b).unwrap();
    assert!(r < 1e-14, "{r}");
    assert!(w_equation_residual(&visc, &grid, &b, &a).is_err());
}

#[test]
fn density_floor_check_flags_a_collapsing_trajectory() {
    let model = GasModel::shallow_water();
    let bounds = model.theory_bounds(1.0, 1.0).unwrap();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let steady = vec![1.0; times.len()];
    let w = vec![-1.0; times.len()];
    let ok = density_floor_ode_check(&model, &bounds, &steady, &w, &times).unwrap();
    assert!(ok.passed && ok.premise_holds);
    let collapsing: Vec<f64> = times.iter().map(|t| (-20.0 * t).exp()).collect();
    let bad = density_floor_ode_check(&model, &bounds, &collapsing, &w, &times).unwrap();
    assert!(!bad.passed);
    assert!(bad.worst_margin < 0.0);
    let hot = vec![10.0; times.len()];
    assert!(
        !density_floor_ode_check(&model, &bounds, &steady, &hot, &times)
            .unwrap()
            .premise_holds
    );
}

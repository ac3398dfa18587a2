//! Method-of-lines integration of the regularized system on a truncated
//! domain `[-L, L]` with the end nodes pinned to the far-field states.
//!
//! Space: conservative central flux for the continuity equation, primitive
//! momentum update with central convection/pressure gradients and a
//! three-point conservative viscous flux using face-averaged `μ_ε`.
//! Time: three-stage SSP Runge–Kutta; with [`ViscousTreatment::Implicit`] the
//! viscous term is split off and advanced by backward Euler (a tridiagonal
//! solve with `μ_ε` frozen at the post-convection density).

mod grid;
mod run;
pub mod stencil;
mod tridiag;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GasModel, Viscosity};
use crate::profiles::InitialData;

pub use grid::Grid1D;
pub use run::{run, RunReport, Snapshot, SnapshotObserver, Termination};
pub use tridiag::solve_tridiagonal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViscousTreatment {
    Explicit,
    #[default]
    Implicit,
}

/// Face flux for the continuity equation.
///
/// `Upwind` is first-order and exists only as a mutation for the
/// grid-refinement detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContinuityFlux {
    #[default]
    Central,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    #[serde(default = "default_cfl")]
    pub cfl_number: f64,
    #[serde(default = "default_diffusion")]
    pub diffusion_number: f64,
    pub end_time: f64,
    pub snapshot_interval: f64,
    #[serde(default)]
    pub viscous_treatment: ViscousTreatment,
    #[serde(default)]
    pub continuity_flux: ContinuityFlux,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_diffusion() -> f64 {
    0.4
}

impl SolverConfig {
    pub fn new(eps: f64, end_time: f64, snapshot_interval: f64) -> Self {
        Self {
            eps,
            cfl_number: default_cfl(),
            diffusion_number: default_diffusion(),
            end_time,
            snapshot_interval,
            viscous_treatment: ViscousTreatment::default(),
            continuity_flux: ContinuityFlux::default(),
        }
    }

    pub fn with_treatment(mut self, treatment: ViscousTreatment) -> Self {
        self.viscous_treatment = treatment;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::config(
                "eps",
                format!("must lie in (0, 1), got {}", self.eps),
            ));
        }
        if !(self.cfl_number > 0.0 && self.cfl_number <= 1.0) {
            return Err(Error::config(
                "cfl_number",
                format!("must lie in (0, 1], got {}", self.cfl_number),
            ));
        }
        if !(self.diffusion_number > 0.0 && self.diffusion_number.is_finite()) {
            return Err(Error::config("diffusion_number", "must be positive"));
        }
        if !(self.end_time > 0.0 && self.end_time.is_finite()) {
            return Err(Error::config("end_time", "must be positive"));
        }
        if !(self.snapshot_interval > 0.0 && self.snapshot_interval <= self.end_time) {
            return Err(Error::config(
                "snapshot_interval",
                format!(
                    "must lie in (0, end_time = {}], got {}",
                    self.end_time, self.snapshot_interval
                ),
            ));
        }
        Ok(())
    }
}

/// Time plus nodal density and velocity; the end nodes carry the far field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl SimState {
    pub fn from_initial(data: &InitialData) -> Self {
        Self {
            t: 0.0,
            rho: data.rho0.clone(),
            u: data.u0.clone(),
        }
    }

    fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        if self.rho.len() != grid.nodes() || self.u.len() != grid.nodes() {
            return Err(Error::structural(format!(
                "state has {} density / {} velocity values, grid has {} nodes",
                self.rho.len(),
                self.u.len(),
                grid.nodes()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tendencies {
    pub drho_dt: Vec<f64>,
    pub du_dt: Vec<f64>,
}

fn check_positivity(grid: &Grid1D, rho: &[f64], t: f64) -> Result<()> {
    match rho.iter().position(|r| !(*r > 0.0)) {
        None => Ok(()),
        Some(node) => Err(Error::PositivityLoss {
            node,
            x: grid.x(node),
            t,
            rho: rho[node],
        }),
    }
}

/// Immutable pieces every right-hand-side evaluation needs.
#[derive(Debug, Clone, Copy)]
struct Discretization {
    model: GasModel,
    visc: Viscosity,
    grid: Grid1D,
    flux: ContinuityFlux,
}

impl Discretization {
    fn new(model: &GasModel, cfg: &SolverConfig, grid: &Grid1D) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            model: *model,
            visc: Viscosity::new(*model, cfg.eps)?,
            grid: *grid,
            flux: cfg.continuity_flux,
        })
    }

    #[inline]
    fn mass_flux(&self, rho: &[f64], u: &[f64], i: usize) -> f64 {
        match self.flux {
            ContinuityFlux::Central => 0.5 * (rho[i] * u[i] + rho[i + 1] * u[i + 1]),
            ContinuityFlux::Upwind => {
                let face_u = 0.5 * (u[i] + u[i + 1]);
                if face_u >= 0.0 {
                    rho[i] * face_u
                } else {
                    rho[i + 1] * face_u
                }
            }
        }
    }

    /// Fills the tendencies and returns the net boundary mass flux
    /// `F_{1/2} − F_{N−1/2}` (mass inflow rate of the interior).
    fn rhs(
        &self,
        rho: &[f64],
        u: &[f64],
        t: f64,
        viscous: bool,
        mu: &mut [f64],
        drho: &mut [f64],
        du: &mut [f64],
    ) -> Result<f64> {
        check_positivity(&self.grid, rho, t)?;
        let n = rho.len();
        let dx = self.grid.dx();
        let inv2dx = 0.5 / dx;
        let invdx2 = 1.0 / (dx * dx);

        if viscous {
            for (m, r) in mu.iter_mut().zip(rho) {
                *m = self.visc.value(*r);
            }
        }

        let mut flux_left = self.mass_flux(rho, u, 0);
        let left_boundary = flux_left;
        drho[0] = 0.0;
        du[0] = 0.0;
        for i in 1..n - 1 {
            let flux_right = self.mass_flux(rho, u, i);
            drho[i] = -(flux_right - flux_left) / dx;
            flux_left = flux_right;

            let r = rho[i];
            let convection = -u[i] * (u[i + 1] - u[i - 1]) * inv2dx;
            let pressure = -self.model.dp(r) * (rho[i + 1] - rho[i - 1]) * inv2dx / r;
            let mut rate = convection + pressure;
            if viscous {
                let right = 0.5 * (mu[i] + mu[i + 1]) * (u[i + 1] - u[i]);
                let left = 0.5 * (mu[i - 1] + mu[i]) * (u[i] - u[i - 1]);
                rate += (right - left) * invdx2 / r;
            }
            du[i] = rate;
        }
        drho[n - 1] = 0.0;
        du[n - 1] = 0.0;
        Ok(left_boundary - flux_left)
    }

    fn stable_dt(&self, cfg: &SolverConfig, state: &SimState) -> f64 {
        let dx = self.grid.dx();
        let mut wave = 0.0f64;
        let mut diffusive = f64::INFINITY;
        for (r, v) in state.rho.iter().zip(&state.u) {
            wave = wave.max(v.abs() + self.model.dp(*r).sqrt());
            diffusive = diffusive.min(r / self.visc.value(*r));
        }
        let advective = cfg.cfl_number * dx / wave;
        match cfg.viscous_treatment {
            ViscousTreatment::Implicit => advective,
            ViscousTreatment::Explicit => advective.min(cfg.diffusion_number * dx * dx * diffusive),
        }
    }
}

#[derive(Debug, Clone)]
struct Workspace {
    mu: Vec<f64>,
    drho: [Vec<f64>; 3],
    du: [Vec<f64>; 3],
    rho: Vec<f64>,
    u: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn new(nodes: usize) -> Self {
        let z = || vec![0.0; nodes];
        let interior = nodes - 2;
        let zi = || vec![0.0; interior];
        Self {
            mu: z(),
            drho: [z(), z(), z()],
            du: [z(), z(), z()],
            rho: z(),
            u: z(),
            lower: zi(),
            diag: zi(),
            upper: zi(),
            rhs: zi(),
            scratch: zi(),
        }
    }
}

/// A running simulation: owns its state and scratch buffers.
#[derive(Debug, Clone)]
pub struct Simulation {
    disc: Discretization,
    cfg: SolverConfig,
    state: SimState,
    initial_mass: f64,
    boundary_inflow: f64,
    steps: usize,
    failed_stage: Option<SimState>,
    ws: Workspace,
}

impl Simulation {
    pub fn new(
        model: &GasModel,
        cfg: &SolverConfig,
        grid: &Grid1D,
        state: SimState,
    ) -> Result<Self> {
        let disc = Discretization::new(model, cfg, grid)?;
        state.check_grid(grid)?;
        check_positivity(grid, &state.rho, state.t)?;
        let initial_mass = stencil::trapezoid(&state.rho, grid.dx());
        Ok(Self {
            disc,
            cfg: *cfg,
            state,
            initial_mass,
            boundary_inflow: 0.0,
            steps: 0,
            failed_stage: None,
            ws: Workspace::new(grid.nodes()),
        })
    }

    pub fn from_initial(model: &GasModel, cfg: &SolverConfig, data: &InitialData) -> Result<Self> {
        Self::new(model, cfg, &data.grid, SimState::from_initial(data))
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn grid(&self) -> &Grid1D {
        &self.disc.grid
    }

    pub fn viscosity(&self) -> &Viscosity {
        &self.disc.visc
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The stage state on which positivity was lost, if any.
    pub fn failed_stage(&self) -> Option<&SimState> {
        self.failed_stage.as_ref()
    }

    pub fn mass(&self) -> f64 {
        stencil::trapezoid(&self.state.rho, self.disc.grid.dx())
    }

    /// Mass change not accounted for by the time-integrated boundary flux.
    pub fn mass_defect(&self) -> f64 {
        self.mass() - self.initial_mass - self.boundary_inflow
    }

    pub fn stable_dt(&self) -> f64 {
        self.disc.stable_dt(&self.cfg, &self.state)
    }

    /// Advances by exactly `dt`. On error the state is left untouched.
    pub fn step_by(&mut self, dt: f64) -> Result<()> {
        let result = self.try_step(dt);
        if let Err(Error::PositivityLoss { .. }) = &result {
            if self.failed_stage.is_none() {
                self.failed_stage = Some(SimState {
                    t: self.state.t,
                    rho: self.ws.rho.clone(),
                    u: self.ws.u.clone(),
                });
            }
        }
        result
    }

    fn try_step(&mut self, dt: f64) -> Result<()> {
        let disc = self.disc;
        let viscous_explicit = self.cfg.viscous_treatment == ViscousTreatment::Explicit;
        let ws = &mut self.ws;
        let (rho0, u0, t0) = (&self.state.rho, &self.state.u, self.state.t);
        let n = rho0.len();

        ws.rho.copy_from_slice(rho0);
        ws.u.copy_from_slice(u0);
        let [d1, d2, d3] = &mut ws.drho;
        let [e1, e2, e3] = &mut ws.du;

        let q1 = disc.rhs(rho0, u0, t0, viscous_explicit, &mut ws.mu, d1, e1)?;
        for i in 0..n {
            ws.rho[i] = rho0[i] + dt * d1[i];
            ws.u[i] = u0[i] + dt * e1[i];
        }
        let q2 = disc.rhs(
            &ws.rho,
            &ws.u,
            t0 + dt,
            viscous_explicit,
            &mut ws.mu,
            d2,
            e2,
        )?;
        let quarter = 0.25 * dt;
        for i in 0..n {
            ws.rho[i] = rho0[i] + quarter * (d1[i] + d2[i]);
            ws.u[i] = u0[i] + quarter * (e1[i] + e2[i]);
        }
        let q3 = disc.rhs(
            &ws.rho,
            &ws.u,
            t0 + 0.5 * dt,
            viscous_explicit,
            &mut ws.mu,
            d3,
            e3,
        )?;
        let sixth = dt / 6.0;
        for i in 0..n {
            ws.rho[i] = rho0[i] + sixth * (d1[i] + d2[i] + 4.0 * d3[i]);
            ws.u[i] = u0[i] + sixth * (e1[i] + e2[i] + 4.0 * e3[i]);
        }
        check_positivity(&disc.grid, &ws.rho, t0 + dt)?;

        if !viscous_explicit {
            implicit_viscous_update(&disc, dt, ws);
        }

        self.state.rho.copy_from_slice(&ws.rho);
        self.state.u.copy_from_slice(&ws.u);
        self.state.t = t0 + dt;
        self.boundary_inflow += sixth * (q1 + q2 + 4.0 * q3);
        self.steps += 1;
        Ok(())
    }

    /// Steps with the stable dt, clipping the last step to land exactly on
    /// `target`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.state.t < target {
            let dt = self.stable_dt();
            let remaining = target - self.state.t;
            if dt >= remaining {
                self.step_by(remaining)?;
                self.state.t = target;
            } else {
                self.step_by(dt)?;
            }
        }
        Ok(())
    }
}

/// Backward Euler for `u_t = ∂x(μ_ε ∂x u)/ρ` written for the increment
/// `δ = u^{n+1} − u*`, so that states without viscous stress are left
/// bit-identical.
fn implicit_viscous_update(disc: &Discretization, dt: f64, ws: &mut Workspace) {
    let n = ws.rho.len();
    let dx = disc.grid.dx();
    let scale = dt / (dx * dx);
    for (m, r) in ws.mu.iter_mut().zip(&ws.rho) {
        *m = disc.visc.value(*r);
    }
    for i in 1..n - 1 {
        let k = i - 1;
        let coef = scale / ws.rho[i];
        let right = 0.5 * (ws.mu[i] + ws.mu[i + 1]);
        let left = 0.5 * (ws.mu[i - 1] + ws.mu[i]);
        ws.lower[k] = -coef * left;
        ws.upper[k] = -coef * right;
        ws.diag[k] = 1.0 + coef * (left + right);
        ws.rhs[k] = coef * (right * (ws.u[i + 1] - ws.u[i]) - left * (ws.u[i] - ws.u[i - 1]));
    }
    solve_tridiagonal(&ws.lower, &ws.diag, &ws.upper, &mut ws.rhs, &mut ws.scratch);
    for i in 1..n - 1 {
        ws.u[i] += ws.rhs[i - 1];
    }
}

/// Full semi-discrete right-hand side (convection, pressure and viscosity).
pub fn semidiscrete_rhs(
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
    state: &SimState,
) -> Result<Tendencies> {
    let disc = Discretization::new(model, cfg, grid)?;
    state.check_grid(grid)?;
    let n = grid.nodes();
    let mut mu = vec![0.0; n];
    let mut drho_dt = vec![0.0; n];
    let mut du_dt = vec![0.0; n];
    disc.rhs(
        &state.rho,
        &state.u,
        state.t,
        true,
        &mut mu,
        &mut drho_dt,
        &mut du_dt,
    )?;
    Ok(Tendencies { drho_dt, du_dt })
}

pub fn stable_dt(
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
    state: &SimState,
) -> Result<f64> {
    let disc = Discretization::new(model, cfg, grid)?;
    state.check_grid(grid)?;
    Ok(disc.stable_dt(cfg, state))
}

/// One step of size [`stable_dt`].
pub fn step(
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
    state: &SimState,
) -> Result<SimState> {
    let mut sim = Simulation::new(model, cfg, grid, state.clone())?;
    let dt = sim.stable_dt();
    sim.step_by(dt)?;
    Ok(sim.state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(grid: &Grid1D, rho: f64, u: f64) -> SimState {
        SimState {
            t: 0.0,
            rho: vec![rho; grid.nodes()],
            u: vec![u; grid.nodes()],
        }
    }

    #[test]
    fn constant_state_has_zero_tendency() {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0, 0.1);
        let t = semidiscrete_rhs(&model, &cfg, &grid, &uniform(&grid, 1.7, 0.0)).unwrap();
        assert!(t.drho_dt.iter().chain(&t.du_dt).all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_velocity_has_zero_interior_tendency() {
        let model = GasModel::new(1.4, 0.7).unwrap();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let cfg = SolverConfig::new(0.3, 1.0, 0.1);
        let t = semidiscrete_rhs(&model, &cfg, &grid, &uniform(&grid, 0.8, -0.35)).unwrap();
        assert!(t.drho_dt.iter().chain(&t.du_dt).all(|v| *v == 0.0));
    }

    #[test]
    fn stable_dt_rest_state() {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let dx = grid.dx();
        let cfg = SolverConfig::new(0.1, 1.0, 0.1);
        let state = uniform(&grid, 1.0, 0.0);
        let dt = stable_dt(&model, &cfg, &grid, &state).unwrap();
        assert!((dt - 0.5 * dx / 2f64.sqrt()).abs() < 1e-15);
        let cfg_ex = cfg.with_treatment(ViscousTreatment::Explicit);
        let dt_ex = stable_dt(&model, &cfg_ex, &grid, &state).unwrap();
        let expect = (0.5 * dx / 2f64.sqrt()).min(0.4 * dx * dx);
        assert!((dt_ex - expect).abs() < 1e-15);

        let fine = grid.refined();
        let fine_state = uniform(&fine, 1.0, 0.0);
        let dt_fine = stable_dt(&model, &cfg, &fine, &fine_state).unwrap();
        assert!((dt_fine - 0.5 * dt).abs() < 1e-16);
    }

    #[test]
    fn diffusion_bound_on_eps_branch() {
        // μ_ε = ε ρ^{α*} when ρ is small: dt_diff = D dx² ρ^{1−α*}/ε.
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let eps = 0.5;
        let rho = 1e-3;
        let mut cfg = SolverConfig::new(eps, 1.0, 0.1).with_treatment(ViscousTreatment::Explicit);
        cfg.cfl_number = 1.0;
        let state = uniform(&grid, rho, 0.0);
        let dt = stable_dt(&model, &cfg, &grid, &state).unwrap();
        let dx = grid.dx();
        let expect = 0.4 * dx * dx * rho.powf(0.75) / eps;
        assert!((dt - expect).abs() <= 1e-14 * expect);
    }

    #[test]
    fn positivity_loss_is_reported() {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0, 0.1);
        let mut state = uniform(&grid, 1.0, 0.0);
        state.rho[10] = 0.0;
        match semidiscrete_rhs(&model, &cfg, &grid, &state) {
            Err(Error::PositivityLoss { node, .. }) => assert_eq!(node, 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        for treatment in [ViscousTreatment::Explicit, ViscousTreatment::Implicit] {
            let cfg = SolverConfig::new(0.1, 1.0, 0.1).with_treatment(treatment);
            let state = uniform(&grid, 1.3, 0.1);
            let mut sim = Simulation::new(&model, &cfg, &grid, state.clone()).unwrap();
            for dt in [1e-4, 0.01, 0.5] {
                sim.step_by(dt).unwrap();
            }
            assert_eq!(sim.state().rho, state.rho);
            assert_eq!(sim.state().u, state.u);
        }
    }

    #[test]
    fn rejects_mismatched_state() {
        let model = GasModel::shallow_water();
        let grid = Grid1D::new(4.0, 64).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0, 0.1);
        let state = uniform(&Grid1D::new(4.0, 32).unwrap(), 1.0, 0.0);
        assert!(matches!(
            semidiscrete_rhs(&model, &cfg, &grid, &state),
            Err(Error::Structural(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(1.5, 1.0, 0.1).validate().is_err());
        assert!(SolverConfig::new(0.5, 1.0, 2.0).validate().is_err());
        assert!(SolverConfig::new(0.5, 0.0, 0.0).validate().is_err());
        let mut c = SolverConfig::new(0.5, 1.0, 0.1);
        c.cfl_number = 1.5;
        assert!(c.validate().is_err());
        assert!(SolverConfig::new(0.5, 1.0, 0.1).validate().is_ok());
    }
}

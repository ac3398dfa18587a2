use serde::{Deserialize, Serialize};

use crate::diagnostics::w_equation_residual_with;
use crate::error::{Error, Result};
use crate::model::{FCoefficients, GasModel};
use crate::profiles::{make_initial_family, InitialFamily};
use crate::solver::stencil::trapezoid;
use crate::solver::{Grid1D, SimState, Simulation, SolverConfig};

/// Differences below this (relative to the field size) count as identical.
const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Order {
    /// Successive grids agree to rounding.
    Exact,
    Observed(f64),
}

impl Order {
    pub fn value(self) -> Option<f64> {
        match self {
            Order::Exact => None,
            Order::Observed(p) => Some(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub cells: Vec<usize>,
    pub end_time: f64,
    /// `‖ρ_N − ρ_2N‖` on the coarse nodes, one entry per consecutive pair.
    pub diff_rho: Vec<f64>,
    pub diff_u: Vec<f64>,
    /// Order from the two finest pairs.
    pub order_rho: Order,
    pub order_u: Order,
}

fn check_nested(half_length: f64, cells: &[usize]) -> Result<Vec<Grid1D>> {
    if cells.len() < 3 {
        return Err(Error::structural(format!(
            "a refinement study needs at least 3 grids, got {}",
            cells.len()
        )));
    }
    let grids = cells
        .iter()
        .map(|n| Grid1D::new(half_length, *n))
        .collect::<Result<Vec<_>>>()?;
    for pair in grids.windows(2) {
        if !pair[0].nests_in(&pair[1]) {
            return Err(Error::structural(format!(
                "grid with {} cells does not nest in {} cells (factor 2 required)",
                pair[0].cells(),
                pair[1].cells()
            )));
        }
    }
    Ok(grids)
}

/// Discrete L² distance between a coarse field and every other node of a
/// field on the twice-finer grid.
pub fn restricted_l2_difference(coarse: &Grid1D, a: &[f64], fine: &[f64]) -> f64 {
    let sq: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, v)| (v - fine[2 * i]).powi(2))
        .collect();
    trapezoid(&sq, coarse.dx()).sqrt()
}

fn order_of(diffs: &[f64], scale: f64) -> Order {
    let k = diffs.len();
    if diffs.iter().all(|d| *d <= EXACT_TOLERANCE * scale.max(1.0)) {
        return Order::Exact;
    }
    Order::Observed((diffs[k - 2] / diffs[k - 1]).log2())
}

/// Richardson self-convergence: runs the same data on factor-2 nested
/// grids to `cfg.end_time` and measures the order from the end states.
pub fn grid_refinement_study(
    model: &GasModel,
    cfg: &SolverConfig,
    family: &InitialFamily,
    half_length: f64,
    cells: &[usize],
) -> Result<RefinementReport> {
    let grids = check_nested(half_length, cells)?;
    let finals = grids
        .iter()
        .map(|g| {
            let data = make_initial_family(family, model, g)?;
            let mut sim = Simulation::from_initial(model, cfg, &data)?;
            sim.advance_to(cfg.end_time)?;
            Ok(sim.state().clone())
        })
        .collect::<Result<Vec<SimState>>>()?;
    let mut diff_rho = Vec::new();
    let mut diff_u = Vec::new();
    for k in 0..grids.len() - 1 {
        diff_rho.push(restricted_l2_difference(
            &grids[k],
            &finals[k].rho,
            &finals[k + 1].rho,
        ));
        diff_u.push(restricted_l2_difference(
            &grids[k],
            &finals[k].u,
            &finals[k + 1].u,
        ));
    }
    let scale = |f: &[f64]| f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let last = finals.last().expect("at least three levels");
    Ok(RefinementReport {
        cells: cells.to_vec(),
        end_time: cfg.end_time,
        order_rho: order_of(&diff_rho, scale(&last.rho)),
        order_u: order_of(&diff_u, scale(&last.u)),
        diff_rho,
        diff_u,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStudy {
    pub cells: Vec<usize>,
    pub center_time: f64,
    pub residuals: Vec<f64>,
    /// `residual(N) / residual(2N)` for each consecutive pair.
    pub reduction_factors: Vec<f64>,
}

/// Residual of the active-potential equation between two states of one
/// simulation at `t* ∓ h/2` with `h = time_gap_per_dx · dx`, on each grid.
pub fn w_residual_study(
    model: &GasModel,
    cfg: &SolverConfig,
    family: &InitialFamily,
    half_length: f64,
    cells: &[usize],
    center_time: f64,
    time_gap_per_dx: f64,
) -> Result<ResidualStudy> {
    w_residual_study_with(
        model,
        cfg,
        family,
        half_length,
        cells,
        center_time,
        time_gap_per_dx,
        None,
    )
}

/// [`w_residual_study`] with optional replacement reaction coefficients.
#[allow(clippy::too_many_arguments)]
pub fn w_residual_study_with(
    model: &GasModel,
    cfg: &SolverConfig,
    family: &InitialFamily,
    half_length: f64,
    cells: &[usize],
    center_time: f64,
    time_gap_per_dx: f64,
    coefficients: Option<&dyn Fn(&crate::model::Viscosity, f64) -> FCoefficients>,
) -> Result<ResidualStudy> {
    let grids = check_nested(half_length, cells)?;
    let mut residuals = Vec::new();
    for g in &grids {
        let h = time_gap_per_dx * g.dx();
        if !(center_time - 0.5 * h > 0.0) {
            return Err(Error::domain("center time must exceed half the time gap"));
        }
        let data = make_initial_family(family, model, g)?;
        let mut sim = Simulation::from_initial(model, cfg, &data)?;
        sim.advance_to(center_time - 0.5 * h)?;
        let prev = sim.state().clone();
        sim.advance_to(center_time + 0.5 * h)?;
        let visc = *sim.viscosity();
        let r = match coefficients {
            Some(f) => w_equation_residual_with(&visc, g, &prev, sim.state(), |rho| f(&visc, rho))?,
            None => w_equation_residual_with(&visc, g, &prev, sim.state(), |rho| {
                visc.f_coefficients(rho)
            })?,
        };
        residuals.push(r);
    }
    let reduction_factors = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ResidualStudy {
        cells: cells.to_vec(),
        center_time,
        residuals,
        reduction_factors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDoubling {
    pub half_length: f64,
    pub cells: usize,
    /// `(column, value on [−L, L], value on [−2L, 2L], relative change)`.
    pub changes: Vec<(String, f64, f64, f64)>,
    pub max_relative_change: f64,
}

/// Runs the same data on `[−L, L]` and `[−2L, 2L]` at equal spacing and
/// compares the end-time diagnostics.
pub fn domain_doubling_check(
    model: &GasModel,
    cfg: &SolverConfig,
    family: &InitialFamily,
    half_length: f64,
    cells: usize,
) -> Result<DomainDoubling> {
    let mut ends = Vec::new();
    for (l, n) in [(half_length, cells), (2.0 * half_length, 2 * cells)] {
        let grid = Grid1D::new(l, n)?;
        let data = make_initial_family(family, model, &grid)?;
        let mut cfg = *cfg;
        cfg.snapshot_interval = cfg.end_time;
        let report = crate::solver::run(model, &cfg, &data, &mut [])?;
        if !report.completed() {
            return Err(Error::domain(format!(
                "domain-doubling run on L = {l} did not complete: {:?}",
                report.termination
            )));
        }
        ends.push(report.records.last().cloned().expect("end snapshot"));
    }
    let tracked = [
        ("min_rho", ends[0].min_rho, ends[1].min_rho),
        ("max_rho", ends[0].max_rho, ends[1].max_rho),
        ("sup_w", ends[0].sup_w, ends[1].sup_w),
        ("bd_energy_1", ends[0].bd_energy_1, ends[1].bd_energy_1),
        ("bd_energy_2", ends[0].bd_energy_2, ends[1].bd_energy_2),
    ];
    let changes: Vec<(String, f64, f64, f64)> = tracked
        .iter()
        .map(|(name, a, b)| {
            let rel = if a == b {
                0.0
            } else {
                (a - b).abs() / a.abs().max(b.abs())
            };
            (name.to_string(), *a, *b, rel)
        })
        .collect();
    let max_relative_change = changes.iter().map(|c| c.3).fold(0.0, f64::max);
    Ok(DomainDoubling {
        half_length,
        cells,
        changes,
        max_relative_change,
    })
}

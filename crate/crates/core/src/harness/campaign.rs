use std::fs;
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::diagnostics::{
    active_potential, density_floor_ode_check, write_records_csv, DensityFloorReport,
};
use crate::error::{Error, Result};
use crate::model::{GasModel, TheoryBounds};
use crate::profiles::{validate_initial, InitialData, ValidationReport};
use crate::solver::{run, Grid1D, RunReport, SimState, Snapshot, SnapshotObserver, Termination};

pub const SUMMARY_FILE: &str = "summary.json";

/// Scalars extracted from one run; a campaign summary is a list of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub eps: f64,
    pub cells: usize,
    pub half_length: f64,
    /// Directory of the per-run outputs, relative to the campaign root.
    pub dir: String,
    pub termination: Termination,
    pub steps: usize,
    pub snapshots: usize,
    pub min_rho: f64,
    pub max_rho: f64,
    pub max_sup_w: f64,
    pub max_bd_energy_1: f64,
    pub max_bd_energy_2: f64,
    pub bd_energies_finite: bool,
    pub max_h4_rho: f64,
    pub max_h4_u: f64,
    pub h4_finite: bool,
    /// Total over snapshots of nodes where `μ_ε(ρ) ≠ μ(ρ)`.
    pub regularized_nodes: usize,
    pub max_mu_rel_gap: f64,
    pub max_abs_mass_defect: f64,
    pub density_floor: Option<DensityFloorReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub config: ExperimentConfig,
    pub bounds: TheoryBounds,
    pub eps: Vec<f64>,
    pub runs: Vec<RunSummary>,
}

impl CampaignSummary {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(SUMMARY_FILE);
        let text = fs::read_to_string(&path).map_err(|e| {
            Error::config("campaign", format!("cannot read {}: {e}", path.display()))
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn runs_for(&self, eps: f64) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.eps == eps)
    }
}

/// Reduces a report to the scalars the verdicts need. Pure, so re-running
/// it over stored reports reproduces the summary.
pub fn summarize_run(
    model: &GasModel,
    bounds: &TheoryBounds,
    report: &RunReport,
    dir: String,
) -> Result<RunSummary> {
    let recs = &report.records;
    let fold = |f: fn(&crate::diagnostics::DiagnosticsRecord) -> f64,
                init: f64,
                pick: fn(f64, f64) -> f64| { recs.iter().map(f).fold(init, pick) };
    let mut min_rho = fold(|r| r.min_rho, f64::INFINITY, f64::min);
    if let Termination::PositivityLoss { rho, .. } = report.termination {
        min_rho = min_rho.min(rho);
    }
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let density_floor = if recs.len() >= 2 {
        let rho_m: Vec<f64> = recs.iter().map(|r| r.min_rho).collect();
        let w_m: Vec<f64> = recs.iter().map(|r| r.sup_w).collect();
        Some(density_floor_ode_check(
            model, bounds, &rho_m, &w_m, &times,
        )?)
    } else {
        None
    };
    Ok(RunSummary {
        eps: report.eps,
        cells: report.cells,
        half_length: report.half_length,
        dir,
        termination: report.termination.clone(),
        steps: report.steps,
        snapshots: recs.len(),
        min_rho,
        max_rho: fold(|r| r.max_rho, f64::NEG_INFINITY, f64::max),
        max_sup_w: fold(|r| r.sup_w, f64::NEG_INFINITY, f64::max),
        max_bd_energy_1: fold(|r| r.bd_energy_1, f64::NEG_INFINITY, f64::max),
        max_bd_energy_2: fold(|r| r.bd_energy_2, f64::NEG_INFINITY, f64::max),
        bd_energies_finite: recs
            .iter()
            .all(|r| r.bd_energy_1.is_finite() && r.bd_energy_2.is_finite()),
        max_h4_rho: recs
            .iter()
            .map(|r| r.h4_rho())
            .fold(f64::NEG_INFINITY, f64::max),
        max_h4_u: recs
            .iter()
            .map(|r| r.h4_u())
            .fold(f64::NEG_INFINITY, f64::max),
        h4_finite: recs
            .iter()
            .all(|r| r.h4_rho().is_finite() && r.h4_u().is_finite()),
        regularized_nodes: recs.iter().map(|r| r.regularized_nodes).sum(),
        max_mu_rel_gap: fold(|r| r.mu_max_rel_gap, 0.0, f64::max),
        max_abs_mass_defect: fold(|r| r.mass_defect.abs(), 0.0, f64::max),
        density_floor,
    })
}

#[derive(Debug, Clone, Default)]
pub struct CampaignOptions {
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Allow writing into a directory that already holds a summary.
    pub force: bool,
}

impl CampaignOptions {
    /// Reads `DEGVIS_THREADS` (0 or unset means automatic).
    pub fn from_env() -> Self {
        let threads = std::env::var("DEGVIS_THREADS")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(0);
        Self {
            threads,
            force: false,
        }
    }
}

/// Writes the node values `x, rho, u, w` of one state.
pub fn write_state_csv<W: Write>(
    writer: W,
    grid: &Grid1D,
    state: &SimState,
    w: &[f64],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["x", "rho", "u", "w"])?;
    for i in 0..grid.nodes() {
        out.serialize((grid.x(i), state.rho[i], state.u[i], w[i]))?;
    }
    out.flush()?;
    Ok(())
}

struct SnapshotWriter {
    dir: PathBuf,
    error: Option<Error>,
}

impl SnapshotObserver for SnapshotWriter {
    fn observe(&mut self, s: &Snapshot<'_>) -> ControlFlow<()> {
        let path = self.dir.join(format!("snapshot_t{:.6}.csv", s.state.t));
        let w = active_potential(s.viscosity, s.grid, s.state);
        let result = fs::File::create(&path)
            .map_err(Error::from)
            .and_then(|f| write_state_csv(BufWriter::new(f), s.grid, s.state, &w));
        match result {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                self.error = Some(e);
                ControlFlow::Break(())
            }
        }
    }
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    eps: f64,
    cells: usize,
    half_length: f64,
    solver: crate::solver::SolverConfig,
    termination: &'a Termination,
    steps: usize,
    wall_clock_seconds: f64,
    validation: &'a ValidationReport,
}

/// Runs one simulation and persists `diagnostics.csv`, `run.json`, the
/// failing state on positivity loss and optional snapshot dumps into `dir`.
pub fn execute_run(
    cfg: &ExperimentConfig,
    model: &GasModel,
    data: &InitialData,
    validation: &ValidationReport,
    eps: f64,
    dir: &Path,
) -> Result<RunReport> {
    fs::create_dir_all(dir)?;
    let solver = cfg.solver_config(eps);
    let mut writer = SnapshotWriter {
        dir: dir.to_path_buf(),
        error: None,
    };
    let report = if cfg.write_snapshots {
        let r = run(model, &solver, data, &mut [&mut writer])?;
        if let Some(e) = writer.error.take() {
            return Err(e);
        }
        r
    } else {
        run(model, &solver, data, &mut [])?
    };
    write_records_csv(
        &report.records,
        BufWriter::new(fs::File::create(dir.join("diagnostics.csv"))?),
    )?;
    if let Some(state) = &report.failed_state {
        let visc = crate::model::Viscosity::new(*model, eps)?;
        let w = active_potential(&visc, &data.grid, state);
        write_state_csv(
            BufWriter::new(fs::File::create(dir.join("failed_state.csv"))?),
            &data.grid,
            state,
            &w,
        )?;
    }
    let meta = RunMetadata {
        eps,
        cells: report.cells,
        half_length: report.half_length,
        solver,
        termination: &report.termination,
        steps: report.steps,
        wall_clock_seconds: report.wall_clock_seconds,
        validation,
    };
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&meta)?)?;
    Ok(report)
}

/// Runs every `(ε, N)` pair of the config, concurrently, writing one
/// directory per run and `summary.json`. Runs appear in the summary in
/// config order.
pub fn run_campaign(
    cfg: &ExperimentConfig,
    out: &Path,
    opts: &CampaignOptions,
) -> Result<CampaignSummary> {
    let eps = cfg.validate()?;
    let model = cfg.gas_model()?;
    let bounds = cfg.theory_bounds(&model)?;

    if out.join(SUMMARY_FILE).exists() && !opts.force {
        return Err(Error::config(
            "out",
            format!(
                "{} already holds a campaign; pass --force to overwrite",
                out.display()
            ),
        ));
    }
    fs::create_dir_all(out)?;

    let mut inputs = Vec::new();
    for &cells in &cfg.grid.cells {
        let data = cfg.initial_data(&model, cells)?;
        let validation = validate_initial(&model, &data)?;
        if !validation.all_passed() && !cfg.skip_hypothesis_check {
            let failed: Vec<&str> = validation
                .checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.as_str())
                .collect();
            return Err(Error::config(
                "initial",
                format!("initial data on N = {cells} fails {}", failed.join(", ")),
            ));
        }
        inputs.push((cells, data, validation));
    }

    let jobs: Vec<(usize, usize, f64)> = eps
        .iter()
        .enumerate()
        .flat_map(|(ie, &e)| (0..inputs.len()).map(move |ig| (ie, ig, e)))
        .collect();

    let work = |&(ie, ig, e): &(usize, usize, f64)| -> Result<RunSummary> {
        let (cells, data, validation) = &inputs[ig];
        let rel = format!("run_eps{ie:02}_n{cells}");
        let report = execute_run(cfg, &model, data, validation, e, &out.join(&rel))?;
        summarize_run(&model, &bounds, &report, rel)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::config("DEGVIS_THREADS", e.to_string()))?;
    let results: Vec<Result<RunSummary>> = pool.install(|| jobs.par_iter().map(work).collect());
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let summary = CampaignSummary {
        config: cfg.clone(),
        bounds,
        eps,
        runs,
    };
    fs::write(
        out.join(SUMMARY_FILE),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

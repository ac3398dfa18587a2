use std::ops::ControlFlow;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Grid1D, SimState, Simulation, SolverConfig};
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::model::{GasModel, Viscosity};
use crate::profiles::InitialData;

/// What an observer sees at each snapshot time.
pub struct Snapshot<'a> {
    pub grid: &'a Grid1D,
    pub state: &'a SimState,
    pub record: &'a DiagnosticsRecord,
    pub viscosity: &'a Viscosity,
}

/// Called at every snapshot; returning `Break` stops the run.
pub trait SnapshotObserver {
    fn observe(&mut self, snapshot: &Snapshot<'_>) -> ControlFlow<()>;
}

impl<F> SnapshotObserver for F
where
    F: FnMut(&Snapshot<'_>) -> ControlFlow<()>,
{
    fn observe(&mut self, snapshot: &Snapshot<'_>) -> ControlFlow<()> {
        self(snapshot)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    PositivityLoss {
        node: usize,
        x: f64,
        t: f64,
        rho: f64,
    },
    UserAbort {
        t: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub eps: f64,
    pub cells: usize,
    pub half_length: f64,
    pub records: Vec<DiagnosticsRecord>,
    pub termination: Termination,
    pub steps: usize,
    pub wall_clock_seconds: f64,
    pub final_state: SimState,
    /// Stage state on which positivity was lost.
    pub failed_state: Option<SimState>,
}

impl RunReport {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }
}

/// Advances `data` to `cfg.end_time`, evaluating diagnostics at `t = 0` and
/// at every multiple of `cfg.snapshot_interval` (plus `end_time` itself).
/// Step failures end the run but are reported, not raised.
pub fn run(
    model: &GasModel,
    cfg: &SolverConfig,
    data: &InitialData,
    observers: &mut [&mut dyn SnapshotObserver],
) -> Result<RunReport> {
    let started = Instant::now();
    let mut sim = Simulation::from_initial(model, cfg, data)?;
    let grid = data.grid;
    let (rho_bar, u_bar) = data.background.sample(&grid);

    let mut records = Vec::new();
    let mut prev: Option<SimState> = None;
    let mut termination = Termination::Completed;
    let mut k = 0usize;
    loop {
        let record = {
            let state = sim.state();
            let mut r = DiagnosticsRecord::compute(
                sim.viscosity(),
                &grid,
                state,
                &rho_bar,
                &u_bar,
                prev.as_ref(),
            )?;
            r.mass_defect = sim.mass_defect();
            r
        };
        let snapshot = Snapshot {
            grid: &grid,
            state: sim.state(),
            record: &record,
            viscosity: sim.viscosity(),
        };
        let mut stop = false;
        for obs in observers.iter_mut() {
            if obs.observe(&snapshot).is_break() {
                stop = true;
            }
        }
        records.push(record);
        prev = Some(sim.state().clone());
        if stop {
            termination = Termination::UserAbort { t: sim.state().t };
            break;
        }
        if sim.state().t >= cfg.end_time {
            break;
        }
        k += 1;
        let target = (k as f64 * cfg.snapshot_interval).min(cfg.end_time);
        match sim.advance_to(target) {
            Ok(()) => {}
            Err(Error::PositivityLoss { node, x, t, rho }) => {
                termination = Termination::PositivityLoss { node, x, t, rho };
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(RunReport {
        eps: cfg.eps,
        cells: grid.cells(),
        half_length: grid.half_length(),
        records,
        termination,
        steps: sim.steps(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        final_state: sim.state().clone(),
        failed_state: sim.failed_stage().cloned(),
    })
}

//! Experiment campaigns: ε-sweeps over grid families, comparison of the
//! observations with the closed-form bounds, scaling fits and
//! discretization checks.

mod campaign;
mod config;
mod refine;
mod scaling;
mod verdict;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use campaign::{
    execute_run, run_campaign, summarize_run, write_state_csv, CampaignOptions, CampaignSummary,
    RunSummary, SUMMARY_FILE,
};
pub use config::{EpsSpec, ExperimentConfig, GridFamily, ModelSpec, SolverSpec};
pub use refine::{
    domain_doubling_check, grid_refinement_study, restricted_l2_difference, w_residual_study,
    w_residual_study_with, DomainDoubling, Order, RefinementReport, ResidualStudy,
};
pub use scaling::{fit_eps_scaling, ScalingFit};
pub use verdict::{
    verify_bounds, Status, Verdict, VerdictSheet, UNIFORMITY_RATIO, WARNING_FRACTION,
};

use crate::error::{Error, Result};

pub const VERDICT_JSON: &str = "verdicts.json";
pub const VERDICT_TABLE: &str = "verdicts.txt";
pub const SCALING_JSON: &str = "scaling.json";

/// Verdicts plus the ε-scaling fit of one campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub verdicts: VerdictSheet,
    /// Fit over the finest grid; `Err` text when there is too little data.
    pub scaling: std::result::Result<ScalingFit, String>,
}

impl Assessment {
    pub fn passed(&self) -> bool {
        self.verdicts.all_passed()
    }
}

/// Verdicts and scaling fit from a stored summary.
pub fn assess(summary: &CampaignSummary) -> Result<Assessment> {
    let verdicts = verify_bounds(&summary.bounds, &summary.eps, &summary.runs)?;
    let finest = summary.runs.iter().map(|r| r.cells).max();
    let points: Vec<(f64, f64)> = summary
        .runs
        .iter()
        .filter(|r| {
            Some(r.cells) == finest && r.termination == crate::solver::Termination::Completed
        })
        .map(|r| (r.eps, r.max_sup_w))
        .collect();
    let scaling = match fit_eps_scaling(&points, summary.bounds.theta) {
        Ok(fit) => Ok(fit),
        Err(Error::InsufficientData(msg)) => Err(msg),
        Err(e) => return Err(e),
    };
    Ok(Assessment { verdicts, scaling })
}

/// Writes the verdict sheet (JSON and text table) and the scaling fit.
pub fn write_assessment(dir: &Path, a: &Assessment) -> Result<()> {
    fs::write(
        dir.join(VERDICT_JSON),
        serde_json::to_string_pretty(&a.verdicts)?,
    )?;
    fs::write(dir.join(VERDICT_TABLE), a.verdicts.to_table())?;
    fs::write(
        dir.join(SCALING_JSON),
        serde_json::to_string_pretty(&a.scaling)?,
    )?;
    Ok(())
}

/// `run_campaign`, then verdicts and the scaling fit, all persisted in `out`.
pub fn sweep(
    cfg: &ExperimentConfig,
    out: &Path,
    opts: &CampaignOptions,
) -> Result<(CampaignSummary, Assessment)> {
    let summary = run_campaign(cfg, out, opts)?;
    let assessment = assess(&summary)?;
    write_assessment(out, &assessment)?;
    Ok((summary, assessment))
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::campaign::RunSummary;
use crate::error::{Error, Result};
use crate::model::TheoryBounds;
use crate::solver::Termination;

/// Largest allowed max/min ratio for quantities expected to be bounded
/// uniformly in ε.
pub const UNIFORMITY_RATIO: f64 = 10.0;

/// Margins below this fraction of the bound pass with a warning.
pub const WARNING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    PassWithWarning,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::PassWithWarning => "pass (warning)",
            Status::Fail => "FAIL",
            Status::NotApplicable => "n/a",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub bound: String,
    pub eps: Option<f64>,
    pub cells: Option<usize>,
    pub theoretical: f64,
    pub observed: f64,
    /// Positive when the observation respects the bound.
    pub margin: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSheet {
    pub verdicts: Vec<Verdict>,
}

impl VerdictSheet {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.status != Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.status == Status::Fail)
    }

    /// Plain-text table: bound, eps, N, theoretical, observed, margin, status.
    pub fn to_table(&self) -> String {
        let header = [
            "bound",
            "eps",
            "N",
            "theoretical",
            "observed",
            "margin",
            "status",
        ];
        let rows: Vec<[String; 7]> = self
            .verdicts
            .iter()
            .map(|v| {
                [
                    v.bound.clone(),
                    v.eps.map_or("-".into(), |e| format!("{e:.6e}")),
                    v.cells.map_or("-".into(), |n| n.to_string()),
                    format!("{:.6e}", v.theoretical),
                    format!("{:.6e}", v.observed),
                    format!("{:.6e}", v.margin),
                    v.status.label().to_string(),
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for row in &rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&mut out, &header.map(String::from));
        line(&mut out, &widths.map(|w| "-".repeat(w)));
        for row in &rows {
            line(&mut out, row);
        }
        out
    }
}

fn upper_bound_status(theoretical: f64, observed: f64) -> (f64, Status) {
    let margin = theoretical - observed;
    (margin, margin_status(margin, theoretical))
}

fn lower_bound_status(theoretical: f64, observed: f64) -> (f64, Status) {
    let margin = observed - theoretical;
    (margin, margin_status(margin, theoretical))
}

fn margin_status(margin: f64, scale: f64) -> Status {
    if !(margin >= 0.0) {
        Status::Fail
    } else if margin < WARNING_FRACTION * scale.abs() {
        Status::PassWithWarning
    } else {
        Status::Pass
    }
}

/// Compares every completed run with the closed-form bounds. Each bound is
/// only judged on runs that satisfy its ε hypothesis; the rest are listed
/// as not applicable.
///
/// Every ε of `eps` at or below `δ_1` needs a run on every grid size that
/// appears in `runs`, otherwise the campaign is incomplete.
pub fn verify_bounds(
    bounds: &TheoryBounds,
    eps: &[f64],
    runs: &[RunSummary],
) -> Result<VerdictSheet> {
    let mut cells: Vec<usize> = runs.iter().map(|r| r.cells).collect();
    cells.sort_unstable();
    cells.dedup();
    let mut missing = Vec::new();
    for &e in eps.iter().filter(|e| **e <= bounds.delta_1) {
        let have = |n: usize| {
            runs.iter().any(|r| {
                r.eps == e
                    && r.cells == n
                    && !matches!(r.termination, Termination::UserAbort { .. })
            })
        };
        if cells.is_empty() || cells.iter().any(|n| !have(*n)) {
            missing.push(e);
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteCampaign { missing });
    }

    let mut verdicts = Vec::new();
    let na = |bound: &str, r: &RunSummary, theoretical: f64, observed: f64| Verdict {
        bound: bound.into(),
        eps: Some(r.eps),
        cells: Some(r.cells),
        theoretical,
        observed,
        margin: f64::NAN,
        status: Status::NotApplicable,
    };

    for r in runs {
        const A: &str = "(a) sup w <= C_gamma eps^theta";
        let theo = bounds.active_potential_bound(r.eps);
        verdicts.push(if r.eps <= bounds.eps_gamma {
            let (margin, status) = upper_bound_status(theo, r.max_sup_w);
            Verdict {
                bound: A.into(),
                eps: Some(r.eps),
                cells: Some(r.cells),
                theoretical: theo,
                observed: r.max_sup_w,
                margin,
                status,
            }
        } else {
            na(A, r, theo, r.max_sup_w)
        });
    }
    for r in runs {
        const B: &str = "(b) min rho >= kappa(T)";
        verdicts.push(if r.eps <= bounds.delta_1 {
            let (margin, status) = lower_bound_status(bounds.kappa_t, r.min_rho);
            Verdict {
                bound: B.into(),
                eps: Some(r.eps),
                cells: Some(r.cells),
                theoretical: bounds.kappa_t,
                observed: r.min_rho,
                margin,
                status,
            }
        } else {
            na(B, r, bounds.kappa_t, r.min_rho)
        });
    }
    for r in runs {
        const C: &str = "(c) mu_eps == mu at every node";
        let observed = r.regularized_nodes as f64;
        verdicts.push(if r.eps < bounds.delta_t {
            let status = if r.regularized_nodes == 0 && r.termination == Termination::Completed {
                Status::Pass
            } else {
                Status::Fail
            };
            Verdict {
                bound: C.into(),
                eps: Some(r.eps),
                cells: Some(r.cells),
                theoretical: 0.0,
                observed,
                margin: 0.0 - observed,
                status,
            }
        } else {
            na(C, r, 0.0, observed)
        });
    }

    for &n in &cells {
        let sweep: Vec<&RunSummary> = runs
            .iter()
            .filter(|r| r.cells == n && r.eps <= bounds.delta_1)
            .collect();
        let pick: [(&str, fn(&RunSummary) -> (f64, bool)); 4] = [
            ("(d) E1 uniform in eps (max/min)", |r| {
                (r.max_bd_energy_1, r.bd_energies_finite)
            }),
            ("(d) E2 uniform in eps (max/min)", |r| {
                (r.max_bd_energy_2, r.bd_energies_finite)
            }),
            ("(f) H4 of rho uniform in eps (max/min)", |r| {
                (r.max_h4_rho, r.h4_finite)
            }),
            ("(f) H4 of u uniform in eps (max/min)", |r| {
                (r.max_h4_u, r.h4_finite)
            }),
        ];
        for (name, get) in pick {
            verdicts.push(uniformity(name, n, &sweep, get));
        }
    }

    for r in runs {
        const E: &str = "(e) density-floor inequality (worst margin)";
        verdicts.push(match &r.density_floor {
            Some(d) if r.eps <= bounds.delta_1 && d.premise_holds => {
                let status = if d.worst_margin >= 0.0 {
                    Status::Pass
                } else {
                    Status::Fail
                };
                Verdict {
                    bound: E.into(),
                    eps: Some(r.eps),
                    cells: Some(r.cells),
                    theoretical: 0.0,
                    observed: d.worst_margin,
                    margin: d.worst_margin,
                    status,
                }
            }
            Some(d) => na(E, r, 0.0, d.worst_margin),
            None => na(E, r, 0.0, f64::NAN),
        });
    }
    Ok(VerdictSheet { verdicts })
}

fn uniformity(
    name: &str,
    cells: usize,
    sweep: &[&RunSummary],
    get: fn(&RunSummary) -> (f64, bool),
) -> Verdict {
    let values: Vec<(f64, bool)> = sweep.iter().map(|r| get(r)).collect();
    let base = Verdict {
        bound: name.into(),
        eps: None,
        cells: Some(cells),
        theoretical: UNIFORMITY_RATIO,
        observed: f64::NAN,
        margin: f64::NAN,
        status: Status::NotApplicable,
    };
    if values.len() < 2 {
        return base;
    }
    let finite = values.iter().all(|(v, ok)| *ok && v.is_finite());
    let hi = values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let ratio = if hi == lo { 1.0 } else { hi / lo };
    let (margin, status) = upper_bound_status(UNIFORMITY_RATIO, ratio);
    Verdict {
        observed: ratio,
        margin,
        status: if finite && lo > 0.0 {
            status
        } else {
            Status::Fail
        },
        ..base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::DensityFloorReport;
    use crate::model::GasModel;

    fn bounds() -> TheoryBounds {
        GasModel::shallow_water().theory_bounds(1.0, 1.0).unwrap()
    }

    fn summary(eps: f64) -> RunSummary {
        RunSummary {
            eps,
            cells: 64,
            half_length: 8.0,
            dir: String::new(),
            termination: Termination::Completed,
            steps: 10,
            snapshots: 3,
            min_rho: 0.99,
            max_rho: 1.5,
            max_sup_w: -0.1,
            max_bd_energy_1: 0.5,
            max_bd_energy_2: 0.6,
            bd_energies_finite: true,
            max_h4_rho: 30.0,
            max_h4_u: 10.0,
            h4_finite: true,
            regularized_nodes: 0,
            max_mu_rel_gap: 0.0,
            max_abs_mass_defect: 0.0,
            density_floor: Some(DensityFloorReport {
                passed: true,
                worst_margin: 0.5,
                worst_time: 0.1,
                premise_holds: true,
            }),
        }
    }

    fn statuses<'a>(sheet: &'a VerdictSheet, prefix: &str) -> Vec<Status> {
        sheet
            .verdicts
            .iter()
            .filter(|v| v.bound.starts_with(prefix))
            .map(|v| v.status)
            .collect()
    }

    #[test]
    fn all_pass_for_benign_runs() {
        let b = bounds();
        let eps = [b.delta_1, b.delta_1 / 2.0, b.delta_1 / 4.0];
        let runs: Vec<_> = eps.iter().map(|e| summary(*e)).collect();
        let sheet = verify_bounds(&b, &eps, &runs).unwrap();
        assert!(sheet.all_passed(), "{}", sheet.to_table());
        // δ_T = δ_1 here, so the largest run is not strictly below it
        assert_eq!(statuses(&sheet, "(c)")[0], Status::NotApplicable);
    }

    #[test]
    fn eps_above_eps_gamma_is_not_applicable() {
        let b = bounds();
        let runs = vec![summary(0.9)];
        let sheet = verify_bounds(&b, &[0.9], &runs).unwrap();
        assert_eq!(statuses(&sheet, "(a)"), vec![Status::NotApplicable]);
        assert_eq!(statuses(&sheet, "(b)"), vec![Status::NotApplicable]);
    }

    #[test]
    fn density_below_floor_fails_with_negative_margin() {
        let b = bounds();
        let mut r = summary(b.delta_1 / 2.0);
        r.min_rho = 0.5 * b.kappa_t;
        let sheet = verify_bounds(&b, &[r.eps], &[r]).unwrap();
        let v = sheet
            .verdicts
            .iter()
            .find(|v| v.bound.starts_with("(b)"))
            .unwrap();
        assert_eq!(v.status, Status::Fail);
        assert!(v.margin < 0.0);
        assert!(!sheet.all_passed());
    }

    #[test]
    fn regularized_node_fails_exactness() {
        let b = bounds();
        let mut r = summary(b.delta_t / 2.0);
        r.regularized_nodes = 1;
        let sheet = verify_bounds(&b, &[r.eps], &[r]).unwrap();
        assert_eq!(statuses(&sheet, "(c)"), vec![Status::Fail]);
    }

    #[test]
    fn small_margin_warns() {
        let b = bounds();
        let mut r = summary(b.delta_1);
        r.min_rho = b.kappa_t * 1.001;
        let sheet = verify_bounds(&b, &[r.eps], &[r]).unwrap();
        assert_eq!(statuses(&sheet, "(b)"), vec![Status::PassWithWarning]);
        assert!(sheet.all_passed());
    }

    #[test]
    fn missing_runs_are_listed() {
        let b = bounds();
        let eps = [b.delta_1, b.delta_1 / 2.0];
        let err = verify_bounds(&b, &eps, &[summary(b.delta_1)]).unwrap_err();
        assert!(
            matches!(err, Error::IncompleteCampaign { missing } if missing == vec![b.delta_1 / 2.0])
        );
    }

    #[test]
    fn energy_spread_fails_uniformity() {
        let b = bounds();
        let eps = [b.delta_1, b.delta_1 / 2.0];
        let mut runs: Vec<_> = eps.iter().map(|e| summary(*e)).collect();
        runs[1].max_bd_energy_1 = 50.0 * runs[0].max_bd_energy_1;
        let sheet = verify_bounds(&b, &eps, &runs).unwrap();
        let d = sheet
            .verdicts
            .iter()
            .find(|v| v.bound.starts_with("(d) E1"))
            .unwrap();
        assert_eq!(d.status, Status::Fail);
        assert!((d.observed - 50.0).abs() < 1e-12);
    }

    #[test]
    fn table_has_the_documented_columns() {
        let b = bounds();
        let sheet = verify_bounds(&b, &[b.delta_1], &[summary(b.delta_1)]).unwrap();
        let table = sheet.to_table();
        let head: Vec<&str> = table.lines().next().unwrap().split_whitespace().collect();
        assert_eq!(
            head,
            [
                "bound",
                "eps",
                "N",
                "theoretical",
                "observed",
                "margin",
                "status"
            ]
        );
    }
}

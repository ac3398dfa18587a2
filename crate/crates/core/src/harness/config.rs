use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GasModel, TheoryBounds};
use crate::profiles::{make_initial_family, InitialData, InitialFamily};
use crate::solver::{ContinuityFlux, Grid1D, SolverConfig, ViscousTreatment};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub gamma: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFamily {
    pub half_length: f64,
    /// Cell counts, ascending.
    pub cells: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSpec {
    #[serde(default = "default_cfl")]
    pub cfl_number: f64,
    #[serde(default = "default_diffusion")]
    pub diffusion_number: f64,
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

/// An ε value, either literal or relative to the theoretical thresholds:
/// `"delta_1"`, `"delta_1/4"`, `"delta_t"`, `"eps_gamma/2"`, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    Symbolic(String),
}

impl EpsSpec {
    pub fn resolve(&self, bounds: &TheoryBounds) -> Result<f64> {
        match self {
            EpsSpec::Value(v) => Ok(*v),
            EpsSpec::Symbolic(s) => {
                let (name, div) = match s.split_once('/') {
                    Some((n, d)) => {
                        let d: f64 = d.trim().parse().map_err(|_| {
                            Error::config("eps", format!("cannot parse divisor in {s:?}"))
                        })?;
                        (n.trim(), d)
                    }
                    None => (s.trim(), 1.0),
                };
                if !(div > 0.0 && div.is_finite()) {
                    return Err(Error::config(
                        "eps",
                        format!("divisor in {s:?} must be positive"),
                    ));
                }
                let base =
                    match name {
                        "delta_1" => bounds.delta_1,
                        "delta_t" => bounds.delta_t,
                        "eps_gamma" => bounds.eps_gamma,
                        _ => return Err(Error::config(
                            "eps",
                            format!(
                                "unknown symbol {name:?}; expected delta_1, delta_t or eps_gamma"
                            ),
                        )),
                    };
                Ok(base / div)
            }
        }
    }
}

impl From<f64> for EpsSpec {
    fn from(v: f64) -> Self {
        EpsSpec::Value(v)
    }
}

/// A campaign: one model, one initial-data family, a grid family and an
/// ε-sweep, all integrated to the same end time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub initial: InitialFamily,
    pub grid: GridFamily,
    pub solver: SolverSpec,
    /// Descending, every value in (0, 1).
    pub eps: Vec<EpsSpec>,
    pub end_time: f64,
    /// Lower density bound handed to the theory constants; defaults to the
    /// minimum of the generated initial density.
    #[serde(default)]
    pub kappa0_lower: Option<f64>,
    /// Run even when the initial data fails a hypothesis check.
    #[serde(default)]
    pub skip_hypothesis_check: bool,
    #[serde(default)]
    pub write_snapshots: bool,
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(json_field(&e), e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn gas_model(&self) -> Result<GasModel> {
        GasModel::new(self.model.gamma, self.model.alpha)
            .map_err(|e| Error::config("model", e.to_string()))
    }

    pub fn grid_at(&self, cells: usize) -> Result<Grid1D> {
        Grid1D::new(self.grid.half_length, cells).map_err(|e| Error::config("grid", e.to_string()))
    }

    pub fn initial_data(&self, model: &GasModel, cells: usize) -> Result<InitialData> {
        let grid = self.grid_at(cells)?;
        make_initial_family(&self.initial, model, &grid)
    }

    pub fn solver_config(&self, eps: f64) -> SolverConfig {
        SolverConfig {
            eps,
            cfl_number: self.solver.cfl_number,
            diffusion_number: self.solver.diffusion_number,
            end_time: self.end_time,
            snapshot_interval: self.solver.snapshot_interval,
            viscous_treatment: self.solver.viscous_treatment,
            continuity_flux: self.solver.continuity_flux,
        }
    }

    /// Density floor of the data, taken on the coarsest grid unless given.
    pub fn kappa0(&self, model: &GasModel) -> Result<f64> {
        if let Some(k) = self.kappa0_lower {
            return Ok(k);
        }
        let cells = *self
            .grid
            .cells
            .first()
            .ok_or_else(|| Error::config("grid.cells", "list is empty"))?;
        Ok(self.initial_data(model, cells)?.kappa0_lower)
    }

    pub fn theory_bounds(&self, model: &GasModel) -> Result<TheoryBounds> {
        TheoryBounds::new(*model, self.end_time, self.kappa0(model)?)
            .map_err(|e| Error::config("end_time", e.to_string()))
    }

    pub fn resolved_eps(&self, bounds: &TheoryBounds) -> Result<Vec<f64>> {
        self.eps.iter().map(|e| e.resolve(bounds)).collect()
    }

    /// Checks every structural rule and returns the resolved ε list.
    pub fn validate(&self) -> Result<Vec<f64>> {
        let model = self.gas_model()?;
        if !(self.end_time > 0.0 && self.end_time.is_finite()) {
            return Err(Error::config("end_time", "must be positive and finite"));
        }
        if self.grid.cells.is_empty() {
            return Err(Error::config("grid.cells", "list is empty"));
        }
        if self.grid.cells.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("grid.cells", "must be strictly ascending"));
        }
        for n in &self.grid.cells {
            self.grid_at(*n)?;
        }
        if self.eps.is_empty() {
            return Err(Error::config("eps", "list is empty"));
        }
        if let Some(k) = self.kappa0_lower {
            if !(k > 0.0) {
                return Err(Error::config("kappa0_lower", "must be positive"));
            }
        }
        let bounds = self.theory_bounds(&model)?;
        let eps = self.resolved_eps(&bounds)?;
        for e in &eps {
            if !(*e > 0.0 && *e < 1.0) {
                return Err(Error::config(
                    "eps",
                    format!("every eps must lie in (0,1), got {e}"),
                ));
            }
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::config("eps", "must be strictly descending"));
        }
        for e in &eps {
            self.solver_config(*e).validate().map_err(|err| match err {
                Error::Config { field, message } => {
                    Error::config(format!("solver.{field}"), message)
                }
                other => other,
            })?;
        }
        Ok(eps)
    }
}

/// Best-effort name of the field a JSON error refers to.
fn json_field(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["missing field `", "unknown field `", "field `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(name) = rest.split('`').next() {
                return name.to_string();
            }
        }
    }
    format!("line {} column {}", e.line(), e.column())
}

//! Far-field backgrounds, initial-data generators and the hypothesis checks
//! (positivity window, decay to the background, `∂x u0 ≤ ρ0^{γ−α}`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GasModel;
use crate::solver::stencil;
use crate::solver::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldStates {
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub u_minus: f64,
    pub u_plus: f64,
}

impl FarFieldStates {
    pub fn uniform(rho: f64, u: f64) -> Self {
        Self {
            rho_minus: rho,
            rho_plus: rho,
            u_minus: u,
            u_plus: u,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_minus > 0.0 && self.rho_plus > 0.0) {
            return Err(Error::domain(format!(
                "far-field densities must be positive, got {} and {}",
                self.rho_minus, self.rho_plus
            )));
        }
        if !(self.rho_minus.is_finite()
            && self.rho_plus.is_finite()
            && self.u_minus.is_finite()
            && self.u_plus.is_finite())
        {
            return Err(Error::domain("far-field states must be finite"));
        }
        Ok(())
    }
}

/// Monotone transition between the far-field states on `[-1, 1]`, constant
/// outside, built from the polynomial smoothstep whose first `order`
/// derivatives vanish at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BackgroundSpec", into = "BackgroundSpec")]
pub struct BackgroundProfile {
    far_field: FarFieldStates,
    order: u32,
    /// Coefficients of `t^{order+1+k}`, k = 0..=order.
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BackgroundSpec {
    far_field: FarFieldStates,
    smoothness_order: u32,
}

impl TryFrom<BackgroundSpec> for BackgroundProfile {
    type Error = Error;

    fn try_from(s: BackgroundSpec) -> Result<Self> {
        make_background(s.far_field, s.smoothness_order)
    }
}

impl From<BackgroundProfile> for BackgroundSpec {
    fn from(b: BackgroundProfile) -> Self {
        BackgroundSpec {
            far_field: b.far_field,
            smoothness_order: b.order,
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

pub fn make_background(far_field: FarFieldStates, order: u32) -> Result<BackgroundProfile> {
    far_field.validate()?;
    if order < 4 {
        return Err(Error::domain(format!(
            "smoothness order must be at least 4, got {order}"
        )));
    }
    let n = order;
    let coeffs = (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n + k, k) * binomial(2 * n + 1, n - k)
        })
        .collect();
    Ok(BackgroundProfile {
        far_field,
        order,
        coeffs,
    })
}

impl BackgroundProfile {
    pub fn far_field(&self) -> &FarFieldStates {
        &self.far_field
    }

    pub fn smoothness_order(&self) -> u32 {
        self.order
    }

    /// The smoothstep `S` on `[0, 1]`, clamped outside.
    pub fn smoothstep(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        // the alternating sum cancels badly near 1, so use S(t) = 1 − S(1−t)
        if t > 0.5 {
            return 1.0 - self.smoothstep(1.0 - t);
        }
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
        poly * t.powi(self.order as i32 + 1)
    }

    /// `S'(t)`, zero outside `(0, 1)`.
    pub fn smoothstep_slope(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        if t > 0.5 {
            return self.smoothstep_slope(1.0 - t);
        }
        let n = self.order as i32;
        let poly = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (k, c)| acc * t + c * (n + 1 + k as i32) as f64);
        poly * t.powi(n)
    }

    /// Exact `dū/dx`.
    pub fn u_slope(&self, x: f64) -> f64 {
        let ff = &self.far_field;
        0.5 * (ff.u_plus - ff.u_minus) * self.smoothstep_slope(0.5 * (x + 1.0))
    }

    fn blend(&self, left: f64, right: f64, x: f64) -> f64 {
        if x <= -1.0 {
            left
        } else if x >= 1.0 {
            right
        } else {
            left + (right - left) * self.smoothstep(0.5 * (x + 1.0))
        }
    }

    pub fn rho(&self, x: f64) -> f64 {
        self.blend(self.far_field.rho_minus, self.far_field.rho_plus, x)
    }

    pub fn u(&self, x: f64) -> f64 {
        self.blend(self.far_field.u_minus, self.far_field.u_plus, x)
    }

    /// Background density and velocity at the grid nodes.
    pub fn sample(&self, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
        let xs = grid.coordinates();
        (
            xs.iter().map(|x| self.rho(*x)).collect(),
            xs.iter().map(|x| self.u(*x)).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub grid: Grid1D,
    pub background: BackgroundProfile,
    pub rho0: Vec<f64>,
    pub u0: Vec<f64>,
    pub kappa0_lower: f64,
    pub kappa0_upper: f64,
}

impl InitialData {
    /// Wraps samples, taking the positivity window from the data itself.
    pub fn from_samples(
        grid: Grid1D,
        background: BackgroundProfile,
        rho0: Vec<f64>,
        u0: Vec<f64>,
    ) -> Result<Self> {
        if rho0.len() != grid.nodes() || u0.len() != grid.nodes() {
            return Err(Error::structural(format!(
                "initial data has {} / {} values for {} nodes",
                rho0.len(),
                u0.len(),
                grid.nodes()
            )));
        }
        let kappa0_lower = rho0.iter().copied().fold(f64::INFINITY, f64::min);
        let kappa0_upper = rho0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            grid,
            background,
            rho0,
            u0,
            kappa0_lower,
            kappa0_upper,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "rho0", "u0"])?;
        for i in 0..self.grid.nodes() {
            w.serialize((self.grid.x(i), self.rho0[i], self.u0[i]))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x, rho0, u0` rows. The grid must be uniform and symmetric; the
    /// background takes its far-field states from the two end rows.
    pub fn read_csv<R: Read>(reader: R, smoothness_order: u32) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            rho0: f64,
            u0: f64,
        }
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "rho0", "u0"] {
            return Err(Error::structural(format!(
                "expected header `x,rho0,u0`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let rows: Vec<Row> = r.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.len() < Grid1D::MIN_CELLS + 1 {
            return Err(Error::structural(format!("only {} rows", rows.len())));
        }
        let first = rows[0].x;
        let last = rows[rows.len() - 1].x;
        if (first + last).abs() > 1e-9 * last.abs() {
            return Err(Error::structural("grid is not symmetric about x = 0"));
        }
        let grid = Grid1D::new(last, rows.len() - 1)?;
        for (i, row) in rows.iter().enumerate() {
            if (row.x - grid.x(i)).abs() > 1e-9 * grid.dx() {
                return Err(Error::structural(format!(
                    "row {i}: x = {} is off the uniform grid (expected {})",
                    row.x,
                    grid.x(i)
                )));
            }
        }
        let ends = (&rows[0], &rows[rows.len() - 1]);
        let background = make_background(
            FarFieldStates {
                rho_minus: ends.0.rho0,
                rho_plus: ends.1.rho0,
                u_minus: ends.0.u0,
                u_plus: ends.1.u0,
            },
            smoothness_order,
        )?;
        let rho0 = rows.iter().map(|r| r.rho0).collect();
        let u0 = rows.iter().map(|r| r.u0).collect();
        Self::from_samples(grid, background, rho0, u0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Node where the check is closest to (or furthest past) its limit.
    pub worst_index: usize,
    pub worst_x: f64,
    /// `observed − limit` at the worst node; positive means violated.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
    pub observed_kappa0_lower: f64,
    pub observed_kappa0_upper: f64,
}

impl ValidationReport {
    pub const POSITIVITY: &'static str = "positivity-window";
    pub const DECAY: &'static str = "decay-at-ends";
    pub const MONOTONE_POTENTIAL: &'static str = "mono-w0";

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Largest `values[i] − limits[i]`, with its node.
fn worst_excess(values: &[f64], limits: &[f64]) -> (usize, f64) {
    values
        .iter()
        .zip(limits)
        .map(|(v, l)| v - l)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, e)| {
            if e > best.1 || e.is_nan() {
                (i, e)
            } else {
                best
            }
        })
}

fn argext(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if better(*v, values[best]) {
            best = i;
        }
    }
    best
}

pub fn validate_initial(model: &GasModel, data: &InitialData) -> Result<ValidationReport> {
    let grid = &data.grid;
    let n = grid.nodes();
    if data.rho0.len() != n || data.u0.len() != n {
        return Err(Error::structural(format!(
            "initial data has {} / {} values for {} nodes",
            data.rho0.len(),
            data.u0.len(),
            n
        )));
    }
    let observed_lower = data.rho0.iter().copied().fold(f64::INFINITY, f64::min);
    let observed_upper = data.rho0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut checks = Vec::with_capacity(3);

    // positivity window: 0 < kappa0_lower ≤ rho0 ≤ kappa0_upper
    let argmin = argext(&data.rho0, |a, b| a < b);
    let argmax = argext(&data.rho0, |a, b| a > b);
    let low = data.kappa0_lower - observed_lower;
    let high = observed_upper - data.kappa0_upper;
    let (worst_index, excess) = if low >= high {
        (argmin, low)
    } else {
        (argmax, high)
    };
    checks.push(HypothesisCheck {
        name: ValidationReport::POSITIVITY.into(),
        passed: observed_lower > 0.0 && data.kappa0_lower > 0.0 && excess <= 0.0,
        worst_index,
        worst_x: grid.x(worst_index),
        excess,
    });

    // the end nodes must already sit on the background
    let (rho_bar, u_bar) = data.background.sample(grid);
    let mut decay_excess = f64::NEG_INFINITY;
    let mut decay_index = 0;
    for i in [0, n - 1] {
        for (v, b) in [(data.rho0[i], rho_bar[i]), (data.u0[i], u_bar[i])] {
            let e = (v - b).abs() - 1e-12 * (1.0 + b.abs());
            if e > decay_excess {
                decay_excess = e;
                decay_index = i;
            }
        }
    }
    checks.push(HypothesisCheck {
        name: ValidationReport::DECAY.into(),
        passed: decay_excess <= 0.0,
        worst_index: decay_index,
        worst_x: grid.x(decay_index),
        excess: decay_excess,
    });

    // ∂x u0 ≤ ρ0^{γ−α} with the solver's derivative stencil
    let du = stencil::gradient(&data.u0, grid.dx());
    let exponent = model.gamma() - model.alpha();
    let limit: Vec<f64> = data
        .rho0
        .iter()
        .map(|r| r.max(0.0).powf(exponent))
        .collect();
    let (mono_i, mono_excess) = worst_excess(&du, &limit);
    checks.push(HypothesisCheck {
        name: ValidationReport::MONOTONE_POTENTIAL.into(),
        passed: mono_excess <= 0.0,
        worst_index: mono_i,
        worst_x: grid.x(mono_i),
        excess: mono_excess,
    });

    Ok(ValidationReport {
        checks,
        observed_kappa0_lower: observed_lower,
        observed_kappa0_upper: observed_upper,
    })
}

fn default_order() -> u32 {
    4
}

fn default_width() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

/// Parameters of a localized velocity (and optional density) pulse on top
/// of the background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub far_field: FarFieldStates,
    #[serde(default = "default_order")]
    pub order: u32,
    pub amplitude: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub rho_bump: f64,
    /// When false the amplitude is used as given, even if it breaks mono-w0.
    #[serde(default = "default_true")]
    pub enforce_mono_w0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InitialFamily {
    Constant {
        rho: f64,
        u: f64,
    },
    BackgroundExact {
        far_field: FarFieldStates,
        #[serde(default = "default_order")]
        order: u32,
    },
    CompressivePulse(PulseParams),
    ExpansivePulse(PulseParams),
}

/// Fraction of `min ρ0^{γ−α}` that the pulse families keep the exact
/// `∂x u0` below.
pub const MONO_W0_MARGIN: f64 = 0.9;

/// Points per unit length of the fixed sampling used to size pulses.
const AMPLITUDE_SAMPLES_PER_UNIT: f64 = 4096.0;

/// Odd pulse with `ψ'(0) = −1`, supported on `|s| < 1` and C⁵ there.
fn pulse_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        -s * (1.0 - s * s).powi(6)
    }
}

fn pulse_slope(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(5) * (13.0 * s * s - 1.0)
    }
}

fn bump_shape(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(6)
    }
}

pub fn make_initial_family(
    family: &InitialFamily,
    model: &GasModel,
    grid: &Grid1D,
) -> Result<InitialData> {
    match *family {
        InitialFamily::Constant { rho, u } => {
            let background = make_background(FarFieldStates::uniform(rho, u), default_order())?;
            InitialData::from_samples(
                *grid,
                background,
                vec![rho; grid.nodes()],
                vec![u; grid.nodes()],
            )
        }
        InitialFamily::BackgroundExact { far_field, order } => {
            let background = make_background(far_field, order)?;
            let (rho0, u0) = background.sample(grid);
            InitialData::from_samples(*grid, background, rho0, u0)
        }
        InitialFamily::CompressivePulse(p) => make_pulse(p, 1.0, model, grid),
        InitialFamily::ExpansivePulse(p) => make_pulse(p, -1.0, model, grid),
    }
}

/// Largest amplitude keeping the exact `∂x u0` at or below
/// `MONO_W0_MARGIN · min ρ0^{γ−α}`, evaluated on a fixed sampling so that the
/// result does not depend on the simulation grid.
fn pulse_amplitude_limit(
    p: &PulseParams,
    sign: f64,
    background: &BackgroundProfile,
    exponent: f64,
) -> Result<f64> {
    let lo = (-1.0f64).min(p.center - p.width);
    let hi = 1.0f64.max(p.center + p.width);
    let count = ((hi - lo) * AMPLITUDE_SAMPLES_PER_UNIT).ceil() as usize;
    let xs = (0..=count).map(|k| lo + (hi - lo) * k as f64 / count as f64);
    let ff = background.far_field();
    let mut min_rho = ff.rho_minus.min(ff.rho_plus);
    for x in xs.clone() {
        min_rho =
            min_rho.min(background.rho(x) + p.rho_bump * bump_shape((x - p.center) / p.width));
    }
    let ceiling = MONO_W0_MARGIN * min_rho.powf(exponent);
    let mut limit = f64::INFINITY;
    for x in xs {
        let slope_bar = background.u_slope(x);
        let slope_pulse = sign * pulse_slope((x - p.center) / p.width);
        if slope_pulse > 0.0 {
            limit = limit.min((ceiling - slope_bar) / slope_pulse);
        } else if slope_bar > ceiling {
            limit = f64::NEG_INFINITY;
        }
    }
    if limit < 0.0 {
        return Err(Error::Construction {
            message: "the background velocity alone violates mono-w0".into(),
            limiting_amplitude: 0.0,
        });
    }
    Ok(limit)
}

fn make_pulse(p: PulseParams, sign: f64, model: &GasModel, grid: &Grid1D) -> Result<InitialData> {
    if !(p.width > 0.0) {
        return Err(Error::domain(format!(
            "pulse width must be positive, got {}",
            p.width
        )));
    }
    if !(p.amplitude >= 0.0) {
        return Err(Error::domain(format!(
            "pulse amplitude must be nonnegative, got {}",
            p.amplitude
        )));
    }
    let support = (p.center - p.width, p.center + p.width);
    let inner = grid.half_length() - 2.0 * grid.dx();
    if support.0 < -inner || support.1 > inner {
        return Err(Error::domain(format!(
            "pulse support [{}, {}] must stay inside the domain",
            support.0, support.1
        )));
    }
    let background = make_background(p.far_field, p.order)?;
    let (rho_bar, u_bar) = background.sample(grid);
    let xs = grid.coordinates();
    let rho0: Vec<f64> = xs
        .iter()
        .zip(&rho_bar)
        .map(|(x, rb)| rb + p.rho_bump * bump_shape((x - p.center) / p.width))
        .collect();
    if let Some(i) = rho0.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::domain(format!(
            "density bump makes rho0 nonpositive at x = {}",
            xs[i]
        )));
    }
    let shape: Vec<f64> = xs
        .iter()
        .map(|x| sign * p.width * pulse_shape((x - p.center) / p.width))
        .collect();

    let exponent = model.gamma() - model.alpha();
    let amplitude = if p.enforce_mono_w0 {
        pulse_amplitude_limit(&p, sign, &background, exponent)?.min(p.amplitude)
    } else {
        p.amplitude
    };

    let build =
        |a: f64| -> Vec<f64> { u_bar.iter().zip(&shape).map(|(ub, s)| ub + a * s).collect() };
    let mut a = amplitude;
    let mut u0 = build(a);
    if p.enforce_mono_w0 {
        // the limit is set on exact slopes; make sure the discrete check holds
        let excess = |u: &[f64]| {
            stencil::gradient(u, grid.dx())
                .iter()
                .zip(&rho0)
                .map(|(d, r)| d - r.powf(exponent))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let mut tries = 0;
        while excess(&u0) > 0.0 {
            tries += 1;
            if tries > 60 {
                return Err(Error::Construction {
                    message: "mono-w0 still fails after rescaling".into(),
                    limiting_amplitude: a,
                });
            }
            a *= MONO_W0_MARGIN;
            u0 = build(a);
        }
    }
    InitialData::from_samples(*grid, background, rho0, u0)
}

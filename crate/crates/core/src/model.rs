//! Gas and viscosity laws, the coefficient functions of the active-potential
//! equation, and the explicit constants of the a priori estimates.
//!
//! Pressure is `p(ρ) = ρ^γ`, the physical viscosity is `μ(ρ) = ρ^α`, and the
//! regularized viscosity is `μ_ε(ρ) = max(ρ^α, ε ρ^{α*})` with
//! `α* = min(α, 1/2) / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponents `(γ, α)` of a barotropic gas with power-law viscosity.
///
/// Construction enforces `γ > 1`, `α > 0` and `α ≤ γ ≤ α + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GasModel {
    gamma: f64,
    alpha: f64,
    alpha_star: f64,
    theta: f64,
}

impl GasModel {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if !gamma.is_finite() || !alpha.is_finite() {
            return Err(Error::domain("gamma and alpha must be finite"));
        }
        if gamma <= 1.0 {
            return Err(Error::domain(format!("gamma must exceed 1, got {gamma}")));
        }
        if alpha <= 0.0 {
            return Err(Error::domain(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if gamma < alpha || gamma > alpha + 1.0 {
            return Err(Error::domain(format!(
                "gamma must lie in [alpha, alpha + 1] = [{alpha}, {}], got {gamma}",
                alpha + 1.0
            )));
        }
        let alpha_star = 0.5 * alpha.min(0.5);
        Ok(Self {
            gamma,
            alpha,
            alpha_star,
            theta: gamma / (alpha - alpha_star),
        })
    }

    /// Viscous shallow water: `γ = 2`, `α = 1`.
    pub fn shallow_water() -> Self {
        Self::new(2.0, 1.0).expect("shallow-water exponents are admissible")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_star(&self) -> f64 {
        self.alpha_star
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `p(ρ) = ρ^γ`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(Error::domain(format!("pressure needs rho >= 0, got {rho}")));
        }
        Ok(self.p(rho))
    }

    #[inline]
    pub(crate) fn p(&self, rho: f64) -> f64 {
        rho.powf(self.gamma)
    }

    #[inline]
    pub(crate) fn dp(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// Unregularized viscosity `μ(ρ) = ρ^α`.
    #[inline]
    pub fn mu(&self, rho: f64) -> f64 {
        rho.powf(self.alpha)
    }

    pub fn mu_eps(&self, eps: f64, rho: f64) -> Result<f64> {
        let visc = Viscosity::new(*self, eps)?;
        if !(rho >= 0.0) {
            return Err(Error::domain(format!(
                "viscosity needs rho >= 0, got {rho}"
            )));
        }
        Ok(visc.value(rho))
    }

    pub fn mu_eps_deriv(&self, eps: f64, rho: f64) -> Result<f64> {
        let visc = Viscosity::new(*self, eps)?;
        check_positive(rho)?;
        Ok(visc.slope(rho))
    }

    pub fn coefficients_f(&self, eps: f64, rho: f64) -> Result<FCoefficients> {
        let visc = Viscosity::new(*self, eps)?;
        check_positive(rho)?;
        Ok(visc.f_coefficients(rho))
    }

    pub fn j_coefficients(&self, eps: f64, rho: f64) -> Result<JCoefficients> {
        let visc = Viscosity::new(*self, eps)?;
        check_positive(rho)?;
        Ok(visc.j_coefficients(rho))
    }

    /// Recovers `∂x u = (w + p(ρ)) / μ_ε(ρ)` from the active potential.
    pub fn velocity_gradient_identity(&self, eps: f64, rho: f64, w: f64) -> Result<f64> {
        let visc = Viscosity::new(*self, eps)?;
        check_positive(rho)?;
        Ok(visc.velocity_gradient(rho, w))
    }

    /// Density above which `μ_ε(ρ) = μ(ρ)`: the root of `ρ^α = ε ρ^{α*}`.
    pub fn deregularization_density(&self, eps: f64) -> f64 {
        eps.powf(1.0 / (self.alpha - self.alpha_star))
    }

    pub fn theory_bounds(&self, horizon: f64, kappa0_lower: f64) -> Result<TheoryBounds> {
        TheoryBounds::new(*self, horizon, kappa0_lower)
    }
}

fn check_positive(rho: f64) -> Result<()> {
    if rho > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("rho must be positive, got {rho}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FCoefficients {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JCoefficients {
    pub j1: f64,
    pub j2: f64,
}

/// The regularized viscosity `μ_ε` for one `(model, ε)` pair.
///
/// `ε` is validated once here so that the per-node evaluations used by the
/// solver and the diagnostics stay infallible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity {
    model: GasModel,
    eps: f64,
}

impl Viscosity {
    pub fn new(model: GasModel, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { model, eps })
    }

    pub fn model(&self) -> &GasModel {
        &self.model
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// True when the physical branch `ρ^α` attains the max (ties included).
    #[inline]
    pub fn on_mu_branch(&self, rho: f64) -> bool {
        rho.powf(self.model.alpha) >= self.eps * rho.powf(self.model.alpha_star)
    }

    #[inline]
    pub fn value(&self, rho: f64) -> f64 {
        let physical = rho.powf(self.model.alpha);
        let floor = self.eps * rho.powf(self.model.alpha_star);
        if physical >= floor {
            physical
        } else {
            floor
        }
    }

    /// `μ_ε'(ρ)`; at the kink the physical-branch slope is returned.
    #[inline]
    pub fn slope(&self, rho: f64) -> f64 {
        let GasModel {
            alpha, alpha_star, ..
        } = self.model;
        if self.on_mu_branch(rho) {
            alpha * rho.powf(alpha - 1.0)
        } else {
            self.eps * alpha_star * rho.powf(alpha_star - 1.0)
        }
    }

    #[inline]
    pub fn f_coefficients(&self, rho: f64) -> FCoefficients {
        let mu = self.value(rho);
        let p = self.model.p(rho);
        let stiff = rho * self.model.dp(rho) / mu;
        let f2 = (rho * self.slope(rho) + mu) / (mu * mu);
        FCoefficients {
            f1: stiff - 2.0 * p * f2,
            f2,
            f3: (stiff - p * f2) * p,
        }
    }

    #[inline]
    pub fn j_coefficients(&self, rho: f64) -> JCoefficients {
        let gamma = self.model.gamma;
        let mu = self.value(rho);
        let p = self.model.p(rho);
        let grow = rho * self.slope(rho) + mu;
        JCoefficients {
            j1: p / (mu * mu) * (gamma * mu - 2.0 * grow),
            j2: p * p / (mu * mu) * (gamma * mu - grow),
        }
    }

    #[inline]
    pub fn velocity_gradient(&self, rho: f64, w: f64) -> f64 {
        (w + self.model.p(rho)) / self.value(rho)
    }

    #[inline]
    pub fn active_potential(&self, rho: f64, du_dx: f64) -> f64 {
        -self.model.p(rho) + self.value(rho) * du_dx
    }
}

/// Closed-form constants of the density-floor argument for one
/// `(model, T, κ0)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub horizon: f64,
    pub kappa0_lower: f64,
    pub theta: f64,
    /// Largest ε for which the active-potential bound is claimed.
    pub eps_gamma: f64,
    pub c_gamma: f64,
    pub q_of_gamma: f64,
    pub delta_1: f64,
    /// ε-uniform density floor on `[0, T]`.
    pub kappa_t: f64,
    /// ε below which `μ_ε(ρ_ε) = μ(ρ_ε)` everywhere on `[0, T]`.
    pub delta_t: f64,
}

impl TheoryBounds {
    pub fn new(model: GasModel, horizon: f64, kappa0_lower: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::domain(format!(
                "horizon T must be positive, got {horizon}"
            )));
        }
        if !(kappa0_lower > 0.0 && kappa0_lower.is_finite()) {
            return Err(Error::domain(format!(
                "kappa0_lower must be positive, got {kappa0_lower}"
            )));
        }
        let GasModel {
            gamma,
            alpha,
            alpha_star,
            theta,
        } = model;
        let t = horizon;
        let drift = (gamma - (alpha_star + 1.0)).abs();
        let growth = (t * (gamma - 2.0 * (alpha_star + 1.0)).abs()).exp();
        let gap = alpha - alpha_star;

        let (eps_gamma, c_gamma, q_of_gamma, delta_1, kappa_t);
        if gamma > alpha {
            eps_gamma = (1.0 / (1.0 + t * drift)).powf(gap / (gamma - alpha));
            c_gamma = 2.0 * growth;
            q_of_gamma = theta;
            let floor_term = (kappa0_lower / 4.0).powf(gap);
            let time_term = ((2f64.powf(alpha) - 1.0) / (alpha * (2f64.powf(gamma) + c_gamma) * t))
                .powf(gamma / (q_of_gamma * (gamma - alpha)));
            delta_1 = eps_gamma.min(floor_term).min(time_term);
            kappa_t = delta_1.powf(q_of_gamma / gamma);
        } else {
            eps_gamma = 1.0;
            c_gamma = 2.0 * (1.0 + t * drift) * growth;
            q_of_gamma = 1.0;
            let floor_term = (kappa0_lower / 4.0).powf(alpha);
            let time_term =
                ((2f64.powf(alpha) - 1.0) * (-alpha * t).exp() / c_gamma).powf(gap / alpha_star);
            delta_1 = eps_gamma.min(floor_term).min(time_term);
            kappa_t = (-t).exp() * delta_1.powf(1.0 / alpha);
        }
        let delta_t = kappa_t.powf(gap).min(delta_1);
        // γ barely above α drives the exponents up until the constants underflow
        if !(delta_t >= f64::MIN_POSITIVE && kappa_t >= f64::MIN_POSITIVE) {
            return Err(Error::domain(format!(
                "theory constants underflow for gamma = {gamma}, alpha = {alpha}, T = {t} \
                 (delta_1 = {delta_1:e}, kappa_T = {kappa_t:e})"
            )));
        }
        Ok(Self {
            horizon,
            kappa0_lower,
            theta,
            eps_gamma,
            c_gamma,
            q_of_gamma,
            delta_1,
            kappa_t,
            delta_t,
        })
    }

    /// `C_γ ε^θ`, the upper bound on the active potential.
    pub fn active_potential_bound(&self, eps: f64) -> f64 {
        self.c_gamma * eps.powf(self.theta)
    }

    /// Right side of the minimum-density differential inequality,
    /// `−ρ^{1+γ−α} − C_γ δ_1^θ ρ^{1−α}`.
    pub fn density_floor_rate(&self, model: &GasModel, rho_min: f64) -> f64 {
        let (gamma, alpha) = (model.gamma, model.alpha);
        -rho_min.powf(1.0 + gamma - alpha)
            - self.c_gamma * self.delta_1.powf(self.theta) * rho_min.powf(1.0 - alpha)
    }
}

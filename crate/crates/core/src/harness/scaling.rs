use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalingFit {
    /// Least-squares fit of `log(max_t sup_x w)` against `log ε`.
    Fitted {
        slope: f64,
        intercept: f64,
        /// Root-mean-square residual of the fit in log space.
        residual: f64,
        theta: f64,
        slope_minus_theta: f64,
        points: usize,
    },
    /// `sup w ≤ 0` in every run, so there is nothing to scale.
    Degenerate { reason: String },
}

/// Fits the power law `max sup w ≈ C ε^slope` over the points with a
/// positive maximum. `points` are `(ε, max_t sup_x w)` pairs.
pub fn fit_eps_scaling(points: &[(f64, f64)], theta: f64) -> Result<ScalingFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need runs at 3 distinct eps, got {}",
            distinct.len()
        )));
    }
    if points.iter().all(|p| p.1 <= 0.0) {
        return Ok(ScalingFit::Degenerate {
            reason: "degenerate: w nonpositive".into(),
        });
    }
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} runs have a positive sup w",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all usable runs share one eps".into(),
        ));
    }
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ScalingFit::Fitted {
        slope,
        intercept,
        residual,
        theta,
        slope_minus_theta: slope - theta,
        points: usable.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let theta = 8.0 / 3.0;
        let pts: Vec<_> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|e: &f64| (*e, 3.0 * e.powf(theta)))
            .collect();
        match fit_eps_scaling(&pts, theta).unwrap() {
            ScalingFit::Fitted {
                slope,
                intercept,
                residual,
                slope_minus_theta,
                ..
            } => {
                assert!((slope - theta).abs() < 1e-12);
                assert!((intercept - 3f64.ln()).abs() < 1e-11);
                assert!(residual < 1e-12);
                assert!(slope_minus_theta.abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonpositive_w_is_degenerate() {
        let pts = [(0.2, -0.1), (0.1, -0.1), (0.05, -0.2)];
        assert!(matches!(
            fit_eps_scaling(&pts, 2.0).unwrap(),
            ScalingFit::Degenerate { .. }
        ));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            fit_eps_scaling(&[(0.2, 1.0), (0.1, 0.5)], 2.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_eps_scaling(&[(0.2, 1.0), (0.2, 0.5), (0.1, 0.4)], 2.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_eps_scaling(&[(0.2, 1.0), (0.1, -0.5), (0.05, 0.4)], 2.0),
            Err(Error::InsufficientData(_))
        ));
    }
}

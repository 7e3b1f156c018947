use serde::{Deserialize, Serialize};

use super::family::check_fraction;
use super::DistributionSpec;
use crate::error::{check_positive, check_unit_interval_open, Result};
use crate::model::{threshold_neighborhood, EffectProfile};

/// Outcome of the band-balance optimality test.
///
/// The contested slots are assumed filled by the lowest admissible effects at or above
/// `threshold - 2 rho`; the test passes when the value lost against the optimal band
/// is at most `epsilon` of the optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub threshold: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub alpha_balanced: bool,
    pub optimal_value: f64,
    pub band_optimal_value: f64,
    pub band_worst_value: f64,
    /// `(band_optimal_value - band_worst_value) / optimal_value`.
    pub loss_fraction: f64,
    pub holds: bool,
}

fn report(
    threshold: f64,
    rho: f64,
    epsilon: f64,
    alpha: (f64, bool),
    optimal_value: f64,
    band_optimal_value: f64,
    band_worst_value: f64,
) -> ConditionReport {
    let loss = band_optimal_value - band_worst_value;
    ConditionReport {
        threshold,
        rho,
        epsilon,
        alpha: alpha.0,
        alpha_balanced: alpha.1,
        optimal_value,
        band_optimal_value,
        band_worst_value,
        loss_fraction: if optimal_value > 0.0 {
            loss / optimal_value
        } else {
            0.0
        },
        holds: loss <= epsilon * optimal_value,
    }
}

/// Band-balance test on a finite profile.
pub fn exact_condition(
    profile: &EffectProfile,
    budget: usize,
    rho: f64,
    epsilon: f64,
) -> Result<ConditionReport> {
    check_unit_interval_open("epsilon", epsilon)?;
    let n = threshold_neighborhood(profile, budget, rho)?;
    Ok(report(
        n.threshold,
        rho,
        epsilon,
        (n.alpha, n.alpha_balanced),
        n.clear_value + n.contested_optimal_value,
        n.contested_optimal_value,
        n.contested_worst_value,
    ))
}

/// Band-balance test on an analytic family, with values per unit of population.
pub fn exact_condition_analytic(
    spec: &DistributionSpec,
    budget_fraction: f64,
    rho: f64,
    epsilon: f64,
) -> Result<ConditionReport> {
    check_fraction(budget_fraction)?;
    check_positive("rho", rho)?;
    check_unit_interval_open("epsilon", epsilon)?;
    let t = spec.threshold(budget_fraction)?;
    let upper = (t + 2.0 * rho).min(1.0);
    let lower = (t - 2.0 * rho).max(0.0);
    let band_mass = spec.cdf(upper) - spec.cdf(t);
    let top = spec.quantile((spec.cdf(lower) + band_mass).min(1.0))?;
    Ok(report(
        t,
        rho,
        epsilon,
        ((t - top).max(0.0), top <= t),
        spec.partial_moment(t, 1.0),
        spec.partial_moment(t, upper),
        spec.partial_moment(lower, top),
    ))
}

/// Largest `rho` for which the uniform family passes the test at threshold `threshold`:
/// `sqrt((epsilon / 4) (1 - threshold^2) / 2)`.
pub fn uniform_boundary_rho(threshold: f64, epsilon: f64) -> f64 {
    (epsilon / 4.0 * (1.0 - threshold * threshold) / 2.0).sqrt()
}

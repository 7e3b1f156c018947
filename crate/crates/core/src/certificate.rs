//! Optimality certificate computed from estimates alone.
//!
//! Three quantities bound the loss of the top-K selection: a lower bound on the
//! optimal value, an upper bound on the optimal value inside the threshold band, and
//! a lower bound on what the selection collects from that band. The certificate is
//! one-sided: passing it implies the selection is `(1 - epsilon)`-optimal whenever every
//! estimate is within `rho`, while failing it says nothing.

use serde::{Deserialize, Serialize};

use crate::distribution::estimated_threshold;
use crate::error::{check_unit_interval_open, Result};
use crate::model::EstimateProfile;

pub const VACUOUS_LOWER_BOUND: &str = "vacuous lower bound";
pub const INSUFFICIENT_SUPPORT: &str = "insufficient near-threshold support";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub budget: usize,
    pub epsilon: f64,
    pub rho: f64,
    pub estimated_threshold: f64,
    /// Lower bound on the optimal value.
    pub optimal_lower: f64,
    /// Upper bound on the optimal value collected inside the threshold band.
    pub band_upper: f64,
    /// Guaranteed number of selected units outside the clearly-above region.
    pub contested_count: usize,
    /// Lower bound on the value the selection collects from those units.
    pub contested_lower: f64,
    /// Upper bound on the relative loss, when the bounds are informative.
    pub gap_upper: Option<f64>,
    pub certified: bool,
    pub reason: Option<String>,
}

fn unit_clamp(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub fn certify_from_estimates(
    estimates: &EstimateProfile,
    budget: usize,
    epsilon: f64,
) -> Result<CertificateReport> {
    check_unit_interval_open("epsilon", epsilon)?;
    let t = estimated_threshold(estimates, budget)?;
    let rho = estimates.rho();
    let values = estimates.estimates();

    let optimal_lower: f64 = values
        .iter()
        .filter(|&&v| v >= t + 2.0 * rho)
        .map(|&v| unit_clamp(v - rho))
        .sum();
    let band_upper: f64 = values
        .iter()
        .filter(|&&v| v >= t - 2.0 * rho && v <= t + 4.0 * rho)
        .map(|&v| unit_clamp(v + rho))
        .sum();

    // Units above the band all have estimates strictly above the threshold estimate.
    let strictly_above = values.iter().filter(|&&v| v > t).count();
    let contested_count = budget.saturating_sub(strictly_above);
    let mut window: Vec<f64> = values
        .iter()
        .copied()
        .filter(|&v| v > t - 3.0 * rho)
        .collect();
    window.sort_by(f64::total_cmp);
    let supported = window.len() >= contested_count;
    let contested_lower: f64 = window
        .iter()
        .take(contested_count)
        .map(|&v| unit_clamp(v - rho))
        .sum();

    let mut out = CertificateReport {
        budget,
        epsilon,
        rho,
        estimated_threshold: t,
        optimal_lower,
        band_upper,
        contested_count,
        contested_lower,
        gap_upper: None,
        certified: false,
        reason: None,
    };
    if !supported {
        out.reason = Some(INSUFFICIENT_SUPPORT.to_string());
    } else if optimal_lower <= 0.0 {
        out.reason = Some(VACUOUS_LOWER_BOUND.to_string());
    } else {
        let gap = ((band_upper - contested_lower) / optimal_lower).max(0.0);
        out.gap_upper = Some(gap);
        out.certified = gap <= epsilon;
    }
    Ok(out)
}

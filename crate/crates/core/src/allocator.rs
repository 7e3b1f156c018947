//! Top-K selection from estimates, the full-accuracy baseline, and accuracy bounds.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit_interval_open, Error, Result};
use crate::model::{
    ensure_same_len, threshold_neighborhood, top_k, value_ratio, AllocationResult, BudgetSpec,
    EffectProfile, EstimateProfile,
};
use crate::rng::StreamKey;
use crate::sampling::{draw_estimates, fullcate_sample_size, SamplePlan};

/// Best possible allocation, computed from the true effects.
pub fn optimal_allocation(profile: &EffectProfile, budget: usize) -> Result<AllocationResult> {
    profile.check_budget(budget)?;
    AllocationResult::evaluate(profile, profile.effects(), top_k(profile.effects(), budget))
}

/// The `budget` units with the highest estimates, ties to the lower index.
pub fn lea_select(estimates: &EstimateProfile, budget: usize) -> Result<Vec<usize>> {
    if budget == 0 || budget > estimates.len() {
        return Err(Error::BudgetOutOfRange {
            budget,
            units: estimates.len(),
        });
    }
    Ok(top_k(estimates.estimates(), budget))
}

/// Select from estimates and score the selection against the truth.
pub fn lea_allocate(
    profile: &EffectProfile,
    estimates: &EstimateProfile,
    budget: usize,
) -> Result<AllocationResult> {
    ensure_same_len(estimates, profile)?;
    let selected = lea_select(estimates, budget)?;
    AllocationResult::evaluate(profile, estimates.estimates(), selected)
}

/// Baseline that estimates every unit to `threshold * epsilon / 2` before selecting.
///
/// Returns the allocation and the plan it consumed.
pub fn fullcate_allocate(
    profile: &EffectProfile,
    budget: BudgetSpec,
    delta: f64,
    key: StreamKey,
) -> Result<(AllocationResult, SamplePlan)> {
    let threshold = profile.threshold(budget.budget)?;
    if threshold <= 0.0 {
        return Err(Error::ZeroThreshold);
    }
    let accuracy = threshold * budget.epsilon / 2.0;
    let plan = fullcate_sample_size(profile.len(), accuracy, delta)?;
    let estimates = draw_estimates(profile, plan.mode(), accuracy, delta, key)?;
    Ok((lea_allocate(profile, &estimates, budget.budget)?, plan))
}

/// Guaranteed ratio of any top-K selection made from `rho`-accurate estimates.
///
/// Clamped to `[0, 1]`; equals 1 when no value is at stake.
pub fn accuracy_lower_bound(profile: &EffectProfile, budget: usize, rho: f64) -> Result<f64> {
    let n = threshold_neighborhood(profile, budget, rho)?;
    let slots = n.contested_slots as f64;
    let denom = n.clear_value + (n.threshold + 2.0 * rho) * slots;
    if denom <= 0.0 || profile.optimal_value(budget)? <= 0.0 {
        return Ok(1.0);
    }
    Ok((1.0 - 4.0 * rho * slots / denom).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// Denominator uses the threshold alone.
    Conservative,
    /// Denominator uses the top of the band, `threshold + 2 rho`.
    Full,
}

/// The band-fraction form of the accuracy bound at `rho = gamma * sqrt(epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralBound {
    pub conservative: f64,
    pub full: f64,
    pub binding: BoundForm,
}

impl GeneralBound {
    pub fn value(&self) -> f64 {
        match self.binding {
            BoundForm::Conservative => self.conservative,
            BoundForm::Full => self.full,
        }
    }
}

pub fn general_accuracy_bound(
    profile: &EffectProfile,
    budget: usize,
    epsilon: f64,
    gamma: f64,
) -> Result<GeneralBound> {
    check_unit_interval_open("epsilon", epsilon)?;
    check_positive("gamma", gamma)?;
    let rho = gamma * epsilon.sqrt();
    let n = threshold_neighborhood(profile, budget, rho)?;
    let band = n.band_fraction;
    let conservative_denom = n.clear_mass() + n.threshold * band;
    if conservative_denom <= 0.0 {
        return Err(Error::DegenerateBound(
            "no value above the threshold and a zero threshold",
        ));
    }
    let full_denom = n.clear_mass() + (n.threshold + 2.0 * rho) * band;
    let numer = 4.0 * gamma * band * epsilon.sqrt();
    let conservative = 1.0 - numer / conservative_denom;
    let full = 1.0 - numer / full_denom;
    Ok(GeneralBound {
        conservative,
        full,
        binding: if conservative < full {
            BoundForm::Conservative
        } else {
            BoundForm::Full
        },
    })
}

/// Lowest value any top-K selection can realize when every estimate may sit
/// anywhere within `rho` of the truth, ties broken in the adversary's favour.
///
/// A set is reachable exactly when no excluded unit exceeds its smallest member
/// by more than `2 rho`, so the minimum runs over the candidate smallest member.
pub fn worst_case_value(profile: &EffectProfile, budget: usize, rho: f64) -> Result<f64> {
    profile.check_budget(budget)?;
    check_positive("rho", rho)?;
    let mut sorted = profile.effects().to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let mut best = f64::INFINITY;
    for (i, &floor) in sorted.iter().enumerate() {
        let cap = floor + 2.0 * rho;
        let above = sorted.partition_point(|&t| t <= cap);
        let forced = m - above;
        if forced > budget || m - i < budget {
            continue;
        }
        let value: f64 = sorted[above..].iter().sum::<f64>()
            + sorted[i..above].iter().take(budget - forced).sum::<f64>();
        best = best.min(value);
    }
    Ok(best)
}

/// [`worst_case_value`] divided by the optimum.
pub fn worst_case_ratio(profile: &EffectProfile, budget: usize, rho: f64) -> Result<f64> {
    Ok(value_ratio(
        worst_case_value(profile, budget, rho)?,
        profile.optimal_value(budget)?,
    ))
}

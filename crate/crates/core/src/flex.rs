//! Budget flexibility: sliding the budget, overspending, and relaxing the target.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit_interval_open, Error, Result};
use crate::model::{
    ensure_same_len, rank_descending, threshold_neighborhood, value_ratio, EffectProfile,
    EstimateProfile,
};

/// Realized and optimal values of top-K selections for every `K` at once.
#[derive(Debug, Clone)]
pub struct PrefixValues {
    selected: Vec<f64>,
    optimal: Vec<f64>,
}

fn prefix_sums(effects: &[f64], order: &[usize]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(order.iter().scan(0.0, |acc, &u| {
            *acc += effects[u];
            Some(*acc)
        }))
        .collect()
}

impl PrefixValues {
    pub fn new(profile: &EffectProfile, estimates: &EstimateProfile) -> Result<Self> {
        ensure_same_len(estimates, profile)?;
        let effects = profile.effects();
        Ok(Self {
            selected: prefix_sums(effects, &rank_descending(estimates.estimates())),
            optimal: prefix_sums(effects, &rank_descending(effects)),
        })
    }

    pub fn units(&self) -> usize {
        self.selected.len() - 1
    }

    /// True value of the top-`k` units by estimate.
    pub fn selected_value(&self, k: usize) -> f64 {
        self.selected[k]
    }

    pub fn optimal_value(&self, k: usize) -> f64 {
        self.optimal[k]
    }

    pub fn ratio(&self, k: usize) -> f64 {
        value_ratio(self.selected[k], self.optimal[k])
    }

    pub fn meets(&self, k: usize, epsilon: f64) -> bool {
        self.ratio(k) >= 1.0 - epsilon
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexBudgetResult {
    pub original_budget: usize,
    /// Closest budget, in either direction, whose selection meets the target for that budget.
    pub nearest_budget: Option<usize>,
    /// Closest budget at or below the original that meets the target.
    pub nearest_underspend_budget: Option<usize>,
    /// Fewest extra units that bring the selection to the target of the original budget.
    pub overspend: Option<usize>,
    /// Relaxation factor the original selection actually needs.
    pub kappa_needed: Option<f64>,
}

impl FlexBudgetResult {
    fn new(original_budget: usize) -> Self {
        Self {
            original_budget,
            nearest_budget: None,
            nearest_underspend_budget: None,
            overspend: None,
            kappa_needed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlideOptions {
    pub underspend_only: bool,
    /// Budgets the search may move to.
    pub range: RangeInclusive<usize>,
}

impl SlideOptions {
    pub fn full(units: usize) -> Self {
        Self {
            underspend_only: false,
            range: 1..=units,
        }
    }
}

/// Search order `K, K-1, K+1, K-2, K+2, ...`, restricted to `range`.
fn slide_order(budget: usize, range: &RangeInclusive<usize>, underspend_only: bool) -> Vec<usize> {
    let (lo, hi) = (*range.start(), *range.end());
    let span = budget.max(hi);
    let mut order = Vec::new();
    for d in 0..=span {
        if d <= budget && budget - d >= lo && budget - d <= hi {
            order.push(budget - d);
        }
        if d > 0 && !underspend_only && budget + d >= lo && budget + d <= hi {
            order.push(budget + d);
        }
    }
    order
}

fn ratio_kappa(ratio: f64, epsilon: f64) -> f64 {
    ((1.0 - ratio) / epsilon).max(0.0)
}

/// Nearest budget whose top-K selection from `estimates` is `(1 - epsilon)`-optimal
/// for that same budget. Ties in distance go to the smaller budget.
pub fn slide_budget(
    profile: &EffectProfile,
    estimates: &EstimateProfile,
    budget: usize,
    epsilon: f64,
    options: &SlideOptions,
) -> Result<FlexBudgetResult> {
    check_unit_interval_open("epsilon", epsilon)?;
    profile.check_budget(budget)?;
    let prefix = PrefixValues::new(profile, estimates)?;
    Ok(slide_with(&prefix, budget, epsilon, options))
}

pub fn slide_with(
    prefix: &PrefixValues,
    budget: usize,
    epsilon: f64,
    options: &SlideOptions,
) -> FlexBudgetResult {
    let find = |underspend_only| {
        slide_order(budget, &options.range, underspend_only)
            .into_iter()
            .find(|&k| k >= 1 && k <= prefix.units() && prefix.meets(k, epsilon))
    };
    let mut out = FlexBudgetResult::new(budget);
    out.nearest_underspend_budget = find(true);
    if !options.underspend_only {
        out.nearest_budget = find(false);
    }
    out.kappa_needed = Some(ratio_kappa(prefix.ratio(budget), epsilon));
    out
}

/// Fewest extra units, taken in estimate order after the original selection, that lift
/// the realized value to `(1 - epsilon)` of the optimum for the original budget.
pub fn overspend_budget(
    profile: &EffectProfile,
    estimates: &EstimateProfile,
    budget: usize,
    epsilon: f64,
) -> Result<FlexBudgetResult> {
    check_unit_interval_open("epsilon", epsilon)?;
    profile.check_budget(budget)?;
    let prefix = PrefixValues::new(profile, estimates)?;
    Ok(overspend_with(&prefix, budget, epsilon))
}

pub fn overspend_with(prefix: &PrefixValues, budget: usize, epsilon: f64) -> FlexBudgetResult {
    let target = (1.0 - epsilon) * prefix.optimal_value(budget);
    let mut out = FlexBudgetResult::new(budget);
    out.overspend = (budget..=prefix.units())
        .find(|&k| prefix.selected_value(k) >= target)
        .map(|k| k - budget);
    out.kappa_needed = Some(ratio_kappa(prefix.ratio(budget), epsilon));
    out
}

/// Extra units the density argument calls for:
/// `((4 rho - epsilon (t + 2 rho)) K0 - epsilon V(A1)) / (t - 2 rho)`.
///
/// A non-positive result means no extra units are needed.
pub fn overspend_formula(
    profile: &EffectProfile,
    budget: usize,
    rho: f64,
    epsilon: f64,
) -> Result<f64> {
    check_unit_interval_open("epsilon", epsilon)?;
    check_positive("rho", rho)?;
    let n = threshold_neighborhood(profile, budget, rho)?;
    let denom = n.threshold - 2.0 * rho;
    if denom <= 0.0 {
        return Err(Error::OverspendInapplicable {
            threshold: n.threshold,
            two_rho: 2.0 * rho,
        });
    }
    let slots = n.contested_slots as f64;
    Ok(
        ((4.0 * rho - epsilon * (n.threshold + 2.0 * rho)) * slots - epsilon * n.clear_value)
            / denom,
    )
}

/// Smallest budget `K' >= budget` at which a uniformly random `K'`-subset is, in expectation,
/// `(1 - epsilon)`-optimal against the original budget.
pub fn random_overspend_budget(
    profile: &EffectProfile,
    budget: usize,
    epsilon: f64,
) -> Result<Option<usize>> {
    check_unit_interval_open("epsilon", epsilon)?;
    let target = (1.0 - epsilon) * profile.optimal_value(budget)?;
    let mean = profile.mean();
    Ok((budget..=profile.len()).find(|&k| k as f64 * mean >= target))
}

/// Relaxation factors for weak selections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// For a uniformly random `K`-subset in expectation.
    pub expected: f64,
    /// For the `K` lowest units, the worst any selection can do.
    pub worst_case: f64,
}

/// Smallest `kappa` with `value >= (1 - kappa epsilon) * optimum`, for a random and for
/// the worst possible selection.
///
/// With `epsilon = 0` the result is 0 when the selection is optimal and infinite otherwise.
pub fn kappa_relaxation(
    profile: &EffectProfile,
    budget: usize,
    epsilon: f64,
) -> Result<KappaReport> {
    if epsilon != 0.0 {
        check_unit_interval_open("epsilon", epsilon)?;
    }
    let optimum = profile.optimal_value(budget)?;
    let expected_value = budget as f64 * profile.mean();
    let mut ascending = profile.effects().to_vec();
    ascending.sort_by(f64::total_cmp);
    let worst_value: f64 = ascending.iter().take(budget).sum();
    let kappa = |value: f64| {
        let shortfall = 1.0 - value_ratio(value, optimum);
        if shortfall <= 4.0 * f64::EPSILON {
            0.0
        } else if epsilon == 0.0 {
            f64::INFINITY
        } else {
            shortfall / epsilon
        }
    };
    Ok(KappaReport {
        expected: kappa(expected_value),
        worst_case: kappa(worst_value),
    })
}

/// Half the units at `1/2 - 2 epsilon`, half at `1/2 + 2 epsilon`, low half first.
pub fn two_spikes_instance(units: usize, epsilon: f64) -> Result<EffectProfile> {
    if units == 0 || !units.is_multiple_of(2) {
        return Err(Error::param(
            "units",
            format!("{units} is not a positive even count"),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} is not in (0, 1/4)"),
        ));
    }
    let half = units / 2;
    EffectProfile::new(
        std::iter::repeat_n(0.5 - 2.0 * epsilon, half)
            .chain(std::iter::repeat_n(0.5 + 2.0 * epsilon, half))
            .collect(),
    )
}

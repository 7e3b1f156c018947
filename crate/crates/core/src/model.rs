//! Effect profiles, estimate profiles, budgets and allocation outcomes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit_interval_open, Error, Result};

/// True per-unit treatment effects, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EffectProfile {
    effects: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EffectProfile {
    type Error = Error;

    fn try_from(effects: Vec<f64>) -> Result<Self> {
        Self::new(effects)
    }
}

impl From<EffectProfile> for Vec<f64> {
    fn from(profile: EffectProfile) -> Self {
        profile.effects
    }
}

impl EffectProfile {
    pub fn new(effects: Vec<f64>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some((index, &value)) = effects
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::EffectOutOfRange { index, value });
        }
        Ok(Self { effects })
    }

    /// Evenly spaced effects `(i + 1/2) / units` for `i = 0..units`.
    pub fn uniform_grid(units: usize) -> Result<Self> {
        Self::new(
            (0..units)
                .map(|i| (i as f64 + 0.5) / units as f64)
                .collect(),
        )
    }

    pub fn effects(&self) -> &[f64] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.effects.iter().sum::<f64>() / self.len() as f64
    }

    pub fn check_budget(&self, budget: usize) -> Result<()> {
        if budget == 0 || budget > self.len() {
            Err(Error::BudgetOutOfRange {
                budget,
                units: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// The `budget`-th largest effect.
    pub fn threshold(&self, budget: usize) -> Result<f64> {
        self.check_budget(budget)?;
        Ok(self.effects[rank_descending(&self.effects)[budget - 1]])
    }

    /// Value of the best `budget`-subset.
    pub fn optimal_value(&self, budget: usize) -> Result<f64> {
        self.check_budget(budget)?;
        Ok(self.value_of(&top_k(&self.effects, budget)))
    }

    pub fn value_of(&self, units: &[usize]) -> f64 {
        units.iter().map(|&u| self.effects[u]).sum()
    }

    /// Value of the selected units whose effect falls in `interval`.
    pub fn value_in(&self, units: &[usize], interval: Interval) -> f64 {
        units
            .iter()
            .map(|&u| self.effects[u])
            .filter(|&t| interval.contains(t))
            .sum()
    }
}

/// Estimated effects together with the accuracy they were drawn for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateProfile {
    estimates: Vec<f64>,
    counts: Vec<u64>,
    rho: f64,
    delta: f64,
}

impl EstimateProfile {
    /// Estimates with no record of how many draws produced them.
    pub fn new(estimates: Vec<f64>, rho: f64, delta: f64) -> Result<Self> {
        Self::with_counts(estimates, Vec::new(), rho, delta)
    }

    /// `counts` is either empty or holds the realized draw count per unit.
    pub fn with_counts(
        estimates: Vec<f64>,
        counts: Vec<u64>,
        rho: f64,
        delta: f64,
    ) -> Result<Self> {
        if estimates.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some(bad) = estimates.iter().find(|v| !v.is_finite()) {
            return Err(Error::param("estimate", format!("{bad} is not finite")));
        }
        if !counts.is_empty() && counts.len() != estimates.len() {
            return Err(Error::param(
                "counts",
                format!("{} counts for {} estimates", counts.len(), estimates.len()),
            ));
        }
        check_positive("rho", rho)?;
        check_unit_interval_open("delta", delta)?;
        Ok(Self {
            estimates,
            counts,
            rho,
            delta,
        })
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// Units that received no draws and carry a placeholder estimate of zero.
    pub fn zero_draw_units(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 0)
            .map(|(u, _)| u)
            .collect()
    }

    /// The same estimates reported at a different accuracy.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::with_counts(self.estimates.clone(), self.counts.clone(), rho, self.delta)
    }

    pub fn max_error(&self, truth: &EffectProfile) -> Result<f64> {
        ensure_same_len(self, truth)?;
        Ok(self
            .estimates
            .iter()
            .zip(truth.effects())
            .map(|(e, t)| (e - t).abs())
            .fold(0.0, f64::max))
    }

    /// Whether every estimate is within `rho` of the truth.
    pub fn is_within_rho(&self, truth: &EffectProfile) -> Result<bool> {
        Ok(self.max_error(truth)? <= self.rho)
    }
}

pub(crate) fn ensure_same_len(estimates: &EstimateProfile, truth: &EffectProfile) -> Result<()> {
    if estimates.len() == truth.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            estimates: estimates.len(),
            effects: truth.len(),
        })
    }
}

/// A budget together with the accuracy target and the coarseness factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub budget: usize,
    pub epsilon: f64,
    pub gamma: f64,
}

impl BudgetSpec {
    pub fn new(budget: usize, epsilon: f64, gamma: f64) -> Result<Self> {
        check_unit_interval_open("epsilon", epsilon)?;
        check_positive("gamma", gamma)?;
        if budget == 0 {
            return Err(Error::BudgetOutOfRange { budget, units: 0 });
        }
        Ok(Self {
            budget,
            epsilon,
            gamma,
        })
    }

    /// Estimation accuracy `gamma * sqrt(epsilon)`.
    pub fn rho(&self) -> f64 {
        self.gamma * self.epsilon.sqrt()
    }
}

/// Resolve a budget given either as an absolute count or as a fraction of `units`.
///
/// Integers are absolute. Anything else must be a fraction in `(0, 1]` and is rounded
/// to the nearest count, with a floor of one.
pub fn parse_budget(text: &str, units: usize) -> Result<usize> {
    let text = text.trim();
    let budget = if let Ok(k) = text.parse::<usize>() {
        k
    } else {
        let f: f64 = text.parse().map_err(|_| {
            Error::param(
                "budget",
                format!("'{text}' is neither a count nor a fraction"),
            )
        })?;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::param(
                "budget",
                format!("fraction {f} is not in (0, 1]"),
            ));
        }
        ((f * units as f64).round() as usize).max(1)
    };
    if budget == 0 || budget > units {
        return Err(Error::BudgetOutOfRange { budget, units });
    }
    Ok(budget)
}

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn left_open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: true,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed {
            x >= self.lo
        } else {
            x > self.lo
        };
        let below = if self.hi_closed {
            x <= self.hi
        } else {
            x < self.hi
        };
        above && below
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

fn descending(values: &[f64], a: usize, b: usize) -> Ordering {
    values[b].total_cmp(&values[a]).then(a.cmp(&b))
}

/// Unit indices ordered by value, largest first; equal values keep index order.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| descending(values, a, b));
    order
}

/// The `k` highest-ranked units under [`rank_descending`], in rank order.
pub fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order = rank_descending(values);
    order.truncate(k);
    order
}

/// Selected units and the value they realize against the true effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationResult {
    /// Selected units in rank order.
    pub selected: Vec<usize>,
    pub value: f64,
    pub optimal_value: f64,
    /// The budget-th largest true effect.
    pub threshold: f64,
    /// The budget-th largest score used for selection.
    pub selection_threshold: f64,
    pub ratio: f64,
}

impl AllocationResult {
    /// Score `selected` (chosen using `scores`) against the true effects.
    pub fn evaluate(truth: &EffectProfile, scores: &[f64], selected: Vec<usize>) -> Result<Self> {
        let budget = selected.len();
        let optimal_value = truth.optimal_value(budget)?;
        let value = truth.value_of(&selected);
        let selection_threshold =
            selected
                .last()
                .map(|&u| scores[u])
                .ok_or(Error::BudgetOutOfRange {
                    budget,
                    units: truth.len(),
                })?;
        Ok(Self {
            ratio: value_ratio(value, optimal_value),
            threshold: truth.threshold(budget)?,
            selection_threshold,
            selected,
            value,
            optimal_value,
        })
    }
}

/// `value / optimum`, taken as 1 when the optimum is zero.
pub fn value_ratio(value: f64, optimum: f64) -> f64 {
    if optimum > 0.0 {
        value / optimum
    } else {
        1.0
    }
}

/// Decomposition of the units around the selection threshold at accuracy `rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdNeighborhood {
    pub units: usize,
    pub budget: usize,
    pub rho: f64,
    pub threshold: f64,
    /// Units strictly above `threshold + 2 rho`; always selected by an accurate enough estimator.
    pub clear_count: usize,
    /// Total effect of the clear units.
    pub clear_value: f64,
    /// Budget slots left after the clear units.
    pub contested_slots: usize,
    /// Fraction of all units with effect in `[threshold, threshold + 2 rho]`.
    pub band_fraction: f64,
    /// Optimal value restricted to the contested slots.
    pub contested_optimal_value: f64,
    /// Width trimmed from the top of the lower band so that it holds as many units as the upper band.
    pub alpha: f64,
    /// False when the lower band holds fewer units than the upper one, in which case `alpha` is 0.
    pub alpha_balanced: bool,
    /// Value of the lowest `contested_slots` units in `[threshold - 2 rho, threshold + 2 rho]`.
    pub contested_worst_value: f64,
}

impl ThresholdNeighborhood {
    /// Clear value per unit.
    pub fn clear_mass(&self) -> f64 {
        self.clear_value / self.units as f64
    }

    pub fn clear_interval(&self) -> Interval {
        Interval::left_open(self.threshold + 2.0 * self.rho, 1.0)
    }

    pub fn band_interval(&self) -> Interval {
        Interval::closed(self.threshold, self.threshold + 2.0 * self.rho)
    }
}

pub fn threshold_neighborhood(
    profile: &EffectProfile,
    budget: usize,
    rho: f64,
) -> Result<ThresholdNeighborhood> {
    check_positive("rho", rho)?;
    let threshold = profile.threshold(budget)?;
    let upper = threshold + 2.0 * rho;
    let lower = threshold - 2.0 * rho;
    let effects = profile.effects();

    let clear: Vec<f64> = effects.iter().copied().filter(|&t| t > upper).collect();
    let clear_value: f64 = clear.iter().sum();
    let band_count = effects
        .iter()
        .filter(|&&t| t >= threshold && t <= upper)
        .count();
    let contested_slots = budget - clear.len();

    let mut lower_band: Vec<f64> = effects
        .iter()
        .copied()
        .filter(|&t| t >= lower && t <= threshold)
        .collect();
    lower_band.sort_by(f64::total_cmp);
    let (alpha, alpha_balanced) = if lower_band.len() >= band_count {
        (threshold - lower_band[band_count - 1], true)
    } else {
        (0.0, false)
    };

    let mut admissible: Vec<f64> = effects
        .iter()
        .copied()
        .filter(|&t| t >= lower && t <= upper)
        .collect();
    admissible.sort_by(f64::total_cmp);
    let contested_worst_value = admissible.iter().take(contested_slots).sum();

    Ok(ThresholdNeighborhood {
        units: profile.len(),
        budget,
        rho,
        threshold,
        clear_count: clear.len(),
        clear_value,
        contested_slots,
        band_fraction: band_count as f64 / profile.len() as f64,
        contested_optimal_value: profile.optimal_value(budget)? - clear_value,
        alpha,
        alpha_balanced,
        contested_worst_value,
    })
}

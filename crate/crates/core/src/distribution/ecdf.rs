use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{top_k, EffectProfile, EstimateProfile, Interval};

/// Empirical distribution of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of the sample at or below `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= t) as f64 / self.len() as f64
    }

    pub fn count_in(&self, interval: Interval) -> usize {
        self.sorted
            .iter()
            .filter(|&&v| interval.contains(v))
            .count()
    }

    /// The `budget`-th largest sample value.
    pub fn kth_largest(&self, budget: usize) -> Result<f64> {
        if budget == 0 || budget > self.len() {
            return Err(Error::BudgetOutOfRange {
                budget,
                units: self.len(),
            });
        }
        Ok(self.sorted[self.len() - budget])
    }
}

/// Source of a selection threshold: a finite sample or an analytic family.
pub enum ThresholdSource<'a> {
    Sample(&'a EmpiricalCdf),
    Analytic(&'a super::DistributionSpec),
}

/// Threshold for a budget of `budget` out of `units`.
///
/// For a sample this is its `budget`-th largest value; for an analytic family it is
/// the `1 - budget/units` quantile.
pub fn quantile_threshold(source: ThresholdSource<'_>, budget: usize, units: usize) -> Result<f64> {
    if budget == 0 || budget > units {
        return Err(Error::BudgetOutOfRange { budget, units });
    }
    match source {
        ThresholdSource::Sample(cdf) => {
            if cdf.len() != units {
                return Err(Error::param(
                    "units",
                    format!("sample has {} values, not {units}", cdf.len()),
                ));
            }
            cdf.kth_largest(budget)
        }
        ThresholdSource::Analytic(spec) => spec.threshold(budget as f64 / units as f64),
    }
}

/// Bracket on the true CDF at `t` from `rho`-accurate estimates:
/// `(Fhat(t - rho), Fhat(t + rho))`.
pub fn cdf_bracket(estimates: &EstimateProfile, t: f64) -> Result<(f64, f64)> {
    let cdf = EmpiricalCdf::new(estimates.estimates())?;
    let rho = estimates.rho();
    Ok((cdf.eval(t - rho), cdf.eval(t + rho)))
}

/// Bracket on the number of true effects in `[lo, hi]`:
/// estimates in `[lo + rho, hi - rho]` and in `[lo - rho, hi + rho]`.
pub fn interval_count_bracket(
    estimates: &EstimateProfile,
    lo: f64,
    hi: f64,
) -> Result<(usize, usize)> {
    let cdf = EmpiricalCdf::new(estimates.estimates())?;
    let rho = estimates.rho();
    let inner = if hi - lo >= 2.0 * rho {
        cdf.count_in(Interval::closed(lo + rho, hi - rho))
    } else {
        0
    };
    Ok((inner, cdf.count_in(Interval::closed(lo - rho, hi + rho))))
}

/// Number of estimates in `[t - 2 rho, t + 4 rho]` around the estimated threshold `t`,
/// an upper bound on how many true effects sit in the band above the true threshold.
pub fn near_threshold_mass_bound(estimates: &EstimateProfile, estimated_threshold: f64) -> usize {
    let rho = estimates.rho();
    let band = Interval::closed(
        estimated_threshold - 2.0 * rho,
        estimated_threshold + 4.0 * rho,
    );
    estimates
        .estimates()
        .iter()
        .filter(|&&v| band.contains(v))
        .count()
}

/// Band count of the true profile that [`near_threshold_mass_bound`] dominates.
pub fn band_count(profile: &EffectProfile, budget: usize, rho: f64) -> Result<usize> {
    let t = profile.threshold(budget)?;
    let band = Interval::closed(t, t + 2.0 * rho);
    Ok(profile
        .effects()
        .iter()
        .filter(|&&v| band.contains(v))
        .count())
}

/// Estimated threshold under top-K selection of the estimates.
pub fn estimated_threshold(estimates: &EstimateProfile, budget: usize) -> Result<f64> {
    if budget == 0 || budget > estimates.len() {
        return Err(Error::BudgetOutOfRange {
            budget,
            units: estimates.len(),
        });
    }
    let order = top_k(estimates.estimates(), budget);
    Ok(estimates.estimates()[order[budget - 1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_steps() {
        let c = EmpiricalCdf::new(&[0.2, 0.4, 0.4, 0.9]).unwrap();
        assert_eq!(c.eval(0.1), 0.0);
        assert_eq!(c.eval(0.4), 0.75);
        assert_eq!(c.eval(1.0), 1.0);
        assert_eq!(c.kth_largest(1).unwrap(), 0.9);
        assert_eq!(c.kth_largest(3).unwrap(), 0.4);
    }

    #[test]
    fn uniform_grid_near_threshold_count() {
        let grid: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let e = EstimateProfile::new(grid, 0.05, 0.05).unwrap();
        let t = estimated_threshold(&e, 50).unwrap();
        let n = near_threshold_mass_bound(&e, t);
        assert!((29..=31).contains(&n), "{n}");
    }

    #[test]
    fn sample_threshold_matches_profile() {
        let p = EffectProfile::new(vec![0.1, 0.7, 0.3, 0.9]).unwrap();
        let c = EmpiricalCdf::new(p.effects()).unwrap();
        for k in 1..=4 {
            assert_eq!(
                quantile_threshold(ThresholdSource::Sample(&c), k, 4).unwrap(),
                p.threshold(k).unwrap()
            );
        }
        assert!(quantile_threshold(ThresholdSource::Sample(&c), 5, 4).is_err());
    }
}

//! Sample-size planning and simulated effect estimation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_unit_interval_open, Error, Result};
use crate::model::{EffectProfile, EstimateProfile};
use crate::rng::StreamKey;

/// How many outcome draws each unit receives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub units: usize,
    pub per_unit: u64,
    pub total: u64,
    /// Per-unit absolute accuracy the plan is sized for.
    pub accuracy: f64,
    pub delta: f64,
}

impl SamplePlan {
    fn new(units: usize, per_unit: u64, accuracy: f64, delta: f64) -> Self {
        Self {
            units,
            per_unit,
            total: per_unit * units as u64,
            accuracy,
            delta,
        }
    }

    pub fn mode(&self) -> SamplingMode {
        SamplingMode::EqualPerUnit {
            per_unit: self.per_unit,
        }
    }
}

/// Draws per unit so that, by Hoeffding and a union bound over `units`,
/// every estimate lands within `accuracy` with probability at least `1 - delta`.
pub fn hoeffding_per_unit(units: usize, accuracy: f64, delta: f64) -> Result<u64> {
    if units == 0 {
        return Err(Error::EmptyProfile);
    }
    check_positive("accuracy", accuracy)?;
    check_unit_interval_open("delta", delta)?;
    let n = ((2.0 * units as f64 / delta).ln() / (2.0 * accuracy * accuracy)).ceil();
    Ok(n.max(1.0) as u64)
}

/// Accuracy that `draws` samples buy for one unit at the union-bounded confidence.
pub fn hoeffding_radius(draws: u64, units: usize, delta: f64) -> f64 {
    if draws == 0 {
        return f64::INFINITY;
    }
    ((2.0 * units as f64 / delta).ln() / (2.0 * draws as f64)).sqrt()
}

/// Coarse plan: accuracy `gamma * sqrt(epsilon)` per unit.
pub fn lea_sample_size(units: usize, epsilon: f64, delta: f64, gamma: f64) -> Result<SamplePlan> {
    check_unit_interval_open("epsilon", epsilon)?;
    check_positive("gamma", gamma)?;
    let rho = gamma * epsilon.sqrt();
    Ok(SamplePlan::new(
        units,
        hoeffding_per_unit(units, rho, delta)?,
        rho,
        delta,
    ))
}

/// Full-accuracy plan: accuracy `epsilon` per unit.
pub fn fullcate_sample_size(units: usize, epsilon: f64, delta: f64) -> Result<SamplePlan> {
    check_unit_interval_open("epsilon", epsilon)?;
    Ok(SamplePlan::new(
        units,
        hoeffding_per_unit(units, epsilon, delta)?,
        epsilon,
        delta,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingMode {
    /// Every unit receives the same number of draws.
    EqualPerUnit { per_unit: u64 },
    /// Each of `total` draws goes to a unit chosen uniformly at random.
    UniformRandomUnit { total: u64 },
}

/// Source of bounded outcomes in `[0, 1]` for a unit with a given mean effect.
pub trait OutcomeModel {
    /// Sum of `draws` outcomes.
    fn sum_outcomes(&self, effect: f64, draws: u64, rng: &mut ChaCha8Rng) -> f64;
}

/// Outcomes are Bernoulli with success probability equal to the effect.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bernoulli;

impl OutcomeModel for Bernoulli {
    fn sum_outcomes(&self, effect: f64, draws: u64, rng: &mut ChaCha8Rng) -> f64 {
        match Binomial::new(draws, effect) {
            Ok(b) => b.sample(rng) as f64,
            Err(_) => unreachable!("effects are validated to lie in [0, 1]"),
        }
    }
}

/// Draw Bernoulli outcomes for every unit and return their empirical means.
///
/// `rho` and `delta` describe the accuracy the draws are meant to achieve and are
/// carried on the result unchanged. Units that get no draws report an estimate of 0.
pub fn draw_estimates(
    profile: &EffectProfile,
    mode: SamplingMode,
    rho: f64,
    delta: f64,
    key: StreamKey,
) -> Result<EstimateProfile> {
    draw_estimates_with(profile, mode, rho, delta, key, &Bernoulli)
}

pub fn draw_estimates_with(
    profile: &EffectProfile,
    mode: SamplingMode,
    rho: f64,
    delta: f64,
    key: StreamKey,
    model: &dyn OutcomeModel,
) -> Result<EstimateProfile> {
    let units = profile.len();
    let counts: Vec<u64> = match mode {
        SamplingMode::EqualPerUnit { per_unit } => vec![per_unit; units],
        SamplingMode::UniformRandomUnit { total } => {
            let mut counts = vec![0u64; units];
            let mut picker = key.rng(u64::MAX);
            for _ in 0..total {
                counts[picker.random_range(0..units)] += 1;
            }
            counts
        }
    };
    let estimates = profile
        .effects()
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(u, (&effect, &n))| {
            if n == 0 {
                0.0
            } else {
                model.sum_outcomes(effect, n, &mut key.rng(u as u64)) / n as f64
            }
        })
        .collect();
    EstimateProfile::with_counts(estimates, counts, rho, delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_sample_sizes() {
        // ceil(ln(2000) / 0.02) = ceil(380.05)
        assert_eq!(hoeffding_per_unit(50, 0.1, 0.05).unwrap(), 381);
        let plan = fullcate_sample_size(50, 0.1, 0.05).unwrap();
        assert_eq!((plan.per_unit, plan.total), (381, 19050));
        let lea = lea_sample_size(50, 0.04, 0.05, 0.5).unwrap();
        assert_eq!((lea.per_unit, lea.total), (381, 19050));
        assert!((lea.accuracy - 0.1).abs() < 1e-15);
    }

    #[test]
    fn invalid_plan_parameters() {
        assert!(lea_sample_size(10, 0.0, 0.05, 0.5).is_err());
        assert!(lea_sample_size(10, 0.1, 1.0, 0.5).is_err());
        assert!(lea_sample_size(10, 0.1, 0.05, 0.0).is_err());
        assert!(hoeffding_per_unit(0, 0.1, 0.05).is_err());
    }

    #[test]
    fn radius_inverts_plan() {
        let n = hoeffding_per_unit(50, 0.1, 0.05).unwrap();
        let r = hoeffding_radius(n, 50, 0.05);
        assert!(r <= 0.1 && r > 0.099);
        assert!(hoeffding_radius(0, 50, 0.05).is_infinite());
    }

    #[test]
    fn extreme_effects_are_exact() {
        let p = EffectProfile::new(vec![0.0, 1.0, 1.0]).unwrap();
        let e = draw_estimates(
            &p,
            SamplingMode::EqualPerUnit { per_unit: 25 },
            0.1,
            0.05,
            StreamKey::new(3, 0),
        )
        .unwrap();
        assert_eq!(e.estimates(), &[0.0, 1.0, 1.0]);
    }

    #[test]
    fn uniform_random_unit_conserves_total() {
        let p = EffectProfile::uniform_grid(20).unwrap();
        let e = draw_estimates(
            &p,
            SamplingMode::UniformRandomUnit { total: 30 },
            0.1,
            0.05,
            StreamKey::new(9, 1),
        )
        .unwrap();
        assert_eq!(e.counts().iter().sum::<u64>(), 30);
        for u in e.zero_draw_units() {
            assert_eq!(e.estimates()[u], 0.0);
        }
    }

    #[test]
    fn draws_are_reproducible() {
        let p = EffectProfile::uniform_grid(10).unwrap();
        let mode = SamplingMode::UniformRandomUnit { total: 500 };
        let a = draw_estimates(&p, mode, 0.1, 0.05, StreamKey::new(42, 7)).unwrap();
        let b = draw_estimates(&p, mode, 0.1, 0.05, StreamKey::new(42, 7)).unwrap();
        let c = draw_estimates(&p, mode, 0.1, 0.05, StreamKey::new(43, 7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

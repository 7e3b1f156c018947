use serde::{Deserialize, Serialize};

use crate::certificate::certify_from_estimates;
use crate::error::{Error, Result};
use crate::flex::{overspend_with, slide_with, PrefixValues, SlideOptions};
use crate::model::{EffectProfile, EstimateProfile};
use crate::rng::StreamKey;
use crate::sampling::{draw_estimates, hoeffding_radius, SamplingMode};

use super::config::{SamplingKind, SweepConfig};

const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Axis is the total number of draws.
    Value,
    /// Axis is the accuracy target.
    Failure,
}

/// One exported row. `budget_K = 0` marks an aggregate over all budgets at that axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: f64,
    #[serde(rename = "budget_K")]
    pub budget: usize,
    pub mean_ratio: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub failure_rate: Option<f64>,
    pub slide_dist: Option<f64>,
    pub underspend_dist: Option<f64>,
    #[serde(rename = "overspend_S")]
    pub overspend: Option<f64>,
    /// Ratio reference curves, as fractions of the optimum.
    pub ref_worst: Option<f64>,
    pub ref_theory: Option<f64>,
}

/// Failure-sweep tallies for one accuracy target, summed over budgets and trials.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureStats {
    pub epsilon: f64,
    pub total_samples: u64,
    pub evaluations: usize,
    pub failures: usize,
    pub slide_found: usize,
    pub slide_distance_sum: usize,
    pub underspend_found: usize,
    pub underspend_distance_sum: usize,
    pub overspend_found: usize,
    pub overspend_sum: usize,
    pub overspend_one: usize,
    pub certified: usize,
    pub certified_failures: usize,
}

impl FailureStats {
    pub fn failure_rate(&self) -> f64 {
        ratio_or_zero(self.failures, self.evaluations)
    }

    pub fn mean_slide_distance(&self) -> Option<f64> {
        mean_of(self.slide_distance_sum, self.slide_found)
    }

    pub fn mean_underspend_distance(&self) -> Option<f64> {
        mean_of(self.underspend_distance_sum, self.underspend_found)
    }

    pub fn mean_overspend(&self) -> Option<f64> {
        mean_of(self.overspend_sum, self.overspend_found)
    }

    /// Share of failures that one extra unit repairs.
    pub fn overspend_one_share(&self) -> Option<f64> {
        mean_of(self.overspend_one, self.failures)
    }

    fn absorb(&mut self, other: &FailureStats) {
        self.evaluations += other.evaluations;
        self.failures += other.failures;
        self.slide_found += other.slide_found;
        self.slide_distance_sum += other.slide_distance_sum;
        self.underspend_found += other.underspend_found;
        self.underspend_distance_sum += other.underspend_distance_sum;
        self.overspend_found += other.overspend_found;
        self.overspend_sum += other.overspend_sum;
        self.overspend_one += other.overspend_one;
        self.certified += other.certified;
        self.certified_failures += other.certified_failures;
    }
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn mean_of(sum: usize, count: usize) -> Option<f64> {
    (count > 0).then(|| sum as f64 / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub units: usize,
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    /// Per-target tallies; empty for value sweeps.
    pub stats: Vec<FailureStats>,
}

impl SweepResult {
    pub fn empty(kind: SweepKind, units: usize, config: SweepConfig) -> Self {
        Self {
            kind,
            units,
            config,
            rows: Vec::new(),
            stats: Vec::new(),
        }
    }
}

/// Mean with a normal-approximation 95% interval.
fn mean_ci(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, mean, mean);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = Z_95 * (var / n).sqrt();
    (mean, mean - half, mean + half)
}

fn sampling_mode(kind: SamplingKind, total: u64, units: usize) -> SamplingMode {
    match kind {
        SamplingKind::UniformRandomUnit => SamplingMode::UniformRandomUnit { total },
        SamplingKind::EqualPerUnit => SamplingMode::EqualPerUnit {
            per_unit: total.div_ceil(units as u64),
        },
    }
}

fn log_term(units: usize, delta: f64) -> f64 {
    (2.0 * units as f64 / delta).ln()
}

/// Total draws the failure sweep spends at accuracy target `epsilon`.
pub fn failure_sweep_samples(units: usize, epsilon: f64, delta: f64) -> u64 {
    (units as f64 * log_term(units, delta) / epsilon).ceil() as u64
}

/// Reference ratios at `total` draws: `(worst, theory)`.
pub fn reference_ratios(units: usize, total: u64, delta: f64) -> (f64, f64) {
    let x = units as f64 * log_term(units, delta) / total as f64;
    (1.0 - x.sqrt(), 1.0 - x)
}

/// Accuracy certified by the realized draw counts, or `None` when some unit got no draws.
fn realized_rho(estimates: &EstimateProfile, units: usize, delta: f64) -> Option<f64> {
    let fewest = estimates.counts().iter().copied().min()?;
    let rho = hoeffding_radius(fewest, units, delta);
    rho.is_finite().then_some(rho)
}

fn trial_key(config: &SweepConfig, kind: SweepKind, axis_index: usize, trial: usize) -> StreamKey {
    let stream = match kind {
        SweepKind::Value => 0,
        SweepKind::Failure => 1,
    };
    StreamKey::new(config.seed, stream)
        .child(axis_index as u64)
        .child(trial as u64)
}

/// Realized top-K ratio against sample size, for every configured budget.
pub fn run_value_vs_samples(profile: &EffectProfile, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let units = profile.len();
    let budgets = config.resolve_budgets(units);
    let mut result = SweepResult::empty(SweepKind::Value, units, config.clone());
    for (axis_index, &total) in config.sample_sizes.iter().enumerate() {
        let mode = sampling_mode(config.sampling, total, units);
        let nominal_rho = hoeffding_radius(total.div_ceil(units as u64), units, config.delta);
        let mut ratios = vec![Vec::with_capacity(config.trials); budgets.len()];
        for trial in 0..config.trials {
            let key = trial_key(config, SweepKind::Value, axis_index, trial);
            let estimates = draw_estimates(profile, mode, nominal_rho, config.delta, key)?;
            let prefix = PrefixValues::new(profile, &estimates)?;
            for (slot, &k) in ratios.iter_mut().zip(&budgets) {
                slot.push(prefix.ratio(k));
            }
        }
        let (ref_worst, ref_theory) = reference_ratios(units, total, config.delta);
        for (&k, values) in budgets.iter().zip(&ratios) {
            let (mean, lo, hi) = mean_ci(values);
            result.rows.push(SweepRow {
                axis: total as f64,
                budget: k,
                mean_ratio: mean,
                ci_lo: lo,
                ci_hi: hi,
                failure_rate: None,
                slide_dist: None,
                underspend_dist: None,
                overspend: None,
                ref_worst: Some(ref_worst),
                ref_theory: Some(ref_theory),
            });
        }
    }
    Ok(result)
}

/// Failure rate of top-K selection, and how far sliding or overspending goes to repair it,
/// for every accuracy target and budget.
pub fn run_failure_sweep(profile: &EffectProfile, config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    if config.epsilons.is_empty() {
        return Err(Error::Config(
            "failure sweep needs at least one epsilon".into(),
        ));
    }
    let units = profile.len();
    let budgets = config.resolve_budgets(units);
    let slide = SlideOptions::full(units);
    let mut result = SweepResult::empty(SweepKind::Failure, units, config.clone());

    for (axis_index, &epsilon) in config.epsilons.iter().enumerate() {
        let total = failure_sweep_samples(units, epsilon, config.delta);
        let mode = sampling_mode(config.sampling, total, units);
        let nominal_rho = config.gamma * epsilon.sqrt();
        let mut per_budget = vec![FailureStats::default(); budgets.len()];
        let mut ratios = vec![Vec::with_capacity(config.trials); budgets.len()];

        for trial in 0..config.trials {
            let key = trial_key(config, SweepKind::Failure, axis_index, trial);
            let estimates = draw_estimates(profile, mode, nominal_rho, config.delta, key)?;
            let prefix = PrefixValues::new(profile, &estimates)?;
            let certifying = match realized_rho(&estimates, units, config.delta) {
                Some(rho) => Some(estimates.with_rho(rho)?),
                None => None,
            };
            for (i, &k) in budgets.iter().enumerate() {
                let stats = &mut per_budget[i];
                stats.evaluations += 1;
                ratios[i].push(prefix.ratio(k));
                let failed = !prefix.meets(k, epsilon);
                let certified = match &certifying {
                    Some(est) => certify_from_estimates(est, k, epsilon)?.certified,
                    None => false,
                };
                if certified {
                    stats.certified += 1;
                    if failed {
                        stats.certified_failures += 1;
                    }
                }
                if !failed {
                    continue;
                }
                stats.failures += 1;
                let slid = slide_with(&prefix, k, epsilon, &slide);
                if let Some(k2) = slid.nearest_budget {
                    stats.slide_found += 1;
                    stats.slide_distance_sum += k.abs_diff(k2);
                }
                if let Some(k2) = slid.nearest_underspend_budget {
                    stats.underspend_found += 1;
                    stats.underspend_distance_sum += k - k2;
                }
                if let Some(s) = overspend_with(&prefix, k, epsilon).overspend {
                    stats.overspend_found += 1;
                    stats.overspend_sum += s;
                    if s == 1 {
                        stats.overspend_one += 1;
                    }
                }
            }
        }

        let mut aggregate = FailureStats {
            epsilon,
            total_samples: total,
            ..FailureStats::default()
        };
        for ((&k, stats), values) in budgets.iter().zip(&per_budget).zip(&ratios) {
            let (mean, lo, hi) = mean_ci(values);
            result
                .rows
                .push(failure_row(epsilon, k, (mean, lo, hi), stats));
            aggregate.absorb(stats);
        }
        let all: Vec<f64> = ratios.concat();
        let (mean, lo, hi) = mean_ci(&all);
        result
            .rows
            .push(failure_row(epsilon, 0, (mean, lo, hi), &aggregate));
        result.stats.push(aggregate);
    }
    Ok(result)
}

fn failure_row(
    epsilon: f64,
    budget: usize,
    (mean, lo, hi): (f64, f64, f64),
    stats: &FailureStats,
) -> SweepRow {
    SweepRow {
        axis: epsilon,
        budget,
        mean_ratio: mean,
        ci_lo: lo,
        ci_hi: hi,
        failure_rate: Some(stats.failure_rate()),
        slide_dist: stats.mean_slide_distance(),
        underspend_dist: stats.mean_underspend_distance(),
        overspend: stats.mean_overspend(),
        ref_worst: None,
        ref_theory: None,
    }
}

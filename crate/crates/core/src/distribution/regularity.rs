use serde::{Deserialize, Serialize};

use super::DistributionSpec;
use crate::error::{check_positive, Error, Result};
use crate::model::Interval;

/// Default ceiling on the mass-to-width ratio for a profile to count as regular.
pub const DEFAULT_REGULARITY_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityMethod {
    /// Exact maximum over intervals with sample points as endpoints.
    IntervalScan,
    /// Supremum of the density, an upper bound on the ratio at every width.
    DensitySup,
    /// Grid over window positions and widths in `[2 rho, 4 rho]`.
    GridScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub rho: f64,
    /// Largest mass per unit width over intervals of width at least `2 rho`.
    pub c_hat: f64,
    pub worst_interval: Interval,
    pub limit: f64,
    pub regular: bool,
    pub method: RegularityMethod,
}

pub enum RegularitySource<'a> {
    Sample(&'a [f64]),
    Analytic(&'a DistributionSpec),
}

pub fn regularity_check(
    source: RegularitySource<'_>,
    rho: f64,
    limit: f64,
) -> Result<RegularityReport> {
    check_positive("rho", rho)?;
    check_positive("limit", limit)?;
    if 2.0 * rho > 1.0 {
        return Err(Error::param(
            "rho",
            format!("{rho} leaves no interval of width 2 rho inside [0, 1]"),
        ));
    }
    let (c_hat, worst_interval, method) = match source {
        RegularitySource::Sample(values) => {
            let (c, i) = sample_scan(values, rho)?;
            (c, i, RegularityMethod::IntervalScan)
        }
        RegularitySource::Analytic(spec) => match spec.density_argmax() {
            Some(at) => (
                spec.density_sup(),
                window_at(at - rho, 2.0 * rho),
                RegularityMethod::DensitySup,
            ),
            None => {
                let (c, i) = analytic_grid_scan(spec, rho);
                (c, i, RegularityMethod::GridScan)
            }
        },
    };
    Ok(RegularityReport {
        rho,
        c_hat,
        worst_interval,
        limit,
        regular: c_hat <= limit,
        method,
    })
}

/// Closed window of `width` starting near `start`, shifted to stay inside `[0, 1]`.
fn window_at(start: f64, width: f64) -> Interval {
    let lo = start.clamp(0.0, 1.0 - width);
    Interval::closed(lo, lo + width)
}

fn sample_scan(values: &[f64], rho: f64) -> Result<(f64, Interval)> {
    if values.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let min_width = 2.0 * rho;
    let mut best = (0.0, window_at(xs[0], min_width));
    for i in 0..xs.len() {
        for j in i..xs.len() {
            let span = xs[j] - xs[i];
            let width = span.max(min_width);
            let ratio = (j - i + 1) as f64 / m / width;
            if ratio > best.0 {
                let interval = if span >= min_width {
                    Interval::closed(xs[i], xs[j])
                } else {
                    window_at(xs[i], min_width)
                };
                best = (ratio, interval);
            }
        }
    }
    Ok(best)
}

fn analytic_grid_scan(spec: &DistributionSpec, rho: f64) -> (f64, Interval) {
    const POSITIONS: usize = 2000;
    const WIDTHS: usize = 8;
    let mut best = (0.0, window_at(0.0, 2.0 * rho));
    for w in 0..=WIDTHS {
        let width = 2.0 * rho * (1.0 + w as f64 / WIDTHS as f64);
        if width > 1.0 {
            break;
        }
        for p in 0..=POSITIONS {
            let lo = (1.0 - width) * p as f64 / POSITIONS as f64;
            let ratio = (spec.cdf(lo + width) - spec.cdf(lo)) / width;
            if ratio > best.0 {
                best = (ratio, Interval::closed(lo, lo + width));
            }
        }
    }
    best
}

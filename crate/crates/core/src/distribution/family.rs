use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::numeric::{bisect, incomplete_beta, normal_cdf, normal_pdf};
use crate::error::{check_positive, Error, Result};

/// An analytic effect distribution supported on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionSpec {
    Uniform,
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Normal with the given mean and standard deviation, truncated to `[0, 1]` and renormalized.
    TruncatedGaussian {
        mean: f64,
        sd: f64,
    },
}

impl DistributionSpec {
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("beta", beta)?;
        Ok(Self::Beta { alpha, beta })
    }

    pub fn truncated_gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::param("mean", format!("{mean} is not finite")));
        }
        check_positive("sd", sd)?;
        Ok(Self::TruncatedGaussian { mean, sd })
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Beta { .. } => "beta",
            Self::TruncatedGaussian { .. } => "gaussian",
        }
    }

    pub fn params_label(&self) -> String {
        match *self {
            Self::Uniform => String::new(),
            Self::Beta { alpha, beta } => format!("alpha={alpha};beta={beta}"),
            Self::TruncatedGaussian { mean, sd } => format!("mean={mean};sd={sd}"),
        }
    }

    /// Standardized endpoints and normalizing mass of a truncated Gaussian.
    fn gaussian_frame(mean: f64, sd: f64) -> (f64, f64, f64) {
        let a = -mean / sd;
        let b = (1.0 - mean) / sd;
        (a, b, normal_cdf(b) - normal_cdf(a))
    }

    pub fn pdf(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match *self {
            Self::Uniform => 1.0,
            Self::Beta { alpha, beta } => {
                let norm = super::numeric::beta_fn(alpha, beta);
                t.powf(alpha - 1.0) * (1.0 - t).powf(beta - 1.0) / norm
            }
            Self::TruncatedGaussian { mean, sd } => {
                let (_, _, z) = Self::gaussian_frame(mean, sd);
                normal_pdf((t - mean) / sd) / (sd * z)
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        match *self {
            Self::Uniform => t,
            Self::Beta { alpha, beta } => incomplete_beta(t, alpha, beta),
            Self::TruncatedGaussian { mean, sd } => {
                let (a, _, z) = Self::gaussian_frame(mean, sd);
                ((normal_cdf((t - mean) / sd) - normal_cdf(a)) / z).clamp(0.0, 1.0)
            }
        }
    }

    /// Smallest `t` with `cdf(t) = p`, by bisection.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("probability", format!("{p} is not in [0, 1]")));
        }
        Ok(match *self {
            Self::Uniform => p,
            _ if p == 0.0 => 0.0,
            _ if p == 1.0 => 1.0,
            _ => bisect(|t| self.cdf(t), p, 0.0, 1.0),
        })
    }

    /// Effect level above which a `budget_fraction` share of the mass lies.
    pub fn threshold(&self, budget_fraction: f64) -> Result<f64> {
        check_fraction(budget_fraction)?;
        self.quantile(1.0 - budget_fraction)
    }

    /// `int_lo^hi t f(t) dt`, with the bounds clipped to `[0, 1]`.
    pub fn partial_moment(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
        if hi <= lo {
            return 0.0;
        }
        match *self {
            Self::Uniform => 0.5 * (hi * hi - lo * lo),
            Self::Beta { alpha, beta } => {
                alpha / (alpha + beta)
                    * (incomplete_beta(hi, alpha + 1.0, beta)
                        - incomplete_beta(lo, alpha + 1.0, beta))
            }
            Self::TruncatedGaussian { mean, sd } => {
                let (_, _, z) = Self::gaussian_frame(mean, sd);
                let (ylo, yhi) = ((lo - mean) / sd, (hi - mean) / sd);
                (mean * (normal_cdf(yhi) - normal_cdf(ylo))
                    + sd * (normal_pdf(ylo) - normal_pdf(yhi)))
                    / z
            }
        }
    }

    /// Per-unit optimal value at a budget fraction: the first moment above the threshold.
    pub fn optimal_value(&self, budget_fraction: f64) -> Result<f64> {
        let t = self.threshold(budget_fraction)?;
        Ok(self.partial_moment(t, 1.0))
    }

    /// Location of the largest density on `[0, 1]`, or `None` when the density is unbounded.
    pub fn density_argmax(&self) -> Option<f64> {
        match *self {
            Self::Uniform => Some(0.5),
            Self::Beta { alpha, beta } => {
                if alpha < 1.0 || beta < 1.0 {
                    None
                } else if alpha == 1.0 && beta == 1.0 {
                    Some(0.5)
                } else if alpha == 1.0 {
                    Some(0.0)
                } else if beta == 1.0 {
                    Some(1.0)
                } else {
                    Some((alpha - 1.0) / (alpha + beta - 2.0))
                }
            }
            Self::TruncatedGaussian { mean, .. } => Some(mean.clamp(0.0, 1.0)),
        }
    }

    /// Supremum of the density; infinite for Beta shapes below one.
    pub fn density_sup(&self) -> f64 {
        self.density_argmax().map_or(f64::INFINITY, |t| self.pdf(t))
    }
}

pub(crate) fn check_fraction(budget_fraction: f64) -> Result<()> {
    if budget_fraction > 0.0 && budget_fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "budget fraction",
            format!("{budget_fraction} is not in (0, 1]"),
        ))
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform => write!(f, "uniform"),
            Self::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Self::TruncatedGaussian { mean, sd } => write!(f, "gauss:{mean},{sd}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Accepts `uniform`, `beta:A,B` and `gauss:MEAN,SD`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::param(
                "family",
                format!("'{s}' is not uniform, beta:A,B or gauss:MEAN,SD"),
            )
        };
        let (name, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let nums = || -> Result<(f64, f64)> {
            let (x, y) = rest.split_once(',').ok_or_else(bad)?;
            Ok((
                x.trim().parse().map_err(|_| bad())?,
                y.trim().parse().map_err(|_| bad())?,
            ))
        };
        match name.to_ascii_lowercase().as_str() {
            "uniform" if rest.is_empty() => Ok(Self::Uniform),
            "beta" => {
                let (a, b) = nums()?;
                Self::beta(a, b)
            }
            "gauss" | "gaussian" | "normal" => {
                let (m, s) = nums()?;
                Self::truncated_gaussian(m, s)
            }
            _ => Err(bad()),
        }
    }
}

/// Closed-form inputs of the coarseness factor at one budget fraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub family: String,
    pub params: String,
    pub budget_fraction: f64,
    pub threshold: f64,
    pub optimal_value: f64,
    pub density_sup: f64,
    pub gamma: f64,
}

/// Largest coarseness factor the density bound allows: `sqrt(V / (8 c))`.
pub fn gamma_for(spec: &DistributionSpec, budget_fraction: f64) -> Result<GammaRow> {
    let threshold = spec.threshold(budget_fraction)?;
    let optimal_value = spec.partial_moment(threshold, 1.0);
    let density_sup = spec.density_sup();
    Ok(GammaRow {
        family: spec.family_name().to_string(),
        params: spec.params_label(),
        budget_fraction,
        threshold,
        optimal_value,
        density_sup,
        gamma: (optimal_value / (8.0 * density_sup)).sqrt(),
    })
}

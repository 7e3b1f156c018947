//! Effect distributions: analytic families, empirical CDFs, regularity and
//! the band-balance optimality test.

mod condition;
mod ecdf;
mod family;
pub mod numeric;
mod regularity;

pub use condition::{
    exact_condition, exact_condition_analytic, uniform_boundary_rho, ConditionReport,
};
pub use ecdf::{
    band_count, cdf_bracket, estimated_threshold, interval_count_bracket,
    near_threshold_mass_bound, quantile_threshold, EmpiricalCdf, ThresholdSource,
};
pub use family::{gamma_for, DistributionSpec, GammaRow};
pub use regularity::{
    regularity_check, RegularityMethod, RegularityReport, RegularitySource,
    DEFAULT_REGULARITY_LIMIT,
};

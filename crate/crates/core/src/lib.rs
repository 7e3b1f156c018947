//! Budget-constrained allocation of a treatment to whole units from coarse effect estimates.
//!
//! Each unit is estimated only to accuracy `gamma * sqrt(epsilon)` and the top `K`
//! units by estimate are selected. The crate provides the selection, its
//! sample-size planning, accuracy bounds and certificates, budget-flexibility
//! strategies and a reproducible simulation harness.

#![forbid(unsafe_code)]

pub mod allocator;
pub mod certificate;
pub mod distribution;
pub mod error;
pub mod flex;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sampling;

pub use error::{Error, ErrorClass, Result};
pub use model::{AllocationResult, BudgetSpec, EffectProfile, EstimateProfile, Interval};
pub use rng::StreamKey;

//! Replicated simulation sweeps over ingested or synthetic unit profiles.

mod config;
mod export;
mod ingest;
mod sweep;

pub use config::{synthetic_profile, SamplingKind, SweepConfig};
pub use export::{
    export_results, parse_csv_rows, read_csv_rows, to_csv_string, to_json_string, ExportDocument,
    ExportFormat, CSV_HEADER,
};
pub use ingest::{
    ingest_rct, ingest_units, min_max_normalize, read_rct, units_to_csv, Covariate, DroppedGroup,
    GroupingMethod, GroupingSpec, Individual, UnitTable,
};
pub use sweep::{
    failure_sweep_samples, reference_ratios, run_failure_sweep, run_value_vs_samples, FailureStats,
    SweepKind, SweepResult, SweepRow,
};

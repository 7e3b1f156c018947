//! `lea`: coarse-estimate allocation from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lea_core::allocator::lea_allocate;
use lea_core::certificate::certify_from_estimates;
use lea_core::distribution::{
    gamma_for, regularity_check, DistributionSpec, RegularitySource, DEFAULT_REGULARITY_LIMIT,
};
use lea_core::flex::{overspend_budget, slide_budget, two_spikes_instance, SlideOptions};
use lea_core::harness::{
    export_results, ingest_rct, ingest_units, run_failure_sweep, run_value_vs_samples,
    units_to_csv, ExportFormat, GroupingMethod, GroupingSpec, SweepConfig, SweepKind,
};
use lea_core::model::parse_budget;
use lea_core::sampling::{draw_estimates, lea_sample_size};
use lea_core::{Error, ErrorClass, EstimateProfile, Result, StreamKey};

#[derive(Debug, Parser)]
#[command(
    name = "lea",
    version,
    about = "Top-K treatment allocation from coarse effect estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate coarse estimates for a unit table and select the top K.
    Allocate {
        #[arg(long)]
        input: PathBuf,
        /// Absolute count or a fraction of the unit count.
        #[arg(long)]
        budget: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check whether top-K selection from an estimate table is provably near-optimal.
    Certify {
        /// Table of estimates with header `unit_id,tau`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        budget: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
    },
    /// Coarseness factors for an analytic effect distribution, as CSV.
    GammaTable {
        /// `uniform`, `beta:A,B` or `gauss:MEAN,SD`.
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        budgets: Vec<f64>,
    },
    /// Largest effect density over windows of width 2*rho.
    Regularity {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = DEFAULT_REGULARITY_LIMIT)]
        threshold: f64,
    },
    /// Run a replicated sweep described by a TOML config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: SweepMode,
        /// Output file; a `.json` extension selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// Repair a budget by sliding it or by overspending.
    Flex {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        budget: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum)]
        mode: FlexMode,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the two-spike hard instance as a unit table.
    TwoSpikes {
        #[arg(long = "M", alias = "units")]
        units: usize,
        #[arg(long)]
        epsilon: f64,
    },
    /// Turn individual-level trial data into a normalized unit table.
    Ingest {
        /// Trial CSV with header `individual_id,treated,outcome,...`.
        #[arg(long)]
        input: PathBuf,
        /// Numeric covariate to bin on.
        #[arg(
            long,
            conflicts_with = "assignment",
            required_unless_present = "assignment"
        )]
        covariate: Option<String>,
        #[arg(long, default_value_t = 10)]
        groups: usize,
        /// CSV with header `individual_id,unit_id`.
        #[arg(long)]
        assignment: Option<PathBuf>,
        /// Negate outcomes first, for outcomes where lower is better.
        #[arg(long)]
        flip_sign: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SweepMode {
    Value,
    Failure,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FlexMode {
    Slide,
    Underspend,
    Overspend,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Domain => 1,
                ErrorClass::Input => 2,
            })
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0)
    });
    eprintln!("seed: {seed}");
    seed
}

fn draw_lea_estimates(
    input: &Path,
    budget: &str,
    epsilon: f64,
    gamma: f64,
    delta: f64,
    seed: Option<u64>,
) -> Result<(lea_core::EffectProfile, EstimateProfile, usize)> {
    let profile = ingest_units(input)?.profile;
    let k = parse_budget(budget, profile.len())?;
    let plan = lea_sample_size(profile.len(), epsilon, delta, gamma)?;
    let key = StreamKey::new(resolve_seed(seed), 0);
    let estimates = draw_estimates(&profile, plan.mode(), plan.accuracy, delta, key)?;
    Ok((profile, estimates, k))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Allocate {
            input,
            budget,
            epsilon,
            gamma,
            delta,
            seed,
        } => {
            let (profile, estimates, k) =
                draw_lea_estimates(&input, &budget, epsilon, gamma, delta, seed)?;
            print_json(&lea_allocate(&profile, &estimates, k)?)
        }
        Command::Certify {
            input,
            budget,
            epsilon,
            rho,
            delta,
        } => {
            let values = ingest_units(&input)?.profile.effects().to_vec();
            let k = parse_budget(&budget, values.len())?;
            let estimates = EstimateProfile::new(values, rho, delta)?;
            print_json(&certify_from_estimates(&estimates, k, epsilon)?)
        }
        Command::GammaTable { family, budgets } => {
            let spec: DistributionSpec = family.parse()?;
            println!("family,params,K_over_M,tau_K,V_opt,c,gamma");
            for fraction in budgets {
                let r = gamma_for(&spec, fraction)?;
                println!(
                    "{},{},{},{},{},{},{}",
                    r.family,
                    r.params,
                    r.budget_fraction,
                    r.threshold,
                    r.optimal_value,
                    r.density_sup,
                    r.gamma
                );
            }
            Ok(())
        }
        Command::Regularity {
            input,
            rho,
            threshold,
        } => {
            let profile = ingest_units(&input)?.profile;
            print_json(&regularity_check(
                RegularitySource::Sample(profile.effects()),
                rho,
                threshold,
            )?)
        }
        Command::Sweep { config, mode, out } => {
            let config = SweepConfig::from_file(&config)?;
            let profile = config.load_profile()?;
            let result = match mode {
                SweepMode::Value => run_value_vs_samples(&profile, &config)?,
                SweepMode::Failure => run_failure_sweep(&profile, &config)?,
            };
            export_results(&result, &out, ExportFormat::from_path(&out))?;
            if result.kind == SweepKind::Failure {
                for s in &result.stats {
                    eprintln!(
                        "epsilon {}: failure rate {:.4} over {} runs, {} certified",
                        s.epsilon,
                        s.failure_rate(),
                        s.evaluations,
                        s.certified
                    );
                }
            }
            eprintln!("wrote {} rows to {}", result.rows.len(), out.display());
            Ok(())
        }
        Command::Flex {
            input,
            budget,
            epsilon,
            mode,
            gamma,
            delta,
            seed,
        } => {
            let (profile, estimates, k) =
                draw_lea_estimates(&input, &budget, epsilon, gamma, delta, seed)?;
            let result = match mode {
                FlexMode::Slide => slide_budget(
                    &profile,
                    &estimates,
                    k,
                    epsilon,
                    &SlideOptions::full(profile.len()),
                )?,
                FlexMode::Underspend => {
                    let options = SlideOptions {
                        underspend_only: true,
                        ..SlideOptions::full(profile.len())
                    };
                    slide_budget(&profile, &estimates, k, epsilon, &options)?
                }
                FlexMode::Overspend => overspend_budget(&profile, &estimates, k, epsilon)?,
            };
            print_json(&result)
        }
        Command::TwoSpikes { units, epsilon } => {
            let profile = two_spikes_instance(units, epsilon)?;
            let ids: Vec<String> = (0..units).map(|u| format!("u{u}")).collect();
            print!("{}", units_to_csv(&ids, &profile)?);
            Ok(())
        }
        Command::Ingest {
            input,
            covariate,
            groups,
            assignment,
            flip_sign,
        } => {
            let method = match (covariate, assignment) {
                (_, Some(path)) => GroupingMethod::ExternalAssignment { path },
                (Some(covariate), None) => {
                    GroupingMethod::QuantileOnCovariate { covariate, groups }
                }
                (None, None) => {
                    return Err(Error::Config("give --covariate or --assignment".into()))
                }
            };
            let mut spec = GroupingSpec::new(method);
            spec.flip_sign = flip_sign;
            let table = ingest_rct(&input, &spec)?;
            for d in &table.dropped {
                eprintln!("dropped {}: {}", d.unit_id, d.reason);
            }
            print!("{}", units_to_csv(&table.unit_ids, &table.profile)?);
            Ok(())
        }
    }
}

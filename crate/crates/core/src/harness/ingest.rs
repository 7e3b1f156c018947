//! Loading unit effect tables and raw trial records.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EffectProfile;

pub const UNIT_HEADER: [&str; 2] = ["unit_id", "tau"];
pub const RCT_LEADING_HEADER: [&str; 3] = ["individual_id", "treated", "outcome"];
pub const ASSIGNMENT_HEADER: [&str; 2] = ["individual_id", "unit_id"];

/// Effects keyed by unit label, plus any groups dropped while building them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTable {
    pub unit_ids: Vec<String>,
    pub profile: EffectProfile,
    pub dropped: Vec<DroppedGroup>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedGroup {
    pub unit_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum GroupingMethod {
    /// Equal-count bins over the ranks of a numeric covariate.
    QuantileOnCovariate { covariate: String, groups: usize },
    /// Individual-to-unit mapping read from a CSV with header `individual_id,unit_id`.
    ExternalAssignment { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupingSpec {
    pub method: GroupingMethod,
    /// Negate outcomes before differencing, for outcomes where lower is better.
    pub flip_sign: bool,
    pub min_treated: usize,
    pub min_control: usize,
    pub treated_share: (f64, f64),
}

impl GroupingSpec {
    pub fn new(method: GroupingMethod) -> Self {
        Self {
            method,
            flip_sign: false,
            min_treated: 3,
            min_control: 3,
            treated_share: (0.15, 0.85),
        }
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn check_header(
    path: &Path,
    reader: &mut csv::Reader<File>,
    expected: &[&str],
    exact: bool,
) -> Result<Vec<String>> {
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let matches = if exact {
        header.len() == expected.len() && header.iter().zip(expected).all(|(h, e)| h == e)
    } else {
        header.len() >= expected.len() && header.iter().zip(expected).all(|(h, e)| h == e)
    };
    if matches {
        Ok(header)
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected header '{}', found '{}'",
                expected.join(","),
                header.join(",")
            ),
        })
    }
}

fn parse_err(path: &Path, record: &csv::StringRecord, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row: record.position().map_or(0, |p| p.line() as usize),
        message,
    }
}

/// Read a `unit_id,tau` table.
pub fn ingest_units(path: &Path) -> Result<UnitTable> {
    let mut reader = open_csv(path)?;
    check_header(path, &mut reader, &UNIT_HEADER, true)?;
    let mut unit_ids = Vec::new();
    let mut effects = Vec::new();
    for record in reader.records() {
        let record = record?;
        let tau: f64 = record[1].parse().map_err(|_| {
            parse_err(
                path,
                &record,
                format!("tau '{}' is not a number", &record[1]),
            )
        })?;
        if !(0.0..=1.0).contains(&tau) {
            return Err(parse_err(
                path,
                &record,
                format!("tau {tau} is outside [0, 1]"),
            ));
        }
        unit_ids.push(record[0].to_string());
        effects.push(tau);
    }
    if effects.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no units".into(),
        });
    }
    Ok(UnitTable {
        unit_ids,
        profile: EffectProfile::new(effects)?,
        dropped: Vec::new(),
    })
}

/// Serialize a unit table with header `unit_id,tau`.
pub fn units_to_csv(unit_ids: &[String], profile: &EffectProfile) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(UNIT_HEADER)?;
    for (id, tau) in unit_ids.iter().zip(profile.effects()) {
        w.write_record([id.as_str(), &tau.to_string()])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Covariate {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub id: String,
    pub treated: bool,
    pub outcome: f64,
    pub covariates: BTreeMap<String, Covariate>,
}

fn parse_treated(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "t" | "yes" => Some(true),
        "0" | "false" | "f" | "no" => Some(false),
        _ => None,
    }
}

/// Read `individual_id,treated,outcome,<covariates...>`.
pub fn read_rct(path: &Path) -> Result<Vec<Individual>> {
    let mut reader = open_csv(path)?;
    let header = check_header(path, &mut reader, &RCT_LEADING_HEADER, false)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let treated = parse_treated(&record[1]).ok_or_else(|| {
            parse_err(
                path,
                &record,
                format!("treated '{}' is not 0/1", &record[1]),
            )
        })?;
        let outcome: f64 = record[2].parse().map_err(|_| {
            parse_err(
                path,
                &record,
                format!("outcome '{}' is not a number", &record[2]),
            )
        })?;
        let covariates = header[3..]
            .iter()
            .zip(record.iter().skip(3))
            .map(|(name, raw)| {
                let value = raw
                    .parse::<f64>()
                    .map_or_else(|_| Covariate::Text(raw.to_string()), Covariate::Number);
                (name.clone(), value)
            })
            .collect();
        out.push(Individual {
            id: record[0].to_string(),
            treated,
            outcome,
            covariates,
        });
    }
    Ok(out)
}

fn read_assignment(path: &Path) -> Result<HashMap<String, String>> {
    let mut reader = open_csv(path)?;
    check_header(path, &mut reader, &ASSIGNMENT_HEADER, true)?;
    let mut map = HashMap::new();
    for record in reader.records() {
        let record = record?;
        map.insert(record[0].to_string(), record[1].to_string());
    }
    Ok(map)
}

/// Group label per individual, and the order in which groups are reported.
fn assign_groups(
    rct_path: &Path,
    people: &[Individual],
    method: &GroupingMethod,
) -> Result<(Vec<String>, Vec<String>)> {
    match method {
        GroupingMethod::QuantileOnCovariate { covariate, groups } => {
            if *groups < 2 {
                return Err(Error::param("groups", "must be at least 2"));
            }
            let values = people
                .iter()
                .map(|p| match p.covariates.get(covariate) {
                    Some(Covariate::Number(v)) => Ok(*v),
                    Some(Covariate::Text(t)) => Err(Error::Format {
                        path: rct_path.to_path_buf(),
                        message: format!(
                            "covariate '{covariate}' of individual {} is not numeric: '{t}'",
                            p.id
                        ),
                    }),
                    None => Err(Error::Format {
                        path: rct_path.to_path_buf(),
                        message: format!("no covariate named '{covariate}'"),
                    }),
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            let name = |bin: usize| format!("{covariate}_q{}", bin + 1);
            let mut labels = vec![String::new(); values.len()];
            for (rank, &i) in order.iter().enumerate() {
                labels[i] = name(rank * groups / values.len());
            }
            Ok((labels, (0..*groups).map(name).collect()))
        }
        GroupingMethod::ExternalAssignment { path } => {
            let map = read_assignment(path)?;
            let labels = people
                .iter()
                .map(|p| {
                    map.get(&p.id).cloned().ok_or_else(|| Error::Format {
                        path: path.clone(),
                        message: format!("individual {} has no unit assignment", p.id),
                    })
                })
                .collect::<Result<Vec<String>>>()?;
            let mut seen = std::collections::HashSet::new();
            let order = labels.iter().filter(|l| seen.insert(*l)).cloned().collect();
            Ok((labels, order))
        }
    }
}

#[derive(Default)]
struct GroupTally {
    treated_sum: f64,
    treated: usize,
    control_sum: f64,
    control: usize,
}

/// Build unit effects from individual trial records.
///
/// Groups failing the size or treated-share filters are dropped. Differences in means
/// are min-max normalized onto `[0, 1]`.
pub fn ingest_rct(path: &Path, grouping: &GroupingSpec) -> Result<UnitTable> {
    let people = read_rct(path)?;
    let (labels, order) = assign_groups(path, &people, &grouping.method)?;
    let mut tallies: HashMap<String, GroupTally> = HashMap::new();
    for (p, label) in people.iter().zip(labels) {
        let outcome = if grouping.flip_sign {
            -p.outcome
        } else {
            p.outcome
        };
        let tally = tallies.entry(label).or_default();
        if p.treated {
            tally.treated += 1;
            tally.treated_sum += outcome;
        } else {
            tally.control += 1;
            tally.control_sum += outcome;
        }
    }

    let (lo_share, hi_share) = grouping.treated_share;
    let mut kept: Vec<(String, f64)> = Vec::new();
    let mut dropped = Vec::new();
    for label in order {
        let Some(t) = tallies.get(&label) else {
            dropped.push(DroppedGroup {
                unit_id: label,
                reason: "no individuals".into(),
            });
            continue;
        };
        let share = t.treated as f64 / (t.treated + t.control) as f64;
        let reason = if t.treated < grouping.min_treated {
            Some(format!(
                "{} treated, need {}",
                t.treated, grouping.min_treated
            ))
        } else if t.control < grouping.min_control {
            Some(format!(
                "{} control, need {}",
                t.control, grouping.min_control
            ))
        } else if !(lo_share..=hi_share).contains(&share) {
            Some(format!(
                "treated share {share:.3} outside [{lo_share}, {hi_share}]"
            ))
        } else {
            None
        };
        match reason {
            Some(reason) => dropped.push(DroppedGroup {
                unit_id: label,
                reason,
            }),
            None => kept.push((
                label,
                t.treated_sum / t.treated as f64 - t.control_sum / t.control as f64,
            )),
        }
    }
    if kept.is_empty() {
        return Err(Error::NoSurvivingUnits {
            dropped: dropped.len(),
        });
    }
    let diffs: Vec<f64> = kept.iter().map(|(_, d)| *d).collect();
    let effects = min_max_normalize(&diffs)?;
    Ok(UnitTable {
        unit_ids: kept.into_iter().map(|(id, _)| id).collect(),
        profile: EffectProfile::new(effects)?,
        dropped,
    })
}

/// Rescale onto `[0, 1]`; fails when all values coincide.
pub fn min_max_normalize(values: &[f64]) -> Result<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Err(Error::DegenerateNormalization {
            units: values.len(),
            value: lo,
        });
    }
    Ok(values
        .iter()
        .map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
        .collect())
}

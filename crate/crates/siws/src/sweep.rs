//! Parameter sweeps along one axis.
//!
//! A sweep takes a base scenario, an axis path naming what to vary, the
//! values to try, and which metrics to record. Rows are computed in parallel
//! but reported in input order, and each row is validated before any metric
//! runs, so an inadmissible parameter combination fails loudly instead of
//! producing meaningless numbers.
//!
//! Axis paths:
//! - `h` varies the step size,
//! - `viruses.K.infection.I.J`, `viruses.K.resource_infection.I.J`,
//!   `viruses.K.contamination.I.J` vary one matrix entry of virus `K`
//!   (0-based),
//! - `viruses.K.healing.I`, `viruses.K.decay.I` vary one rate,
//! - `viruses.K.scale` multiplies all three coupling blocks of virus `K`.

use crate::dynamics::{simulate_multi, CONVERGENCE_TOL, MAX_STEPS};
use crate::model::{assemble_full, validate};
use crate::scenario::{ScenarioError, ScenarioFile};
use crate::spectral::{reproduction_number, step_radius};
use rayon::prelude::*;
use std::io::Write;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("unrecognized axis {0:?}")]
    UnknownAxis(String),
    #[error("sweep value {value} failed: {message}")]
    Row { value: f64, message: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// What to record per swept value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Reproduction number per virus.
    R0,
    /// Spectral radius of the healthy-state step matrix per virus.
    StepRadius,
    /// Steps a joint simulation takes to converge, plus whether it did.
    StepsToConverge,
    /// Final state per virus from the same joint simulation.
    LimitState,
}

impl FromStr for Metric {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "r0" => Ok(Self::R0),
            "step-radius" => Ok(Self::StepRadius),
            "steps" => Ok(Self::StepsToConverge),
            "limit" => Ok(Self::LimitState),
            other => Err(SweepError::BadRequest(format!(
                "unknown metric {:?}, expected r0, step-radius, steps, or limit",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MatrixField {
    Infection,
    ResourceInfection,
    Contamination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RateField {
    Healing,
    Decay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    StepSize,
    Entry {
        virus: usize,
        field: MatrixField,
        row: usize,
        col: usize,
    },
    Rate {
        virus: usize,
        field: RateField,
        index: usize,
    },
    Scale {
        virus: usize,
    },
}

fn parse_index(axis: &str, part: Option<&str>, limit: usize, what: &str) -> Result<usize, SweepError> {
    let raw = part.ok_or_else(|| SweepError::UnknownAxis(axis.to_string()))?;
    let idx: usize = raw
        .parse()
        .map_err(|_| SweepError::UnknownAxis(axis.to_string()))?;
    if idx >= limit {
        return Err(SweepError::BadRequest(format!(
            "{} index {} out of range, limit {}",
            what, idx, limit
        )));
    }
    Ok(idx)
}

fn parse_axis(axis: &str, file: &ScenarioFile) -> Result<Axis, SweepError> {
    if axis == "h" {
        return Ok(Axis::StepSize);
    }
    let mut parts = axis.split('.');
    if parts.next() != Some("viruses") {
        return Err(SweepError::UnknownAxis(axis.to_string()));
    }
    let virus = parse_index(axis, parts.next(), file.l, "virus")?;
    let field = parts
        .next()
        .ok_or_else(|| SweepError::UnknownAxis(axis.to_string()))?;
    let parsed = match field {
        "scale" => Axis::Scale { virus },
        "healing" => Axis::Rate {
            virus,
            field: RateField::Healing,
            index: parse_index(axis, parts.next(), file.n, "node")?,
        },
        "decay" => Axis::Rate {
            virus,
            field: RateField::Decay,
            index: parse_index(axis, parts.next(), file.m, "resource")?,
        },
        "infection" => Axis::Entry {
            virus,
            field: MatrixField::Infection,
            row: parse_index(axis, parts.next(), file.n, "row")?,
            col: parse_index(axis, parts.next(), file.n, "column")?,
        },
        "resource_infection" => Axis::Entry {
            virus,
            field: MatrixField::ResourceInfection,
            row: parse_index(axis, parts.next(), file.n, "row")?,
            col: parse_index(axis, parts.next(), file.m, "column")?,
        },
        "contamination" => Axis::Entry {
            virus,
            field: MatrixField::Contamination,
            row: parse_index(axis, parts.next(), file.m, "row")?,
            col: parse_index(axis, parts.next(), file.n, "column")?,
        },
        _ => return Err(SweepError::UnknownAxis(axis.to_string())),
    };
    if parts.next().is_some() {
        return Err(SweepError::UnknownAxis(axis.to_string()));
    }
    Ok(parsed)
}

fn apply_axis(file: &mut ScenarioFile, axis: Axis, value: f64) {
    match axis {
        Axis::StepSize => file.h = value,
        Axis::Entry {
            virus,
            field,
            row,
            col,
        } => {
            let block = &mut file.viruses[virus];
            let (target, cols) = match field {
                MatrixField::Infection => (&mut block.infection, file.n),
                MatrixField::ResourceInfection => (&mut block.resource_infection, file.m),
                MatrixField::Contamination => (&mut block.contamination, file.n),
            };
            target[row * cols + col] = value;
        }
        Axis::Rate {
            virus,
            field,
            index,
        } => {
            let block = &mut file.viruses[virus];
            match field {
                RateField::Healing => block.healing[index] = value,
                RateField::Decay => block.decay[index] = value,
            }
        }
        Axis::Scale { virus } => {
            let block = &mut file.viruses[virus];
            for v in block
                .infection
                .iter_mut()
                .chain(block.resource_infection.iter_mut())
                .chain(block.contamination.iter_mut())
            {
                *v *= value;
            }
        }
    }
}

/// A sweep request: base scenario, axis, values, metrics, and the simulation
/// budget used by the trajectory-based metrics.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ScenarioFile,
    pub axis: String,
    pub values: Vec<f64>,
    pub metrics: Vec<Metric>,
    pub max_steps: u64,
    pub tol: f64,
}

impl SweepSpec {
    pub fn new(base: ScenarioFile, axis: String, values: Vec<f64>, metrics: Vec<Metric>) -> Self {
        Self {
            base,
            axis,
            values,
            metrics,
            max_steps: MAX_STEPS,
            tol: CONVERGENCE_TOL,
        }
    }
}

/// Sweep output: one row per value, in input order.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: String,
    /// Column names, excluding the leading value column.
    pub columns: Vec<String>,
    pub rows: Vec<(f64, Vec<f64>)>,
}

fn prefix(l: usize, k: usize) -> String {
    if l == 1 {
        String::new()
    } else {
        format!("v{}_", k + 1)
    }
}

/// Runs the sweep. Each value is validated and measured independently, in
/// parallel; the first failing value aborts the sweep with its reason.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    if spec.values.is_empty() {
        return Err(SweepError::BadRequest("no values to sweep".into()));
    }
    if spec.metrics.is_empty() {
        return Err(SweepError::BadRequest("no metrics requested".into()));
    }
    if spec.base.schedule.is_some() {
        return Err(SweepError::BadRequest(
            "sweeps need a constant-parameter base scenario, not a scheduled one".into(),
        ));
    }
    spec.base.to_scenario()?;
    let axis = parse_axis(&spec.axis, &spec.base)?;

    let (l, n, m) = (spec.base.l, spec.base.n, spec.base.m);
    let mut columns = Vec::new();
    for &metric in &spec.metrics {
        match metric {
            Metric::R0 => {
                for k in 0..l {
                    columns.push(format!("{}r0", prefix(l, k)));
                }
            }
            Metric::StepRadius => {
                for k in 0..l {
                    columns.push(format!("{}step_radius", prefix(l, k)));
                }
            }
            Metric::StepsToConverge => {
                columns.push("steps".into());
                columns.push("converged".into());
            }
            Metric::LimitState => {
                for k in 0..l {
                    let p = prefix(l, k);
                    for i in 0..n {
                        columns.push(format!("{}x{}", p, i));
                    }
                    for j in 0..m {
                        columns.push(format!("{}w{}", p, j));
                    }
                }
            }
        }
    }

    let needs_simulation = spec
        .metrics
        .iter()
        .any(|m| matches!(m, Metric::StepsToConverge | Metric::LimitState));

    let rows = spec
        .values
        .par_iter()
        .map(|&value| -> Result<(f64, Vec<f64>), SweepError> {
            let fail = |message: String| SweepError::Row { value, message };
            let mut file = spec.base.clone();
            apply_axis(&mut file, axis, value);
            let scenario = file.to_scenario().map_err(|e| fail(e.to_string()))?;
            let report = validate(&scenario);
            if !report.passed {
                let why = report
                    .violations
                    .first()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "validation failed".into());
                return Err(fail(why));
            }

            let fulls = scenario
                .viruses()
                .iter()
                .map(|p| assemble_full(p, scenario.h))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| fail(e.to_string()))?;
            let trajectory = if needs_simulation {
                Some(
                    simulate_multi(&scenario, None, spec.max_steps, spec.tol, 0)
                        .map_err(|e| fail(e.to_string()))?,
                )
            } else {
                None
            };

            let mut row = Vec::with_capacity(columns.len());
            for &metric in &spec.metrics {
                match metric {
                    Metric::R0 => {
                        for full in &fulls {
                            row.push(reproduction_number(full).map_err(|e| fail(e.to_string()))?);
                        }
                    }
                    Metric::StepRadius => {
                        for full in &fulls {
                            row.push(step_radius(full).map_err(|e| fail(e.to_string()))?);
                        }
                    }
                    Metric::StepsToConverge => {
                        let traj = trajectory.as_ref().unwrap();
                        row.push(traj.steps as f64);
                        row.push(if traj.converged { 1.0 } else { 0.0 });
                    }
                    Metric::LimitState => {
                        let traj = trajectory.as_ref().unwrap();
                        for state in &traj.limit {
                            row.extend(state.x.iter().copied());
                            row.extend(state.w.iter().copied());
                        }
                    }
                }
            }
            Ok((value, row))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(SweepResult {
        axis: spec.axis.clone(),
        columns,
        rows,
    })
}

/// Writes a sweep result as CSV; the first column holds the swept value and
/// is named after the axis path.
pub fn write_sweep_csv<W: Write>(mut out: W, result: &SweepResult) -> Result<(), SweepError> {
    let mut header = result.axis.clone();
    for col in &result.columns {
        header.push(',');
        header.push_str(col);
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    for (value, row) in &result.rows {
        let mut line = format!("{}", value);
        for cell in row {
            line.push_str(&format!(",{}", cell));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

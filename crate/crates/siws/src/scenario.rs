//! Scenario files and trajectory output.
//!
//! A scenario file is JSON with a fixed schema: dimensions `n`, `m`, `l`, the
//! step size `h`, one rate block per virus (matrices row-major), one initial
//! state per virus, an optional switching schedule, and an optional record of
//! the generator that produced it. Trajectories go out as CSV with one row
//! per recorded step.

use crate::dynamics::{DynamicsError, ParameterSchedule, Trajectory};
use crate::model::{ModelError, MultiVirusScenario, SpreadingParams, State};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
/// The one random-bit source scenario files may reference.
pub const RNG_ALGORITHM: &str = "chacha12";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// Which deterministic bit source produced a generated scenario, and from
/// which seed. Rebuilding with the same pair reproduces the file exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngSpec {
    pub algorithm: String,
    pub seed: u64,
}

/// Rate block of one virus; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VirusBlock {
    /// Person-to-person rates, `n * n` entries.
    pub infection: Vec<f64>,
    /// Resource-to-person rates, `n * m` entries.
    pub resource_infection: Vec<f64>,
    /// Person-to-resource rates, `m * n` entries.
    pub contamination: Vec<f64>,
    /// Healing rates, `n` entries.
    pub healing: Vec<f64>,
    /// Decay rates, `m` entries.
    pub decay: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateBlock {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleMode {
    Piecewise,
    Periodic,
}

/// One switching instant: at step `start`, every virus swaps to its listed
/// rate block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceBlock {
    pub start: u64,
    pub viruses: Vec<VirusBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub mode: ScheduleMode,
    /// Replay length in steps; required for periodic mode, forbidden
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<u64>,
    pub pieces: Vec<PieceBlock>,
}

/// On-disk scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<RngSpec>,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub h: f64,
    pub viruses: Vec<VirusBlock>,
    pub initial: Vec<StateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleBlock>,
}

fn check_finite(what: &str, values: &[f64]) -> Result<(), ScenarioError> {
    for (idx, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(ScenarioError::Invalid(format!(
                "{} entry {} is {}",
                what, idx, v
            )));
        }
    }
    Ok(())
}

fn check_len(what: &str, values: &[f64], expected: usize) -> Result<(), ScenarioError> {
    if values.len() != expected {
        return Err(ScenarioError::Invalid(format!(
            "{} holds {} entries, expected {}",
            what,
            values.len(),
            expected
        )));
    }
    check_finite(what, values)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

impl VirusBlock {
    pub fn from_params(params: &SpreadingParams) -> Self {
        Self {
            infection: matrix_rows(&params.infection),
            resource_infection: matrix_rows(&params.resource_infection),
            contamination: matrix_rows(&params.contamination),
            healing: params.healing.iter().copied().collect(),
            decay: params.decay.iter().copied().collect(),
        }
    }

    pub fn to_params(&self, n: usize, m: usize) -> Result<SpreadingParams, ScenarioError> {
        check_len("infection", &self.infection, n * n)?;
        check_len("resource_infection", &self.resource_infection, n * m)?;
        check_len("contamination", &self.contamination, m * n)?;
        check_len("healing", &self.healing, n)?;
        check_len("decay", &self.decay, m)?;
        Ok(SpreadingParams::new(
            DMatrix::from_row_slice(n, n, &self.infection),
            DMatrix::from_row_slice(n, m, &self.resource_infection),
            DMatrix::from_row_slice(m, n, &self.contamination),
            DVector::from_vec(self.healing.clone()),
            DVector::from_vec(self.decay.clone()),
        )?)
    }
}

impl StateBlock {
    pub fn from_state(state: &State) -> Self {
        Self {
            x: state.x.iter().copied().collect(),
            w: state.w.iter().copied().collect(),
        }
    }

    pub fn to_state(&self, n: usize, m: usize) -> Result<State, ScenarioError> {
        check_len("x", &self.x, n)?;
        check_len("w", &self.w, m)?;
        Ok(State::new(
            DVector::from_vec(self.x.clone()),
            DVector::from_vec(self.w.clone()),
        ))
    }
}

impl ScenarioFile {
    /// Snapshot of an in-memory scenario, without schedule or generator
    /// record.
    pub fn from_scenario(scenario: &MultiVirusScenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rng: None,
            n: scenario.n(),
            m: scenario.m(),
            l: scenario.l(),
            h: scenario.h,
            viruses: scenario.viruses().iter().map(VirusBlock::from_params).collect(),
            initial: scenario.initial().iter().map(StateBlock::from_state).collect(),
            schedule: None,
        }
    }

    fn check_shape(&self) -> Result<(), ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Invalid(format!(
                "schema version {} is not supported, expected {}",
                self.schema_version, SCHEMA_VERSION
            )));
        }
        if let Some(rng) = &self.rng {
            if rng.algorithm != RNG_ALGORITHM {
                return Err(ScenarioError::Invalid(format!(
                    "unknown rng algorithm {:?}, expected {:?}",
                    rng.algorithm, RNG_ALGORITHM
                )));
            }
        }
        if self.n == 0 || self.m == 0 || self.l == 0 {
            return Err(ScenarioError::Invalid(
                "n, m, and l must all be at least one".into(),
            ));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(ScenarioError::Invalid(format!(
                "step size must be positive and finite, got {}",
                self.h
            )));
        }
        if self.viruses.len() != self.l {
            return Err(ScenarioError::Invalid(format!(
                "{} virus blocks for l = {}",
                self.viruses.len(),
                self.l
            )));
        }
        if self.initial.len() != self.l {
            return Err(ScenarioError::Invalid(format!(
                "{} initial states for l = {}",
                self.initial.len(),
                self.l
            )));
        }
        if let Some(schedule) = &self.schedule {
            match (schedule.mode, schedule.period) {
                (ScheduleMode::Periodic, None) => {
                    return Err(ScenarioError::Invalid(
                        "periodic schedule needs a period".into(),
                    ))
                }
                (ScheduleMode::Piecewise, Some(_)) => {
                    return Err(ScenarioError::Invalid(
                        "piecewise schedule must not set a period".into(),
                    ))
                }
                _ => {}
            }
            if schedule.pieces.is_empty() {
                return Err(ScenarioError::Invalid("schedule has no pieces".into()));
            }
            for (idx, piece) in schedule.pieces.iter().enumerate() {
                if piece.viruses.len() != self.l {
                    return Err(ScenarioError::Invalid(format!(
                        "schedule piece {} holds {} virus blocks for l = {}",
                        idx,
                        piece.viruses.len(),
                        self.l
                    )));
                }
            }
        }
        Ok(())
    }

    /// Builds the constant-parameter scenario: dimensions, rate blocks,
    /// initial states, step size.
    pub fn to_scenario(&self) -> Result<MultiVirusScenario, ScenarioError> {
        self.check_shape()?;
        let viruses = self
            .viruses
            .iter()
            .map(|v| v.to_params(self.n, self.m))
            .collect::<Result<Vec<_>, _>>()?;
        let initial = self
            .initial
            .iter()
            .map(|s| s.to_state(self.n, self.m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MultiVirusScenario::new(viruses, initial, self.h)?)
    }

    /// Builds one parameter schedule per virus from the schedule section,
    /// or `None` when the file has no schedule.
    pub fn schedules(&self) -> Result<Option<Vec<ParameterSchedule>>, ScenarioError> {
        self.check_shape()?;
        let Some(block) = &self.schedule else {
            return Ok(None);
        };
        let mut per_virus = Vec::with_capacity(self.l);
        for k in 0..self.l {
            let pieces = block
                .pieces
                .iter()
                .map(|piece| {
                    Ok((piece.start, piece.viruses[k].to_params(self.n, self.m)?))
                })
                .collect::<Result<Vec<_>, ScenarioError>>()?;
            let schedule = match block.mode {
                ScheduleMode::Piecewise => ParameterSchedule::piecewise(pieces)?,
                ScheduleMode::Periodic => {
                    ParameterSchedule::periodic(pieces, block.period.unwrap())?
                }
            };
            per_virus.push(schedule);
        }
        Ok(Some(per_virus))
    }
}

pub fn load_scenario<P: AsRef<Path>>(path: P) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let file: ScenarioFile = serde_json::from_str(&text)?;
    file.check_shape()?;
    Ok(file)
}

pub fn save_scenario<P: AsRef<Path>>(path: P, file: &ScenarioFile) -> Result<(), ScenarioError> {
    file.check_shape()?;
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes a recorded trajectory as CSV. The first column is time
/// (`step * h`); then, per virus, the node states followed by the mean
/// infection level and mean resource level. Single-virus runs use bare
/// column names (`x0`, `w0`, `xbar`, `wbar`), multi-virus runs prefix each
/// virus's columns with `v1_`, `v2_`, and so on.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    trajectory: &Trajectory,
    h: f64,
) -> Result<(), ScenarioError> {
    let Some((_, first)) = trajectory.samples.first() else {
        return Err(ScenarioError::Invalid("trajectory has no samples".into()));
    };
    let l = first.len();
    if l == 0 {
        return Err(ScenarioError::Invalid("trajectory holds no viruses".into()));
    }
    let (n, m) = (first[0].n(), first[0].m());

    let mut header = String::from("t");
    for k in 0..l {
        let prefix = if l == 1 {
            String::new()
        } else {
            format!("v{}_", k + 1)
        };
        for i in 0..n {
            header.push_str(&format!(",{}x{}", prefix, i));
        }
        for j in 0..m {
            header.push_str(&format!(",{}w{}", prefix, j));
        }
        header.push_str(&format!(",{}xbar,{}wbar", prefix, prefix));
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;

    for (step, states) in &trajectory.samples {
        if states.len() != l {
            return Err(ScenarioError::Invalid(
                "trajectory samples hold inconsistent virus counts".into(),
            ));
        }
        let mut line = format!("{}", *step as f64 * h);
        for state in states {
            for &v in state.x.iter() {
                line.push_str(&format!(",{}", v));
            }
            for &v in state.w.iter() {
                line.push_str(&format!(",{}", v));
            }
            let xbar = state.x.sum() / n as f64;
            let wbar = state.w.sum() / m as f64;
            line.push_str(&format!(",{},{}", xbar, wbar));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

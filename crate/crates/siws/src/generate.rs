//! Deterministic random scenario generation.
//!
//! Scenarios are drawn from a seeded ChaCha12 stream, so a `(seed, shape,
//! target)` triple always reproduces the same file. Structure first: a random
//! cycle through the population guarantees strong connectivity, extra edges
//! and resource links are sprinkled on top, and every resource keeps at least
//! one incoming and one outgoing link. The coupling blocks are then rescaled
//! by one common factor so the reproduction number lands exactly on a target
//! drawn inside the requested band, which pins the regime away from the
//! threshold.

use crate::dynamics::ParameterSchedule;
use crate::model::{assemble_full, validate, ModelError, MultiVirusScenario, SpreadingParams, State};
use crate::scenario::{RngSpec, ScenarioFile, RNG_ALGORITHM};
use crate::spectral::{reproduction_number, step_radius, SpectralError};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

/// Reproduction-number band for subcritical draws.
pub const SUBCRITICAL_BAND: (f64, f64) = (0.90, 0.99);
/// Reproduction-number band for supercritical draws.
pub const SUPERCRITICAL_BAND: (f64, f64) = (1.05, 1.25);
/// Default dwell-time range for switching schedules, in steps.
pub const DEFAULT_DWELL: (u64, u64) = (10_000, 50_000);

const MAX_ATTEMPTS: u32 = 100;
const EXTRA_EDGE_PROB: f64 = 0.25;
const RESOURCE_EDGE_PROB: f64 = 0.4;
const RATE_RANGE: std::ops::Range<f64> = 0.05..1.0;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no admissible scenario after {attempts} attempts, last failure: {last_reason}")]
    Unattainable { attempts: u32, last_reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
}

/// Which side of the extinction threshold the generated processes land on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeTarget {
    /// Every virus below threshold.
    Subcritical,
    /// Every virus above threshold, with the stricter endemic step budget
    /// intact.
    Supercritical,
    /// Virus 1 above threshold, all others below; needs `l >= 2`.
    Mixed,
}

fn virus_band(target: RegimeTarget, index: usize) -> (f64, f64) {
    match target {
        RegimeTarget::Subcritical => SUBCRITICAL_BAND,
        RegimeTarget::Supercritical => SUPERCRITICAL_BAND,
        RegimeTarget::Mixed => {
            if index == 0 {
                SUPERCRITICAL_BAND
            } else {
                SUBCRITICAL_BAND
            }
        }
    }
}

fn needs_endemic_margin(target: RegimeTarget, index: usize) -> bool {
    matches!(target, RegimeTarget::Supercritical)
        || (matches!(target, RegimeTarget::Mixed) && index == 0)
}

/// Draws the unscaled structure of one virus: strongly connected by
/// construction, with every resource linked in both directions.
fn draw_structure(rng: &mut ChaCha12Rng, n: usize, m: usize) -> SpreadingParams {
    let healing = DVector::from_fn(n, |_, _| rng.gen_range(RATE_RANGE));
    let decay = DVector::from_fn(m, |_, _| rng.gen_range(RATE_RANGE));

    let mut infection = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for i in 0..n {
        // Edge from order[i] into order[i + 1]: column infects row.
        infection[(order[(i + 1) % n], order[i])] = rng.gen_range(RATE_RANGE);
    }
    for i in 0..n {
        for j in 0..n {
            if infection[(i, j)] == 0.0 && rng.gen_bool(EXTRA_EDGE_PROB) {
                infection[(i, j)] = rng.gen_range(RATE_RANGE);
            }
        }
    }

    let mut resource_infection = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            if rng.gen_bool(RESOURCE_EDGE_PROB) {
                resource_infection[(i, j)] = rng.gen_range(RATE_RANGE);
            }
        }
    }
    for j in 0..m {
        if resource_infection.column(j).iter().all(|&v| v == 0.0) {
            resource_infection[(rng.gen_range(0..n), j)] = rng.gen_range(RATE_RANGE);
        }
    }

    let mut contamination = DMatrix::zeros(m, n);
    for j in 0..m {
        for k in 0..n {
            if rng.gen_bool(RESOURCE_EDGE_PROB) {
                contamination[(j, k)] = rng.gen_range(RATE_RANGE);
            }
        }
    }
    for j in 0..m {
        if contamination.row(j).iter().all(|&v| v == 0.0) {
            contamination[(j, rng.gen_range(0..n))] = rng.gen_range(RATE_RANGE);
        }
    }
    // Normalize each contamination row so the resource's capacity (row sum
    // over decay) is moderate; otherwise step-size budgets blow up.
    for j in 0..m {
        let sum: f64 = contamination.row(j).iter().sum();
        let capacity = rng.gen_range(0.5..1.5);
        let scale = decay[j] * capacity / sum;
        contamination.row_mut(j).scale_mut(scale);
    }

    SpreadingParams {
        infection,
        resource_infection,
        contamination,
        healing,
        decay,
    }
}

fn scale_coupling(params: &mut SpreadingParams, gamma: f64) {
    params.infection.scale_mut(gamma);
    params.resource_infection.scale_mut(gamma);
    params.contamination.scale_mut(gamma);
}

/// Generates one scenario with `l` viruses on `n` population and `m`
/// resource nodes, each virus's reproduction number drawn inside its
/// target band. The result always passes validation; supercritical viruses
/// additionally keep the endemic step budget. Deterministic per seed.
pub fn random_scenario(
    n: usize,
    m: usize,
    l: usize,
    h: f64,
    seed: u64,
    target: RegimeTarget,
) -> Result<ScenarioFile, GenerateError> {
    if n == 0 || m == 0 || l == 0 {
        return Err(GenerateError::BadRequest(
            "n, m, and l must all be at least one".into(),
        ));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(GenerateError::BadRequest(format!(
            "step size must be positive and finite, got {}",
            h
        )));
    }
    if matches!(target, RegimeTarget::Mixed) && l < 2 {
        return Err(GenerateError::BadRequest(
            "mixed targets need at least two viruses".into(),
        ));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut last_reason = String::from("no attempt made");
    for attempt in 1..=MAX_ATTEMPTS {
        let mut viruses = Vec::with_capacity(l);
        for k in 0..l {
            let mut params = draw_structure(&mut rng, n, m);
            let (lo, hi) = virus_band(target, k);
            let r0_target = rng.gen_range(lo..hi);
            let r0_base = reproduction_number(&assemble_full(&params, h)?)?;
            // The removal-scaled coupling is linear in a common scale of the
            // three blocks, so this lands exactly on the drawn target.
            scale_coupling(&mut params, r0_target / r0_base);
            viruses.push(params);
        }

        let mut initial = Vec::with_capacity(l);
        for k in 0..l {
            let x_cap = if l == 1 { 1.0 } else { 0.9 / l as f64 };
            let x = DVector::from_fn(n, |_, _| rng.gen_range(0.0..x_cap));
            let w = DVector::from_fn(m, |j, _| {
                let row_sum: f64 = viruses[k].contamination.row(j).iter().sum();
                rng.gen_range(0.0..row_sum / viruses[k].decay[j])
            });
            initial.push(State::new(x, w));
        }

        let scenario = match MultiVirusScenario::new(viruses, initial, h) {
            Ok(s) => s,
            Err(e) => {
                last_reason = e.to_string();
                continue;
            }
        };
        let report = validate(&scenario);
        if !report.passed {
            last_reason = report
                .violations
                .first()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "validation failed".into());
            continue;
        }

        let mut ok = true;
        for (k, params) in scenario.viruses().iter().enumerate() {
            let s1 = step_radius(&assemble_full(params, h)?)?;
            let want_super = virus_band(target, k).0 > 1.0;
            if want_super != (s1 > 1.0) {
                last_reason = format!(
                    "virus {} landed on the wrong side of the threshold, radius {}",
                    k + 1,
                    s1
                );
                ok = false;
                break;
            }
            if needs_endemic_margin(target, k) && !report.endemic_margin_ok {
                last_reason = report
                    .endemic_findings
                    .first()
                    .map(|v| v.to_string())
                    .unwrap_or_else(|| "endemic step budget exceeded".into());
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }

        let mut file = ScenarioFile::from_scenario(&scenario);
        file.rng = Some(RngSpec {
            algorithm: RNG_ALGORITHM.into(),
            seed,
        });
        let _ = attempt;
        return Ok(file);
    }
    Err(GenerateError::Unattainable {
        attempts: MAX_ATTEMPTS,
        last_reason,
    })
}

/// Builds a random piecewise switching schedule under a fixed envelope: every
/// piece weakens the base coupling entrywise (keeping its zero pattern) and
/// strengthens its removal, so the base is an envelope for the whole
/// schedule. Dwell times between switches are drawn uniformly from
/// `dwell` (defaults to [10000, 50000] steps). Deterministic per seed.
pub fn random_switching_schedule(
    base: &SpreadingParams,
    seed: u64,
    piece_count: usize,
    dwell: Option<(u64, u64)>,
) -> Result<ParameterSchedule, GenerateError> {
    if piece_count == 0 {
        return Err(GenerateError::BadRequest("need at least one piece".into()));
    }
    let (dwell_lo, dwell_hi) = dwell.unwrap_or(DEFAULT_DWELL);
    if dwell_lo == 0 || dwell_hi < dwell_lo {
        return Err(GenerateError::BadRequest(format!(
            "dwell range [{}, {}] is empty or touches zero",
            dwell_lo, dwell_hi
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut pieces = Vec::with_capacity(piece_count);
    let mut start = 0u64;
    for _ in 0..piece_count {
        let mut piece = base.clone();
        let weaken = |v: &mut f64, rng: &mut ChaCha12Rng| {
            if *v > 0.0 {
                *v *= rng.gen_range(0.3..1.0);
            }
        };
        for v in piece.infection.iter_mut() {
            weaken(v, &mut rng);
        }
        for v in piece.resource_infection.iter_mut() {
            weaken(v, &mut rng);
        }
        for v in piece.contamination.iter_mut() {
            weaken(v, &mut rng);
        }
        for v in piece.healing.iter_mut() {
            *v *= rng.gen_range(1.0..1.2);
        }
        for v in piece.decay.iter_mut() {
            *v *= rng.gen_range(1.0..1.2);
        }
        pieces.push((start, piece));
        start += rng.gen_range(dwell_lo..=dwell_hi);
    }
    Ok(ParameterSchedule::piecewise(pieces)?)
}

//! Discrete-time stepping and simulation.
//!
//! One step of the sampled model moves each infection fraction by
//! `h * ((1 - x_i) * pressure_i - healing_i * x_i)` where the pressure on node
//! `i` collects person-to-person and resource-to-person exposure, and moves
//! each resource level by `h * (contamination_j . x - decay_j * w_j)`. Under
//! the validated assumptions the box `[0, 1]^n x [0, bound]^m` is invariant,
//! so steppers reject states outside it instead of clamping.

use crate::model::{resource_bound, ModelError, MultiVirusScenario, SpreadingParams, State};
use nalgebra::DVector;
use std::borrow::Cow;
use std::sync::Arc;
use thiserror::Error;

/// Default convergence tolerance on the per-step max-norm difference.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Default step budget for open-ended simulations.
pub const MAX_STEPS: u64 = 10_000_000;
/// Above this many steps, auto stride decimates stored samples.
pub const DENSE_SAMPLE_LIMIT: u64 = 10_000;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("state outside the invariant domain: {0}")]
    OutsideDomain(String),
    #[error("infection fractions at node {node} sum to {total} across viruses")]
    CoinfectionExceeded { node: usize, total: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("step size must be positive, got {0}")]
    InvalidStepSize(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("substep count must be at least 1")]
    InvalidSubsteps,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How parameters change over simulated steps.
#[derive(Clone)]
pub enum ParameterSchedule {
    /// One parameter set for all time.
    Constant(SpreadingParams),
    /// Left-continuous piecewise-constant pieces `(start-step, params)`,
    /// starting at step 0 with strictly increasing starts. The final piece
    /// holds forever.
    Piecewise(Vec<(u64, SpreadingParams)>),
    /// Piecewise pieces replayed modulo a period.
    Periodic {
        period: u64,
        pieces: Vec<(u64, SpreadingParams)>,
    },
    /// Arbitrary step-indexed parameters. Cannot be enumerated, so callers
    /// are responsible for validating what the callback produces.
    Callback(Arc<dyn Fn(u64) -> SpreadingParams + Send + Sync>),
}

impl std::fmt::Debug for ParameterSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Constant(_) => f.write_str("ParameterSchedule::Constant"),
            Self::Piecewise(p) => write!(f, "ParameterSchedule::Piecewise({} pieces)", p.len()),
            Self::Periodic { period, pieces } => write!(
                f,
                "ParameterSchedule::Periodic({} pieces, period {})",
                pieces.len(),
                period
            ),
            Self::Callback(_) => f.write_str("ParameterSchedule::Callback"),
        }
    }
}

fn check_pieces(pieces: &[(u64, SpreadingParams)]) -> Result<(), DynamicsError> {
    if pieces.is_empty() {
        return Err(DynamicsError::InvalidSchedule("no pieces".into()));
    }
    if pieces[0].0 != 0 {
        return Err(DynamicsError::InvalidSchedule(format!(
            "first piece must start at step 0, starts at {}",
            pieces[0].0
        )));
    }
    for pair in pieces.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(DynamicsError::InvalidSchedule(format!(
                "piece starts must be strictly increasing, got {} after {}",
                pair[1].0, pair[0].0
            )));
        }
    }
    let (n, m) = (pieces[0].1.n(), pieces[0].1.m());
    for (_, p) in pieces {
        if p.n() != n || p.m() != m {
            return Err(DynamicsError::DimensionMismatch(
                "schedule pieces have mixed dimensions".into(),
            ));
        }
    }
    Ok(())
}

impl ParameterSchedule {
    pub fn piecewise(pieces: Vec<(u64, SpreadingParams)>) -> Result<Self, DynamicsError> {
        check_pieces(&pieces)?;
        Ok(Self::Piecewise(pieces))
    }

    pub fn periodic(
        pieces: Vec<(u64, SpreadingParams)>,
        period: u64,
    ) -> Result<Self, DynamicsError> {
        check_pieces(&pieces)?;
        let last = pieces.last().unwrap().0;
        if period <= last {
            return Err(DynamicsError::InvalidSchedule(format!(
                "period {} must exceed the last piece start {}",
                period, last
            )));
        }
        Ok(Self::Periodic { period, pieces })
    }

    /// Parameters in effect at a given step.
    pub fn params_at(&self, step: u64) -> Cow<'_, SpreadingParams> {
        match self {
            Self::Constant(p) => Cow::Borrowed(p),
            Self::Piecewise(pieces) => Cow::Borrowed(piece_at(pieces, step)),
            Self::Periodic { period, pieces } => Cow::Borrowed(piece_at(pieces, step % period)),
            Self::Callback(f) => Cow::Owned(f(step)),
        }
    }

    /// The distinct parameter sets this schedule can produce, when they can
    /// be enumerated. Empty for callback schedules.
    pub fn pieces(&self) -> Vec<&SpreadingParams> {
        match self {
            Self::Constant(p) => vec![p],
            Self::Piecewise(pieces) | Self::Periodic { pieces, .. } => {
                pieces.iter().map(|(_, p)| p).collect()
            }
            Self::Callback(_) => Vec::new(),
        }
    }

    pub fn dimensions(&self) -> Option<(usize, usize)> {
        self.pieces().first().map(|p| (p.n(), p.m()))
    }
}

fn piece_at(pieces: &[(u64, SpreadingParams)], step: u64) -> &SpreadingParams {
    let idx = match pieces.binary_search_by_key(&step, |(s, _)| *s) {
        Ok(i) => i,
        Err(0) => 0,
        Err(i) => i - 1,
    };
    &pieces[idx].1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Successive states differed by less than the tolerance.
    Tolerance,
    /// Step budget exhausted.
    MaxSteps,
}

/// A recorded run: strided samples, the exact final state, and why stepping
/// stopped. Per-virus states are stored even for single-virus runs (`l = 1`).
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// `(step, per-virus states)`, always including step 0 and the final step.
    pub samples: Vec<(u64, Vec<State>)>,
    /// Steps actually taken.
    pub steps: u64,
    pub converged: bool,
    /// Final per-virus states, recorded exactly regardless of stride.
    pub limit: Vec<State>,
    pub stop: StopReason,
}

impl Trajectory {
    /// Final state of a single-virus run.
    pub fn limit_single(&self) -> &State {
        assert_eq!(self.limit.len(), 1, "trajectory holds multiple viruses");
        &self.limit[0]
    }
}

fn check_single_input(
    state: &State,
    params: &SpreadingParams,
    h: f64,
    bound: f64,
) -> Result<(), DynamicsError> {
    if state.n() != params.n() || state.m() != params.m() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "state is ({}, {}) but parameters are ({}, {})",
            state.n(),
            state.m(),
            params.n(),
            params.m()
        )));
    }
    if !(h > 0.0) {
        return Err(DynamicsError::InvalidStepSize(h));
    }
    if !state.in_domain(bound) {
        return Err(DynamicsError::OutsideDomain(format!(
            "entries must lie in [0, 1] x [0, {}]",
            bound
        )));
    }
    Ok(())
}

/// One step of the single-virus dynamics. The input must lie inside the
/// invariant domain for the given resource bound.
pub fn step_single(
    state: &State,
    params: &SpreadingParams,
    h: f64,
    bound: f64,
) -> Result<State, DynamicsError> {
    check_single_input(state, params, h, bound)?;
    let mut next = state.clone();
    let mut pressure = DVector::zeros(params.n());
    step_single_into(state, params, h, &mut pressure, &mut next);
    Ok(next)
}

/// Unchecked single step writing into `next`; `pressure` is scratch.
fn step_single_into(
    state: &State,
    params: &SpreadingParams,
    h: f64,
    pressure: &mut DVector<f64>,
    next: &mut State,
) {
    pressure.gemv(1.0, &params.infection, &state.x, 0.0);
    pressure.gemv(1.0, &params.resource_infection, &state.w, 1.0);
    for i in 0..params.n() {
        let x = state.x[i];
        next.x[i] = x + h * ((1.0 - x) * pressure[i] - params.healing[i] * x);
    }
    next.w.gemv(h, &params.contamination, &state.x, 0.0);
    for j in 0..params.m() {
        next.w[j] += state.w[j] * (1.0 - h * params.decay[j]);
    }
}

/// One step of the multi-virus dynamics: all viruses compete for the same
/// susceptible fraction `1 - sum_k x^k_i`, so infection totals above one are
/// rejected.
pub fn step_multi(
    states: &[State],
    viruses: &[&SpreadingParams],
    h: f64,
    bounds: &[f64],
) -> Result<Vec<State>, DynamicsError> {
    if states.len() != viruses.len() || states.len() != bounds.len() {
        return Err(DynamicsError::DimensionMismatch(format!(
            "{} states, {} parameter sets, {} bounds",
            states.len(),
            viruses.len(),
            bounds.len()
        )));
    }
    for ((state, params), bound) in states.iter().zip(viruses).zip(bounds) {
        check_single_input(state, params, h, *bound)?;
    }
    let n = states[0].n();
    for i in 0..n {
        let total: f64 = states.iter().map(|s| s.x[i]).sum();
        if total > 1.0 {
            return Err(DynamicsError::CoinfectionExceeded { node: i, total });
        }
    }
    let mut next: Vec<State> = states.to_vec();
    let mut pressure = DVector::zeros(n);
    let mut susceptible = DVector::zeros(n);
    step_multi_into(states, viruses, h, &mut pressure, &mut susceptible, &mut next);
    Ok(next)
}

fn step_multi_into(
    states: &[State],
    viruses: &[&SpreadingParams],
    h: f64,
    pressure: &mut DVector<f64>,
    susceptible: &mut DVector<f64>,
    next: &mut [State],
) {
    let n = states[0].n();
    for i in 0..n {
        susceptible[i] = 1.0 - states.iter().map(|s| s.x[i]).sum::<f64>();
    }
    for (k, params) in viruses.iter().enumerate() {
        let state = &states[k];
        pressure.gemv(1.0, &params.infection, &state.x, 0.0);
        pressure.gemv(1.0, &params.resource_infection, &state.w, 1.0);
        for i in 0..n {
            let x = state.x[i];
            next[k].x[i] = x + h * (susceptible[i] * pressure[i] - params.healing[i] * x);
        }
        next[k].w.gemv(h, &params.contamination, &state.x, 0.0);
        for j in 0..params.m() {
            next[k].w[j] += state.w[j] * (1.0 - h * params.decay[j]);
        }
    }
}

fn resolve_stride(stride: u64, max_steps: u64) -> u64 {
    if stride > 0 {
        stride
    } else if max_steps <= DENSE_SAMPLE_LIMIT {
        1
    } else {
        max_steps / DENSE_SAMPLE_LIMIT
    }
}

/// Bound for a schedule, or `None` for callback schedules (which cannot be
/// enumerated; domain checks then only enforce nonnegativity).
fn schedule_bound(
    schedule: &ParameterSchedule,
    initial_w: &DVector<f64>,
) -> Result<Option<f64>, DynamicsError> {
    let pieces = schedule.pieces();
    if pieces.is_empty() {
        return Ok(None);
    }
    Ok(Some(resource_bound(pieces.into_iter(), initial_w)?))
}

/// Runs the single-virus dynamics under a parameter schedule until successive
/// states differ by less than `tol` in max-norm or the step budget runs out.
/// `stride = 0` picks a stride automatically (every step up to 10^4 steps).
pub fn simulate(
    initial: &State,
    schedule: &ParameterSchedule,
    h: f64,
    max_steps: u64,
    tol: f64,
    stride: u64,
) -> Result<Trajectory, DynamicsError> {
    if !(tol > 0.0) {
        return Err(DynamicsError::InvalidTolerance(tol));
    }
    let bound = schedule_bound(schedule, &initial.w)?;
    {
        let params = schedule.params_at(0);
        check_single_input(initial, &params, h, bound.unwrap_or(f64::INFINITY))?;
    }

    let stride = resolve_stride(stride, max_steps);
    let mut samples = vec![(0u64, vec![initial.clone()])];
    let mut current = initial.clone();
    let mut next = initial.clone();
    let mut pressure = DVector::zeros(initial.n());
    let mut steps = 0u64;
    let mut converged = false;

    for t in 0..max_steps {
        let params = schedule.params_at(t);
        step_single_into(&current, &params, h, &mut pressure, &mut next);
        std::mem::swap(&mut current, &mut next);
        steps = t + 1;
        if steps % stride == 0 {
            samples.push((steps, vec![current.clone()]));
        }
        if current.max_abs_diff(&next) < tol {
            converged = true;
            break;
        }
    }

    if samples.last().map(|(s, _)| *s) != Some(steps) {
        samples.push((steps, vec![current.clone()]));
    }
    Ok(Trajectory {
        samples,
        steps,
        converged,
        limit: vec![current],
        stop: if converged {
            StopReason::Tolerance
        } else {
            StopReason::MaxSteps
        },
    })
}

/// Runs the multi-virus dynamics. `schedules`, when given, supplies one
/// schedule per virus and overrides the scenario's constant parameters.
/// Convergence is judged on the largest per-virus state difference.
pub fn simulate_multi(
    scenario: &MultiVirusScenario,
    schedules: Option<&[ParameterSchedule]>,
    max_steps: u64,
    tol: f64,
    stride: u64,
) -> Result<Trajectory, DynamicsError> {
    if !(tol > 0.0) {
        return Err(DynamicsError::InvalidTolerance(tol));
    }
    let l = scenario.l();
    if let Some(s) = schedules {
        if s.len() != l {
            return Err(DynamicsError::InvalidSchedule(format!(
                "{} schedules for {} viruses",
                s.len(),
                l
            )));
        }
        for sched in s {
            if let Some((n, m)) = sched.dimensions() {
                if n != scenario.n() || m != scenario.m() {
                    return Err(DynamicsError::DimensionMismatch(
                        "schedule dimensions differ from scenario".into(),
                    ));
                }
            }
        }
    }
    let h = scenario.h;
    let initial = scenario.initial();

    let mut bounds = Vec::with_capacity(l);
    for k in 0..l {
        let bound = match schedules {
            Some(s) => schedule_bound(&s[k], &initial[k].w)?.unwrap_or(f64::INFINITY),
            None => resource_bound([&scenario.viruses()[k]], &initial[k].w)?,
        };
        bounds.push(bound);
    }
    {
        let current_params: Vec<Cow<SpreadingParams>> = match schedules {
            Some(s) => s.iter().map(|sched| sched.params_at(0)).collect(),
            None => scenario.viruses().iter().map(Cow::Borrowed).collect(),
        };
        for (k, params) in current_params.iter().enumerate() {
            check_single_input(&initial[k], params, h, bounds[k])?;
        }
        for i in 0..scenario.n() {
            let total: f64 = initial.iter().map(|s| s.x[i]).sum();
            if total > 1.0 {
                return Err(DynamicsError::CoinfectionExceeded { node: i, total });
            }
        }
    }

    let stride = resolve_stride(stride, max_steps);
    let mut samples = vec![(0u64, initial.to_vec())];
    let mut current = initial.to_vec();
    let mut next = initial.to_vec();
    let mut pressure = DVector::zeros(scenario.n());
    let mut susceptible = DVector::zeros(scenario.n());
    let mut steps = 0u64;
    let mut converged = false;

    for t in 0..max_steps {
        {
            let params: Vec<Cow<SpreadingParams>> = match schedules {
                Some(s) => s.iter().map(|sched| sched.params_at(t)).collect(),
                None => scenario.viruses().iter().map(Cow::Borrowed).collect(),
            };
            let refs: Vec<&SpreadingParams> = params.iter().map(|p| p.as_ref()).collect();
            step_multi_into(&current, &refs, h, &mut pressure, &mut susceptible, &mut next);
        }
        std::mem::swap(&mut current, &mut next);
        steps = t + 1;
        if steps % stride == 0 {
            samples.push((steps, current.clone()));
        }
        let diff = current
            .iter()
            .zip(next.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0f64, f64::max);
        if diff < tol {
            converged = true;
            break;
        }
    }

    if samples.last().map(|(s, _)| *s) != Some(steps) {
        samples.push((steps, current.clone()));
    }
    Ok(Trajectory {
        samples,
        steps,
        converged,
        limit: current,
        stop: if converged {
            StopReason::Tolerance
        } else {
            StopReason::MaxSteps
        },
    })
}

/// Continuous-time counterpart integrated with the classical fourth-order
/// Runge-Kutta scheme at step `h / substeps`. Shares every equilibrium with
/// the sampled dynamics, so it serves as an independent cross-check of limit
/// behavior. Samples are recorded on the sampled-time grid.
pub fn reference_continuous(
    initial: &State,
    params: &SpreadingParams,
    h: f64,
    max_steps: u64,
    tol: f64,
    stride: u64,
    substeps: u32,
) -> Result<Trajectory, DynamicsError> {
    if substeps == 0 {
        return Err(DynamicsError::InvalidSubsteps);
    }
    if !(tol > 0.0) {
        return Err(DynamicsError::InvalidTolerance(tol));
    }
    let bound = resource_bound([params], &initial.w)?;
    check_single_input(initial, params, h, bound)?;

    let n = params.n();
    let m = params.m();
    let dt = h / substeps as f64;
    let stride = resolve_stride(stride, max_steps);

    let field = |state: &State, out: &mut State, pressure: &mut DVector<f64>| {
        pressure.gemv(1.0, &params.infection, &state.x, 0.0);
        pressure.gemv(1.0, &params.resource_infection, &state.w, 1.0);
        for i in 0..n {
            out.x[i] = (1.0 - state.x[i]) * pressure[i] - params.healing[i] * state.x[i];
        }
        out.w.gemv(1.0, &params.contamination, &state.x, 0.0);
        for j in 0..m {
            out.w[j] -= params.decay[j] * state.w[j];
        }
    };

    let mut samples = vec![(0u64, vec![initial.clone()])];
    let mut current = initial.clone();
    let mut pressure = DVector::zeros(n);
    let mut stage = State::zeros(n, m);
    let mut k1 = State::zeros(n, m);
    let mut k2 = State::zeros(n, m);
    let mut k3 = State::zeros(n, m);
    let mut k4 = State::zeros(n, m);
    let mut steps = 0u64;
    let mut converged = false;

    for t in 0..max_steps {
        let previous = current.clone();
        for _ in 0..substeps {
            field(&current, &mut k1, &mut pressure);
            stage.x = &current.x + 0.5 * dt * &k1.x;
            stage.w = &current.w + 0.5 * dt * &k1.w;
            field(&stage, &mut k2, &mut pressure);
            stage.x = &current.x + 0.5 * dt * &k2.x;
            stage.w = &current.w + 0.5 * dt * &k2.w;
            field(&stage, &mut k3, &mut pressure);
            stage.x = &current.x + dt * &k3.x;
            stage.w = &current.w + dt * &k3.w;
            field(&stage, &mut k4, &mut pressure);
            current.x += dt / 6.0 * (&k1.x + 2.0 * &k2.x + 2.0 * &k3.x + &k4.x);
            current.w += dt / 6.0 * (&k1.w + 2.0 * &k2.w + 2.0 * &k3.w + &k4.w);
        }
        steps = t + 1;
        if steps % stride == 0 {
            samples.push((steps, vec![current.clone()]));
        }
        if current.max_abs_diff(&previous) < tol {
            converged = true;
            break;
        }
    }

    if samples.last().map(|(s, _)| *s) != Some(steps) {
        samples.push((steps, vec![current.clone()]));
    }
    Ok(Trajectory {
        samples,
        steps,
        converged,
        limit: vec![current],
        stop: if converged {
            StopReason::Tolerance
        } else {
            StopReason::MaxSteps
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn water_only_params() -> SpreadingParams {
        SpreadingParams::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_vec(vec![0.5]),
            DVector::from_vec(vec![0.5]),
        )
        .unwrap()
    }

    #[test]
    fn single_step_matches_hand_computation() {
        let state = State::new(DVector::from_vec(vec![0.5]), DVector::from_vec(vec![0.4]));
        let next = step_single(&state, &water_only_params(), 0.1, 2.0).unwrap();
        assert!((next.x[0] - 0.495).abs() < 1e-15, "x = {}", next.x[0]);
        assert!((next.w[0] - 0.43).abs() < 1e-15, "w = {}", next.w[0]);
    }

    #[test]
    fn zero_state_is_permanent() {
        let state = State::zeros(1, 1);
        let next = step_single(&state, &water_only_params(), 0.1, 2.0).unwrap();
        assert!(next.is_zero());
    }

    #[test]
    fn step_rejects_out_of_domain_input() {
        let state = State::new(DVector::from_vec(vec![1.1]), DVector::zeros(1));
        assert!(matches!(
            step_single(&state, &water_only_params(), 0.1, 2.0),
            Err(DynamicsError::OutsideDomain(_))
        ));
    }

    #[test]
    fn multi_step_rejects_coinfection_overflow() {
        let params = water_only_params();
        let a = State::new(DVector::from_vec(vec![0.6]), DVector::zeros(1));
        let b = State::new(DVector::from_vec(vec![0.5]), DVector::zeros(1));
        let err = step_multi(&[a, b], &[&params, &params], 0.1, &[2.0, 2.0]);
        assert!(matches!(
            err,
            Err(DynamicsError::CoinfectionExceeded { node: 0, .. })
        ));
    }

    #[test]
    fn multi_step_reduces_to_single_for_one_virus() {
        let params = water_only_params();
        let state = State::new(DVector::from_vec(vec![0.5]), DVector::from_vec(vec![0.4]));
        let single = step_single(&state, &params, 0.1, 2.0).unwrap();
        let multi = step_multi(&[state], &[&params], 0.1, &[2.0]).unwrap();
        assert_eq!(multi[0], single);
    }

    #[test]
    fn schedule_piece_selection_is_left_continuous() {
        let p0 = water_only_params();
        let mut p1 = p0.clone();
        p1.healing[0] = 0.25;
        let schedule =
            ParameterSchedule::piecewise(vec![(0, p0.clone()), (10, p1.clone())]).unwrap();
        assert_eq!(schedule.params_at(9).healing[0], 0.5);
        assert_eq!(schedule.params_at(10).healing[0], 0.25);
        assert_eq!(schedule.params_at(1000).healing[0], 0.25);

        let periodic = ParameterSchedule::periodic(vec![(0, p0), (10, p1)], 20).unwrap();
        assert_eq!(periodic.params_at(9).healing[0], 0.5);
        assert_eq!(periodic.params_at(15).healing[0], 0.25);
        assert_eq!(periodic.params_at(20).healing[0], 0.5);
        assert_eq!(periodic.params_at(29).healing[0], 0.5);
    }

    #[test]
    fn schedule_rejects_bad_piece_lists() {
        let p = water_only_params();
        assert!(ParameterSchedule::piecewise(vec![]).is_err());
        assert!(ParameterSchedule::piecewise(vec![(5, p.clone())]).is_err());
        assert!(
            ParameterSchedule::piecewise(vec![(0, p.clone()), (0, p.clone())]).is_err()
        );
        assert!(ParameterSchedule::periodic(vec![(0, p.clone()), (10, p.clone())], 10).is_err());
    }

    #[test]
    fn simulate_converges_subcritical() {
        // Removal dominates coupling, so infection dies out.
        let params = SpreadingParams::new(
            DMatrix::from_row_slice(2, 2, &[0.0, 0.2, 0.2, 0.0]),
            DMatrix::from_element(2, 1, 0.1),
            DMatrix::from_element(1, 2, 0.1),
            DVector::from_element(2, 0.9),
            DVector::from_element(1, 0.9),
        )
        .unwrap();
        let initial = State::new(DVector::from_element(2, 0.5), DVector::from_element(1, 0.1));
        let schedule = ParameterSchedule::Constant(params);
        let traj = simulate(&initial, &schedule, 0.01, 1_000_000, 1e-12, 0).unwrap();
        assert!(traj.converged);
        assert_eq!(traj.stop, StopReason::Tolerance);
        assert!(traj.limit_single().max_norm() < 1e-6);
        assert_eq!(traj.samples.first().unwrap().0, 0);
        assert_eq!(traj.samples.last().unwrap().0, traj.steps);
    }

    #[test]
    fn simulate_reports_step_budget_exhaustion() {
        let params = water_only_params();
        let initial = State::new(DVector::from_vec(vec![0.5]), DVector::from_vec(vec![0.4]));
        let schedule = ParameterSchedule::Constant(params);
        let traj = simulate(&initial, &schedule, 0.01, 10, 1e-300, 1).unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.stop, StopReason::MaxSteps);
        assert_eq!(traj.steps, 10);
        assert_eq!(traj.samples.len(), 11);
    }

    #[test]
    fn states_stay_in_domain_along_runs() {
        let params = SpreadingParams::new(
            DMatrix::from_row_slice(2, 2, &[0.1, 0.8, 0.7, 0.0]),
            DMatrix::from_element(2, 1, 0.5),
            DMatrix::from_element(1, 2, 0.6),
            DVector::from_element(2, 0.4),
            DVector::from_element(1, 0.7),
        )
        .unwrap();
        let initial = State::new(
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![0.0]),
        );
        let bound = resource_bound([&params], &initial.w).unwrap();
        let schedule = ParameterSchedule::Constant(params);
        let traj = simulate(&initial, &schedule, 0.01, 2000, 1e-14, 1).unwrap();
        for (_, states) in &traj.samples {
            assert!(states[0].in_domain(bound + 1e-12));
        }
    }

    #[test]
    fn positivity_reaches_every_node() {
        // Strong connectivity spreads any nonzero seed to all coordinates
        // within n + m steps.
        let params = SpreadingParams::new(
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0]),
            DMatrix::from_row_slice(3, 1, &[0.4, 0.0, 0.0]),
            DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.4]),
            DVector::from_element(3, 0.5),
            DVector::from_element(1, 0.5),
        )
        .unwrap();
        let mut state = State::new(
            DVector::from_vec(vec![0.0, 0.1, 0.0]),
            DVector::zeros(1),
        );
        let bound = resource_bound([&params], &state.w).unwrap();
        for _ in 0..4 {
            state = step_single(&state, &params, 0.05, bound).unwrap();
        }
        assert!(state.x.iter().all(|&v| v > 0.0));
        assert!(state.w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn reference_integrator_is_first_order_against_euler() {
        // The sampled stepper is explicit Euler on the continuous field, so
        // the gap at fixed horizon shrinks linearly in h.
        let params = water_only_params();
        let initial = State::new(DVector::from_vec(vec![0.5]), DVector::from_vec(vec![0.4]));
        let horizon = 1.0f64;
        let mut gaps = Vec::new();
        for &h in &[0.01f64, 0.005, 0.0025] {
            let steps = (horizon / h).round() as u64;
            let schedule = ParameterSchedule::Constant(params.clone());
            let discrete = simulate(&initial, &schedule, h, steps, 1e-300, steps).unwrap();
            let continuous =
                reference_continuous(&initial, &params, h, steps, 1e-300, steps, 4).unwrap();
            gaps.push(
                discrete
                    .limit_single()
                    .max_abs_diff(continuous.limit_single()),
            );
        }
        let r1 = gaps[0] / gaps[1];
        let r2 = gaps[1] / gaps[2];
        assert!(
            (1.5..2.5).contains(&r1) && (1.5..2.5).contains(&r2),
            "ratios {} {}",
            r1,
            r2
        );
    }

    #[test]
    fn reference_integrator_rejects_zero_substeps() {
        let params = water_only_params();
        let initial = State::zeros(1, 1);
        assert!(matches!(
            reference_continuous(&initial, &params, 0.01, 10, 1e-10, 1, 0),
            Err(DynamicsError::InvalidSubsteps)
        ));
    }
}

//! Equilibrium computation, stability classification, and competition
//! analysis.
//!
//! The long-run picture of the sampled dynamics is decided by the spectral
//! radius of the step matrix `I - h D_f + h B_f`: at or below one every
//! trajectory dies out, above one an endemic state attracts everything away
//! from zero. The routines here compute those equilibria, their parameter
//! sensitivities, the exact error-propagation matrices around the endemic
//! state, and the competitive outcome when two spreading processes share one
//! resource.

use crate::dynamics::{DynamicsError, ParameterSchedule};
use crate::model::{
    assemble_full, is_irreducible, validate, validate_time_varying, FullSystem, ModelError,
    MultiVirusScenario, SpreadingParams, State,
};
use crate::spectral::{
    dense_spectral_radius, metzler_abscissa, reproduction_number, step_radius, SpectralError,
    EIGEN_TOL,
};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Crossed growth rates below this are treated as numerically zero.
pub const GROWTH_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("coupling matrix is not irreducible")]
    NotIrreducible,
    #[error("no convergence after {iterations} iterations, residual {residual}")]
    NoConvergence { iterations: u64, residual: f64 },
    #[error("equilibrium linearization is singular")]
    SingularLinearization,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("schedule piece leaves the stated envelope: {0}")]
    EnvelopeExceeded(String),
    #[error("schedule pieces cannot be enumerated")]
    UnenumerableSchedule,
    #[error("every switching piece was rejected")]
    NoAcceptedPieces,
    #[error("stated shared level {stated} does not match computed level {computed}")]
    TargetMismatch { stated: f64, computed: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// The extinct state is the only equilibrium.
    HealthyOnly,
    /// A strictly positive equilibrium exists alongside the extinct one.
    Endemic,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// The positive equilibrium when one exists, `None` otherwise.
    pub z_star: Option<State>,
    /// Max-norm residual of the equilibrium equations at the returned state.
    pub residual: f64,
    pub iterations: u64,
    pub kind: EquilibriumKind,
}

/// Person-to-person coupling with the resource path folded in:
/// `B + B_w Dw^-1 C_w`. The positive equilibrium of the full system solves
/// `healing_i x_i / (1 - x_i) = (B_eff x)_i` in the person block alone.
pub fn effective_person_coupling(params: &SpreadingParams) -> Result<DMatrix<f64>, AnalysisError> {
    for j in 0..params.m() {
        if !(params.decay[j] > 0.0) {
            return Err(AnalysisError::InvalidInput(format!(
                "resource {} has nonpositive decay rate",
                j
            )));
        }
    }
    let mut scaled = params.contamination.clone();
    for j in 0..params.m() {
        scaled.row_mut(j).scale_mut(1.0 / params.decay[j]);
    }
    Ok(&params.infection + &params.resource_infection * scaled)
}

fn check_positive_removal(full: &FullSystem) -> Result<(), AnalysisError> {
    for (i, &d) in full.removal.iter().enumerate() {
        if !(d > 0.0) {
            return Err(AnalysisError::InvalidInput(format!(
                "removal rate {} is {}, must be positive",
                i, d
            )));
        }
    }
    Ok(())
}

/// Computes the positive equilibrium of the sampled dynamics, which does not
/// depend on the step size. Below the threshold the extinct state is the only
/// equilibrium and `z_star` is `None`.
///
/// The person block is solved by the monotone iteration
/// `x <- (B_eff x) / (healing + B_eff x)` followed by a Newton polish, and the
/// resource levels follow as `w = Dw^-1 C_w x`.
pub fn endemic_fixed_point(
    full: &FullSystem,
    tol: f64,
    max_iter: u64,
) -> Result<EquilibriumResult, AnalysisError> {
    if !(tol > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "tolerance must be positive, got {}",
            tol
        )));
    }
    check_positive_removal(full)?;
    if !is_irreducible(&full.coupling)? {
        return Err(AnalysisError::NotIrreducible);
    }
    let s1 = step_radius(full)?;
    if s1 <= 1.0 {
        return Ok(EquilibriumResult {
            z_star: None,
            residual: 0.0,
            iterations: 0,
            kind: EquilibriumKind::HealthyOnly,
        });
    }

    let params = full.split();
    let n = full.n;
    let b_eff = effective_person_coupling(&params)?;
    let healing = &params.healing;

    let residual_of = |x: &DVector<f64>, pressure: &DVector<f64>| {
        (0..n)
            .map(|i| (healing[i] * x[i] / (1.0 - x[i]) - pressure[i]).abs())
            .fold(0.0f64, f64::max)
    };

    let mut x = DVector::from_element(n, 0.5);
    let mut pressure = &b_eff * &x;
    let mut iterations = 0u64;
    let mut polish = false;
    for _ in 0..max_iter {
        iterations += 1;
        let mut diff = 0.0f64;
        for i in 0..n {
            let next = pressure[i] / (healing[i] + pressure[i]);
            diff = diff.max((next - x[i]).abs());
            x[i] = next;
        }
        pressure = &b_eff * &x;
        if diff < 1e-9 {
            polish = true;
            break;
        }
    }
    if !polish {
        return Err(AnalysisError::NoConvergence {
            iterations,
            residual: residual_of(&x, &pressure),
        });
    }

    // Newton steps on g(x) = healing .* x ./ (1 - x) - B_eff x close the
    // remaining gap quadratically.
    let mut residual = residual_of(&x, &pressure);
    for _ in 0..50 {
        if residual < tol {
            break;
        }
        iterations += 1;
        let mut jac = -b_eff.clone();
        let mut g = DVector::zeros(n);
        for i in 0..n {
            let om = 1.0 - x[i];
            jac[(i, i)] += healing[i] / (om * om);
            g[i] = healing[i] * x[i] / om - pressure[i];
        }
        let step = jac
            .lu()
            .solve(&g)
            .ok_or(AnalysisError::SingularLinearization)?;
        for i in 0..n {
            x[i] = (x[i] - step[i]).clamp(1e-15, 1.0 - 1e-15);
        }
        pressure = &b_eff * &x;
        residual = residual_of(&x, &pressure);
    }
    if residual >= tol {
        return Err(AnalysisError::NoConvergence {
            iterations,
            residual,
        });
    }

    let mut w = &params.contamination * &x;
    for j in 0..full.m {
        w[j] /= params.decay[j];
    }
    // Irreducibility above the threshold forces a strictly interior state.
    if x.iter().any(|&v| !(v > 0.0 && v < 1.0)) || w.iter().any(|&v| !(v > 0.0)) {
        return Err(AnalysisError::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(EquilibriumResult {
        z_star: Some(State::new(x, w)),
        residual,
        iterations,
        kind: EquilibriumKind::Endemic,
    })
}

/// Closed-form positive equilibrium of the fully homogeneous system: every
/// person-to-person rate `beta`, every healing rate `delta`, and a shared
/// resource gain `c_hat = c / decay` per resource, with resource-to-person
/// rates equal to `beta`. Returns `(x, w)` levels; the value is not clamped,
/// so a subcritical system yields a nonpositive `x`.
pub fn homogeneous_equilibrium(
    n: usize,
    m: usize,
    beta: f64,
    delta: f64,
    c_hat: f64,
) -> Result<(f64, f64), AnalysisError> {
    if n == 0 || m == 0 {
        return Err(AnalysisError::WrongShape(
            "need at least one population node and one resource node".into(),
        ));
    }
    if !(beta > 0.0) || !(delta > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "rates must be positive, got beta {} delta {}",
            beta, delta
        )));
    }
    if !(c_hat >= 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "resource gain must be nonnegative, got {}",
            c_hat
        )));
    }
    let x = 1.0 - delta / (n as f64 * beta * (1.0 + m as f64 * c_hat));
    let w = n as f64 * c_hat * x;
    Ok((x, w))
}

fn padded_infection_levels(z_star: &State, d: usize) -> DVector<f64> {
    let mut zhat = DVector::zeros(d);
    zhat.rows_mut(0, z_star.n()).copy_from(&z_star.x);
    zhat
}

fn check_interior(z_star: &State) -> Result<(), AnalysisError> {
    if z_star.x.iter().any(|&v| !(v > 0.0 && v < 1.0)) || z_star.w.iter().any(|&v| !(v > 0.0)) {
        return Err(AnalysisError::InvalidInput(
            "state must be a strictly interior endemic equilibrium".into(),
        ));
    }
    Ok(())
}

/// First-order response of the positive equilibrium to parameter changes.
///
/// With `L = -D_f + (I - Zhat) B_f - S`, where `Zhat` carries the equilibrium
/// infection levels on the person diagonal and `S` the person-block entries
/// of `B_f z*`, the implicit function theorem gives
/// `dz* = L^-1 (Diag(z*) dd + (Zhat - I) dB z*)`. `L` is an irreducible
/// Hurwitz Metzler matrix at a stable endemic state, so its inverse is
/// strictly negative and the response to raising any removal rate is a drop
/// in every component, while raising any coupling entry lifts every
/// component. The step size cancels from the equilibrium equations, so it
/// plays no role here.
pub fn sensitivity(
    full: &FullSystem,
    z_star: &State,
    delta_removal: &DVector<f64>,
    delta_coupling: &DMatrix<f64>,
) -> Result<DVector<f64>, AnalysisError> {
    let d = full.n + full.m;
    if z_star.n() != full.n || z_star.m() != full.m {
        return Err(AnalysisError::WrongShape(format!(
            "state is ({}, {}) but system is ({}, {})",
            z_star.n(),
            z_star.m(),
            full.n,
            full.m
        )));
    }
    if delta_removal.len() != d || delta_coupling.nrows() != d || delta_coupling.ncols() != d {
        return Err(AnalysisError::WrongShape(
            "perturbations must match the stacked dimension".into(),
        ));
    }
    for i in 0..full.m {
        for j in 0..full.m {
            if delta_coupling[(full.n + i, full.n + j)] != 0.0 {
                return Err(AnalysisError::InvalidInput(
                    "perturbation must keep the resource-to-resource block zero".into(),
                ));
            }
        }
    }
    check_interior(z_star)?;

    let z = z_star.stacked();
    let zhat = padded_infection_levels(z_star, d);
    let bz = &full.coupling * &z;

    let mut l = full.coupling.clone();
    for i in 0..d {
        l.row_mut(i).scale_mut(1.0 - zhat[i]);
        l[(i, i)] -= full.removal[i];
    }
    for i in 0..full.n {
        l[(i, i)] -= bz[i];
    }

    let dbz = delta_coupling * &z;
    let mut rhs = DVector::zeros(d);
    for i in 0..d {
        rhs[i] = z[i] * delta_removal[i] + (zhat[i] - 1.0) * dbz[i];
    }
    let lu = l.lu();
    if !lu.is_invertible() {
        return Err(AnalysisError::SingularLinearization);
    }
    lu.solve(&rhs).ok_or(AnalysisError::SingularLinearization)
}

/// Exact propagation of deviations from the positive equilibrium.
///
/// Writing `e(t) = z(t) - z*`, one step of the nonlinear dynamics satisfies
/// `e(t+1) = phi(x(t)) e(t)` with no remainder term, where `phi` depends on
/// the current infection levels only. The constant matrix `F = phi(0)` fixes
/// the direction `mu = z* / x*_1`: `F mu = mu`, so deviations neither grow
/// nor die along the equilibrium ray.
#[derive(Debug, Clone)]
pub struct ErrorDynamics {
    /// `phi(0)`, the propagation matrix at zero infection.
    pub f_matrix: DMatrix<f64>,
    /// Fixed direction of `f_matrix`, normalized to a unit first entry.
    pub mu: DVector<f64>,
    params: SpreadingParams,
    h: f64,
    x_star: DVector<f64>,
}

impl ErrorDynamics {
    /// Propagation matrix at infection levels `x`.
    pub fn phi(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, AnalysisError> {
        let n = self.params.n();
        let m = self.params.m();
        if x.len() != n {
            return Err(AnalysisError::WrongShape(format!(
                "infection vector has length {}, expected {}",
                x.len(),
                n
            )));
        }
        let mut phi = self.f_matrix.clone();
        for i in 0..n {
            let scale = 1.0 - x[i];
            for j in 0..n + m {
                phi[(i, j)] *= scale;
            }
            // The healing term is not exposure, so it keeps its full weight.
            phi[(i, i)] += (1.0 - scale) * (1.0 - self.h * self.params.healing[i] / (1.0 - self.x_star[i]));
        }
        Ok(phi)
    }

    /// Advances an error vector one step given the current infection levels.
    pub fn step(&self, x: &DVector<f64>, err: &DVector<f64>) -> Result<DVector<f64>, AnalysisError> {
        let d = self.params.n() + self.params.m();
        if err.len() != d {
            return Err(AnalysisError::WrongShape(format!(
                "error vector has length {}, expected {}",
                err.len(),
                d
            )));
        }
        Ok(self.phi(x)? * err)
    }
}

/// Builds the error-propagation matrices around a positive equilibrium.
pub fn error_matrices(full: &FullSystem, z_star: &State) -> Result<ErrorDynamics, AnalysisError> {
    if z_star.n() != full.n || z_star.m() != full.m {
        return Err(AnalysisError::WrongShape(format!(
            "state is ({}, {}) but system is ({}, {})",
            z_star.n(),
            z_star.m(),
            full.n,
            full.m
        )));
    }
    check_interior(z_star)?;
    let params = full.split();
    let (n, m) = (full.n, full.m);
    let h = full.h;

    let mut f = DMatrix::zeros(n + m, n + m);
    for i in 0..n {
        for j in 0..n {
            f[(i, j)] = h * params.infection[(i, j)];
        }
        for j in 0..m {
            f[(i, n + j)] = h * params.resource_infection[(i, j)];
        }
        f[(i, i)] += 1.0 - h * params.healing[i] / (1.0 - z_star.x[i]);
    }
    for j in 0..m {
        for k in 0..n {
            f[(n + j, k)] = h * params.contamination[(j, k)];
        }
        f[(n + j, n + j)] = 1.0 - h * params.decay[j];
    }

    let mu = z_star.stacked() / z_star.x[0];
    Ok(ErrorDynamics {
        f_matrix: f,
        mu,
        params,
        h,
        x_star: z_star.x.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Every admissible trajectory converges to the extinct state.
    HealthyGas,
    /// Every nonzero admissible trajectory converges to the positive
    /// equilibrium.
    EndemicGas,
    /// The checked assumptions do not support a global claim.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssumptionFlags {
    /// Rates, signs, and step-size budgets keep the domain invariant.
    pub well_posed: bool,
    /// The stacked coupling matrix is irreducible.
    pub strongly_connected: bool,
    /// The stricter per-node step budget behind the endemic claim holds.
    pub endemic_margin: bool,
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub regime: Regime,
    /// Spectral radius of the removal-scaled coupling matrix.
    pub r0: f64,
    /// Spectral radius of the one-step update matrix at zero infection.
    pub step_radius: f64,
    /// Geometric rate near the extinct state; equals the step radius, and
    /// when subcritical the per-step contraction ratio approaches it.
    pub rate: f64,
    pub flags: AssumptionFlags,
    /// Reproduction numbers per schedule piece (one entry for constant
    /// parameters).
    pub piece_r0: Vec<f64>,
}

/// Decides the long-run regime of one constant-parameter process.
///
/// The threshold is the spectral radius of `I - h D_f + h B_f`: at most one
/// gives global convergence to the extinct state, above one (with the
/// stricter step budget) global convergence to the positive equilibrium.
/// When a supporting assumption fails the verdict is indeterminate rather
/// than a guess.
pub fn classify(full: &FullSystem) -> Result<Classification, AnalysisError> {
    let params = full.split();
    let scenario = MultiVirusScenario::single(
        params,
        State::zeros(full.n, full.m),
        full.h,
    )?;
    let report = validate(&scenario);
    let strongly_connected = is_irreducible(&full.coupling)?;
    let flags = AssumptionFlags {
        well_posed: report.passed,
        strongly_connected,
        endemic_margin: report.endemic_margin_ok,
    };
    let r0 = reproduction_number(full)?;
    let s1 = step_radius(full)?;
    let regime = if s1 <= 1.0 && flags.well_posed && flags.strongly_connected {
        Regime::HealthyGas
    } else if s1 > 1.0 && flags.well_posed && flags.strongly_connected && flags.endemic_margin {
        Regime::EndemicGas
    } else {
        Regime::Indeterminate
    };
    Ok(Classification {
        regime,
        r0,
        step_radius: s1,
        rate: s1,
        flags,
        piece_r0: vec![r0],
    })
}

/// Decides the long-run regime of a switching process from an envelope: a
/// coupling matrix dominating every piece entrywise and a removal vector
/// dominated by every piece. If the envelope step matrix has spectral radius
/// at most one, extinction is global for arbitrary switching among the
/// pieces. The envelope must actually bound each piece; a piece outside it
/// is an error, not a silent downgrade.
pub fn classify_time_varying(
    schedule: &ParameterSchedule,
    h: f64,
    coupling_max: &DMatrix<f64>,
    removal_min: &DVector<f64>,
) -> Result<Classification, AnalysisError> {
    let pieces = schedule.pieces();
    if pieces.is_empty() {
        return Err(AnalysisError::UnenumerableSchedule);
    }
    let (n, m) = (pieces[0].n(), pieces[0].m());
    if pieces.len() == 1 {
        return classify(&assemble_full(pieces[0], h)?);
    }

    for (idx, piece) in pieces.iter().enumerate() {
        let coupling = piece.coupling_matrix();
        let removal = piece.removal_vector();
        for i in 0..n + m {
            for j in 0..n + m {
                if coupling[(i, j)] > coupling_max[(i, j)] {
                    return Err(AnalysisError::EnvelopeExceeded(format!(
                        "piece {} coupling entry ({}, {}) is {}, envelope allows {}",
                        idx,
                        i,
                        j,
                        coupling[(i, j)],
                        coupling_max[(i, j)]
                    )));
                }
            }
            if removal[i] < removal_min[i] {
                return Err(AnalysisError::EnvelopeExceeded(format!(
                    "piece {} removal rate {} is {}, envelope requires at least {}",
                    idx, i, removal[i], removal_min[i]
                )));
            }
        }
    }

    let envelope = FullSystem::from_raw(coupling_max.clone(), removal_min.clone(), h, n, m)?;
    let s1_env = step_radius(&envelope)?;
    let r0_env = reproduction_number(&envelope)?;
    let piece_r0 = pieces
        .iter()
        .map(|p| -> Result<f64, AnalysisError> {
            Ok(reproduction_number(&assemble_full(p, h)?)?)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let report = validate_time_varying(
        &[pieces.clone()],
        &[State::zeros(n, m)],
        h,
    );
    let mut strongly_connected = true;
    for piece in &pieces {
        if !is_irreducible(&piece.coupling_matrix())? {
            strongly_connected = false;
        }
    }
    let flags = AssumptionFlags {
        well_posed: report.passed,
        strongly_connected,
        endemic_margin: report.endemic_margin_ok,
    };
    let regime = if s1_env <= 1.0 && flags.well_posed && flags.strongly_connected {
        Regime::HealthyGas
    } else {
        // A supercritical envelope says nothing global on its own; endemic
        // switching claims go through equilibrium-preserving families.
        Regime::Indeterminate
    };
    Ok(Classification {
        regime,
        r0: r0_env,
        step_radius: s1_env,
        rate: s1_env,
        flags,
        piece_r0,
    })
}

/// Uniform rate levels for a homogeneous process on the complete two-layer
/// network: every person-to-person entry `beta`, every contamination entry
/// `contamination`, every healing rate `delta`, every decay rate `decay`.
/// Resource-to-person rates mirror the contamination rates, which keeps the
/// stacked coupling matrix symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousBase {
    pub beta: f64,
    pub delta: f64,
    pub contamination: f64,
    pub decay: f64,
}

impl HomogeneousBase {
    /// Shared positive equilibrium levels `(x, w)` on `n` person and `m`
    /// resource nodes. Scaling all four rates together leaves both levels
    /// unchanged.
    pub fn equilibrium(&self, n: usize, m: usize) -> Result<(f64, f64), AnalysisError> {
        if n == 0 || m == 0 {
            return Err(AnalysisError::WrongShape(
                "need at least one population node and one resource node".into(),
            ));
        }
        if !(self.beta > 0.0) || !(self.delta > 0.0) || !(self.contamination > 0.0) || !(self.decay > 0.0)
        {
            return Err(AnalysisError::InvalidInput(
                "base rates must be strictly positive".into(),
            ));
        }
        let c_hat = self.contamination / self.decay;
        let x = 1.0
            - self.delta
                / (n as f64 * (self.beta + m as f64 * self.contamination * c_hat));
        let w = n as f64 * c_hat * x;
        Ok((x, w))
    }

    fn scaled_params(&self, n: usize, m: usize, alpha: f64) -> Result<SpreadingParams, ModelError> {
        SpreadingParams::new(
            DMatrix::from_element(n, n, alpha * self.beta),
            DMatrix::from_element(n, m, alpha * self.contamination),
            DMatrix::from_element(m, n, alpha * self.contamination),
            DVector::from_element(n, alpha * self.delta),
            DVector::from_element(m, alpha * self.decay),
        )
    }
}

/// A switching family whose pieces all share one positive equilibrium.
#[derive(Debug)]
pub struct OmegaFamily {
    /// Periodic schedule cycling through the accepted pieces.
    pub schedule: ParameterSchedule,
    /// Infection level every piece holds fixed.
    pub shared_x: f64,
    /// Resource level every piece holds fixed.
    pub shared_w: f64,
    /// Scale factors that passed validation, in schedule order.
    pub accepted: Vec<f64>,
    /// Scale factors that were dropped, with the reason.
    pub rejected: Vec<(f64, String)>,
}

/// Builds a periodic switching schedule from scaled copies of a homogeneous
/// base, all sharing the equilibrium `(x_star, n c_hat x_star)`. Scaling the
/// four base rates by a common factor preserves both levels exactly, and the
/// symmetric stacked coupling of each piece is what lets switched
/// trajectories converge to the shared state. Each candidate scale must pass
/// the full validation, including the stricter endemic step budget; failures
/// land in `rejected` with the reason.
pub fn equilibrium_preserving_family(
    x_star: f64,
    n: usize,
    m: usize,
    base: &HomogeneousBase,
    scales: &[f64],
    h: f64,
    dwell: u64,
) -> Result<OmegaFamily, AnalysisError> {
    if scales.is_empty() {
        return Err(AnalysisError::InvalidInput("no scale factors given".into()));
    }
    if dwell == 0 {
        return Err(AnalysisError::InvalidInput(
            "dwell must be at least one step".into(),
        ));
    }
    let (computed_x, shared_w) = base.equilibrium(n, m)?;
    if !(computed_x > 0.0) {
        return Err(AnalysisError::InvalidInput(format!(
            "base rates are subcritical, computed level {}",
            computed_x
        )));
    }
    if (computed_x - x_star).abs() > 1e-9 {
        return Err(AnalysisError::TargetMismatch {
            stated: x_star,
            computed: computed_x,
        });
    }

    let initial = State::new(
        DVector::from_element(n, computed_x),
        DVector::from_element(m, shared_w),
    );
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    let mut pieces = Vec::new();
    for &alpha in scales {
        if !(alpha > 0.0) {
            rejected.push((alpha, "scale factor must be positive".into()));
            continue;
        }
        let params = base.scaled_params(n, m, alpha)?;
        let scenario = MultiVirusScenario::single(params.clone(), initial.clone(), h)?;
        let report = validate(&scenario);
        if !report.passed {
            let why = report
                .violations
                .first()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "validation failed".into());
            rejected.push((alpha, why));
            continue;
        }
        if !report.endemic_margin_ok {
            let why = report
                .endemic_findings
                .first()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "endemic step budget exceeded".into());
            rejected.push((alpha, why));
            continue;
        }
        pieces.push((accepted.len() as u64 * dwell, params));
        accepted.push(alpha);
    }
    if accepted.is_empty() {
        return Err(AnalysisError::NoAcceptedPieces);
    }
    let period = accepted.len() as u64 * dwell;
    let schedule = ParameterSchedule::periodic(pieces, period)?;
    Ok(OmegaFamily {
        schedule,
        shared_x: computed_x,
        shared_w,
        accepted,
        rejected,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoVirusVerdict {
    /// Both processes die out.
    Healthy,
    /// The given process (1-based) excludes the other.
    Winner(usize),
    /// Each process can invade the other's equilibrium, so a coexistence
    /// equilibrium cannot be ruled out.
    CoexistencePossible,
    /// The checked conditions decide nothing.
    Indeterminate,
}

#[derive(Debug, Clone)]
pub struct VirusSummary {
    pub reproduction_number: f64,
    pub step_radius: f64,
    pub equilibrium: EquilibriumResult,
}

#[derive(Debug)]
pub struct TwoVirusReport {
    pub per_virus: Vec<VirusSummary>,
    /// Growth abscissa of each process at the other's exclusive equilibrium,
    /// when both processes are supercritical.
    pub crossed_growth: Option<[f64; 2]>,
    /// Which process (1-based) dominates entrywise after removal scaling,
    /// if either does.
    pub dominant: Option<usize>,
    /// Step sizes below this keep the dominant process's exclusive
    /// equilibrium locally stable.
    pub step_bound: Option<f64>,
    pub verdict: TwoVirusVerdict,
}

fn removal_scaled(full: &FullSystem) -> DMatrix<f64> {
    let mut scaled = full.coupling.clone();
    for i in 0..scaled.nrows() {
        scaled.row_mut(i).scale_mut(1.0 / full.removal[i]);
    }
    scaled
}

/// `a` dominates `b` when every entry is at least as large and at least one
/// is strictly larger.
fn dominates(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Continuous-time Jacobian of the two-process competition at the exclusive
/// equilibrium of `winner`, with the `loser` extinct. Block upper triangular:
/// the winner's own linearization sits beside its response to the loser, and
/// the loser evolves under the susceptibility left by the winner.
fn exclusive_jacobian(
    winner: &FullSystem,
    loser: &FullSystem,
    z_star: &State,
) -> DMatrix<f64> {
    let d = winner.n + winner.m;
    let zhat = padded_infection_levels(z_star, d);
    let z = z_star.stacked();
    let bz = &winner.coupling * &z;

    let mut top_left = winner.coupling.clone();
    let mut bottom_right = loser.coupling.clone();
    for i in 0..d {
        top_left.row_mut(i).scale_mut(1.0 - zhat[i]);
        top_left[(i, i)] -= winner.removal[i];
        bottom_right.row_mut(i).scale_mut(1.0 - zhat[i]);
        bottom_right[(i, i)] -= loser.removal[i];
    }
    let mut jac = DMatrix::zeros(2 * d, 2 * d);
    jac.view_mut((0, 0), (d, d)).copy_from(&top_left);
    jac.view_mut((d, d), (d, d)).copy_from(&bottom_right);
    for i in 0..winner.n {
        jac[(i, i)] -= bz[i];
        jac[(i, d + i)] = -bz[i];
    }
    jac
}

/// Growth abscissa of `invader` linearized at the resident's exclusive
/// equilibrium, in units of one sampling step.
fn crossed_growth_rate(
    invader: &FullSystem,
    resident_star: &State,
) -> Result<f64, AnalysisError> {
    let d = invader.n + invader.m;
    let zhat = padded_infection_levels(resident_star, d);
    let mut mat = invader.coupling.clone();
    for i in 0..d {
        mat.row_mut(i).scale_mut(invader.h * (1.0 - zhat[i]));
        mat[(i, i)] -= invader.h * invader.removal[i];
    }
    Ok(metzler_abscissa(&mat)?)
}

/// Competition analysis for two processes sharing one resource.
///
/// Subcritical processes die out regardless of the competitor, so one
/// supercritical process wins outright. When both are supercritical, an
/// entrywise dominance of the removal-scaled coupling (with a small enough
/// step) makes the dominant process the locally stable winner; failing that,
/// positive crossed growth rates at both exclusive equilibria leave
/// coexistence on the table.
pub fn two_virus_analysis(
    scenario: &MultiVirusScenario,
) -> Result<TwoVirusReport, AnalysisError> {
    if scenario.l() != 2 || scenario.m() != 1 {
        return Err(AnalysisError::WrongShape(format!(
            "competition analysis needs two viruses and one resource, got {} viruses and {} resources",
            scenario.l(),
            scenario.m()
        )));
    }
    let h = scenario.h;
    let fulls: Vec<FullSystem> = scenario
        .viruses()
        .iter()
        .map(|p| assemble_full(p, h))
        .collect::<Result<_, _>>()?;
    for full in &fulls {
        check_positive_removal(full)?;
    }
    let mut per_virus = Vec::with_capacity(2);
    for full in &fulls {
        per_virus.push(VirusSummary {
            reproduction_number: reproduction_number(full)?,
            step_radius: step_radius(full)?,
            equilibrium: endemic_fixed_point(full, EIGEN_TOL, 1_000_000)?,
        });
    }

    let super_0 = per_virus[0].step_radius > 1.0;
    let super_1 = per_virus[1].step_radius > 1.0;
    let mut report = TwoVirusReport {
        per_virus,
        crossed_growth: None,
        dominant: None,
        step_bound: None,
        verdict: TwoVirusVerdict::Indeterminate,
    };
    match (super_0, super_1) {
        (false, false) => {
            report.verdict = TwoVirusVerdict::Healthy;
            return Ok(report);
        }
        (true, false) => {
            report.verdict = TwoVirusVerdict::Winner(1);
            return Ok(report);
        }
        (false, true) => {
            report.verdict = TwoVirusVerdict::Winner(2);
            return Ok(report);
        }
        (true, true) => {}
    }

    let ratio_0 = removal_scaled(&fulls[0]);
    let ratio_1 = removal_scaled(&fulls[1]);
    let dominant = if dominates(&ratio_0, &ratio_1) {
        Some(0)
    } else if dominates(&ratio_1, &ratio_0) {
        Some(1)
    } else {
        None
    };
    report.dominant = dominant.map(|k| k + 1);

    // Both processes are supercritical here, so both exclusive equilibria
    // exist.
    let stars: Vec<State> = (0..2)
        .map(|k| {
            report.per_virus[k].equilibrium.z_star.clone().ok_or_else(|| {
                AnalysisError::InvalidInput(format!(
                    "supercritical process {} has no computed equilibrium",
                    k + 1
                ))
            })
        })
        .collect::<Result<_, _>>()?;

    if let Some(k) = dominant {
        let jac = exclusive_jacobian(&fulls[k], &fulls[1 - k], &stars[k]);
        let rho = dense_spectral_radius(&jac)?;
        let bound = if rho > 0.0 { 2.0 / rho } else { f64::INFINITY };
        report.step_bound = Some(bound);
        if h < bound {
            report.verdict = TwoVirusVerdict::Winner(k + 1);
            return Ok(report);
        }
    }

    let crossed = [
        crossed_growth_rate(&fulls[0], &stars[1])?,
        crossed_growth_rate(&fulls[1], &stars[0])?,
    ];
    report.crossed_growth = Some(crossed);
    report.verdict = if crossed[0] > GROWTH_TOL && crossed[1] > GROWTH_TOL {
        TwoVirusVerdict::CoexistencePossible
    } else {
        TwoVirusVerdict::Indeterminate
    };
    Ok(report)
}

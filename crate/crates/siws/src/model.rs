//! Core model types: spreading parameters, the assembled equivalent network,
//! state vectors, scenarios and well-posedness validation.
//!
//! The network has `n` population nodes and `m` resource nodes. Infection flows
//! along three nonnegative rate blocks: person to person (`n x n`), resource to
//! person (`n x m`) and person to resource (`m x n`). Each population node heals
//! at a positive rate and each resource decays at a positive rate. All checks
//! that correspond to modeling assumptions are reported by [`validate`] rather
//! than enforced by constructors; constructors only reject structural problems
//! such as mismatched dimensions.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("step size must be positive, got {0}")]
    InvalidStepSize(f64),
    #[error("empty parameter sequence")]
    EmptySchedule,
    #[error("resource {resource} has nonpositive decay rate")]
    NonpositiveDecay { resource: usize },
    #[error("resource {resource} has no positive contamination entry")]
    EmptyContaminationRow { resource: usize },
    #[error("coupling matrix must have a zero resource-to-resource block")]
    BlockStructure,
}

/// Rate parameters of one spreading process over the two-layer network.
///
/// Entries are per sampling interval once multiplied by the step size `h`.
/// Construction only checks shapes; range conditions are [`validate`]'s job.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingParams {
    /// Person-to-person infection rates, `n x n`. Entry `(i, j)` is the rate
    /// at which group `j` infects group `i`.
    pub infection: DMatrix<f64>,
    /// Resource-to-person infection rates, `n x m`.
    pub resource_infection: DMatrix<f64>,
    /// Person-to-resource contamination rates, `m x n`.
    pub contamination: DMatrix<f64>,
    /// Healing rates per population node, length `n`.
    pub healing: DVector<f64>,
    /// Decay rates per resource node, length `m`.
    pub decay: DVector<f64>,
}

impl SpreadingParams {
    pub fn new(
        infection: DMatrix<f64>,
        resource_infection: DMatrix<f64>,
        contamination: DMatrix<f64>,
        healing: DVector<f64>,
        decay: DVector<f64>,
    ) -> Result<Self, ModelError> {
        let n = infection.nrows();
        let m = resource_infection.ncols();
        if n == 0 || m == 0 {
            return Err(ModelError::DimensionMismatch(
                "need at least one population node and one resource node".into(),
            ));
        }
        if infection.ncols() != n {
            return Err(ModelError::NonSquare {
                rows: infection.nrows(),
                cols: infection.ncols(),
            });
        }
        if resource_infection.nrows() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "resource infection block is {}x{}, expected {}x{}",
                resource_infection.nrows(),
                resource_infection.ncols(),
                n,
                m
            )));
        }
        if contamination.nrows() != m || contamination.ncols() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "contamination block is {}x{}, expected {}x{}",
                contamination.nrows(),
                contamination.ncols(),
                m,
                n
            )));
        }
        if healing.len() != n {
            return Err(ModelError::DimensionMismatch(format!(
                "healing vector has length {}, expected {}",
                healing.len(),
                n
            )));
        }
        if decay.len() != m {
            return Err(ModelError::DimensionMismatch(format!(
                "decay vector has length {}, expected {}",
                decay.len(),
                m
            )));
        }
        Ok(Self {
            infection,
            resource_infection,
            contamination,
            healing,
            decay,
        })
    }

    pub fn n(&self) -> usize {
        self.infection.nrows()
    }

    pub fn m(&self) -> usize {
        self.decay.len()
    }

    /// Coupling matrix of the equivalent `(n + m)`-node network: person and
    /// resource blocks stacked, with a zero resource-to-resource block.
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut full = DMatrix::zeros(n + m, n + m);
        full.view_mut((0, 0), (n, n)).copy_from(&self.infection);
        full.view_mut((0, n), (n, m))
            .copy_from(&self.resource_infection);
        full.view_mut((n, 0), (m, n)).copy_from(&self.contamination);
        full
    }

    /// Healing and decay rates stacked into one removal vector of length `n + m`.
    pub fn removal_vector(&self) -> DVector<f64> {
        let mut removal = DVector::zeros(self.n() + self.m());
        removal.rows_mut(0, self.n()).copy_from(&self.healing);
        removal.rows_mut(self.n(), self.m()).copy_from(&self.decay);
        removal
    }
}

/// The assembled equivalent network together with the sampling step.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSystem {
    /// Stacked coupling matrix, `(n + m) x (n + m)`.
    pub coupling: DMatrix<f64>,
    /// Stacked removal rates, length `n + m`.
    pub removal: DVector<f64>,
    /// Sampling step, strictly positive.
    pub h: f64,
    pub n: usize,
    pub m: usize,
}

impl FullSystem {
    /// Builds a system from an already stacked coupling matrix. The
    /// resource-to-resource block must be exactly zero.
    pub fn from_raw(
        coupling: DMatrix<f64>,
        removal: DVector<f64>,
        h: f64,
        n: usize,
        m: usize,
    ) -> Result<Self, ModelError> {
        if coupling.nrows() != n + m || coupling.ncols() != n + m {
            return Err(ModelError::DimensionMismatch(format!(
                "coupling matrix is {}x{}, expected {}x{}",
                coupling.nrows(),
                coupling.ncols(),
                n + m,
                n + m
            )));
        }
        if removal.len() != n + m {
            return Err(ModelError::DimensionMismatch(format!(
                "removal vector has length {}, expected {}",
                removal.len(),
                n + m
            )));
        }
        if !(h > 0.0) {
            return Err(ModelError::InvalidStepSize(h));
        }
        for i in 0..m {
            for j in 0..m {
                if coupling[(n + i, n + j)] != 0.0 {
                    return Err(ModelError::BlockStructure);
                }
            }
        }
        Ok(Self {
            coupling,
            removal,
            h,
            n,
            m,
        })
    }

    /// Recovers the individual parameter blocks. Inverse of [`assemble_full`].
    pub fn split(&self) -> SpreadingParams {
        let (n, m) = (self.n, self.m);
        SpreadingParams {
            infection: self.coupling.view((0, 0), (n, n)).into_owned(),
            resource_infection: self.coupling.view((0, n), (n, m)).into_owned(),
            contamination: self.coupling.view((n, 0), (m, n)).into_owned(),
            healing: self.removal.rows(0, n).into_owned(),
            decay: self.removal.rows(n, m).into_owned(),
        }
    }
}

/// Stacks the parameter blocks into the equivalent-network form used by the
/// spectral and analysis routines.
pub fn assemble_full(params: &SpreadingParams, h: f64) -> Result<FullSystem, ModelError> {
    if !(h > 0.0) {
        return Err(ModelError::InvalidStepSize(h));
    }
    Ok(FullSystem {
        coupling: params.coupling_matrix(),
        removal: params.removal_vector(),
        h,
        n: params.n(),
        m: params.m(),
    })
}

/// Infection fractions and resource contamination levels at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Infected fraction per population node, each in `[0, 1]`.
    pub x: DVector<f64>,
    /// Contamination level per resource node, each in `[0, w_cap]` where
    /// `w_cap` is the computed resource bound.
    pub w: DVector<f64>,
}

impl State {
    pub fn new(x: DVector<f64>, w: DVector<f64>) -> Self {
        Self { x, w }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            w: DVector::zeros(m),
        }
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    /// True when every entry lies inside the invariant domain.
    pub fn in_domain(&self, resource_bound: f64) -> bool {
        self.x.iter().all(|&v| (0.0..=1.0).contains(&v))
            && self.w.iter().all(|&v| v >= 0.0 && v <= resource_bound)
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().all(|&v| v == 0.0) && self.w.iter().all(|&v| v == 0.0)
    }

    /// Concatenates infection and contamination entries into one vector.
    pub fn stacked(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.n() + self.m());
        z.rows_mut(0, self.n()).copy_from(&self.x);
        z.rows_mut(self.n(), self.m()).copy_from(&self.w);
        z
    }

    pub fn from_stacked(z: &DVector<f64>, n: usize, m: usize) -> Self {
        assert_eq!(z.len(), n + m, "stacked state has wrong length");
        Self {
            x: z.rows(0, n).into_owned(),
            w: z.rows(n, m).into_owned(),
        }
    }

    /// Largest entrywise absolute difference against another state.
    pub fn max_abs_diff(&self, other: &State) -> f64 {
        let dx = self
            .x
            .iter()
            .zip(other.x.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let dw = self
            .w
            .iter()
            .zip(other.w.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        dx.max(dw)
    }

    pub fn max_norm(&self) -> f64 {
        let nx = self.x.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let nw = self.w.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        nx.max(nw)
    }
}

/// A scenario with one or more viruses spreading over the same network
/// dimensions. Single-virus scenarios use `l = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVirusScenario {
    pub h: f64,
    viruses: Vec<SpreadingParams>,
    initial: Vec<State>,
}

impl MultiVirusScenario {
    pub fn new(
        viruses: Vec<SpreadingParams>,
        initial: Vec<State>,
        h: f64,
    ) -> Result<Self, ModelError> {
        if viruses.is_empty() {
            return Err(ModelError::DimensionMismatch(
                "scenario needs at least one virus".into(),
            ));
        }
        if viruses.len() != initial.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "{} parameter sets but {} initial states",
                viruses.len(),
                initial.len()
            )));
        }
        let (n, m) = (viruses[0].n(), viruses[0].m());
        for (k, p) in viruses.iter().enumerate() {
            if p.n() != n || p.m() != m {
                return Err(ModelError::DimensionMismatch(format!(
                    "virus {} has dimensions ({}, {}), expected ({}, {})",
                    k + 1,
                    p.n(),
                    p.m(),
                    n,
                    m
                )));
            }
        }
        for (k, s) in initial.iter().enumerate() {
            if s.n() != n || s.m() != m {
                return Err(ModelError::DimensionMismatch(format!(
                    "initial state {} has dimensions ({}, {}), expected ({}, {})",
                    k + 1,
                    s.n(),
                    s.m(),
                    n,
                    m
                )));
            }
        }
        Ok(Self {
            h,
            viruses,
            initial,
        })
    }

    pub fn single(params: SpreadingParams, initial: State, h: f64) -> Result<Self, ModelError> {
        Self::new(vec![params], vec![initial], h)
    }

    pub fn l(&self) -> usize {
        self.viruses.len()
    }

    pub fn n(&self) -> usize {
        self.viruses[0].n()
    }

    pub fn m(&self) -> usize {
        self.viruses[0].m()
    }

    pub fn viruses(&self) -> &[SpreadingParams] {
        &self.viruses
    }

    pub fn initial(&self) -> &[State] {
        &self.initial
    }
}

/// The modeling assumption a validation finding refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assumption {
    /// Initial infection fractions in `[0, 1]`, contamination nonnegative,
    /// co-infection totals at most one.
    InitialState,
    /// Positive healing and decay, nonnegative couplings, every resource
    /// contaminated by at least one population node.
    RateSigns,
    /// Resource levels within the computed bound.
    ResourceCapacity,
    /// Step-size products within `(0, 1]` and row budgets within `[0, 1]`.
    StepSize,
    /// Strong connectivity of the equivalent network.
    Connectivity,
    /// Stricter per-row budget including the healing rate. Not required for
    /// simulation; gates endemic-stability claims only.
    EndemicMargin,
}

impl std::fmt::Display for Assumption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Assumption::InitialState => "initial state",
            Assumption::RateSigns => "rate signs",
            Assumption::ResourceCapacity => "resource capacity",
            Assumption::StepSize => "step size",
            Assumption::Connectivity => "connectivity",
            Assumption::EndemicMargin => "endemic margin",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub assumption: Assumption,
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.assumption, self.location, self.message)
    }
}

/// Outcome of checking a scenario against the modeling assumptions.
///
/// `passed` covers exactly the blocking assumptions; findings against the
/// stricter endemic margin are listed separately because they only downgrade
/// what can be claimed about an endemic equilibrium, not whether the system
/// is well posed.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub passed: bool,
    /// Computed resource bound per virus.
    pub resource_bound: Vec<f64>,
    pub violations: Vec<Violation>,
    pub endemic_margin_ok: bool,
    pub endemic_findings: Vec<Violation>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.passed {
            writeln!(f, "validation: OK")?;
        } else {
            writeln!(f, "validation: FAILED ({} violations)", self.violations.len())?;
        }
        for (k, b) in self.resource_bound.iter().enumerate() {
            writeln!(f, "  resource bound (virus {}): {}", k + 1, b)?;
        }
        for v in &self.violations {
            writeln!(f, "  violation {}", v)?;
        }
        for v in &self.endemic_findings {
            writeln!(f, "  note {}", v)?;
        }
        if !self.endemic_margin_ok {
            writeln!(
                f,
                "  endemic margin not met: endemic classifications are downgraded"
            )?;
        }
        Ok(())
    }
}

/// Least upper bound for resource contamination over a parameter sequence:
/// the larger of the initial levels and every per-resource contamination
/// budget `sum_k c_jk / decay_j` appearing in the sequence.
///
/// Errors on an empty sequence, a nonpositive decay rate, or a resource row
/// with no positive contamination entry, since the bound is meaningless in
/// those cases.
pub fn resource_bound<'a, I>(pieces: I, initial_w: &DVector<f64>) -> Result<f64, ModelError>
where
    I: IntoIterator<Item = &'a SpreadingParams>,
{
    let mut bound = initial_w.iter().copied().fold(0.0f64, f64::max);
    let mut seen = false;
    for params in pieces {
        seen = true;
        if initial_w.len() != params.m() {
            return Err(ModelError::DimensionMismatch(format!(
                "initial contamination has length {}, expected {}",
                initial_w.len(),
                params.m()
            )));
        }
        for j in 0..params.m() {
            if params.decay[j] <= 0.0 {
                return Err(ModelError::NonpositiveDecay { resource: j });
            }
            let row_sum: f64 = params.contamination.row(j).iter().sum();
            if !params.contamination.row(j).iter().any(|&c| c > 0.0) {
                return Err(ModelError::EmptyContaminationRow { resource: j });
            }
            bound = bound.max(row_sum / params.decay[j]);
        }
    }
    if !seen {
        return Err(ModelError::EmptySchedule);
    }
    Ok(bound)
}

/// Checks a time-invariant scenario against every modeling assumption.
/// Nothing throws; all findings are reported.
pub fn validate(scenario: &MultiVirusScenario) -> ValidationReport {
    let pieces: Vec<Vec<&SpreadingParams>> =
        scenario.viruses().iter().map(|p| vec![p]).collect();
    validate_time_varying(&pieces, scenario.initial(), scenario.h)
}

/// Checks a possibly time-varying scenario: for each virus, the full list of
/// parameter pieces its schedule can produce. Step-size budgets are evaluated
/// against the per-virus supremum over pieces, which is exact for one virus
/// and conservative when several time-varying viruses are combined.
pub fn validate_time_varying(
    pieces_per_virus: &[Vec<&SpreadingParams>],
    initial: &[State],
    h: f64,
) -> ValidationReport {
    let l = pieces_per_virus.len();
    let mut violations = Vec::new();
    let mut endemic_findings = Vec::new();
    let mut bounds = vec![0.0f64; l];

    let loc = |k: usize, rest: &str| -> String {
        if l == 1 {
            rest.to_string()
        } else {
            format!("virus {} {}", k + 1, rest)
        }
    };

    if !(h > 0.0) || !h.is_finite() {
        violations.push(Violation {
            assumption: Assumption::StepSize,
            location: "h".into(),
            message: format!("step size must be positive and finite, got {}", h),
        });
    }

    for (k, pieces) in pieces_per_virus.iter().enumerate() {
        if pieces.is_empty() {
            violations.push(Violation {
                assumption: Assumption::StepSize,
                location: loc(k, "schedule"),
                message: "schedule has no pieces".into(),
            });
            continue;
        }
        let many = pieces.len() > 1;
        let ploc = |p: usize, rest: &str| -> String {
            if many {
                loc(k, &format!("piece {} {}", p + 1, rest))
            } else {
                loc(k, rest)
            }
        };

        // Sign conditions, per piece.
        for (pi, params) in pieces.iter().enumerate() {
            for i in 0..params.n() {
                let d = params.healing[i];
                if !(d > 0.0) || !d.is_finite() {
                    violations.push(Violation {
                        assumption: Assumption::RateSigns,
                        location: ploc(pi, &format!("healing[{}]", i)),
                        message: format!("healing rate must be positive, got {}", d),
                    });
                }
            }
            for j in 0..params.m() {
                let d = params.decay[j];
                if !(d > 0.0) || !d.is_finite() {
                    violations.push(Violation {
                        assumption: Assumption::RateSigns,
                        location: ploc(pi, &format!("decay[{}]", j)),
                        message: format!("decay rate must be positive, got {}", d),
                    });
                }
                if !params.contamination.row(j).iter().any(|&c| c > 0.0) {
                    violations.push(Violation {
                        assumption: Assumption::RateSigns,
                        location: ploc(pi, &format!("contamination[{}]", j)),
                        message: "resource is contaminated by no population node".into(),
                    });
                }
            }
            let blocks: [(&str, &DMatrix<f64>); 3] = [
                ("infection", &params.infection),
                ("resource_infection", &params.resource_infection),
                ("contamination", &params.contamination),
            ];
            for (name, mat) in blocks {
                for i in 0..mat.nrows() {
                    for j in 0..mat.ncols() {
                        let v = mat[(i, j)];
                        if v < 0.0 || !v.is_finite() {
                            violations.push(Violation {
                                assumption: Assumption::RateSigns,
                                location: ploc(pi, &format!("{}[{}][{}]", name, i, j)),
                                message: format!("rate must be nonnegative and finite, got {}", v),
                            });
                        }
                    }
                }
            }
        }

        // Resource bound, tolerant of rows already reported above.
        let w0 = &initial[k].w;
        let mut bound = w0.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
        for params in pieces.iter() {
            for j in 0..params.m() {
                if params.decay[j] > 0.0 {
                    let row_sum: f64 = params.contamination.row(j).iter().sum();
                    if row_sum.is_finite() && row_sum > 0.0 {
                        bound = bound.max(row_sum / params.decay[j]);
                    }
                }
            }
        }
        bounds[k] = bound;

        // Initial state ranges.
        let s0 = &initial[k];
        for i in 0..s0.n() {
            let v = s0.x[i];
            if !(0.0..=1.0).contains(&v) {
                violations.push(Violation {
                    assumption: Assumption::InitialState,
                    location: loc(k, &format!("x[{}]", i)),
                    message: format!("initial infection fraction must be in [0, 1], got {}", v),
                });
            }
        }
        for j in 0..s0.m() {
            let v = s0.w[j];
            if !(v >= 0.0) || !v.is_finite() {
                violations.push(Violation {
                    assumption: Assumption::ResourceCapacity,
                    location: loc(k, &format!("w[{}]", j)),
                    message: format!(
                        "initial contamination must be nonnegative and finite, got {}",
                        v
                    ),
                });
            }
        }

        // Step-size products per piece.
        if h > 0.0 && h.is_finite() {
            for (pi, params) in pieces.iter().enumerate() {
                for i in 0..params.n() {
                    let p = h * params.healing[i];
                    if params.healing[i] > 0.0 && p > 1.0 {
                        violations.push(Violation {
                            assumption: Assumption::StepSize,
                            location: ploc(pi, &format!("healing[{}]", i)),
                            message: format!("h * healing = {} exceeds 1", p),
                        });
                    }
                }
                for j in 0..params.m() {
                    let p = h * params.decay[j];
                    if params.decay[j] > 0.0 && p > 1.0 {
                        violations.push(Violation {
                            assumption: Assumption::StepSize,
                            location: ploc(pi, &format!("decay[{}]", j)),
                            message: format!("h * decay = {} exceeds 1", p),
                        });
                    }
                }
            }
        }

        // Connectivity of the equivalent network, per piece.
        for (pi, params) in pieces.iter().enumerate() {
            match is_irreducible(&params.coupling_matrix()) {
                Ok(true) => {}
                Ok(false) => violations.push(Violation {
                    assumption: Assumption::Connectivity,
                    location: ploc(pi, "coupling"),
                    message: "equivalent network is not strongly connected".into(),
                }),
                Err(e) => violations.push(Violation {
                    assumption: Assumption::Connectivity,
                    location: ploc(pi, "coupling"),
                    message: e.to_string(),
                }),
            }
        }
    }

    // Per-node infection budgets, summed across viruses. Each virus
    // contributes its supremum over schedule pieces.
    if h > 0.0 && h.is_finite() && !pieces_per_virus.iter().any(|p| p.is_empty()) {
        let n = pieces_per_virus[0]
            .first()
            .map(|p| p.n())
            .unwrap_or(0);
        for i in 0..n {
            let mut total = 0.0f64;
            let mut strict_ok = true;
            for (k, pieces) in pieces_per_virus.iter().enumerate() {
                let mut worst = 0.0f64;
                let mut strict_worst = 0.0f64;
                for params in pieces.iter() {
                    if i >= params.n() {
                        continue;
                    }
                    let row: f64 = params.infection.row(i).iter().sum();
                    let row_w: f64 = params.resource_infection.row(i).iter().sum();
                    let budget = row + row_w * bounds[k];
                    worst = worst.max(budget);
                    strict_worst = strict_worst.max(budget + params.healing[i].max(0.0));
                }
                total += worst;
                if h * strict_worst > 1.0 {
                    strict_ok = false;
                }
            }
            if h * total > 1.0 {
                violations.push(Violation {
                    assumption: Assumption::StepSize,
                    location: format!("node {}", i),
                    message: format!(
                        "h * (infection row sums + resource row sums * bound) = {} exceeds 1",
                        h * total
                    ),
                });
            }
            if !strict_ok {
                endemic_findings.push(Violation {
                    assumption: Assumption::EndemicMargin,
                    location: format!("node {}", i),
                    message: "h * (healing + row budget) exceeds 1".into(),
                });
            }
        }

        // Co-infection totals.
        if l > 1 {
            for i in 0..n {
                let total: f64 = initial.iter().map(|s| s.x[i]).sum();
                if total > 1.0 {
                    violations.push(Violation {
                        assumption: Assumption::InitialState,
                        location: format!("node {}", i),
                        message: format!(
                            "initial infection fractions sum to {} across viruses",
                            total
                        ),
                    });
                }
            }
        }
    }

    ValidationReport {
        passed: violations.is_empty(),
        resource_bound: bounds,
        violations,
        endemic_margin_ok: endemic_findings.is_empty(),
        endemic_findings,
    }
}

/// True when the nonzero pattern of a square matrix is strongly connected.
/// Comparison against exact zero; a `1 x 1` matrix counts as irreducible.
pub fn is_irreducible(matrix: &DMatrix<f64>) -> Result<bool, ModelError> {
    if matrix.nrows() != matrix.ncols() {
        return Err(ModelError::NonSquare {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
    }
    let n = matrix.nrows();
    if n <= 1 {
        return Ok(true);
    }
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if i != j && matrix[(i, j)] != 0.0 {
                adjacency[i].push(j);
            }
        }
    }
    Ok(count_strong_components(&adjacency) == 1)
}

struct TarjanState {
    next_index: usize,
    index: Vec<Option<usize>>,
    lowlink: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    components: usize,
}

fn count_strong_components(adjacency: &[Vec<usize>]) -> usize {
    let n = adjacency.len();
    let mut state = TarjanState {
        next_index: 0,
        index: vec![None; n],
        lowlink: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        components: 0,
    };
    for v in 0..n {
        if state.index[v].is_none() {
            tarjan_visit(v, adjacency, &mut state);
        }
    }
    state.components
}

fn tarjan_visit(v: usize, adjacency: &[Vec<usize>], state: &mut TarjanState) {
    state.index[v] = Some(state.next_index);
    state.lowlink[v] = state.next_index;
    state.next_index += 1;
    state.stack.push(v);
    state.on_stack[v] = true;

    for &w in &adjacency[v] {
        match state.index[w] {
            None => {
                tarjan_visit(w, adjacency, state);
                state.lowlink[v] = state.lowlink[v].min(state.lowlink[w]);
            }
            Some(w_index) => {
                if state.on_stack[w] {
                    state.lowlink[v] = state.lowlink[v].min(w_index);
                }
            }
        }
    }

    if Some(state.lowlink[v]) == state.index[v] {
        state.components += 1;
        while let Some(w) = state.stack.pop() {
            state.on_stack[w] = false;
            if w == v {
                break;
            }
        }
    }
}

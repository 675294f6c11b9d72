//! Perron root computations for the nonnegative and Metzler matrices the model
//! produces: spectral radii with positive eigenvector pairs, reproduction
//! numbers, and the step-map radius that decides between extinction and
//! persistence.

use crate::model::FullSystem;
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Default residual tolerance for eigenpair computations.
pub const EIGEN_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix entry ({row}, {col}) = {value} must be nonnegative and finite")]
    BadEntry { row: usize, col: usize, value: f64 },
    #[error("power iteration did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("removal rate {index} must be positive, got {value}")]
    NonpositiveRemoval { index: usize, value: f64 },
    #[error("matrix must be diagonal, found nonzero at ({row}, {col})")]
    NotDiagonal { row: usize, col: usize },
    #[error("diagonal entry {index} = {value} must be strictly negative")]
    DiagonalNotNegative { index: usize, value: f64 },
    #[error("off-diagonal entry ({row}, {col}) = {value} must be nonnegative")]
    NotMetzler { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Perron root of a nonnegative matrix with its eigenvector pair.
#[derive(Debug, Clone)]
pub struct PerronData {
    /// Spectral radius.
    pub rho: f64,
    /// Right eigenvector, entrywise nonnegative, unit 1-norm.
    pub right: DVector<f64>,
    /// Left eigenvector, entrywise nonnegative, unit 1-norm.
    pub left: DVector<f64>,
    /// Total power-iteration steps spent on both eigenvectors.
    pub iterations: usize,
    /// Max-norm of `M * right - rho * right` at return.
    pub residual: f64,
}

/// Spectral radius and Perron pair of an entrywise nonnegative matrix.
///
/// Power iteration on the diagonally shifted matrix `M + s I` with
/// `s = max entry`. The shift leaves the Perron pair unchanged, moves the
/// Perron root to `rho + s`, and makes irreducible matrices primitive, so the
/// iteration also converges on cyclic patterns (a two-node cycle alternates
/// forever without the shift). The shift is subtracted before returning and
/// the residual is evaluated against the unshifted matrix.
pub fn spectral_radius(m: &DMatrix<f64>, tol: f64) -> Result<PerronData, SpectralError> {
    let n = check_nonnegative(m)?;
    let max_entry = m.iter().copied().fold(0.0f64, f64::max);
    if max_entry == 0.0 {
        return Ok(PerronData {
            rho: 0.0,
            right: DVector::from_element(n, 1.0 / n as f64),
            left: DVector::from_element(n, 1.0 / n as f64),
            iterations: 0,
            residual: 0.0,
        });
    }

    let shifted = {
        let mut s = m.clone();
        for i in 0..n {
            s[(i, i)] += max_entry;
        }
        s
    };
    let transposed = shifted.transpose();

    let (rho_shifted, right, right_iters) = power_iterate(&shifted, tol)?;
    let (_, left, left_iters) = power_iterate(&transposed, tol)?;
    let rho = rho_shifted - max_entry;

    let mut check = DVector::zeros(n);
    check.gemv(1.0, m, &right, 0.0);
    let residual = check
        .iter()
        .zip(right.iter())
        .map(|(mv, v)| (mv - rho * v).abs())
        .fold(0.0f64, f64::max);

    Ok(PerronData {
        rho,
        right,
        left,
        iterations: right_iters + left_iters,
        residual,
    })
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<usize, SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v < 0.0 || !v.is_finite() {
                return Err(SpectralError::BadEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(m.nrows())
}

fn iteration_cap(n: usize) -> usize {
    // Generous: clustered spectra (small relative gaps) need iterations
    // proportional to the inverse gap, and each iteration is only O(n^2).
    let n_f = n as f64;
    (200.0 * n_f * n_f.ln()).ceil() as usize + 20_000
}

fn power_iterate(
    m: &DMatrix<f64>,
    tol: f64,
) -> Result<(f64, DVector<f64>, usize), SpectralError> {
    let n = m.nrows();
    let cap = iteration_cap(n);
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    let mut mv = DVector::zeros(n);
    let mut residual = f64::INFINITY;
    for iter in 1..=cap {
        mv.gemv(1.0, m, &v, 0.0);
        let estimate = mv.sum();
        if estimate <= 0.0 || !estimate.is_finite() {
            return Err(SpectralError::NoConvergence {
                iterations: iter,
                residual,
            });
        }
        residual = mv
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - estimate * b).abs())
            .fold(0.0f64, f64::max);
        v.copy_from(&mv);
        v /= estimate;
        if residual <= tol * estimate.max(1.0) {
            return Ok((estimate, v, iter));
        }
    }
    Err(SpectralError::NoConvergence {
        iterations: cap,
        residual,
    })
}

/// Basic reproduction number of the assembled system: the Perron root of the
/// coupling matrix scaled row-wise by the inverse removal rates. Errors when a
/// removal rate is not strictly positive.
pub fn reproduction_number(full: &FullSystem) -> Result<f64, SpectralError> {
    let scaled = removal_scaled_coupling(&full.coupling, &full.removal)?;
    Ok(spectral_radius(&scaled, EIGEN_TOL)?.rho)
}

fn removal_scaled_coupling(
    coupling: &DMatrix<f64>,
    removal: &DVector<f64>,
) -> Result<DMatrix<f64>, SpectralError> {
    if coupling.nrows() != removal.len() {
        return Err(SpectralError::DimensionMismatch(format!(
            "coupling is {}x{} but removal has length {}",
            coupling.nrows(),
            coupling.ncols(),
            removal.len()
        )));
    }
    for (i, &d) in removal.iter().enumerate() {
        if !(d > 0.0) || !d.is_finite() {
            return Err(SpectralError::NonpositiveRemoval { index: i, value: d });
        }
    }
    let mut scaled = coupling.clone();
    for i in 0..scaled.nrows() {
        let inv = 1.0 / removal[i];
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= inv;
        }
    }
    Ok(scaled)
}

/// Sign of the dominant eigenvalue real part of `L + N`, where `L` is a
/// diagonal matrix with strictly negative entries and `N` is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilitySign {
    Negative,
    Zero,
    Positive,
}

/// Values of the comparison ratio within this band of 1 classify as
/// [`StabilitySign::Zero`].
pub const SIGN_BAND: f64 = 1e-9;

/// Stability sign of the Metzler sum `L + N` without computing its spectrum:
/// the dominant real part is negative, zero or positive exactly as the Perron
/// root of `-L^{-1} N` compares to one.
pub fn metzler_sign(l: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<StabilitySign, SpectralError> {
    if l.nrows() != l.ncols() {
        return Err(SpectralError::NonSquare {
            rows: l.nrows(),
            cols: l.ncols(),
        });
    }
    if l.nrows() != n.nrows() || l.ncols() != n.ncols() {
        return Err(SpectralError::DimensionMismatch(format!(
            "L is {}x{} but N is {}x{}",
            l.nrows(),
            l.ncols(),
            n.nrows(),
            n.ncols()
        )));
    }
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            if i != j && l[(i, j)] != 0.0 {
                return Err(SpectralError::NotDiagonal { row: i, col: j });
            }
        }
        let d = l[(i, i)];
        if !(d < 0.0) || !d.is_finite() {
            return Err(SpectralError::DiagonalNotNegative { index: i, value: d });
        }
    }
    check_nonnegative(n)?;

    // -L^{-1} N scales row i by 1 / |L_ii|.
    let mut scaled = n.clone();
    for i in 0..scaled.nrows() {
        let inv = -1.0 / l[(i, i)];
        for j in 0..scaled.ncols() {
            scaled[(i, j)] *= inv;
        }
    }
    let rho = spectral_radius(&scaled, EIGEN_TOL)?.rho;
    if (rho - 1.0).abs() <= SIGN_BAND * rho.max(1.0) {
        Ok(StabilitySign::Zero)
    } else if rho < 1.0 {
        Ok(StabilitySign::Negative)
    } else {
        Ok(StabilitySign::Positive)
    }
}

/// Spectral radius of the one-step linearization at the healthy state,
/// `I - h * diag(removal) + h * coupling`. The comparison of this value
/// against one separates extinction from persistence.
///
/// Only defined here for the nonnegative case; a negative diagonal entry
/// means `h * removal > 1 + h * self-coupling` somewhere, which an upstream
/// assumption already forbids, so that case errors instead of silently
/// computing a radius that no longer bounds the dominant eigenvalue.
pub fn step_radius(full: &FullSystem) -> Result<f64, SpectralError> {
    let m = step_matrix(full);
    check_nonnegative(&m)?;
    // For nonnegative I + h A the radius is 1 + h * (dominant eigenvalue of
    // A). Iterating on A = coupling - diag(removal) instead of on I + h A
    // keeps the relative spectral gap independent of h; small steps push all
    // eigenvalues of I + h A toward one and would stall the iteration.
    let mut a = full.coupling.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= full.removal[i];
    }
    Ok(1.0 + full.h * metzler_abscissa(&a)?)
}

/// The one-step healthy-state linearization `I - h * diag(removal) + h * coupling`.
pub fn step_matrix(full: &FullSystem) -> DMatrix<f64> {
    let size = full.coupling.nrows();
    let mut m = &full.coupling * full.h;
    for i in 0..size {
        m[(i, i)] += 1.0 - full.h * full.removal[i];
    }
    m
}

/// Perron data of the one-step healthy-state linearization: its spectral
/// radius plus the dominant right and left vectors. The vectors are computed
/// on `coupling - diag(removal)`, which shares them with the step matrix but
/// keeps the iteration conditioned independently of the step size.
pub fn step_perron(full: &FullSystem) -> Result<PerronData, SpectralError> {
    let m = step_matrix(full);
    check_nonnegative(&m)?;
    let mut a = full.coupling.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= full.removal[i];
    }
    let (abscissa, data) = metzler_perron(&a)?;
    Ok(PerronData {
        rho: 1.0 + full.h * abscissa,
        ..data
    })
}

/// Dominant eigenvalue (largest real part) of a Metzler matrix via a diagonal
/// shift into the nonnegative cone and one Perron computation.
pub fn metzler_abscissa(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    Ok(metzler_perron(m)?.0)
}

fn metzler_perron(m: &DMatrix<f64>) -> Result<(f64, PerronData), SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut shift = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(SpectralError::BadEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if i != j && v < 0.0 {
                return Err(SpectralError::NotMetzler {
                    row: i,
                    col: j,
                    value: v,
                });
            }
            if i == j {
                shift = shift.max(-v);
            }
        }
    }
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let data = spectral_radius(&shifted, EIGEN_TOL)?;
    Ok((data.rho - shift, data))
}

/// Spectral radius through the dense eigensolver. Valid for any real square
/// matrix; used where the matrix is not nonnegative and as an independent
/// cross-check of the power iteration.
pub fn dense_spectral_radius(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let eigenvalues = m.clone().complex_eigenvalues();
    Ok(eigenvalues.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Largest eigenvalue real part through the dense eigensolver.
pub fn dense_rightmost_real(m: &DMatrix<f64>) -> Result<f64, SpectralError> {
    if m.nrows() != m.ncols() {
        return Err(SpectralError::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let eigenvalues = m.clone().complex_eigenvalues();
    Ok(eigenvalues
        .iter()
        .map(|c| c.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

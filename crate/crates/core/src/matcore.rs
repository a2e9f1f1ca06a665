//! Dense complex-matrix substrate.
//!
//! Everything downstream works with small dense matrices over `Complex64`
//! (desk scale, n ≤ ~20), so the substrate favours robustness over speed:
//! positive definiteness is decided by a pivot-thresholded Cholesky
//! factorization, Sylvester equations are solved by Kronecker vectorization
//! (an O(n^6) dense solve, fine at this scale), eigenvalues come from a
//! dense Schur decomposition and numerical ranks from singular values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense column-major complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Eigenvalues of a square matrix, with algebraic multiplicity and
/// unspecified ordering.
pub type Spectrum = Vec<Complex64>;

/// Relative tolerance used by rank / positivity / residual checks when the
/// caller does not supply one.
pub const DEFAULT_TOL: f64 = 1e-10;

#[inline]
pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex identity matrix.
pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entry magnitude. Zero for empty matrices.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

/// Frobenius norm computed with pre-scaling so that entries near the
/// overflow threshold (the sequences S_k grow geometrically) do not square
/// to infinity.
pub fn frob_norm(m: &CMatrix) -> f64 {
    let scale = max_abs(m);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let mut sum = 0.0;
    for v in m.iter() {
        let r = v.norm() / scale;
        sum += r * r;
    }
    scale * sum.sqrt()
}

/// True when every entry is finite.
pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

/// Hermitian part (M + M*)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * cplx(0.5, 0.0)
}

/// Frobenius distance from M to its Hermitian part.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    frob_norm(&(m - m.adjoint())) * 0.5
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite matrix,
/// kept around so S_k^{-1} is always applied through triangular solves and
/// never formed explicitly.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    lower: CMatrix,
    min_pivot: f64,
}

impl CholeskyFactor {
    /// Factor the Hermitian part of `m`, requiring every pivot to exceed
    /// `tol * max_abs(m)`. Returns `None` if some pivot is too small or the
    /// diagonal drifts off the real axis.
    pub fn new(m: &CMatrix, tol: f64) -> Option<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return None;
        }
        let scale = max_abs(m).max(f64::MIN_POSITIVE);
        let threshold = tol.max(0.0) * scale;
        let mut lower = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                let l = lower[(j, k)];
                d -= l * l.conj();
            }
            // A genuinely Hermitian matrix has real pivots; an imaginary
            // remainder beyond the threshold means the input was not.
            if d.re <= threshold || d.im.abs() > threshold.max(tol * d.re.abs()) {
                return None;
            }
            let pivot = d.re.sqrt();
            lower[(j, j)] = cplx(pivot, 0.0);
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= lower[(i, k)] * lower[(j, k)].conj();
                }
                lower[(i, j)] = s / pivot;
            }
        }
        let min_pivot = (0..n).map(|j| lower[(j, j)].re).fold(f64::INFINITY, f64::min);
        Some(Self { lower, min_pivot })
    }

    pub fn lower(&self) -> &CMatrix {
        &self.lower
    }

    /// Smallest diagonal pivot of the factor.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// Solve (L L*) X = B.
    pub fn solve(&self, b: &CMatrix) -> CMatrix {
        let y = self
            .lower
            .solve_lower_triangular(b)
            .expect("triangular solve with positive pivots cannot fail");
        self.lower
            .adjoint()
            .solve_upper_triangular(&y)
            .expect("triangular solve with positive pivots cannot fail")
    }

    /// Residual ‖M (M^{-1} I) − I‖ / ‖I‖, a cheap conditioning monitor.
    pub fn inverse_residual(&self, m: &CMatrix) -> f64 {
        let n = m.nrows();
        let inv = self.solve(&identity(n));
        frob_norm(&(m * inv - identity(n))) / (n as f64).sqrt()
    }
}

/// Positive definiteness test: the matrix must be Hermitian up to
/// `tol * ‖M‖` and admit a Cholesky factorization with all pivots above
/// `tol * ‖M‖`. On success the lower factor is returned.
pub fn is_positive_definite(m: &CMatrix, tol: f64) -> Result<Option<CMatrix>> {
    require_square(m)?;
    let scale = max_abs(m);
    if scale > 0.0 && hermitian_deviation(m) > tol * scale {
        return Ok(None);
    }
    let herm = hermitian_part(m);
    Ok(CholeskyFactor::new(&herm, tol).map(|f| f.lower.clone()))
}

/// Solve A X - X B = C by Kronecker vectorization.
///
/// Unique solvability requires σ(A) ∩ σ(B) = ∅; the separation is checked
/// against `tol` (relative to ‖A‖ + ‖B‖) before the dense solve.
pub fn solve_sylvester(a: &CMatrix, b: &CMatrix, c: &CMatrix, tol: f64) -> Result<CMatrix> {
    let n = require_square(a)?;
    let p = require_square(b)?;
    if c.nrows() != n || c.ncols() != p {
        return Err(Error::Dimension(format!(
            "right-hand side must be {n}x{p}, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    let spec_a = spectrum(a)?;
    let spec_b = spectrum(b)?;
    let mut separation = f64::INFINITY;
    for alpha in &spec_a {
        for beta in &spec_b {
            separation = separation.min((alpha - beta).norm());
        }
    }
    let scale = (frob_norm(a) + frob_norm(b)).max(1.0);
    if separation <= tol * scale {
        return Err(Error::SpectraOverlap { separation });
    }

    // vec(AX) = (I ⊗ A) vec(X), vec(XB) = (Bᵀ ⊗ I) vec(X), column-stacked.
    let eye_n = identity(n);
    let eye_p = identity(p);
    let system = eye_p.kronecker(a) - b.transpose().kronecker(&eye_n);
    let rhs = CMatrix::from_column_slice(n * p, 1, c.as_slice());
    let sol = system.lu().solve(&rhs).ok_or_else(|| Error::Singular {
        context: "solving the vectorized Sylvester system".into(),
    })?;
    Ok(CMatrix::from_column_slice(n, p, sol.as_slice()))
}

/// Eigenvalues with algebraic multiplicity via a complex Schur decomposition.
pub fn spectrum(m: &CMatrix) -> Result<Spectrum> {
    let n = require_square(m)?;
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return Ok(vec![Complex64::default(); n]);
    }
    // The Schur iteration is scale-invariant in exact arithmetic; normalizing
    // keeps its absolute convergence threshold meaningful for matrices far
    // from unit norm. Clustered eigenvalues make the tightest threshold
    // unreachable, so the ladder loosens rather than spins.
    let normalized = m / cplx(scale, 0.0);
    for (eps, iters) in [(1e-14, 3_000), (1e-12, 3_000), (1e-9, 10_000)] {
        if let Some(schur) = normalized.clone().try_schur(eps, iters) {
            let t = schur.unpack().1;
            return Ok(t.diagonal().iter().map(|v| v * scale).collect());
        }
    }
    Err(Error::EigenFailure { dim: n })
}

/// Smallest eigenvalue of the Hermitian part of `m`, located by Cholesky
/// bisection: λ_min(H) > s iff H − sI admits a Cholesky factorization.
/// Deterministic cost, immune to the eigenvalue clustering that stalls QR
/// iterations on involutions and near-identity potentials.
pub fn hermitian_min_eigenvalue(m: &CMatrix) -> Result<f64> {
    let n = require_square(m)?;
    let h = hermitian_part(m);
    if n == 1 {
        return Ok(h[(0, 0)].re);
    }
    // Gershgorin bounds on the spectrum of H.
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let center = h[(i, i)].re;
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
        lo = lo.min(center - radius);
        hi = hi.max(center + radius);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument(
            "non-finite entries in Hermitian eigenvalue bisection".into(),
        ));
    }
    let shifted_is_pd = |s: f64| {
        let shifted = &h - identity(n) * cplx(s, 0.0);
        CholeskyFactor::new(&shifted, 0.0).is_some()
    };
    if !shifted_is_pd(lo) {
        // λ_min equals the lower Gershgorin bound up to roundoff.
        return Ok(lo);
    }
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if shifted_is_pd(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(lo.abs()).max(1e-300) {
            break;
        }
    }
    Ok(lo)
}

/// Largest singular value (operator 2-norm).
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let scale = max_abs(m);
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    let svd = (m / cplx(scale, 0.0)).svd(false, false);
    scale * svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s))
}

/// Numerical rank of the Kalman controllability matrix [T, AT, …, A^{n-1}T]:
/// singular values above `tol` times the largest one are counted. The pair
/// (A, T) is controllable iff the result equals n.
pub fn controllability_rank(a: &CMatrix, t: &CMatrix, tol: f64) -> Result<usize> {
    let n = require_square(a)?;
    if t.nrows() != n {
        return Err(Error::Dimension(format!(
            "input matrix must have {n} rows, got {}",
            t.nrows()
        )));
    }
    let p = t.ncols();
    let mut krylov = CMatrix::zeros(n, n * p);
    let mut block = t.clone();
    for i in 0..n {
        krylov.view_mut((0, i * p), (n, p)).copy_from(&block);
        if i + 1 < n {
            block = a * block;
        }
    }
    let scale = max_abs(&krylov);
    if scale == 0.0 {
        return Ok(0);
    }
    let svd = (krylov / cplx(scale, 0.0)).svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol * smax)
        .count())
}

/// Smallest singular value relative to the largest (an invertibility margin).
pub fn inverse_condition(m: &CMatrix) -> f64 {
    if m.is_empty() || m.nrows() != m.ncols() {
        return 0.0;
    }
    let scale = max_abs(m);
    if scale == 0.0 {
        return 0.0;
    }
    let svd = (m / cplx(scale, 0.0)).svd(false, false);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in svd.singular_values.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// LU solve of M X = B with a singularity error naming the call site.
pub fn solve_square(m: &CMatrix, b: &CMatrix, context: &str) -> Result<CMatrix> {
    if m.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "solve {context}: matrix has {} rows, right-hand side {}",
            m.nrows(),
            b.nrows()
        )));
    }
    m.clone().lu().solve(b).ok_or_else(|| Error::Singular {
        context: context.to_string(),
    })
}

/// Integer matrix power by repeated multiplication.
pub fn power(m: &CMatrix, k: usize) -> CMatrix {
    let n = m.nrows();
    let mut acc = identity(n);
    for _ in 0..k {
        acc = &acc * m;
    }
    acc
}

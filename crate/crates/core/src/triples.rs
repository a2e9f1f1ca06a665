//! GBDT parameter triples {A, S₀, Π₀} and their admissibility checks.
//!
//! A triple together with a system kind and a signature (m₁, m₂) is the
//! single input from which the whole machinery is computed. A triple is
//! *admissible* when det A ≠ 0, S₀ = S₀* ≻ 0 and the matrix identity
//!
//! ```text
//! A S₀ − S₀ A* = i Π₀ j Π₀*     (self-adjoint kind)
//! A S₀ − S₀ A* = i Π₀ Π₀*      (skew-self-adjoint kind)
//! ```
//!
//! holds, where j = diag(I_{m₁}, −I_{m₂}). *Strong* admissibility adds
//! σ(A) ⊂ ℂ₊ and i ∉ σ(A) in the self-adjoint case, and controllability of
//! (A, θ₁) plus i ∉ σ(A) in the skew case (θ₁ is the first m₁ columns of
//! Π₀). Strongly admissible triples are exactly the ones whose potentials
//! support Jost solutions and rational reflection coefficients downstream.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{
    self, cplx, frob_norm, hermitian_deviation, hermitian_part, identity, inverse_condition,
    is_positive_definite, max_abs, solve_sylvester, spectrum, CMatrix,
};

/// Block signature (m₁, m₂) inducing j = diag(I_{m₁}, −I_{m₂}).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    m1: usize,
    m2: usize,
}

impl Signature {
    pub fn new(m1: usize, m2: usize) -> Result<Self> {
        if m1 == 0 || m2 == 0 {
            return Err(Error::InvalidArgument(
                "signature requires m1 >= 1 and m2 >= 1".into(),
            ));
        }
        Ok(Self { m1, m2 })
    }

    pub fn m1(&self) -> usize {
        self.m1
    }

    pub fn m2(&self) -> usize {
        self.m2
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    /// The signature matrix j = diag(I_{m₁}, −I_{m₂}).
    pub fn j_matrix(&self) -> CMatrix {
        let mut j = identity(self.m());
        for k in self.m1..self.m() {
            j[(k, k)] = cplx(-1.0, 0.0);
        }
        j
    }
}

/// Which discrete Dirac system a triple parametrizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    /// One-step rule y_{k+1} = (I + i z j C_k) y_k with C_k ≻ 0, C_k j C_k = j.
    SelfAdjoint,
    /// One-step rule y_{k+1} = (I + (i/z) C_k) y_k with C_k a Hermitian
    /// involution of signature (m₁, m₂).
    SkewSelfAdjoint,
}

impl SystemKind {
    /// Middle factor of the right-hand side i Π₀ (·) Π₀* of the triple
    /// identity: j for the self-adjoint kind, I for the skew kind.
    fn identity_middle(&self, sig: Signature) -> CMatrix {
        match self {
            SystemKind::SelfAdjoint => sig.j_matrix(),
            SystemKind::SkewSelfAdjoint => identity(sig.m()),
        }
    }
}

/// GBDT parameter triple {A, S₀, Π₀} with its system kind and signature.
#[derive(Debug, Clone)]
pub struct ParameterTriple {
    kind: SystemKind,
    sig: Signature,
    a: CMatrix,
    s0: CMatrix,
    pi0: CMatrix,
}

impl ParameterTriple {
    /// Bundle the data after shape checking. Mathematical admissibility is
    /// *not* enforced here; run [`validate`] for that.
    pub fn new(
        kind: SystemKind,
        sig: Signature,
        a: CMatrix,
        s0: CMatrix,
        pi0: CMatrix,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::NonSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if s0.nrows() != n || s0.ncols() != n {
            return Err(Error::Dimension(format!(
                "S0 must be {n}x{n}, got {}x{}",
                s0.nrows(),
                s0.ncols()
            )));
        }
        if pi0.nrows() != n || pi0.ncols() != sig.m() {
            return Err(Error::Dimension(format!(
                "Pi0 must be {n}x{}, got {}x{}",
                sig.m(),
                pi0.nrows(),
                pi0.ncols()
            )));
        }
        if !(matcore::all_finite(&a) && matcore::all_finite(&s0) && matcore::all_finite(&pi0)) {
            return Err(Error::InvalidArgument(
                "triple entries must be finite".into(),
            ));
        }
        Ok(Self {
            kind,
            sig,
            a,
            s0,
            pi0,
        })
    }

    pub fn kind(&self) -> SystemKind {
        self.kind
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn s0(&self) -> &CMatrix {
        &self.s0
    }

    pub fn pi0(&self) -> &CMatrix {
        &self.pi0
    }

    /// First m₁ columns of Π₀.
    pub fn theta1(&self) -> CMatrix {
        self.pi0.columns(0, self.sig.m1).into_owned()
    }

    /// Last m₂ columns of Π₀.
    pub fn theta2(&self) -> CMatrix {
        self.pi0.columns(self.sig.m1, self.sig.m2).into_owned()
    }

    /// Right-hand side i Π₀ (j or I) Π₀* of the triple identity.
    pub fn identity_rhs(&self) -> CMatrix {
        let middle = self.kind.identity_middle(self.sig);
        (&self.pi0 * middle) * self.pi0.adjoint() * cplx(0.0, 1.0)
    }
}

/// One named numerical check: the measured value and whether it passed.
#[derive(Debug, Clone, Copy)]
pub struct Check {
    pub value: f64,
    pub pass: bool,
}

/// Outcome of [`validate`]. Mathematical failures are entries here, never
/// errors: a report is produced for every dimensionally consistent triple.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Smallest singular value of A relative to the largest (det A ≠ 0).
    pub invertibility_margin: Check,
    /// Relative deviation of S₀ from its Hermitian part.
    pub s0_hermitian: Check,
    /// Smallest Cholesky pivot of S₀ relative to ‖S₀‖ (S₀ ≻ 0).
    pub s0_positive: Check,
    /// Relative residual of the triple identity.
    pub identity_residual: Check,
    /// Smallest imaginary part over σ(A); required positive only for the
    /// strongly admissible self-adjoint kind.
    pub spectrum_margin: Check,
    /// Distance from i to σ(A).
    pub i_margin: Check,
    /// Kalman rank of (A, θ₁); full rank required for the strongly
    /// admissible skew kind. `None` for the self-adjoint kind.
    pub controllability_rank: Option<Check>,
    pub admissible: bool,
    pub strongly_admissible: bool,
}

/// Evaluate every admissibility invariant of `t` at relative tolerance
/// `tol`.
pub fn validate(t: &ParameterTriple, tol: f64) -> Result<ValidationReport> {
    let a = t.a();
    let s0 = t.s0();

    let invertibility = inverse_condition(a);
    let invertibility_margin = Check {
        value: invertibility,
        pass: invertibility > tol,
    };

    let s0_scale = max_abs(s0).max(f64::MIN_POSITIVE);
    let herm_dev = hermitian_deviation(s0) / s0_scale;
    let s0_hermitian = Check {
        value: herm_dev,
        pass: herm_dev <= tol,
    };

    let (pd_value, pd_pass) = match is_positive_definite(s0, tol)? {
        Some(factor) => {
            let min_pivot = (0..factor.nrows())
                .map(|k| factor[(k, k)].re)
                .fold(f64::INFINITY, f64::min);
            (min_pivot * min_pivot / s0_scale, true)
        }
        None => (0.0, false),
    };
    let s0_positive = Check {
        value: pd_value,
        pass: pd_pass,
    };

    let residual = a * s0 - s0 * a.adjoint() - t.identity_rhs();
    let scale = (frob_norm(a) * frob_norm(s0) + frob_norm(t.pi0()).powi(2)).max(1.0);
    let rel_residual = frob_norm(&residual) / scale;
    let identity_residual = Check {
        value: rel_residual,
        pass: rel_residual <= tol,
    };

    let eigs = spectrum(a)?;
    let a_scale = 1.0 + eigs.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let min_im = eigs.iter().map(|v| v.im).fold(f64::INFINITY, f64::min);
    let spectrum_margin = Check {
        value: min_im,
        pass: min_im > tol * a_scale,
    };
    let dist_i = eigs
        .iter()
        .map(|v| (v - cplx(0.0, 1.0)).norm())
        .fold(f64::INFINITY, f64::min);
    let i_margin = Check {
        value: dist_i,
        pass: dist_i > tol * a_scale,
    };

    let controllability_rank = match t.kind() {
        SystemKind::SelfAdjoint => None,
        SystemKind::SkewSelfAdjoint => {
            let rank = matcore::controllability_rank(a, &t.theta1(), tol)?;
            Some(Check {
                value: rank as f64,
                pass: rank == t.n(),
            })
        }
    };

    let admissible =
        invertibility_margin.pass && s0_hermitian.pass && s0_positive.pass && identity_residual.pass;
    let strongly_admissible = admissible
        && i_margin.pass
        && match t.kind() {
            SystemKind::SelfAdjoint => spectrum_margin.pass,
            SystemKind::SkewSelfAdjoint => controllability_rank.as_ref().is_some_and(|c| c.pass),
        };

    Ok(ValidationReport {
        invertibility_margin,
        s0_hermitian,
        s0_positive,
        identity_residual,
        spectrum_margin,
        i_margin,
        controllability_rank,
        admissible,
        strongly_admissible,
    })
}

/// Solve the triple identity for S₀ as a Sylvester equation
/// A X − X A* = i Π₀ (j or I) Π₀* and return the Hermitian symmetrization
/// (X + X*)/2.
///
/// Unique solvability needs σ(A) ∩ σ(A*) = ∅, which holds whenever
/// σ(A) ⊂ ℂ₊. Positivity of the result is *not* guaranteed (the right-hand
/// side is indefinite in the self-adjoint case); callers must still check.
pub fn derive_s0(
    kind: SystemKind,
    sig: Signature,
    a: &CMatrix,
    pi0: &CMatrix,
    tol: f64,
) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if pi0.nrows() != n || pi0.ncols() != sig.m() {
        return Err(Error::Dimension(format!(
            "Pi0 must be {n}x{}, got {}x{}",
            sig.m(),
            pi0.nrows(),
            pi0.ncols()
        )));
    }
    let rhs = (pi0 * kind.identity_middle(sig)) * pi0.adjoint() * cplx(0.0, 1.0);
    let x = solve_sylvester(a, &a.adjoint(), &rhs, tol)?;
    Ok(hermitian_part(&x))
}

/// Eigenvalue box for generated A: real part in [-2, 2], imaginary part in
/// [0.3, 2.5], excluding a disc of radius 0.2 around i so that A ± iI stays
/// well conditioned.
const EIG_RE_RANGE: (f64, f64) = (-2.0, 2.0);
const EIG_IM_RANGE: (f64, f64) = (0.3, 2.5);
const EIG_I_EXCLUSION: f64 = 0.2;
/// Cap on |a - i| / |a + i| per eigenvalue. This bounds the spectral radius
/// of the Cayley transform G(A) away from 1, so Jost truncations and the
/// R_k / Q_k limits converge well inside the iteration budgets used by the
/// verification suite.
const EIG_CAYLEY_CAP: f64 = 0.5;
/// Condition cap for the similarity V in A = V D V^{-1}.
const SIMILARITY_CONDITION_FLOOR: f64 = 0.02;
/// Floor on the inverse condition number of the limiting compressed matrix
/// R_∞ = lim P₊⁻ᵏ S_k P₊⁻ᵏ*. Every downstream quadratic form solves with
/// R_k, so a triple whose R_∞ has condition beyond ~1e5 cannot support the
/// 1e-9 potential-law tolerances in double precision and is redrawn.
const R_LIMIT_CONDITION_FLOOR: f64 = 1e-5;
/// Ceiling on the skew limit quantity ‖G⁶⁰* R₆₀⁻¹ θ₁‖ at generation time:
/// half of the 1e-8 budget the verification suite enforces at k ≤ 60.
const SKEW_DRIFT_CEILING: f64 = 5e-9;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 is bounded away from zero to keep ln finite.
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    cplx(normal(rng), normal(rng)) * cplx(std::f64::consts::FRAC_1_SQRT_2, 0.0)
}

fn draw_eigenvalue(rng: &mut ChaCha8Rng) -> Complex64 {
    loop {
        let re = EIG_RE_RANGE.0 + (EIG_RE_RANGE.1 - EIG_RE_RANGE.0) * rng.random::<f64>();
        let im = EIG_IM_RANGE.0 + (EIG_IM_RANGE.1 - EIG_IM_RANGE.0) * rng.random::<f64>();
        let a = cplx(re, im);
        if (a - cplx(0.0, 1.0)).norm() < EIG_I_EXCLUSION {
            continue;
        }
        if (a - cplx(0.0, 1.0)).norm() / (a + cplx(0.0, 1.0)).norm() > EIG_CAYLEY_CAP {
            continue;
        }
        return a;
    }
}

fn draw_a(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            draw_eigenvalue(rng)
        } else {
            Complex64::default()
        }
    });
    loop {
        let v = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
        if inverse_condition(&v) < SIMILARITY_CONDITION_FLOOR {
            continue;
        }
        if let Some(v_inv) = v.clone().lu().try_inverse() {
            return &v * &d * v_inv;
        }
    }
}

/// Try to fix an indefinite derived S₀ by shrinking θ₂: the Sylvester
/// solution is linear in the right-hand side, so with S₊, S₋ solving the
/// halves for iθ₁θ₁* and iθ₂θ₂*, the column scaling Π₀ = [θ₁, s·θ₂] yields
/// S₀(s) = S₊ − s²S₋ exactly, positive definite once s² stays below
/// λ_min(S₊)/λ_max(S₋). This never leaves the identity manifold.
fn rescale_second_block(
    sig: Signature,
    a: &CMatrix,
    pi0: &CMatrix,
    tol: f64,
) -> Result<(CMatrix, CMatrix)> {
    let theta1 = pi0.columns(0, sig.m1()).into_owned();
    let theta2 = pi0.columns(sig.m1(), sig.m2()).into_owned();
    let i = cplx(0.0, 1.0);
    let s_plus = hermitian_part(&solve_sylvester(
        a,
        &a.adjoint(),
        &((&theta1 * theta1.adjoint()) * i),
        tol,
    )?);
    let s_minus = hermitian_part(&solve_sylvester(
        a,
        &a.adjoint(),
        &((&theta2 * theta2.adjoint()) * i),
        tol,
    )?);
    let lambda_min = spectrum(&s_plus)?
        .iter()
        .map(|e| e.re)
        .fold(f64::INFINITY, f64::min);
    let lambda_max = spectrum(&s_minus)?
        .iter()
        .map(|e| e.re)
        .fold(0.0f64, f64::max);
    if lambda_min <= 0.0 {
        return Err(Error::GenerationFailed { attempts: 0 });
    }
    let scale = (0.5 * lambda_min / lambda_max.max(f64::MIN_POSITIVE))
        .sqrt()
        .min(1.0);
    let mut scaled = pi0.clone();
    scaled
        .view_mut((0, sig.m1()), (pi0.nrows(), sig.m2()))
        .copy_from(&(&theta2 * cplx(scale, 0.0)));
    let s0 = &s_plus - &s_minus * cplx(scale * scale, 0.0);
    Ok((scaled, hermitian_part(&s0)))
}

/// Numerical-workability margins of a candidate triple, measured on the
/// limit of the compressed matrices R_k = P₊⁻ᵏ S_k P₊⁻ᵏ* after 60
/// cancellation-free update steps (PSD additions for the self-adjoint
/// kind, the Stein congruence R ← G R G* + 2vv* for the skew kind).
struct CompressedMargins {
    /// Inverse condition number of R₆₀, every downstream quadratic form
    /// solves against R_k.
    r_inverse_condition: f64,
    /// Skew kind: ‖G⁶⁰* R₆₀⁻¹ θ₁‖, the slowest-decaying limit quantity the
    /// verification suite must drive below 1e-8.
    skew_drift: f64,
}

fn compressed_margins(
    kind: SystemKind,
    sig: Signature,
    a: &CMatrix,
    s0: &CMatrix,
    pi0: &CMatrix,
) -> Result<CompressedMargins> {
    let n = a.nrows();
    let eye = identity(n);
    let i = cplx(0.0, 1.0);
    let a_plus_i = a + &eye * i;
    let a_minus_i = a - &eye * i;
    let g = matcore::solve_square(&a_plus_i, &a_minus_i, "inverting A + iI")?;
    let mut r = hermitian_part(s0);
    let mut skew_drift = 0.0;
    match kind {
        SystemKind::SelfAdjoint => {
            let mut g2 = pi0.columns(sig.m1(), sig.m2()).into_owned();
            for _ in 0..60 {
                let u = matcore::solve_square(&a_plus_i, &g2, "inverting A + iI")?;
                r = hermitian_part(&(&r + (&u * u.adjoint()) * cplx(2.0, 0.0)));
                g2 = &g * g2;
            }
        }
        SystemKind::SkewSelfAdjoint => {
            let theta1 = pi0.columns(0, sig.m1()).into_owned();
            let v = matcore::solve_square(&a_minus_i, &(&g * &theta1), "inverting A - iI")?;
            let update = (&v * v.adjoint()) * cplx(2.0, 0.0);
            let mut g_pow = eye.clone();
            for _ in 0..60 {
                r = hermitian_part(&(&g * &r * g.adjoint() + &update));
                g_pow = &g_pow * &g;
            }
            let r_inv_theta1 = matcore::solve_square(&r, &theta1, "applying R^-1")?;
            skew_drift = frob_norm(&(g_pow.adjoint() * r_inv_theta1));
        }
    }
    Ok(CompressedMargins {
        r_inverse_condition: inverse_condition(&r),
        skew_drift,
    })
}

/// Draw a strongly admissible triple by rejection sampling, deterministic in
/// `seed`: eigenvalues of A are placed uniformly in a box of ℂ₊ (away from
/// i), Π₀ has unit-variance complex Gaussian entries and S₀ is derived from
/// the triple identity. A draw is accepted only if [`validate`] reports
/// strong admissibility and the limiting compressed matrix R_∞ stays well
/// enough conditioned for double-precision evaluation downstream.
///
/// In the self-adjoint case the derived S₀ is indefinite for most Gaussian
/// draws (always, effectively, when m₂ > m₁), so a rejected draw is retried
/// with its θ₂ block shrunk until S₀ turns positive definite, a column
/// scaling that stays exactly on the identity manifold, unlike any
/// projection.
pub fn generate(
    kind: SystemKind,
    n: usize,
    sig: Signature,
    seed: u64,
    max_attempts: usize,
) -> Result<ParameterTriple> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut attempts = 0;
    // Π₀ is much cheaper to redraw than A, and positivity of the derived S₀
    // depends mostly on Π₀; try several Π₀ per A.
    const PI0_TRIES_PER_A: usize = 16;
    let accept = |triple: &ParameterTriple| -> Result<bool> {
        if !validate(triple, matcore::DEFAULT_TOL)?.strongly_admissible {
            return Ok(false);
        }
        let margins = compressed_margins(kind, sig, triple.a(), triple.s0(), triple.pi0())?;
        Ok(margins.r_inverse_condition >= R_LIMIT_CONDITION_FLOOR
            && margins.skew_drift <= SKEW_DRIFT_CEILING)
    };
    while attempts < max_attempts {
        let a = draw_a(&mut rng, n);
        for _ in 0..PI0_TRIES_PER_A {
            if attempts >= max_attempts {
                break;
            }
            attempts += 1;
            let pi0 = CMatrix::from_fn(n, sig.m(), |_, _| complex_gaussian(&mut rng));
            let s0 = match derive_s0(kind, sig, &a, &pi0, matcore::DEFAULT_TOL) {
                Ok(s0) => s0,
                Err(_) => continue,
            };
            let triple = ParameterTriple::new(kind, sig, a.clone(), s0, pi0.clone())?;
            if accept(&triple)? {
                return Ok(triple);
            }
            if kind == SystemKind::SelfAdjoint {
                attempts += 1;
                if let Ok((scaled_pi, s0)) =
                    rescale_second_block(sig, &a, &pi0, matcore::DEFAULT_TOL)
                {
                    let triple = ParameterTriple::new(kind, sig, a.clone(), s0, scaled_pi)?;
                    if accept(&triple)? {
                        return Ok(triple);
                    }
                }
            }
        }
    }
    Err(Error::GenerationFailed { attempts })
}

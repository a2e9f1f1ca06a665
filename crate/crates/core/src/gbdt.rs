//! The GBDT recursions.
//!
//! Starting from a parameter triple {A, S₀, Π₀}, both system kinds share the
//! step Π_{k+1} = Π_k + i A⁻¹ Π_k j, while
//!
//! ```text
//! S_{k+1} = S_k + A⁻¹ S_k A⁻* + A⁻¹ Π_k Π_k* A⁻*      (self-adjoint)
//! S_{k+1} = S_k + A⁻¹ S_k A⁻* + A⁻¹ Π_k j Π_k* A⁻*    (skew)
//! ```
//!
//! and the potential of the Dirac system is
//!
//! ```text
//! C_k = I_m + Π_k* S_k⁻¹ Π_k − Π_{k+1}* S_{k+1}⁻¹ Π_{k+1}   (self-adjoint)
//! C_k = j   + Π_k* S_k⁻¹ Π_k − Π_{k+1}* S_{k+1}⁻¹ Π_{k+1}   (skew)
//! ```
//!
//! For admissible triples every S_k stays Hermitian positive definite, the
//! self-adjoint identity A S_k − S_k A* = i Π_k j Π_k* propagates to all k,
//! and the self-adjoint potentials are positive and j-unitary while the skew
//! ones are Hermitian involutions of signature (m₁, m₂).
//!
//! # Numerical coordinates
//!
//! S_k grows geometrically with direction-dependent rates, so its condition
//! number explodes along k and direct Cholesky solves with S_k turn into
//! noise long before the horizons of interest. The compressed matrices
//!
//! ```text
//! R_k = P₊⁻ᵏ S_k P₊⁻ᵏ*,   Q_k = P₋⁻ᵏ S_k P₋⁻ᵏ*,   P± = I ± iA⁻¹,
//! ```
//!
//! stay uniformly well conditioned, satisfy cancellation-free one-step
//! updates with bounded ingredients,
//!
//! ```text
//! R_{k+1} = R_k + 2 (A+iI)⁻¹ G(A)ᵏ θ₂ (·)*     (self-adjoint)
//! R_{k+1} = G(A) R_k G(A)* + 2 (A−iI)⁻¹ G(A) θ₁ (·)*   (skew, Stein form)
//! Q_{k+1} = Q_k + 2 (A−iI)⁻¹ G̃(A)ᵏ θ₁ (·)*     (both kinds)
//! ```
//!
//! with G(A) = (A+iI)⁻¹(A−iI) and G̃ = G⁻¹, and compress Π_k exactly:
//! P₊⁻ᵏ Π_k = [θ₁, G(A)ᵏ θ₂]. Every quadratic form Π_k* S_k⁻¹ Π_k is
//! therefore evaluated as Y_k* R_k⁻¹ Y_k with Y_k = [θ₁, G(A)ᵏ θ₂], and
//! positivity of S_k is certified through the congruent R_k. The literal
//! recursion for S_k is still run and stored; it feeds the identity
//! residuals and the small-k cross-checks of the compressed route.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matcore::{
    self, cplx, frob_norm, hermitian_part, identity, power, solve_square, CholeskyFactor, CMatrix,
};
use crate::triples::{ParameterTriple, Signature, SystemKind};

/// Default horizon for sequence construction.
pub const DEFAULT_HORIZON: usize = 40;

/// Cached sequences {Π_k}, {S_k}, {C_k} plus the compressed coordinates
/// R_k, Q_k for one triple.
///
/// Construction is sequential; a finished sequence is immutable and can be
/// shared freely across threads.
#[derive(Debug, Clone)]
pub struct GbdtSequence {
    triple: ParameterTriple,
    horizon: usize,
    pi: Vec<CMatrix>,
    s: Vec<CMatrix>,
    r: Vec<CMatrix>,
    q: Vec<CMatrix>,
    r_factors: Vec<CholeskyFactor>,
    /// Y_k = P₊⁻ᵏ Π_k = [θ₁, G(A)ᵏ θ₂].
    y: Vec<CMatrix>,
    c: Vec<CMatrix>,
    identity_residuals: Vec<f64>,
    inverse_residuals: Vec<f64>,
    spectrum_a: Vec<Complex64>,
}

impl GbdtSequence {
    pub fn triple(&self) -> &ParameterTriple {
        &self.triple
    }

    pub fn kind(&self) -> SystemKind {
        self.triple.kind()
    }

    pub fn sig(&self) -> Signature {
        self.triple.sig()
    }

    /// Largest k for which the potential C_k is stored.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Π_k for k ≤ horizon + 1.
    pub fn pi(&self, k: usize) -> &CMatrix {
        &self.pi[k]
    }

    /// S_k for k ≤ horizon + 1 (literal recursion values).
    pub fn s(&self, k: usize) -> &CMatrix {
        &self.s[k]
    }

    /// Compressed Π: Y_k = P₊⁻ᵏ Π_k = [θ₁, G(A)ᵏ θ₂], k ≤ horizon + 1.
    pub fn y(&self, k: usize) -> &CMatrix {
        &self.y[k]
    }

    /// Potential C_k for k ≤ horizon.
    pub fn c(&self, k: usize) -> &CMatrix {
        &self.c[k]
    }

    /// Apply R_k⁻¹ through the cached Cholesky factor.
    pub fn solve_r(&self, k: usize, rhs: &CMatrix) -> CMatrix {
        self.r_factors[k].solve(rhs)
    }

    /// Quadratic form Π_k* S_k⁻¹ Π_k, evaluated in compressed coordinates
    /// as Y_k* R_k⁻¹ Y_k.
    pub fn pi_quadratic_form(&self, k: usize) -> CMatrix {
        let y = &self.y[k];
        hermitian_part(&(y.adjoint() * self.r_factors[k].solve(y)))
    }

    /// Relative residuals of the propagated identity
    /// A S_k − S_k A* = i Π_k j Π_k*, recorded per step for the self-adjoint
    /// kind (empty for the skew kind, where no propagated identity is
    /// asserted).
    pub fn identity_residuals(&self) -> &[f64] {
        &self.identity_residuals
    }

    /// Residual of R_k R_k⁻¹ against the identity per step, the
    /// conditioning monitor for long horizons.
    pub fn inverse_residuals(&self) -> &[f64] {
        &self.inverse_residuals
    }

    /// Cached eigenvalues of A (pole locations of the transfer matrix).
    pub fn spectrum_a(&self) -> &[Complex64] {
        &self.spectrum_a
    }

    /// Distance from `lambda` to σ(A).
    pub fn pole_distance(&self, lambda: Complex64) -> f64 {
        self.spectrum_a
            .iter()
            .map(|a| (a - lambda).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Spectral radius of the Cayley transform G(A) computed from σ(A);
    /// strictly below 1 for strongly admissible self-adjoint triples, and
    /// the geometric rate of every Jost truncation.
    pub fn cayley_radius(&self) -> f64 {
        self.spectrum_a
            .iter()
            .map(|a| (a - cplx(0.0, 1.0)).norm() / (a + cplx(0.0, 1.0)).norm())
            .fold(0.0f64, f64::max)
    }
}

impl SystemKind {
    /// Middle factor of the Π-dependent term in the S-step.
    fn s_step_middle(&self, sig: Signature) -> CMatrix {
        match self {
            SystemKind::SelfAdjoint => identity(sig.m()),
            SystemKind::SkewSelfAdjoint => sig.j_matrix(),
        }
    }

    /// Constant term of the potential formula.
    fn potential_base(&self, sig: Signature) -> CMatrix {
        match self {
            SystemKind::SelfAdjoint => identity(sig.m()),
            SystemKind::SkewSelfAdjoint => sig.j_matrix(),
        }
    }
}

/// One Π-step: Π_{k+1} = Π_k + i A⁻¹ Π_k j (identical for both kinds).
pub fn advance_pi(pi_k: &CMatrix, a: &CMatrix, sig: Signature) -> Result<CMatrix> {
    let a_inv_pi = solve_square(a, pi_k, "applying A^-1 in the Pi step")?;
    Ok(pi_k + (a_inv_pi * sig.j_matrix()) * cplx(0.0, 1.0))
}

/// One S-step: S_{k+1} = S_k + A⁻¹ S_k A⁻* + A⁻¹ Π_k (I or j) Π_k* A⁻*,
/// Hermitian-symmetrized so roundoff cannot tilt later positivity checks.
pub fn advance_s(
    s_k: &CMatrix,
    pi_k: &CMatrix,
    a: &CMatrix,
    kind: SystemKind,
    sig: Signature,
) -> Result<CMatrix> {
    let inner = s_k + (pi_k * kind.s_step_middle(sig)) * pi_k.adjoint();
    let left = solve_square(a, &inner, "applying A^-1 in the S step")?;
    // X (A*)^-1 computed as (A^-1 X*)*.
    let both = solve_square(a, &left.adjoint(), "applying A^-* in the S step")?.adjoint();
    Ok(hermitian_part(&(s_k + both)))
}

/// Closed form of Π_k: [(I + iA⁻¹)ᵏ θ₁, (I − iA⁻¹)ᵏ θ₂]. Used as the
/// independent cross-check of the recursion.
pub fn pi_closed_form(t: &ParameterTriple, k: usize) -> Result<CMatrix> {
    let n = t.n();
    let a_inv = solve_square(t.a(), &identity(n), "inverting A for the closed Pi form")?;
    let p_plus = identity(n) + &a_inv * cplx(0.0, 1.0);
    let p_minus = identity(n) - &a_inv * cplx(0.0, 1.0);
    let left = power(&p_plus, k) * t.theta1();
    let right = power(&p_minus, k) * t.theta2();
    let mut pi = CMatrix::zeros(n, t.sig().m());
    pi.view_mut((0, 0), (n, t.sig().m1())).copy_from(&left);
    pi.view_mut((0, t.sig().m1()), (n, t.sig().m2()))
        .copy_from(&right);
    Ok(pi)
}

/// Which Cayley-type transform of A to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CayleyVariant {
    /// G(A) = (I + iA⁻¹)⁻¹ (I − iA⁻¹) = (A + iI)⁻¹ (A − iI); spectral radius
    /// < 1 when σ(A) ⊂ ℂ₊.
    G,
    /// G̃(A) = (A − iI)⁻¹ (A + iI), the inverse transform.
    GTilde,
}

/// Cayley transform of A. Needs ±i ∉ σ(A) (and, for the `G` form as written
/// with A⁻¹, invertibility of A, the shifted form used here agrees with it
/// wherever both exist).
pub fn cayley_transform(a: &CMatrix, variant: CayleyVariant) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NonSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    let plus = a + identity(n) * cplx(0.0, 1.0);
    let minus = a - identity(n) * cplx(0.0, 1.0);
    match variant {
        CayleyVariant::G => solve_square(&plus, &minus, "inverting A + iI (is -i in σ(A)?)"),
        CayleyVariant::GTilde => solve_square(&minus, &plus, "inverting A - iI (is i in σ(A)?)"),
    }
}

/// The self-adjoint R-increment in its explicit rank ≤ m₂ form:
/// R_{k+1} − R_k = 2 (A + iI)⁻¹ G(A)ᵏ θ₂ (·)*.
pub fn r_increment_explicit(t: &ParameterTriple, k: usize) -> Result<CMatrix> {
    let g = cayley_transform(t.a(), CayleyVariant::G)?;
    let shifted = t.a() + identity(t.n()) * cplx(0.0, 1.0);
    let x = solve_square(&shifted, &(power(&g, k) * t.theta2()), "inverting A + iI")?;
    Ok(&x * x.adjoint() * cplx(2.0, 0.0))
}

/// Build the sequences up to `horizon`: Π, S, R, Q are stored for
/// k ≤ horizon + 1 and the potentials C_k for k ≤ horizon. Fails fast with
/// the offending step index if some S_k (checked through the congruent R_k)
/// cannot be certified positive definite.
pub fn build_sequence(t: &ParameterTriple, horizon: usize, tol: f64) -> Result<GbdtSequence> {
    let spectrum_a = matcore::spectrum(t.a())?;
    let sig = t.sig();
    let kind = t.kind();
    let n = t.n();
    let steps = horizon + 1;

    // The compressed R/Q recursions are derived from the triple identity;
    // feeding them data off the identity manifold would silently compute a
    // different object, so admissibility is a hard precondition here.
    {
        let residual = t.a() * t.s0() - t.s0() * t.a().adjoint() - t.identity_rhs();
        let scale = (frob_norm(t.a()) * frob_norm(t.s0()) + frob_norm(t.pi0()).powi(2)).max(1.0);
        let rel = frob_norm(&residual) / scale;
        if rel > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "triple violates its defining identity (relative residual {rel:.3e}); \
                 only admissible triples generate a Dirac system"
            )));
        }
    }

    let mut pi = Vec::with_capacity(steps + 1);
    let mut s = Vec::with_capacity(steps + 1);
    pi.push(t.pi0().clone());
    s.push(hermitian_part(t.s0()));
    for k in 0..steps {
        pi.push(advance_pi(&pi[k], t.a(), sig)?);
        s.push(advance_s(&s[k], &pi[k], t.a(), kind, sig)?);
    }

    // Compressed coordinates: bounded-ingredient updates for R_k and Q_k,
    // Y_k = [θ₁, G(A)ᵏ θ₂] alongside. Q grows by PSD rank updates in both
    // kinds, which accumulate without cancellation. R also grows that way
    // in the self-adjoint case; in the skew case R *decreases*, and a
    // subtraction recursion would cancel catastrophically whenever the
    // limit is much smaller than S₀, so the skew R runs as the equivalent
    // Stein iteration R_{k+1} = G R_k G* + 2 v v* with v = (A−iI)⁻¹ G θ₁,
    // a contraction congruence plus a PSD update.
    let g = cayley_transform(t.a(), CayleyVariant::G)?;
    let g_tilde = cayley_transform(t.a(), CayleyVariant::GTilde)?;
    let a_plus_i = t.a() + identity(n) * cplx(0.0, 1.0);
    let a_minus_i = t.a() - identity(n) * cplx(0.0, 1.0);

    let mut r = Vec::with_capacity(steps + 1);
    let mut q = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    r.push(hermitian_part(t.s0()));
    q.push(hermitian_part(t.s0()));
    let mut g2_pow = t.theta2(); // G(A)^k θ₂
    let mut g1_pow = t.theta1(); // G̃(A)^k θ₁
    let stein_update = {
        let v = solve_square(&a_minus_i, &(&g * t.theta1()), "inverting A - iI")?;
        (&v * v.adjoint()) * cplx(2.0, 0.0)
    };
    {
        let mut y0 = CMatrix::zeros(n, sig.m());
        y0.view_mut((0, 0), (n, sig.m1())).copy_from(&t.theta1());
        y0.view_mut((0, sig.m1()), (n, sig.m2())).copy_from(&g2_pow);
        y.push(y0);
    }
    for k in 0..steps {
        if matcore::all_finite(&q[k]) && matcore::all_finite(&g1_pow) {
            let w = solve_square(&a_minus_i, &g1_pow, "inverting A - iI in the Q update")?;
            q.push(hermitian_part(&(&q[k] + (&w * w.adjoint()) * cplx(2.0, 0.0))));
        } else {
            // Q grows like G̃^{2k}; once it saturates the floating range the
            // tail entries are flagged rather than silently wrapped.
            q.push(CMatrix::from_element(n, n, cplx(f64::INFINITY, 0.0)));
        }
        g2_pow = &g * g2_pow;
        g1_pow = &g_tilde * g1_pow;
        match kind {
            SystemKind::SelfAdjoint => {
                let g_k_theta2 = y[k].columns(sig.m1(), sig.m2()).into_owned();
                let u = solve_square(&a_plus_i, &g_k_theta2, "inverting A + iI in the R update")?;
                r.push(hermitian_part(&(&r[k] + (&u * u.adjoint()) * cplx(2.0, 0.0))));
            }
            SystemKind::SkewSelfAdjoint => {
                r.push(hermitian_part(&(&g * &r[k] * g.adjoint() + &stein_update)));
            }
        }
        let mut yk = CMatrix::zeros(n, sig.m());
        yk.view_mut((0, 0), (n, sig.m1())).copy_from(&t.theta1());
        yk.view_mut((0, sig.m1()), (n, sig.m2())).copy_from(&g2_pow);
        y.push(yk);
    }

    // Positive definiteness of S_k is equivalent to that of the congruent
    // R_k, which stays well conditioned, so the certificate is meaningful at
    // every k. Machine precision is the right pivot threshold here: user
    // tolerances belong to admissibility checks, not to this fail-fast.
    let mut r_factors = Vec::with_capacity(steps + 1);
    let mut inverse_residuals = Vec::with_capacity(steps + 1);
    for (k, r_k) in r.iter().enumerate() {
        if !matcore::all_finite(r_k) {
            return Err(Error::PositivityLoss {
                step: k,
                pivot: f64::NAN,
            });
        }
        match CholeskyFactor::new(r_k, f64::EPSILON) {
            Some(factor) => {
                inverse_residuals.push(factor.inverse_residual(r_k));
                r_factors.push(factor);
            }
            None => {
                return Err(Error::PositivityLoss {
                    step: k,
                    pivot: 0.0,
                });
            }
        }
    }

    let mut identity_residuals = Vec::new();
    if kind == SystemKind::SelfAdjoint {
        let norm_a = frob_norm(t.a());
        let j = sig.j_matrix();
        for k in 0..=steps {
            let rhs = (&pi[k] * &j) * pi[k].adjoint() * cplx(0.0, 1.0);
            let residual = t.a() * &s[k] - &s[k] * t.a().adjoint() - rhs;
            let scale = (norm_a * frob_norm(&s[k]) + frob_norm(&pi[k]).powi(2)).max(1.0);
            identity_residuals.push(frob_norm(&residual) / scale);
        }
    }

    let base = kind.potential_base(sig);
    let mut quad = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        quad.push(hermitian_part(
            &(y[k].adjoint() * r_factors[k].solve(&y[k])),
        ));
    }
    let mut c = Vec::with_capacity(steps);
    for k in 0..steps {
        c.push(&base + &quad[k] - &quad[k + 1]);
    }

    let _ = tol; // admissibility tolerances live in `triples::validate`
    Ok(GbdtSequence {
        triple: t.clone(),
        horizon,
        pi,
        s,
        r,
        q,
        r_factors,
        y,
        c,
        identity_residuals,
        inverse_residuals,
        spectrum_a,
    })
}

/// R_k and Q_k (Hermitian, equal to S₀ at k = 0), from the stored stable
/// recursions. The definitional route P±⁻ᵏ S_k P±⁻ᵏ* is exercised against
/// these in tests.
pub fn rq_matrices(seq: &GbdtSequence, k: usize) -> Result<(CMatrix, CMatrix)> {
    if k >= seq.r.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} beyond stored horizon {}",
            seq.horizon
        )));
    }
    if !matcore::all_finite(&seq.q[k]) {
        return Err(Error::InvalidArgument(format!(
            "Q_{k} overflowed the floating range"
        )));
    }
    Ok((seq.r[k].clone(), seq.q[k].clone()))
}

/// R_k and Q_k evaluated literally from the stored S_k as
/// P±⁻ᵏ S_k P±⁻ᵏ*. Only trustworthy while S_k is well conditioned (small
/// k); serves as the independent anchor for the recursion route.
pub fn rq_matrices_literal(seq: &GbdtSequence, k: usize) -> Result<(CMatrix, CMatrix)> {
    let t = seq.triple();
    let n = t.n();
    let a_inv = solve_square(t.a(), &identity(n), "inverting A")?;
    let p_plus = identity(n) + &a_inv * cplx(0.0, 1.0);
    let p_minus = identity(n) - &a_inv * cplx(0.0, 1.0);
    let lp = power(
        &solve_square(&p_plus, &identity(n), "inverting I + iA^-1")?,
        k,
    );
    let lm = power(
        &solve_square(&p_minus, &identity(n), "inverting I - iA^-1")?,
        k,
    );
    let r = hermitian_part(&(&lp * seq.s(k) * lp.adjoint()));
    let q = hermitian_part(&(&lm * seq.s(k) * lm.adjoint()));
    Ok((r, q))
}

/// Limits of R_k⁻¹ and Q_k⁻¹ with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct LimitPair {
    /// κ_R = lim R_k⁻¹ (Hermitian PSD for strongly admissible triples).
    pub kappa_r: CMatrix,
    /// κ_Q = lim Q_k⁻¹ (zero for strongly admissible skew triples).
    pub kappa_q: CMatrix,
    /// Index at which every convergence measure dropped below tolerance.
    pub iterations: usize,
    /// Final ‖R_{k+1}⁻¹ − R_k⁻¹‖.
    pub r_increment: f64,
    /// Final ‖Q_{k+1}⁻¹ − Q_k⁻¹‖.
    pub q_increment: f64,
    /// Skew kind only: final ‖Q_k⁻¹‖ (must vanish in the limit).
    pub qinv_norm: Option<f64>,
    /// Skew kind only: final ‖Q_k⁻¹ G̃(A)ᵏ θ₁‖ (must vanish in the limit).
    pub qinv_gtilde_theta1: Option<f64>,
}

fn invert(m: &CMatrix, context: &str) -> Result<CMatrix> {
    solve_square(m, &identity(m.nrows()), context)
}

/// Iterate R_k⁻¹ and Q_k⁻¹ until the successive increments, and, for the
/// skew kind, ‖Q_k⁻¹‖ and ‖Q_k⁻¹ G̃(A)ᵏ θ₁‖, all fall below `tol`. Errors
/// with the last measures if `k_max` arrives first.
///
/// Q_k itself spreads over many orders of magnitude, so its inverse is
/// never formed by direct inversion: Q_k⁻¹ = G(A)ᵏ* R_k⁻¹ G(A)ᵏ and
/// Q_k⁻¹ G̃(A)ᵏ θ₁ = G(A)ᵏ* R_k⁻¹ θ₁ keep everything inside the
/// well-conditioned R coordinates. The inverse increments are measured
/// through the exact rank-structured update directions,
///
/// ```text
/// R_{k+1}⁻¹ − R_k⁻¹ = ∓ 2 (R_{k+1}⁻¹ u_k)(R_k⁻¹ u_k)*,  u_k = (A+iI)⁻¹ Gᵏ θ₂,
/// Q_{k+1}⁻¹ − Q_k⁻¹ = − 2 (Q_{k+1}⁻¹ w_k)(Q_k⁻¹ w_k)*,  Q_k⁻¹ w_k = Gᵏ* R_k⁻¹ (A−iI)⁻¹ θ₁,
/// ```
///
/// because the naive difference of two computed inverses bottoms out at
/// inversion roundoff long before the true increments do.
pub fn limits(t: &ParameterTriple, tol: f64, k_max: usize) -> Result<LimitPair> {
    let seq = build_sequence(t, k_max, tol)?;
    let skew = t.kind() == SystemKind::SkewSelfAdjoint;
    let n = t.n();
    let g = cayley_transform(t.a(), CayleyVariant::G)?;
    let theta1 = t.theta1();
    let a_plus_i = t.a() + identity(n) * cplx(0.0, 1.0);
    let a_minus_i = t.a() - identity(n) * cplx(0.0, 1.0);
    // constant direction of the Q-update seen from the R coordinates
    let q_dir = solve_square(&a_minus_i, &theta1, "inverting A - iI")?;

    let mut g_pow = identity(n);
    let mut g2_pow = t.theta2(); // G^k θ₂
    let mut worst = f64::INFINITY;

    for k in 1..=k_max {
        let u = solve_square(&a_plus_i, &g2_pow, "inverting A + iI")?;
        g2_pow = &g * g2_pow;
        let g_pow_prev = g_pow.clone();
        g_pow = &g_pow * &g;

        let r_inc_left = seq.solve_r(k, &u);
        let r_inc_right = seq.solve_r(k - 1, &u);
        let r_increment = 2.0 * frob_norm(&r_inc_left) * frob_norm(&r_inc_right);

        let q_left = g_pow.adjoint() * seq.solve_r(k, &q_dir);
        let q_right = g_pow_prev.adjoint() * seq.solve_r(k - 1, &q_dir);
        let q_increment = 2.0 * frob_norm(&q_left) * frob_norm(&q_right);

        let (qinv_norm, qinv_drift) = if skew {
            let r_inv = invert(&seq.r[k], "inverting R_k")?;
            let qn = frob_norm(&(g_pow.adjoint() * &r_inv * &g_pow));
            let dn = frob_norm(&(g_pow.adjoint() * seq.solve_r(k, &theta1)));
            (qn, dn)
        } else {
            (0.0, 0.0)
        };
        worst = r_increment.max(q_increment).max(qinv_norm).max(qinv_drift);
        if worst < tol {
            let r_inv = invert(&seq.r[k], "inverting R_k")?;
            return Ok(LimitPair {
                kappa_q: hermitian_part(&(g_pow.adjoint() * &r_inv * &g_pow)),
                kappa_r: hermitian_part(&r_inv),
                iterations: k,
                r_increment,
                q_increment,
                qinv_norm: skew.then_some(qinv_norm),
                qinv_gtilde_theta1: skew.then_some(qinv_drift),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: k_max,
        last_increment: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{is_positive_definite, max_abs, spectrum, DEFAULT_TOL};
    use crate::triples::{generate, Signature};

    fn scalar(v: Complex64) -> CMatrix {
        CMatrix::from_row_slice(1, 1, &[v])
    }

    fn fixture_t1() -> ParameterTriple {
        ParameterTriple::new(
            SystemKind::SelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(0.0, 2.0)),
            scalar(cplx(0.75, 0.0)),
            CMatrix::from_row_slice(1, 2, &[cplx(2.0, 0.0), cplx(1.0, 0.0)]),
        )
        .unwrap()
    }

    fn fixture_t2() -> ParameterTriple {
        ParameterTriple::new(
            SystemKind::SkewSelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(0.0, 2.0)),
            scalar(cplx(1.25, 0.0)),
            CMatrix::from_row_slice(1, 2, &[cplx(2.0, 0.0), cplx(1.0, 0.0)]),
        )
        .unwrap()
    }

    #[test]
    fn pi_step_scalar() {
        let t = fixture_t1();
        let pi1 = advance_pi(t.pi0(), t.a(), t.sig()).unwrap();
        // iA⁻¹ = 1/2, so Π₁ = [2,1] + (1/2)[2,-1] = [3, 1/2].
        assert!((pi1[(0, 0)] - cplx(3.0, 0.0)).norm() < 1e-14);
        assert!((pi1[(0, 1)] - cplx(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pi_step_zero() {
        let t = fixture_t1();
        let zero = CMatrix::zeros(1, 2);
        let next = advance_pi(&zero, t.a(), t.sig()).unwrap();
        assert_eq!(frob_norm(&next), 0.0);
    }

    #[test]
    fn pi_closed_form_matches_recursion() {
        let t = fixture_t1();
        // (1 + iA⁻¹)² = (3/2)², (1 − iA⁻¹)² = (1/2)².
        let closed = pi_closed_form(&t, 2).unwrap();
        assert!((closed[(0, 0)] - cplx(4.5, 0.0)).norm() < 1e-14);
        assert!((closed[(0, 1)] - cplx(0.25, 0.0)).norm() < 1e-14);

        let seq = build_sequence(&t, 2, DEFAULT_TOL).unwrap();
        assert!(frob_norm(&(seq.pi(2) - closed)) < 1e-14);
    }

    #[test]
    fn pi_closed_form_matches_recursion_matrix_case() {
        let t = generate(SystemKind::SelfAdjoint, 3, Signature::new(2, 1).unwrap(), 5, 5000)
            .unwrap();
        let seq = build_sequence(&t, 25, DEFAULT_TOL).unwrap();
        for k in [1usize, 7, 25] {
            let closed = pi_closed_form(&t, k).unwrap();
            let diff = frob_norm(&(seq.pi(k) - &closed));
            assert!(
                diff <= 1e-12 * frob_norm(&closed).max(1.0),
                "k={k}: relative deviation {diff:.3e}"
            );
        }
    }

    #[test]
    fn s_step_scalar_values() {
        let t1 = fixture_t1();
        let s1 = advance_s(t1.s0(), t1.pi0(), t1.a(), t1.kind(), t1.sig()).unwrap();
        assert!((s1[(0, 0)] - cplx(35.0 / 16.0, 0.0)).norm() < 1e-14);

        let t2 = fixture_t2();
        let s1 = advance_s(t2.s0(), t2.pi0(), t2.a(), t2.kind(), t2.sig()).unwrap();
        assert!((s1[(0, 0)] - cplx(37.0 / 16.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn s_step_zero_potential_reduction() {
        let t = fixture_t1();
        let zero_pi = CMatrix::zeros(1, 2);
        let s1 = advance_s(t.s0(), &zero_pi, t.a(), t.kind(), t.sig()).unwrap();
        // S₁ = S₀ + A⁻¹ S₀ A⁻* = 3/4 (1 + 1/4).
        assert!((s1[(0, 0)] - cplx(0.75 * 1.25, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn t1_potential_exact_rationals() {
        let seq = build_sequence(&fixture_t1(), 1, DEFAULT_TOL).unwrap();
        let c0 = seq.c(0);
        let want = [
            [233.0 / 105.0, 208.0 / 105.0],
            [208.0 / 105.0, 233.0 / 105.0],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (c0[(i, j)] - cplx(want[i][j], 0.0)).norm() < 1e-13,
                    "C0[{i},{j}] = {}",
                    c0[(i, j)]
                );
            }
        }
        // j-unitary: (233² − 208²)/105² = 1 makes C₀ j C₀ = j exact in
        // rationals; eigenvalues 21/5 and 5/21 are positive.
        let j = seq.sig().j_matrix();
        assert!(frob_norm(&(c0 * &j * c0 - &j)) < 1e-12);
        let eigs = spectrum(c0).unwrap();
        for e in eigs {
            assert!(e.re > 0.0 && e.im.abs() < 1e-12);
        }
    }

    #[test]
    fn t2_potential_is_involution() {
        let seq = build_sequence(&fixture_t2(), 1, DEFAULT_TOL).unwrap();
        let c0 = seq.c(0);
        // Hand value: (1/185) [[57, 176], [176, -57]].
        assert!((c0[(0, 0)] - cplx(57.0 / 185.0, 0.0)).norm() < 1e-13);
        assert!((c0[(0, 1)] - cplx(176.0 / 185.0, 0.0)).norm() < 1e-13);
        assert!((c0[(1, 1)] - cplx(-57.0 / 185.0, 0.0)).norm() < 1e-13);
        assert!(frob_norm(&(c0 * c0 - identity(2))) < 1e-12);
        let trace: Complex64 = c0.diagonal().iter().sum();
        assert!(trace.norm() < 1e-13);
    }

    #[test]
    fn zero_pi_gives_identity_potential() {
        // A = I, S₀ = I, Π₀ = 0 satisfies the self-adjoint identity (0 = 0).
        let t = ParameterTriple::new(
            SystemKind::SelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(1.0, 0.0)),
            scalar(cplx(1.0, 0.0)),
            CMatrix::zeros(1, 2),
        )
        .unwrap();
        let seq = build_sequence(&t, 5, DEFAULT_TOL).unwrap();
        for k in 0..=5 {
            assert!(frob_norm(&(seq.c(k) - identity(2))) < 1e-14);
        }
    }

    #[test]
    fn inadmissible_triples_are_rejected() {
        // This skew data violates the defining identity, so no Dirac system
        // exists for it and the recursions must refuse it up front.
        let t = ParameterTriple::new(
            SystemKind::SkewSelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(1.0, 0.0)),
            scalar(cplx(0.1, 0.0)),
            CMatrix::from_row_slice(1, 2, &[cplx(0.1, 0.0), cplx(5.0, 0.0)]),
        )
        .unwrap();
        match build_sequence(&t, 3, DEFAULT_TOL) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("identity")),
            other => panic!("expected an identity rejection, got {other:?}"),
        }
    }

    #[test]
    fn rq_at_zero_equal_s0() {
        let seq = build_sequence(&fixture_t1(), 2, DEFAULT_TOL).unwrap();
        let (r0, q0) = rq_matrices(&seq, 0).unwrap();
        assert!(frob_norm(&(&r0 - seq.triple().s0())) < 1e-14);
        assert!(frob_norm(&(&q0 - seq.triple().s0())) < 1e-14);
    }

    #[test]
    fn rq_scalar_values_and_monotonicity() {
        let seq = build_sequence(&fixture_t1(), 2, DEFAULT_TOL).unwrap();
        let (r1, q1) = rq_matrices(&seq, 1).unwrap();
        assert!((r1[(0, 0)] - cplx(35.0 / 36.0, 0.0)).norm() < 1e-13);
        assert!((q1[(0, 0)] - cplx(35.0 / 4.0, 0.0)).norm() < 1e-13);

        // R₁ − R₀ = 35/36 − 3/4 = 2/9 and matches the explicit increment.
        let (r0, _) = rq_matrices(&seq, 0).unwrap();
        let inc = &r1 - &r0;
        assert!((inc[(0, 0)] - cplx(2.0 / 9.0, 0.0)).norm() < 1e-13);
        let explicit = r_increment_explicit(seq.triple(), 0).unwrap();
        assert!(frob_norm(&(&inc - &explicit)) < 1e-13);
    }

    #[test]
    fn rq_recursion_matches_literal_definition() {
        for (t, label) in [
            (
                generate(SystemKind::SelfAdjoint, 3, Signature::new(1, 2).unwrap(), 21, 5000)
                    .unwrap(),
                "self-adjoint",
            ),
            (
                generate(
                    SystemKind::SkewSelfAdjoint,
                    3,
                    Signature::new(2, 1).unwrap(),
                    22,
                    5000,
                )
                .unwrap(),
                "skew",
            ),
        ] {
            let seq = build_sequence(&t, 10, DEFAULT_TOL).unwrap();
            for k in 0..=10 {
                let (r_rec, q_rec) = rq_matrices(&seq, k).unwrap();
                let (r_lit, q_lit) = rq_matrices_literal(&seq, k).unwrap();
                let dr = frob_norm(&(&r_rec - &r_lit)) / frob_norm(&r_lit).max(1.0);
                let dq = frob_norm(&(&q_rec - &q_lit)) / frob_norm(&q_lit).max(1.0);
                assert!(dr < 1e-10, "{label} R mismatch at k={k}: {dr:.3e}");
                assert!(dq < 1e-10, "{label} Q mismatch at k={k}: {dq:.3e}");
            }
        }
    }

    #[test]
    fn quadratic_form_matches_literal_small_k() {
        let t = generate(SystemKind::SelfAdjoint, 3, Signature::new(1, 2).unwrap(), 31, 5000)
            .unwrap();
        let seq = build_sequence(&t, 8, DEFAULT_TOL).unwrap();
        for k in 0..=8 {
            // Literal route through a Cholesky of S_k itself.
            let f = CholeskyFactor::new(seq.s(k), 0.0).expect("S_k PD at small k");
            let lit = seq.pi(k).adjoint() * f.solve(seq.pi(k));
            let comp = seq.pi_quadratic_form(k);
            let d = frob_norm(&(&comp - &lit)) / frob_norm(&lit).max(1.0);
            assert!(d < 1e-10, "k={k}: {d:.3e}");
        }
    }

    #[test]
    fn r_increment_formula_matches_matrix_case() {
        let t = generate(SystemKind::SelfAdjoint, 3, Signature::new(1, 2).unwrap(), 2, 5000)
            .unwrap();
        let seq = build_sequence(&t, 12, DEFAULT_TOL).unwrap();
        for k in 0..12 {
            let (r_k, _) = rq_matrices(&seq, k).unwrap();
            let (r_k1, _) = rq_matrices(&seq, k + 1).unwrap();
            let inc = &r_k1 - &r_k;
            let explicit = r_increment_explicit(&t, k).unwrap();
            let scale = max_abs(&explicit).max(1e-12);
            assert!(
                frob_norm(&(&inc - &explicit)) <= 1e-9 * scale.max(1.0),
                "k={k}"
            );
            // increments are PSD
            assert!(is_positive_definite(&(inc + identity(3) * cplx(1e-11, 0.0)), 0.0)
                .unwrap()
                .is_some());
        }
    }

    #[test]
    fn cayley_scalar_values() {
        let a = scalar(cplx(0.0, 2.0));
        let g = cayley_transform(&a, CayleyVariant::G).unwrap();
        assert!((g[(0, 0)] - cplx(1.0 / 3.0, 0.0)).norm() < 1e-14);
        let gt = cayley_transform(&a, CayleyVariant::GTilde).unwrap();
        assert!((gt[(0, 0)] - cplx(3.0, 0.0)).norm() < 1e-14);
        // G̃ is the inverse transform of G wherever both exist.
        assert!(frob_norm(&(&g * &gt - identity(1))) < 1e-14);
    }

    #[test]
    fn cayley_radius_matches_scalar() {
        let seq = build_sequence(&fixture_t1(), 1, DEFAULT_TOL).unwrap();
        assert!((seq.cayley_radius() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn limits_skew_kappa_q_vanishes() {
        let lim = limits(&fixture_t2(), 1e-8, 60).unwrap();
        assert!(frob_norm(&lim.kappa_q) < 1e-8);
        assert!(lim.qinv_norm.unwrap() < 1e-8);
        assert!(lim.qinv_gtilde_theta1.unwrap() < 1e-8);
    }

    #[test]
    fn limits_self_adjoint_kappas_are_psd() {
        let lim = limits(&fixture_t1(), 1e-8, 60).unwrap();
        for kappa in [&lim.kappa_r, &lim.kappa_q] {
            assert!(crate::matcore::hermitian_min_eigenvalue(kappa).unwrap() > -1e-10);
            assert!(frob_norm(&(kappa - kappa.adjoint())) < 1e-12);
        }
        // Doubling the horizon must not move the limit (stability check).
        let lim2 = limits(&fixture_t1(), 1e-12, 120).unwrap();
        assert!(frob_norm(&(&lim.kappa_r - &lim2.kappa_r)) < 1e-7);
    }

    #[test]
    fn identity_residuals_stay_relative_small() {
        let t = generate(SystemKind::SelfAdjoint, 4, Signature::new(2, 2).unwrap(), 9, 5000)
            .unwrap();
        let seq = build_sequence(&t, 40, DEFAULT_TOL).unwrap();
        for (k, r) in seq.identity_residuals().iter().enumerate() {
            assert!(*r <= 1e-10, "step {k}: relative residual {r:.3e}");
        }
    }

    #[test]
    fn skew_potentials_have_signature() {
        let t = generate(
            SystemKind::SkewSelfAdjoint,
            3,
            Signature::new(2, 1).unwrap(),
            13,
            5000,
        )
        .unwrap();
        let seq = build_sequence(&t, 20, DEFAULT_TOL).unwrap();
        for k in 0..=20 {
            let c = seq.c(k);
            assert!(frob_norm(&(c - c.adjoint())) < 1e-10);
            assert!(frob_norm(&(c * c - identity(3))) < 1e-9);
            // Hermitian involution: eigenvalues are ±1, counts fixed by the
            // trace (m1 − m2 = 1 here), and the negative one must be present.
            let trace: Complex64 = c.diagonal().iter().sum();
            assert!((trace - cplx(1.0, 0.0)).norm() < 1e-9);
            assert!(crate::matcore::hermitian_min_eigenvalue(c).unwrap() < -0.99);
        }
    }

    #[test]
    fn self_adjoint_potentials_j_unitary_long_horizon() {
        let t = generate(SystemKind::SelfAdjoint, 4, Signature::new(2, 2).unwrap(), 9, 5000)
            .unwrap();
        let seq = build_sequence(&t, 40, DEFAULT_TOL).unwrap();
        let j = seq.sig().j_matrix();
        for k in 0..=40 {
            let c = seq.c(k);
            let dev = frob_norm(&(c * &j * c - &j));
            assert!(dev < 1e-9, "k={k}: j-unitarity residual {dev:.3e}");
            let min_eig = crate::matcore::hermitian_min_eigenvalue(c).unwrap();
            assert!(min_eig > 0.0, "k={k}: non-positive eigenvalue {min_eig:.3e}");
        }
    }
}

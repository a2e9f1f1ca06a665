//! Transfer matrix function, fundamental solutions and Jost solutions.
//!
//! The transfer matrix function in its resolvent form,
//!
//! ```text
//! w_A(k, λ) = I_m − i j Π_k* S_k⁻¹ (A − λI)⁻¹ Π_k    (self-adjoint)
//! w_A(k, λ) = I_m − i   Π_k* S_k⁻¹ (A − λI)⁻¹ Π_k    (skew)
//! ```
//!
//! is the rational factor of the closed-form fundamental solution:
//!
//! ```text
//! W_k(z) = w_A(k, −1/z) (I + izj)ᵏ w_A(0, −1/z)⁻¹     (self-adjoint)
//! w_k(z) = w_A(k, −z) (I + (i/z)j)ᵏ w_A(0, −z)⁻¹      (skew)
//! ```
//!
//! Both closed forms are cross-checked against the direct one-step products
//! of the Dirac system, the central two-route consistency of the crate.
//! In compressed coordinates w_A(k, −1/z) has an explicit block form driven
//! by R_k⁻¹, Q_k⁻¹ and G(A)ᵏ whose off-diagonal blocks decay geometrically;
//! the diagonal limits χ₁, χ₂ normalize the Jost solution
//! F_k(z) = W_k(z) w_A(0, −1/z) diag(χ₁⁻¹, χ₂⁻¹).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gbdt::{GbdtSequence, LimitPair};
use crate::matcore::{cplx, frob_norm, identity, inverse_condition, solve_square, CMatrix};
use crate::triples::{ParameterTriple, Signature, SystemKind};

/// Absolute pole-rejection margin, scaled by (1 + ‖A‖): evaluations closer
/// than this to a resolvent pole are refused so downstream equality checks
/// never compare amplified garbage.
pub const POLE_MARGIN: f64 = 1e-6;

/// The a/b/c/d block partition of an m×m matrix along the signature.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// m₁×m₁ upper-left block.
    pub a: CMatrix,
    /// m₁×m₂ upper-right block.
    pub b: CMatrix,
    /// m₂×m₁ lower-left block.
    pub c: CMatrix,
    /// m₂×m₂ lower-right block.
    pub d: CMatrix,
}

impl BlockDecomposition {
    pub fn split(m: &CMatrix, sig: Signature) -> Result<Self> {
        if m.nrows() != sig.m() || m.ncols() != sig.m() {
            return Err(Error::Dimension(format!(
                "expected a {0}x{0} matrix for signature ({1},{2})",
                sig.m(),
                sig.m1(),
                sig.m2()
            )));
        }
        let (m1, m2) = (sig.m1(), sig.m2());
        Ok(Self {
            a: m.view((0, 0), (m1, m1)).into_owned(),
            b: m.view((0, m1), (m1, m2)).into_owned(),
            c: m.view((m1, 0), (m2, m1)).into_owned(),
            d: m.view((m1, m1), (m2, m2)).into_owned(),
        })
    }

    /// Reassemble [[a, b], [c, d]]; exact inverse of [`split`](Self::split).
    pub fn reassemble(&self) -> CMatrix {
        let m1 = self.a.nrows();
        let m2 = self.d.nrows();
        let mut m = CMatrix::zeros(m1 + m2, m1 + m2);
        m.view_mut((0, 0), (m1, m1)).copy_from(&self.a);
        m.view_mut((0, m1), (m1, m2)).copy_from(&self.b);
        m.view_mut((m1, 0), (m2, m1)).copy_from(&self.c);
        m.view_mut((m1, m1), (m2, m2)).copy_from(&self.d);
        m
    }
}

/// Diagonal one-step power diag(α^k I_{m₁}, β^k I_{m₂}). The block scalars
/// are powered directly, keeping the exact block-diagonal structure.
fn scalar_block_power(sig: Signature, alpha: Complex64, beta: Complex64, k: i32) -> CMatrix {
    let mut m = identity(sig.m());
    let pa = alpha.powi(k);
    let pb = beta.powi(k);
    for idx in 0..sig.m1() {
        m[(idx, idx)] = pa;
    }
    for idx in sig.m1()..sig.m() {
        m[(idx, idx)] = pb;
    }
    m
}

/// (I + izj)^k for the self-adjoint system, (I + (i/z)j)^k for the skew one.
pub fn step_diagonal_power(
    kind: SystemKind,
    sig: Signature,
    z: Complex64,
    k: i32,
) -> Result<CMatrix> {
    let i = cplx(0.0, 1.0);
    match kind {
        SystemKind::SelfAdjoint => Ok(scalar_block_power(sig, 1.0 + i * z, 1.0 - i * z, k)),
        SystemKind::SkewSelfAdjoint => {
            if z == Complex64::default() {
                return Err(Error::InvalidArgument(
                    "the skew system step is singular at z = 0".into(),
                ));
            }
            Ok(scalar_block_power(sig, 1.0 + i / z, 1.0 - i / z, k))
        }
    }
}

fn pole_margin(seq: &GbdtSequence) -> f64 {
    POLE_MARGIN * (1.0 + frob_norm(seq.triple().a()))
}

/// Evaluate w_A(k, λ) from its resolvent form. Rejects λ within the pole
/// margin of σ(A).
///
/// The middle factor is applied through the compressed coordinates: since
/// P₊⁻ᵏ commutes with the resolvent and compresses Π_k exactly to
/// Y_k = [θ₁, G(A)ᵏθ₂], the form Π_k* S_k⁻¹ (A−λI)⁻¹ Π_k equals
/// Y_k* R_k⁻¹ (A−λI)⁻¹ Y_k with every factor bounded and well conditioned.
pub fn transfer_eval(seq: &GbdtSequence, k: usize, lambda: Complex64) -> Result<CMatrix> {
    let dist = seq.pole_distance(lambda);
    if dist <= pole_margin(seq) {
        return Err(Error::NearPole {
            point: lambda,
            distance: dist,
        });
    }
    let t = seq.triple();
    let n = t.n();
    let shifted = t.a() - identity(n) * lambda;
    let y = seq.y(k);
    let resolvent_y = solve_square(&shifted, y, "applying (A - λI)^-1")?;
    let core = y.adjoint() * seq.solve_r(k, &resolvent_y);
    let m = seq.sig().m();
    Ok(match t.kind() {
        SystemKind::SelfAdjoint => identity(m) - seq.sig().j_matrix() * core * cplx(0.0, 1.0),
        SystemKind::SkewSelfAdjoint => identity(m) - core * cplx(0.0, 1.0),
    })
}

enum ShiftKind {
    /// Poles of (I + zA)⁻¹ sit at z = −1/a.
    OnePlusZa,
    /// Poles of (zI + A)⁻¹ sit at z = −a.
    ZPlusA,
}

fn check_shifted_pole(seq: &GbdtSequence, z: Complex64, shift: ShiftKind) -> Result<()> {
    let margin = POLE_MARGIN * (1.0 + frob_norm(seq.triple().a())) * (1.0 + z.norm());
    let dist = seq
        .spectrum_a()
        .iter()
        .map(|a| match shift {
            ShiftKind::OnePlusZa => (cplx(1.0, 0.0) + z * a).norm(),
            ShiftKind::ZPlusA => (z + a).norm(),
        })
        .fold(f64::INFINITY, f64::min);
    if dist <= margin {
        return Err(Error::NearPole {
            point: z,
            distance: dist,
        });
    }
    Ok(())
}

/// Self-adjoint block representation of w_A(k, −1/z) in compressed
/// coordinates:
///
/// ```text
/// w_A(k, −1/z) = I − izj [ θ₁* R_k⁻¹ (I+zA)⁻¹ θ₁      θ₁* R_k⁻¹ (I+zA)⁻¹ Gᵏ θ₂ ]
///                        [ (Gᵏθ₂)* R_k⁻¹ (I+zA)⁻¹ θ₁  θ₂* Q_k⁻¹ (I+zA)⁻¹ θ₂    ]
/// ```
///
/// Must agree with `transfer_eval(seq, k, -1/z)` wherever both are defined.
pub fn transfer_block_rep(seq: &GbdtSequence, k: usize, z: Complex64) -> Result<CMatrix> {
    if seq.kind() != SystemKind::SelfAdjoint {
        return Err(Error::InvalidArgument(
            "the block representation at -1/z applies to the self-adjoint kind".into(),
        ));
    }
    check_shifted_pole(seq, z, ShiftKind::OnePlusZa)?;
    let t = seq.triple();
    let n = t.n();
    let sig = seq.sig();
    let (r_k, _) = crate::gbdt::rq_matrices(seq, k)?;
    let theta1 = t.theta1();
    let g_k_theta2 = seq.y(k).columns(sig.m1(), sig.m2()).into_owned();

    let shifted = identity(n) + t.a() * z;
    let res_theta1 = solve_square(&shifted, &theta1, "applying (I + zA)^-1")?;
    let res_g_theta2 = solve_square(&shifted, &g_k_theta2, "applying (I + zA)^-1")?;

    let rinv_res_theta1 = solve_square(&r_k, &res_theta1, "applying R_k^-1")?;
    let rinv_res_g_theta2 = solve_square(&r_k, &res_g_theta2, "applying R_k^-1")?;

    // The Q_k⁻¹ entry uses Q_k⁻¹ = G(A)ᵏ* R_k⁻¹ G(A)ᵏ, which keeps the
    // evaluation inside the well-conditioned R coordinates.
    let blocks = BlockDecomposition {
        a: theta1.adjoint() * &rinv_res_theta1,
        b: theta1.adjoint() * &rinv_res_g_theta2,
        c: g_k_theta2.adjoint() * &rinv_res_theta1,
        d: g_k_theta2.adjoint() * &rinv_res_g_theta2,
    };
    Ok(identity(sig.m()) - sig.j_matrix() * blocks.reassemble() * (z * cplx(0.0, 1.0)))
}

/// Skew block column w_A(k, −z) [0; I_{m₂}] in compressed coordinates:
///
/// ```text
/// [0; I] − i [ (G̃ᵏθ₁)* Q_k⁻¹ (zI + A)⁻¹ θ₂ ;  θ₂* Q_k⁻¹ (zI + A)⁻¹ θ₂ ]
/// ```
///
/// Converges to [0; I_{m₂}] as k → ∞ for strongly admissible triples.
pub fn transfer_block_column(seq: &GbdtSequence, k: usize, z: Complex64) -> Result<CMatrix> {
    if seq.kind() != SystemKind::SkewSelfAdjoint {
        return Err(Error::InvalidArgument(
            "the block column at -z applies to the skew kind".into(),
        ));
    }
    check_shifted_pole(seq, z, ShiftKind::ZPlusA)?;
    let t = seq.triple();
    let n = t.n();
    let sig = seq.sig();
    let (r_k, _) = crate::gbdt::rq_matrices(seq, k)?;
    let theta1 = t.theta1();
    let g_k_theta2 = seq.y(k).columns(sig.m1(), sig.m2()).into_owned();

    // Substituting Q_k⁻¹ = G(A)ᵏ* R_k⁻¹ G(A)ᵏ and G̃ = G⁻¹ collapses the
    // top entry (G̃ᵏθ₁)* Q_k⁻¹ (zI+A)⁻¹ θ₂ to θ₁* R_k⁻¹ (zI+A)⁻¹ Gᵏθ₂ and
    // the bottom one to (Gᵏθ₂)* R_k⁻¹ (zI+A)⁻¹ Gᵏθ₂, all factors bounded.
    let shifted = t.a() + identity(n) * z;
    let res_g_theta2 = solve_square(&shifted, &g_k_theta2, "applying (zI + A)^-1")?;
    let rinv_res = solve_square(&r_k, &res_g_theta2, "applying R_k^-1")?;

    let top = theta1.adjoint() * &rinv_res * cplx(0.0, -1.0);
    let bottom = identity(sig.m2()) + g_k_theta2.adjoint() * &rinv_res * cplx(0.0, -1.0);
    let mut col = CMatrix::zeros(sig.m(), sig.m2());
    col.view_mut((0, 0), (sig.m1(), sig.m2())).copy_from(&top);
    col.view_mut((sig.m1(), 0), (sig.m2(), sig.m2()))
        .copy_from(&bottom);
    Ok(col)
}

/// Fundamental solution by the direct left product of one-step matrices,
/// normalized to the identity at k = 0.
pub fn fundamental_direct(seq: &GbdtSequence, k: usize, z: Complex64) -> Result<CMatrix> {
    if k > seq.horizon() + 1 {
        return Err(Error::InvalidArgument(format!(
            "k = {k} beyond stored horizon {}",
            seq.horizon()
        )));
    }
    let sig = seq.sig();
    let i = cplx(0.0, 1.0);
    let mut w = identity(sig.m());
    for j in 0..k {
        let step = match seq.kind() {
            SystemKind::SelfAdjoint => identity(sig.m()) + sig.j_matrix() * seq.c(j) * (i * z),
            SystemKind::SkewSelfAdjoint => {
                if z == Complex64::default() {
                    return Err(Error::InvalidArgument(
                        "the skew system step is singular at z = 0".into(),
                    ));
                }
                identity(sig.m()) + seq.c(j) * (i / z)
            }
        };
        w = step * w;
    }
    Ok(w)
}

/// Fundamental solution in closed form:
/// w_A(k, λ_z) (step diagonal)ᵏ w_A(0, λ_z)⁻¹ with λ_z = −1/z (self-adjoint)
/// or λ_z = −z (skew). Matches [`fundamental_direct`], the module's central
/// cross-check.
pub fn fundamental_closed(seq: &GbdtSequence, k: usize, z: Complex64) -> Result<CMatrix> {
    let sig = seq.sig();
    let lambda = match seq.kind() {
        SystemKind::SelfAdjoint => {
            if z == Complex64::default() {
                // λ → ∞ turns both transfer factors into the identity.
                return Ok(identity(sig.m()));
            }
            -z.inv()
        }
        SystemKind::SkewSelfAdjoint => {
            if z == Complex64::default() {
                return Err(Error::InvalidArgument(
                    "the skew system step is singular at z = 0".into(),
                ));
            }
            -z
        }
    };
    let w_k = transfer_eval(seq, k, lambda)?;
    let w_0 = transfer_eval(seq, 0, lambda)?;
    if inverse_condition(&w_0) < 1e-12 {
        return Err(Error::Singular {
            context: "inverting the normalizing factor w_A(0, ·)".into(),
        });
    }
    let diag = step_diagonal_power(seq.kind(), sig, z, k as i32)?;
    // (w_k diag) w_0^{-1} via a transposed solve: X w_0 = w_k diag.
    let rhs = (&w_k * diag).transpose();
    let solved = solve_square(&w_0.transpose(), &rhs, "inverting w_A(0, ·)")?;
    Ok(solved.transpose())
}

/// The diagonal limit blocks χ₁(z), χ₂(z) of w_A(k, −1/z) as k → ∞:
/// χ₁ = I − iz θ₁* κ_R (I+zA)⁻¹ θ₁ and χ₂ = I + iz θ₂* κ_Q (I+zA)⁻¹ θ₂.
#[derive(Debug, Clone)]
pub struct ChiPair {
    pub chi1: CMatrix,
    pub chi2: CMatrix,
}

pub fn chi_functions(t: &ParameterTriple, lim: &LimitPair, z: Complex64) -> Result<ChiPair> {
    let n = t.n();
    let shifted = identity(n) + t.a() * z;
    if inverse_condition(&shifted) < 1e-12 {
        return Err(Error::NearPole {
            point: z,
            distance: 0.0,
        });
    }
    let theta1 = t.theta1();
    let theta2 = t.theta2();
    let res1 = solve_square(&shifted, &theta1, "applying (I + zA)^-1")?;
    let res2 = solve_square(&shifted, &theta2, "applying (I + zA)^-1")?;
    let iz = z * cplx(0.0, 1.0);
    let chi1 = identity(t.sig().m1()) - theta1.adjoint() * (&lim.kappa_r * res1) * iz;
    let chi2 = identity(t.sig().m2()) + theta2.adjoint() * (&lim.kappa_q * res2) * iz;
    Ok(ChiPair { chi1, chi2 })
}

/// Jost solution of the self-adjoint system at real z in closed form:
/// F_k(z) = W_k(z) w_A(0, −1/z) diag(χ₁⁻¹, χ₂⁻¹), with W_k evaluated by the
/// direct product so the expression stays a genuine combination of two
/// routes. Normalized by F_k(z) (I + izj)^{−k} → I as k → ∞.
pub fn jost_closed(seq: &GbdtSequence, lim: &LimitPair, k: usize, z: f64) -> Result<CMatrix> {
    if seq.kind() != SystemKind::SelfAdjoint {
        return Err(Error::InvalidArgument(
            "the Jost normalization applies to the self-adjoint kind".into(),
        ));
    }
    let sig = seq.sig();
    let zc = cplx(z, 0.0);
    if z == 0.0 {
        return Ok(identity(sig.m()));
    }
    let w_k = fundamental_direct(seq, k, zc)?;
    let w_a0 = transfer_eval(seq, 0, -zc.inv())?;
    let chi = chi_functions(seq.triple(), lim, zc)?;
    let chi1_inv = solve_square(&chi.chi1, &identity(sig.m1()), "inverting chi_1")?;
    let chi2_inv = solve_square(&chi.chi2, &identity(sig.m2()), "inverting chi_2")?;
    let mut diag = CMatrix::zeros(sig.m(), sig.m());
    diag.view_mut((0, 0), (sig.m1(), sig.m1()))
        .copy_from(&chi1_inv);
    diag.view_mut((sig.m1(), sig.m1()), (sig.m2(), sig.m2()))
        .copy_from(&chi2_inv);
    Ok(w_k * w_a0 * diag)
}

/// The m×m₂ Jost-type solution of the skew system,
/// Y_k(z) = (1 − i/z)ᵏ w_A(k, −z) [0; I_{m₂}], normalized by
/// (1 − i/z)^{−k} Y_k(z) → [0; I_{m₂}].
pub fn y_closed(seq: &GbdtSequence, k: usize, z: Complex64) -> Result<CMatrix> {
    if seq.kind() != SystemKind::SkewSelfAdjoint {
        return Err(Error::InvalidArgument("Y_k applies to the skew kind".into()));
    }
    if z == Complex64::default() {
        return Err(Error::InvalidArgument(
            "the skew system step is singular at z = 0".into(),
        ));
    }
    let sig = seq.sig();
    let w = transfer_eval(seq, k, -z)?;
    let mut selector = CMatrix::zeros(sig.m(), sig.m2());
    selector
        .view_mut((sig.m1(), 0), (sig.m2(), sig.m2()))
        .copy_from(&identity(sig.m2()));
    let factor = (cplx(1.0, 0.0) - cplx(0.0, 1.0) / z).powi(k as i32);
    Ok(w * selector * factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbdt::{build_sequence, limits};
    use crate::matcore::DEFAULT_TOL;
    use crate::triples::generate;

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
    fn split_reassemble_roundtrip_exact() {
        let sig = Signature::new(2, 1).unwrap();
        let m = CMatrix::from_fn(3, 3, |i, j| cplx(i as f64 + 0.25, j as f64 - 1.5));
        let blocks = BlockDecomposition::split(&m, sig).unwrap();
        assert_eq!(blocks.reassemble().as_slice(), m.as_slice());
    }

    #[test]
    fn transfer_matches_block_rep_t1() {
        let seq = build_sequence(&fixture_t1(), 12, DEFAULT_TOL).unwrap();
        // z = 1 corresponds to λ = -1.
        let direct = transfer_eval(&seq, 0, cplx(-1.0, 0.0)).unwrap();
        let block = transfer_block_rep(&seq, 0, cplx(1.0, 0.0)).unwrap();
        assert!(frob_norm(&(&direct - &block)) < 1e-12);

        // Hand value of the (1,1) entry: (−17 − 16i)/15.
        assert!((direct[(0, 0)] - cplx(-17.0 / 15.0, -16.0 / 15.0)).norm() < 1e-13);

        for k in [3usize, 10] {
            for z in [cplx(0.5, 0.0), cplx(-0.7, 0.3), cplx(2.0, -1.0)] {
                let w1 = transfer_eval(&seq, k, -z.inv()).unwrap();
                let w2 = transfer_block_rep(&seq, k, z).unwrap();
                assert!(
                    frob_norm(&(&w1 - &w2)) < 1e-10 * frob_norm(&w1).max(1.0),
                    "k={k} z={z}"
                );
            }
        }
    }

    #[test]
    fn transfer_off_diagonal_decays_like_cayley_power() {
        let seq = build_sequence(&fixture_t1(), 12, DEFAULT_TOL).unwrap();
        let w = transfer_block_rep(&seq, 10, cplx(0.5, 0.0)).unwrap();
        let blocks = BlockDecomposition::split(&w, seq.sig()).unwrap();
        // G = 1/3 for this fixture, so the coupling blocks carry 3^{-10}.
        let scale = frob_norm(&w);
        assert!(frob_norm(&blocks.b) <= 1e-4 * scale);
        assert!(frob_norm(&blocks.c) <= 1e-4 * scale);
    }

    #[test]
    fn transfer_tends_to_identity_far_away() {
        let seq = build_sequence(&fixture_t2(), 2, DEFAULT_TOL).unwrap();
        let w = transfer_eval(&seq, 0, cplx(1e8, 3e7)).unwrap();
        assert!(frob_norm(&(&w - identity(2))) < 1e-6);
    }

    #[test]
    fn transfer_skew_scalar_d_block() {
        let seq = build_sequence(&fixture_t2(), 2, DEFAULT_TOL).unwrap();
        let w = transfer_eval(&seq, 0, cplx(-1.0, 0.0)).unwrap();
        // d = 1 − i (4/5)(1 + 2i)^{-1} = (17 − 4i)/25.
        assert!((w[(1, 1)] - cplx(17.0 / 25.0, -4.0 / 25.0)).norm() < 1e-13);
    }

    #[test]
    fn transfer_rejects_pole_proximity() {
        let seq = build_sequence(&fixture_t1(), 2, DEFAULT_TOL).unwrap();
        match transfer_eval(&seq, 0, cplx(0.0, 2.0)) {
            Err(Error::NearPole { .. }) => {}
            other => panic!("expected a pole rejection, got {other:?}"),
        }
    }

    #[test]
    fn skew_block_column_matches_transfer_eval() {
        let t = generate(
            SystemKind::SkewSelfAdjoint,
            3,
            Signature::new(1, 2).unwrap(),
            41,
            5000,
        )
        .unwrap();
        let seq = build_sequence(&t, 12, DEFAULT_TOL).unwrap();
        let sig = seq.sig();
        for k in [0usize, 4, 12] {
            for z in [cplx(1.0, 0.0), cplx(0.5, 0.5), cplx(2.0, -0.4)] {
                let w = transfer_eval(&seq, k, -z).unwrap();
                let full_col = w.columns(sig.m1(), sig.m2()).into_owned();
                let col = transfer_block_column(&seq, k, z).unwrap();
                assert!(
                    frob_norm(&(&full_col - &col)) < 1e-10 * frob_norm(&col).max(1.0),
                    "k={k} z={z}"
                );
            }
        }
    }

    #[test]
    fn skew_block_column_flattens() {
        let seq = build_sequence(&fixture_t2(), 42, DEFAULT_TOL).unwrap();
        let col = transfer_block_column(&seq, 40, cplx(2.0, 0.0)).unwrap();
        let mut target = CMatrix::zeros(2, 1);
        target[(1, 0)] = cplx(1.0, 0.0);
        assert!(frob_norm(&(&col - &target)) < 1e-8);
    }

    #[test]
    fn fundamental_direct_normalization_and_trivial_product() {
        let seq = build_sequence(&fixture_t1(), 4, DEFAULT_TOL).unwrap();
        assert_eq!(
            fundamental_direct(&seq, 0, cplx(0.3, 0.1))
                .unwrap()
                .as_slice(),
            identity(2).as_slice()
        );

        // Trivial potential: C_k ≡ I and W_k(z) = (I + izj)^k.
        let trivial = ParameterTriple::new(
            SystemKind::SelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(1.0, 0.0)),
            scalar(cplx(1.0, 0.0)),
            CMatrix::zeros(1, 2),
        )
        .unwrap();
        let tseq = build_sequence(&trivial, 6, DEFAULT_TOL).unwrap();
        let z = cplx(0.4, -0.2);
        let w5 = fundamental_direct(&tseq, 5, z).unwrap();
        let expected = step_diagonal_power(SystemKind::SelfAdjoint, tseq.sig(), z, 5).unwrap();
        assert!(frob_norm(&(&w5 - &expected)) < 1e-12);
    }

    #[test]
    fn fundamental_closed_matches_direct() {
        let seq1 = build_sequence(&fixture_t1(), 8, DEFAULT_TOL).unwrap();
        for (k, z) in [(3usize, cplx(0.7, 0.1)), (5, cplx(1.0, 0.0))] {
            let direct = fundamental_direct(&seq1, k, z).unwrap();
            let closed = fundamental_closed(&seq1, k, z).unwrap();
            assert!(
                frob_norm(&(&direct - &closed)) <= 1e-10 * frob_norm(&direct).max(1.0),
                "k={k} z={z}"
            );
        }

        let seq2 = build_sequence(&fixture_t2(), 8, DEFAULT_TOL).unwrap();
        let z = cplx(2.0, 3.0);
        let direct = fundamental_direct(&seq2, 5, z).unwrap();
        let closed = fundamental_closed(&seq2, 5, z).unwrap();
        assert!(frob_norm(&(&direct - &closed)) <= 1e-10 * frob_norm(&direct).max(1.0));

        // k = 0 telescopes to the identity.
        let closed0 = fundamental_closed(&seq2, 0, z).unwrap();
        assert!(frob_norm(&(&closed0 - identity(2))) < 1e-12);
    }

    #[test]
    fn chi_functions_at_zero_are_identity() {
        let t = fixture_t1();
        let lim = limits(&t, 1e-9, 80).unwrap();
        let chi = chi_functions(&t, &lim, Complex64::default()).unwrap();
        assert!(frob_norm(&(&chi.chi1 - identity(1))) < 1e-14);
        assert!(frob_norm(&(&chi.chi2 - identity(1))) < 1e-14);
    }

    #[test]
    fn chi_functions_match_flattened_transfer() {
        let t = fixture_t1();
        let lim = limits(&t, 1e-10, 90).unwrap();
        let seq = build_sequence(&t, 42, DEFAULT_TOL).unwrap();
        let z = cplx(1.0, 0.0);
        let chi = chi_functions(&t, &lim, z).unwrap();
        let w = transfer_block_rep(&seq, 40, z).unwrap();
        let blocks = BlockDecomposition::split(&w, seq.sig()).unwrap();
        assert!(frob_norm(&(&blocks.a - &chi.chi1)) < 1e-8);
        assert!(frob_norm(&(&blocks.d - &chi.chi2)) < 1e-8);
    }

    #[test]
    fn chi2_trivial_when_theta2_vanishes() {
        let t = ParameterTriple::new(
            SystemKind::SelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(0.0, 2.0)),
            scalar(cplx(1.0, 0.0)),
            CMatrix::from_row_slice(1, 2, &[cplx(2.0, 0.0), cplx(0.0, 0.0)]),
        )
        .unwrap();
        let lim = limits(&t, 1e-9, 60).unwrap();
        let chi = chi_functions(&t, &lim, cplx(0.8, 0.1)).unwrap();
        assert!(frob_norm(&(&chi.chi2 - identity(1))) < 1e-12);
    }

    #[test]
    fn jost_trivial_potential_is_exact_power() {
        let trivial = ParameterTriple::new(
            SystemKind::SelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(1.0, 0.0)),
            scalar(cplx(1.0, 0.0)),
            CMatrix::zeros(1, 2),
        )
        .unwrap();
        let seq = build_sequence(&trivial, 10, DEFAULT_TOL).unwrap();
        let lim = limits(&trivial, 1e-10, 30).unwrap();
        let f = jost_closed(&seq, &lim, 7, 0.9).unwrap();
        let expected =
            step_diagonal_power(SystemKind::SelfAdjoint, seq.sig(), cplx(0.9, 0.0), 7).unwrap();
        assert!(frob_norm(&(&f - &expected)) < 1e-12);
    }

    #[test]
    fn jost_satisfies_recursion_and_asymptotics() {
        let t = fixture_t1();
        let seq = build_sequence(&t, 32, DEFAULT_TOL).unwrap();
        let lim = limits(&t, 1e-10, 90).unwrap();
        let z = 1.0;
        let zc = cplx(z, 0.0);

        for k in 0..20 {
            let f_k = jost_closed(&seq, &lim, k, z).unwrap();
            let f_k1 = jost_closed(&seq, &lim, k + 1, z).unwrap();
            let step = identity(2) + seq.sig().j_matrix() * seq.c(k) * (cplx(0.0, 1.0) * zc);
            let res = frob_norm(&(&f_k1 - step * &f_k));
            assert!(res < 1e-10 * frob_norm(&f_k1).max(1.0), "k={k}: {res:.3e}");
        }

        let f30 = jost_closed(&seq, &lim, 30, z).unwrap();
        let normalizer = step_diagonal_power(SystemKind::SelfAdjoint, seq.sig(), zc, -30).unwrap();
        assert!(frob_norm(&(f30 * normalizer - identity(2))) <= 1e-6);
    }

    #[test]
    fn y_solution_recursion_and_asymptotics() {
        let t = fixture_t2();
        let seq = build_sequence(&t, 42, DEFAULT_TOL).unwrap();

        let z = cplx(0.0, 3.0);
        for k in [0usize, 1, 2, 5] {
            let y_k = y_closed(&seq, k, z).unwrap();
            let y_k1 = y_closed(&seq, k + 1, z).unwrap();
            let step = identity(2) + seq.c(k) * (cplx(0.0, 1.0) / z);
            assert!(
                frob_norm(&(&y_k1 - step * &y_k)) < 1e-10 * frob_norm(&y_k1).max(1.0),
                "k={k}"
            );
        }

        let z = cplx(2.0, 0.0);
        let y40 = y_closed(&seq, 40, z).unwrap();
        let back = (cplx(1.0, 0.0) - cplx(0.0, 1.0) / z).powi(-40);
        let mut target = CMatrix::zeros(2, 1);
        target[(1, 0)] = cplx(1.0, 0.0);
        assert!(frob_norm(&(y40 * back - target)) <= 1e-6);
    }

    #[test]
    fn y_trivial_direction_is_exact() {
        // θ₂ = 0 makes the transfer block column exactly [0; I].
        let t = ParameterTriple::new(
            SystemKind::SkewSelfAdjoint,
            Signature::new(1, 1).unwrap(),
            scalar(cplx(0.0, 2.0)),
            scalar(cplx(1.0, 0.0)),
            CMatrix::from_row_slice(1, 2, &[cplx(2.0, 0.0), cplx(0.0, 0.0)]),
        )
        .unwrap();
        let seq = build_sequence(&t, 6, DEFAULT_TOL).unwrap();
        let z = cplx(1.5, 0.2);
        let y3 = y_closed(&seq, 3, z).unwrap();
        let factor = (cplx(1.0, 0.0) - cplx(0.0, 1.0) / z).powi(3);
        let mut expected = CMatrix::zeros(2, 1);
        expected[(1, 0)] = factor;
        assert!(frob_norm(&(&y3 - &expected)) < 1e-12);
    }

    #[test]
    fn transfer_j_unitary_on_real_axis() {
        let seq = build_sequence(&fixture_t1(), 20, DEFAULT_TOL).unwrap();
        let j = seq.sig().j_matrix();
        for k in [0usize, 5, 20] {
            for lambda in [-3.0, -0.9, 0.7, 2.4] {
                let w = transfer_eval(&seq, k, cplx(lambda, 0.0)).unwrap();
                let dev = frob_norm(&(w.adjoint() * &j * &w - &j));
                assert!(dev < 1e-9, "k={k} λ={lambda}: {dev:.3e}");
            }
        }
    }
}

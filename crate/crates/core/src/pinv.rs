//! Generalized inverses: Moore-Penrose, the `{1}`-inverse family, the
//! constraint-fitting operator `X B•` and the constrained pseudoinverse
//!
//! ```text
//! R‡ = R† (I - B B•) + X B•
//! ```
//!
//! where the columns of `X` are known solutions, the columns of `B` the
//! matching right-hand sides and `B•` the Moore-Penrose inverse of `B`.

use crate::error::{Error, Result};
use crate::numerics::{frobenius, matmul, svd, truncated_rank, ComplexMatrix, SvdResult};

/// Smallest admissible `sigma_min / sigma_max` for the constraint right-hand sides.
pub const CONSTRAINT_INDEPENDENCE_TOL: f64 = 1e-8;

/// Relative mismatch `||R X - B|| / ||B||` above which `Reject` refuses constraints.
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// Moore-Penrose inverse by truncated SVD.
pub fn mpp(a: &ComplexMatrix, tol_rel: f64) -> Result<ComplexMatrix> {
    check_tol(tol_rel)?;
    Ok(mpp_from_svd(&svd(a)?, tol_rel))
}

/// `V_k diag(1/s) U_k*` from an existing factorization.
pub fn mpp_from_svd(dec: &SvdResult, tol_rel: f64) -> ComplexMatrix {
    let k = truncated_rank(&dec.s, tol_rel);
    let n = dec.v.rows();
    let m = dec.u.rows();
    if k == 0 {
        return ComplexMatrix::zeros(n, m);
    }
    let vs = ComplexMatrix::from_fn(n, k, |i, j| dec.v.get(i, j) / dec.s[j]);
    let uk = dec.u.as_faer().subcols(0, k);
    ComplexMatrix::from_faer(vs.as_faer() * uk.adjoint())
}

fn check_tol(tol_rel: f64) -> Result<()> {
    if !(tol_rel > 0.0 && tol_rel < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relative truncation tolerance must lie in (0, 1), got {tol_rel}"
        )));
    }
    Ok(())
}

/// Relative Frobenius residuals of the four Penrose conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpResiduals {
    /// `A Ap A = A`
    pub r1: f64,
    /// `Ap A Ap = Ap`
    pub r2: f64,
    /// `(Ap A)* = Ap A`
    pub r3: f64,
    /// `(A Ap)* = A Ap`
    pub r4: f64,
}

impl MpResiduals {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3).max(self.r4)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.r1, self.r2, self.r3, self.r4]
    }
}

fn relative(residual: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        residual / reference
    } else {
        residual
    }
}

pub fn mp_residuals(a: &ComplexMatrix, ap: &ComplexMatrix) -> Result<MpResiduals> {
    if ap.rows() != a.cols() || ap.cols() != a.rows() {
        return Err(Error::DimensionMismatch {
            op: "mp_residuals",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: ap.rows(),
            right_cols: ap.cols(),
        });
    }
    let ap_a = matmul(ap, a)?;
    let a_ap = matmul(a, ap)?;
    let a_ap_a = matmul(&a_ap, a)?;
    let ap_a_ap = matmul(&ap_a, ap)?;

    let r1 = relative(frobenius(&a_ap_a.sub(a)?), frobenius(a));
    let r2 = relative(frobenius(&ap_a_ap.sub(ap)?), frobenius(ap));
    let r3 = relative(frobenius(&ap_a.adjoint().sub(&ap_a)?), frobenius(&ap_a));
    let r4 = relative(frobenius(&a_ap.adjoint().sub(&a_ap)?), frobenius(&a_ap));
    Ok(MpResiduals { r1, r2, r3, r4 })
}

/// `{1}`-inverse `A⁺ + (I - A⁺A) W + V (I - A A⁺)`.
///
/// `W` and `V` are both `n x m` for an `m x n` matrix `A`. With `W = V = 0`
/// the result is exactly `mpp(A, tol_rel)`.
pub fn one_inverse(
    a: &ComplexMatrix,
    tol_rel: f64,
    w: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    check_tol(tol_rel)?;
    let ap = mpp(a, tol_rel)?;
    one_inverse_from_mpp(a, &ap, w, v)
}

/// Same as [`one_inverse`] with a precomputed Moore-Penrose inverse.
pub fn one_inverse_from_mpp(
    a: &ComplexMatrix,
    ap: &ComplexMatrix,
    w: &ComplexMatrix,
    v: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let (m, n) = a.shape();
    for (op, p) in [("one_inverse (W)", w), ("one_inverse (V)", v)] {
        if p.shape() != (n, m) {
            return Err(Error::DimensionMismatch {
                op,
                left_rows: m,
                left_cols: n,
                right_rows: p.rows(),
                right_cols: p.cols(),
            });
        }
    }
    // (I - A⁺A) W = W - A⁺ (A W);  V (I - A A⁺) = V - (V A) A⁺
    let w_part = w.sub(&matmul(ap, &matmul(a, w)?)?)?;
    let v_part = v.sub(&matmul(&matmul(v, a)?, ap)?)?;
    ap.add(&w_part)?.add(&v_part)
}

/// How to treat constraint pairs whose right-hand sides are not `R X`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyPolicy {
    /// Fail when `||R X - B|| / ||B||` exceeds [`CONSISTENCY_TOL`].
    #[default]
    Reject,
    /// Replace `B` by `R X`.
    Project,
}

/// Paired known solutions (`xtil`, `n x p`) and right-hand sides (`btil`, `m x p`).
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    xtil: ComplexMatrix,
    btil: ComplexMatrix,
}

impl ConstraintSet {
    /// Validates column counts and the linear independence of the right-hand sides.
    pub fn new(xtil: ComplexMatrix, btil: ComplexMatrix) -> Result<Self> {
        if xtil.cols() != btil.cols() {
            return Err(Error::DimensionMismatch {
                op: "ConstraintSet",
                left_rows: xtil.rows(),
                left_cols: xtil.cols(),
                right_rows: btil.rows(),
                right_cols: btil.cols(),
            });
        }
        let p = btil.cols();
        if p > 0 {
            if p > btil.rows() {
                return Err(Error::RankDeficientConstraints { ratio: 0.0 });
            }
            let s = svd(&btil)?.s;
            let ratio = if s[0] > 0.0 { s[p - 1] / s[0] } else { 0.0 };
            if !(ratio >= CONSTRAINT_INDEPENDENCE_TOL) {
                return Err(Error::RankDeficientConstraints { ratio });
            }
        }
        Ok(Self { xtil, btil })
    }

    /// Constraint set with no pairs for an `m x n` operator.
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            xtil: ComplexMatrix::zeros(n, 0),
            btil: ComplexMatrix::zeros(m, 0),
        }
    }

    /// Builds the set against an operator, applying the consistency policy.
    pub fn for_operator(
        r: &ComplexMatrix,
        xtil: ComplexMatrix,
        btil: Option<ComplexMatrix>,
        policy: ConsistencyPolicy,
    ) -> Result<Self> {
        let rx = matmul(r, &xtil)?;
        let btil = match (btil, policy) {
            (None, _) | (Some(_), ConsistencyPolicy::Project) => rx,
            (Some(b), ConsistencyPolicy::Reject) => {
                let residual = relative(frobenius(&rx.sub(&b)?), frobenius(&b));
                if residual > CONSISTENCY_TOL {
                    return Err(Error::InconsistentConstraints { residual });
                }
                b
            }
        };
        Self::new(xtil, btil)
    }

    pub fn len(&self) -> usize {
        self.xtil.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn xtil(&self) -> &ComplexMatrix {
        &self.xtil
    }

    pub fn btil(&self) -> &ComplexMatrix {
        &self.btil
    }
}

/// `R‡ = R† (I - B B•) + X B•` with `B• = mpp(B, btil_pinv_tol)`.
///
/// An empty constraint set returns `rdag` unchanged.
pub fn constrained_pinv(
    rdag: &ComplexMatrix,
    constraints: &ConstraintSet,
    btil_pinv_tol: f64,
) -> Result<ComplexMatrix> {
    let (n, m) = rdag.shape();
    let (xt, bt) = (constraints.xtil(), constraints.btil());
    if xt.rows() != n || bt.rows() != m {
        return Err(Error::DimensionMismatch {
            op: "constrained_pinv",
            left_rows: n,
            left_cols: m,
            right_rows: xt.rows(),
            right_cols: bt.rows(),
        });
    }
    if constraints.is_empty() {
        return Ok(rdag.clone());
    }
    let bt_pinv = mpp(bt, btil_pinv_tol)?;
    // R†(I - B B•) + X B• = R† + (X - R† B) B•
    let correction = xt.sub(&matmul(rdag, bt)?)?;
    rdag.add(&matmul(&correction, &bt_pinv)?)
}

/// `X B•`: the fit restricted to the span of the known solutions.
pub fn constraint_fit_pinv(constraints: &ConstraintSet, tol: f64) -> Result<ComplexMatrix> {
    if constraints.is_empty() {
        return Err(Error::EmptyConstraints);
    }
    matmul(constraints.xtil(), &mpp(constraints.btil(), tol)?)
}

//! Fidelities, divergences and distances between positive definite matrices,
//! and the weighted geometric mean.
//!
//! Conventions: `fidelity(A, B, t)` is `tr (A^s B A^s)^t` with
//! `s = (1-t)/2t`, and `sandwiched_divergence(A, B, t)` is `D_t(B || A)`,
//! i.e. `log F_t(A, B) / (t - 1)`.

use serde::{Deserialize, Serialize};

use crate::linalg::{graded_congruence, GradedCongruence, HermitianMatrix, SpdMatrix};
use crate::{Error, Result, T_MAX, T_MIN};

/// What a [`DivergenceValue`] measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Fidelity,
    Bures,
    Sandwiched,
    RenyiClassic,
    Umegaki,
    Thompson,
    MaxRelative,
    Riemannian,
}

impl DivergenceKind {
    /// Whether the quantity depends on a parameter `t`.
    pub fn takes_t(self) -> bool {
        matches!(
            self,
            DivergenceKind::Fidelity | DivergenceKind::Sandwiched | DivergenceKind::RenyiClassic
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    pub kind: DivergenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub value: f64,
}

/// Evaluates `kind` on the pair `(A, B)`.
///
/// The relative entropy is reported as `D(B || A)`, matching the
/// sandwiched divergence; `MaxRelative` is `D_max(A || B)`.
pub fn evaluate(
    kind: DivergenceKind,
    a: &SpdMatrix,
    b: &SpdMatrix,
    t: Option<f64>,
) -> Result<DivergenceValue> {
    let need_t = || t.ok_or_else(|| Error::ParameterError(format!("{kind:?} needs a value of t")));
    let value = match kind {
        DivergenceKind::Fidelity => fidelity(a, b, need_t()?)?,
        DivergenceKind::Bures => bures_distance(a, b)?,
        DivergenceKind::Sandwiched => sandwiched_divergence(a, b, need_t()?)?,
        DivergenceKind::RenyiClassic => renyi_classic(a, b, need_t()?)?,
        DivergenceKind::Umegaki => umegaki_relative_entropy(b, a)?,
        DivergenceKind::Thompson => thompson_metric(a, b)?,
        DivergenceKind::MaxRelative => max_relative_entropy(a, b)?,
        DivergenceKind::Riemannian => riemannian_distance(a, b)?,
    };
    Ok(DivergenceValue {
        kind,
        t: if kind.takes_t() { t } else { None },
        value,
    })
}

pub(crate) fn check_dims(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

/// `t` in `(T_MIN, 1 - T_MIN)`.
pub fn check_t_unit(t: f64) -> Result<()> {
    if !(t > T_MIN && t < 1.0 - T_MIN) {
        return Err(Error::ParameterError(format!(
            "t = {t} must lie in ({T_MIN}, {})",
            1.0 - T_MIN
        )));
    }
    Ok(())
}

fn check_t_divergence(t: f64) -> Result<()> {
    if t.is_finite() && (t - 1.0).abs() <= T_MIN {
        return Err(Error::ParameterError(format!(
            "t = {t} is too close to 1; use umegaki_relative_entropy instead"
        )));
    }
    if !(t > T_MIN && t <= T_MAX) {
        return Err(Error::ParameterError(format!(
            "t = {t} must lie in ({T_MIN}, {}) or ({}, {T_MAX}]",
            1.0 - T_MIN,
            1.0 + T_MIN
        )));
    }
    Ok(())
}

/// `log sum exp(x_i)` over the finite entries; `-inf` if there are none.
fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `A^s (B/sb) A^s`, `s = (1-t)/2t`, `sb = λ_max(B)`, and `ln sb`.
pub(crate) fn graded_sandwich(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<(GradedCongruence, f64)> {
    check_dims(a, b)?;
    let sb = b.max_eig();
    let s = (1.0 - t) / (2.0 * t);
    Ok((graded_congruence(a, s, &b.scale(1.0 / sb))?, sb.ln()))
}

/// `ln λ((A^s B A^s)^t)`, descending.
pub(crate) fn sandwich_log_eigenvalues(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<Vec<f64>> {
    let (g, ln_sb) = graded_sandwich(a, b, t)?;
    let logs = g.log_eigenvalues().map_err(|_| lost_positivity(t))?;
    Ok(logs.into_iter().map(|l| t * (l + ln_sb)).collect())
}

/// `(A^s B A^s)^t`, `s = (1-t)/2t`.
pub(crate) fn sandwich_power(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<HermitianMatrix> {
    let (g, ln_sb) = graded_sandwich(a, b, t)?;
    g.map_log(|l| (t * (l + ln_sb)).exp()).map_err(|_| lost_positivity(t))
}

fn lost_positivity(t: f64) -> Error {
    Error::NumericalError(format!("sandwiched product lost positivity at t = {t}"))
}

/// `log F_t(A, B)` for any `t > 0`.
pub(crate) fn log_fidelity_unchecked(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    Ok(log_sum_exp(sandwich_log_eigenvalues(a, b, t)?))
}

/// Summing the eigenvalues directly saves the rounding of a log round trip.
pub(crate) fn fidelity_unchecked(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    Ok(sandwich_log_eigenvalues(a, b, t)?.into_iter().map(f64::exp).sum())
}

/// `F_t(A, B) = tr (A^s B A^s)^t`, `s = (1-t)/2t`.
///
/// The eigenvalues of the sandwich are computed in log scale, so the value
/// stays finite where the intermediate powers of `A` would overflow, and each
/// keeps relative accuracy, so small `t` is safe.
pub fn fidelity(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    check_t_unit(t)?;
    fidelity_unchecked(a, b, t)
}

/// `[tr(A+B)/2 - F_{1/2}(A,B)]^{1/2}`.
///
/// Evaluated as `min_U ||A^{1/2} U - B^{1/2}||_F / sqrt 2`, the minimizing
/// unitary being the polar factor of `A^{1/2} B^{1/2}`. This form has no
/// cancellation, so `d(A, A)` comes out at rounding level instead of `sqrt(eps)`.
pub fn bures_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let ra = a.sqrt().into_hermitian().into_matrix();
    let rb = b.sqrt().into_hermitian().into_matrix();
    let svd = (&ra * &rb).svd(true, true);
    let (w, v_t) = match (svd.u, svd.v_t) {
        (Some(w), Some(v_t)) => (w, v_t),
        _ => return Err(Error::NumericalError("polar factor unavailable".into())),
    };
    let diff = ra * (w * v_t) - rb;
    let d = diff.norm() / std::f64::consts::SQRT_2;
    if !d.is_finite() {
        return Err(Error::NumericalError("Bures distance is not finite".into()));
    }
    Ok(d)
}

/// `D_t(B || A) = log F_t(A, B) / (t - 1)`.
pub fn sandwiched_divergence(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    check_t_divergence(t)?;
    sandwiched_divergence_unchecked(a, b, t)
}

/// Same as [`sandwiched_divergence`] for any `t > 0, t != 1`.
pub(crate) fn sandwiched_divergence_unchecked(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    Ok(log_fidelity_unchecked(a, b, t)? / (t - 1.0))
}

/// `|<u_i, v_j>|^2` for the eigenvectors of `A` (rows) and `B` (columns).
fn overlaps(a: &SpdMatrix, b: &SpdMatrix) -> Vec<Vec<f64>> {
    let o = a.decomp().eigenvectors.adjoint() * &b.decomp().eigenvectors;
    (0..o.nrows())
        .map(|i| (0..o.ncols()).map(|j| o[(i, j)].norm_sqr()).collect())
        .collect()
}

/// `log tr(A^{1-t} B^t) / (t - 1)`.
pub fn renyi_classic(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    check_t_divergence(t)?;
    check_dims(a, b)?;
    let w = overlaps(a, b);
    let (la, lb) = (&a.decomp().eigenvalues, &b.decomp().eigenvalues);
    let terms = (0..la.len()).flat_map(|i| {
        let w = &w;
        (0..lb.len()).map(move |j| (1.0 - t) * la[i].ln() + t * lb[j].ln() + w[i][j].ln())
    });
    Ok(log_sum_exp(terms) / (t - 1.0))
}

/// `D(B || A) = tr[B (log B - log A)] / tr B`.
pub fn umegaki_relative_entropy(b: &SpdMatrix, a: &SpdMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let w = overlaps(a, b);
    let (la, lb) = (&a.decomp().eigenvalues, &b.decomp().eigenvalues);
    let mut total = 0.0;
    for (j, &bj) in lb.iter().enumerate() {
        let cross: f64 = la.iter().enumerate().map(|(i, &ai)| w[i][j] * ai.ln()).sum();
        total += bj * (bj.ln() - cross);
    }
    Ok(total / b.trace())
}

/// Spectrum of `A^{-1/2} B A^{-1/2}`, descending.
pub(crate) fn relative_spectrum(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    check_dims(a, b)?;
    let ainv_half = a.decomp().map(|l| l.powf(-0.5));
    b.congruence(&ainv_half).eigenvalues()
}

/// `max{log λ1(A B^-1), log λ1(B A^-1)}`.
pub fn thompson_metric(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let r = relative_spectrum(a, b)?;
    let (hi, lo) = (r[0], r[r.len() - 1]);
    if lo <= 0.0 {
        return Err(Error::NumericalError("relative spectrum is not positive".into()));
    }
    Ok(hi.ln().max(-lo.ln()))
}

/// `D_max(A || B) = log λ1(A B^-1)`.
pub fn max_relative_entropy(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let r = relative_spectrum(b, a)?;
    Ok(r[0].ln())
}

/// `A #_t B = A^{1/2} (A^{-1/2} B A^{-1/2})^t A^{1/2}`, for any real `t`.
pub fn geometric_mean(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_dims(a, b)?;
    if !t.is_finite() {
        return Err(Error::ParameterError(format!("t = {t} is not finite")));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    let ainv_half = a.decomp().map(|l| l.powf(-0.5));
    let c = b.congruence(&ainv_half).decompose()?;
    if c.min() <= 0.0 {
        return Err(Error::NumericalError("relative spectrum is not positive".into()));
    }
    let ct = c.map(|l| l.powf(t));
    SpdMatrix::new(ct.congruence(&a.sqrt()))
}

/// `||log A^{-1/2} B A^{-1/2}||_2`.
pub fn riemannian_distance(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    let r = relative_spectrum(a, b)?;
    if r[r.len() - 1] <= 0.0 {
        return Err(Error::NumericalError("relative spectrum is not positive".into()));
    }
    Ok(r.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

//! Derivatives of `f(X) = F_t(A, X) = tr (P X P)^t`, `P = A^{(1-t)/2t}`.
//!
//! With `M = P X P = V diag(d) V*` and `W = P V`:
//!
//! - gradient: `∇f(X) = t P M^{t-1} P = t (A^{(1-t)/t} #_{1-t} X^{-1})`
//! - Hessian action: `-∇²f(X)(Y) = t W [L ∘ (W* Y W)] W*`, where `L` is the
//!   Loewner matrix of `-x^{t-1}` at `d`, i.e. `L_ij = (d_i^{t-1} - d_j^{t-1}) / (d_j - d_i)`
//!   and `L_ii = (1-t) d_i^{t-2}`.
//!
//! Both are evaluated after scaling `A` to unit spectral radius; the scale
//! factor `λ_max(A)^{1-t}` is reapplied at the end.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::entropy::{check_dims, check_t_unit, fidelity, fidelity_unchecked};
use crate::linalg::{
    check_box, hermitian_basis, random_hermitian, seeded_rng, CMatrix, HermitianMatrix, ScalarFn,
    SpdMatrix, C64,
};
use crate::{Error, Result, T_MAX, T_MIN};

/// Strong-convexity and smoothness constants of `-f` on `[αI, βI]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityConstants {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k1: f64,
    pub k2: f64,
    pub cond_bound: f64,
}

/// `k1 = t(1-t) α^{1-t} β^{t-2}`, `k2 = t(1-t) β^{1-t} α^{t-2}`,
/// `cond_bound = (β/α)^{3-2t}`.
pub fn convexity_constants(t: f64, alpha: f64, beta: f64) -> Result<ConvexityConstants> {
    check_t_unit(t)?;
    check_box(alpha, beta)?;
    let c = t * (1.0 - t);
    Ok(ConvexityConstants {
        t,
        alpha,
        beta,
        k1: c * alpha.powf(1.0 - t) * beta.powf(t - 2.0),
        k2: c * beta.powf(1.0 - t) * alpha.powf(t - 2.0),
        cond_bound: (beta / alpha).powf(3.0 - 2.0 * t),
    })
}

/// `t(1-t)(2-t) β^{1-t} α^{t-3}`.
pub fn third_derivative_bound(t: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_t_unit(t)?;
    check_box(alpha, beta)?;
    Ok(t * (1.0 - t) * (2.0 - t) * beta.powf(1.0 - t) * alpha.powf(t - 3.0))
}

/// Lower bound `t(1-t) β^{t-2} λ_min(A)^{1-t}` on `-∇²f(X)` for `X <= βI`.
pub fn sharp_lower_bound(t: f64, beta: f64, a: &SpdMatrix) -> Result<f64> {
    check_t_unit(t)?;
    check_box(a.min_eig(), beta)?;
    Ok(t * (1.0 - t) * beta.powf(t - 2.0) * a.min_eig().powf(1.0 - t))
}

/// `f(X) = F_t(A, X)`.
pub fn objective_f(a: &SpdMatrix, x: &SpdMatrix, t: f64) -> Result<f64> {
    fidelity(a, x, t)
}

/// `P / λ_max(A)^s` and the factor `λ_max(A)^{1-t}`.
fn scaled_p(a: &SpdMatrix, t: f64) -> (HermitianMatrix, f64) {
    let sa = a.max_eig();
    let s = (1.0 - t) / (2.0 * t);
    (a.decomp().map(|l| (l / sa).powf(s)), sa.powf(1.0 - t))
}

/// `∇f(X) = t P (P X P)^{t-1} P`.
pub fn gradient_f(a: &SpdMatrix, x: &SpdMatrix, t: f64) -> Result<HermitianMatrix> {
    check_t_unit(t)?;
    check_dims(a, x)?;
    let (p, factor) = scaled_p(a, t);
    let m = x.congruence(&p).decompose()?;
    if m.min() <= 0.0 {
        return Err(Error::NumericalError("P X P lost positivity".into()));
    }
    let mt = m.map(|d| d.powf(t - 1.0));
    Ok(mt.congruence(&p).scale(t * factor))
}

/// `-∇²f(X)` as a linear map on Hermitian matrices.
#[derive(Clone, Debug)]
pub struct HessianOperator {
    t: f64,
    factor: f64,
    w: CMatrix,
    loewner: DMatrix<f64>,
    /// Spectral bounds of `A` and `X`, used to shift the power iteration.
    alpha: f64,
    beta: f64,
}

impl HessianOperator {
    pub fn new(a: &SpdMatrix, x: &SpdMatrix, t: f64) -> Result<Self> {
        check_t_unit(t)?;
        check_dims(a, x)?;
        let (p, factor) = scaled_p(a, t);
        let m = x.congruence(&p).decompose()?;
        if m.min() <= 0.0 {
            return Err(Error::NumericalError("P X P lost positivity".into()));
        }
        let f = ScalarFn::Power(t - 1.0);
        let d = &m.eigenvalues;
        let n = d.len();
        let loewner = DMatrix::from_fn(n, n, |i, j| -f.divided_difference(d[i], d[j]));
        let w = p.matrix() * &m.eigenvectors;
        Ok(Self {
            t,
            factor,
            w,
            loewner,
            alpha: a.min_eig().min(x.min_eig()),
            beta: a.max_eig().max(x.max_eig()),
        })
    }

    pub fn dim(&self) -> usize {
        self.loewner.nrows()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `-∇²f(X)(Y)`.
    pub fn apply(&self, y: &HermitianMatrix) -> Result<HermitianMatrix> {
        if y.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), y.dim()));
        }
        let mut z = self.w.adjoint() * y.matrix() * &self.w;
        z.zip_apply(&self.loewner, |zij, l| *zij *= l);
        let out = &self.w * z * self.w.adjoint();
        Ok(HermitianMatrix::symmetrized(out * C64::new(self.t * self.factor, 0.0)))
    }

    /// Matrix of the operator in the orthonormal basis of [`hermitian_basis`]
    /// (real symmetric, `n² x n²`).
    pub fn operator_matrix(&self) -> DMatrix<f64> {
        let basis = hermitian_basis(self.dim());
        let images: Vec<HermitianMatrix> = basis
            .iter()
            .map(|e| self.apply(e).expect("basis has matching dimension"))
            .collect();
        let k = basis.len();
        let g = DMatrix::from_fn(k, k, |i, j| basis[i].inner(&images[j]));
        (&g + g.transpose()) * 0.5
    }

    /// Smallest and largest eigenvalue of the operator.
    ///
    /// Exact (full `n² x n²` decomposition) for `n <= 8`, power iteration beyond.
    pub fn extreme_eigs(&self) -> (f64, f64) {
        if self.dim() <= 8 {
            self.extreme_eigs_dense()
        } else {
            self.extreme_eigs_power(1e-12, 20_000)
        }
    }

    pub(crate) fn extreme_eigs_dense(&self) -> (f64, f64) {
        let eig = SymmetricEigen::new(self.operator_matrix());
        let lo = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    pub(crate) fn extreme_eigs_power(&self, tol: f64, max_iters: usize) -> (f64, f64) {
        let t = self.t;
        let upper = t * (1.0 - t) * self.beta.powf(1.0 - t) * self.alpha.powf(t - 2.0);
        let sigma = 1.1 * upper;
        let hi = self.power_iteration(0.0, tol, max_iters);
        let lo = sigma - self.power_iteration(sigma, tol, max_iters);
        (lo, hi)
    }

    /// Dominant eigenvalue of the operator for `shift = 0`, of `shift I - H` otherwise.
    fn power_iteration(&self, shift: f64, tol: f64, max_iters: usize) -> f64 {
        let n = self.dim();
        let mut rng = seeded_rng(0x5eed ^ n as u64);
        let mut y = random_hermitian(n, 1.0, &mut rng);
        y = y.scale(1.0 / y.inner(&y).sqrt());
        let mut rayleigh = 0.0;
        for _ in 0..max_iters {
            let hy = self.apply(&y).expect("dimension checked");
            let z = if shift == 0.0 { hy } else { &y.scale(shift) - &hy };
            let next = y.inner(&z);
            let norm = z.inner(&z).sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            y = z.scale(1.0 / norm);
            if (next - rayleigh).abs() <= tol * next.abs() {
                return next;
            }
            rayleigh = next;
        }
        rayleigh
    }
}

pub fn hessian_apply(op: &HessianOperator, y: &HermitianMatrix) -> Result<HermitianMatrix> {
    op.apply(y)
}

pub fn hessian_extreme_eigs(op: &HessianOperator) -> (f64, f64) {
    op.extreme_eigs()
}

/// Bregman distance of `g = -f`: `g(Y) - g(X) - <∇g(X), Y - X>`.
pub fn bregman(a: &SpdMatrix, t: f64, y: &SpdMatrix, x: &SpdMatrix) -> Result<f64> {
    check_t_unit(t)?;
    check_dims(a, x)?;
    check_dims(a, y)?;
    let fy = fidelity_unchecked(a, y, t)?;
    let fx = fidelity_unchecked(a, x, t)?;
    let g = gradient_f(a, x, t)?;
    Ok(fx - fy + g.inner(&(y.as_hermitian() - x.as_hermitian())))
}

/// `d/dt F_t(A, B) = tr[φ^t (log φ - (1/t) log A)]`, `φ = A^{(1-t)/2t} B A^{(1-t)/2t}`.
pub fn fidelity_t_derivative(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<f64> {
    if !(t > T_MIN && t <= T_MAX) {
        return Err(Error::ParameterError(format!(
            "t = {t} must lie in ({T_MIN}, {T_MAX}]"
        )));
    }
    check_dims(a, b)?;
    let sa = a.max_eig();
    let s = (1.0 - t) / (2.0 * t);
    let p = a.decomp().map(|l| (l / sa).powf(s));
    let phi = b.congruence(&p).decompose()?;
    if phi.min() <= 0.0 {
        return Err(Error::NumericalError("sandwich lost positivity".into()));
    }
    // log A = log(A / sa) + log(sa) I; the constant parts combine to -log(sa)
    let log_a = a.decomp().map(|l| (l / sa).ln());
    let v = &phi.eigenvectors;
    let diag = v.adjoint() * log_a.matrix() * v;
    let total: f64 = phi
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &mu)| mu.powf(t) * (mu.ln() - sa.ln() - diag[(i, i)].re / t))
        .sum();
    Ok(sa.powf(1.0 - t) * total)
}

//! Weighted barycenter for the sandwiched quasi-relative entropy:
//!
//! `min_X φ_t(X) = Σ w_j [tr((1-t)A_j + tX) - F_t(A_j, X)]`
//!
//! solved by projected gradient descent on the spectral box `[αI, βI]`
//! (linear rate `q = max{|1-ηα*|, |1-ηβ*|}`), with the fixed-point
//! iteration `X <- Σ w_j (X^{1/2} A_j^{(1-t)/t} X^{1/2})^t` as an independent
//! cross-check. All matrix norms here are Frobenius norms.

use serde::{Deserialize, Serialize, Serializer};

use crate::calculus::{convexity_constants, gradient_f};
use crate::entropy::{check_t_unit, fidelity_unchecked};
use crate::linalg::{check_box, project_box, HermitianMatrix, MatrixJson, NormKind, SpdMatrix};
use crate::{Error, Result};

/// Iterations stored one by one before the history switches to every 10th.
pub const HISTORY_FULL: usize = 10_000;
pub const HISTORY_STRIDE: usize = 10;

pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Consecutive residual increases after which the fixed-point iteration gives up.
pub const FP_DIVERGENCE_STEPS: usize = 10;

#[derive(Clone, Debug)]
pub struct BarycenterProblem {
    matrices: Vec<SpdMatrix>,
    weights: Vec<f64>,
    t: f64,
    alpha: f64,
    beta: f64,
    /// `(A_j / λ_max(A_j))^{(1-t)/t}` and `λ_max(A_j)^{1-t}`.
    fp_terms: Vec<(SpdMatrix, f64)>,
}

/// On-disk problem description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemJson {
    pub t: f64,
    pub weights: Vec<f64>,
    pub matrices: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl BarycenterProblem {
    /// Validates the data and normalizes the weights to sum 1.
    ///
    /// `alpha` and `beta` default to the smallest and largest eigenvalue over
    /// all `A_j`; given values must enclose every spectrum up to `1e-10 β`.
    pub fn new(
        matrices: Vec<SpdMatrix>,
        weights: Vec<f64>,
        t: f64,
        alpha: Option<f64>,
        beta: Option<f64>,
    ) -> Result<Self> {
        check_t_unit(t)?;
        if matrices.is_empty() {
            return Err(Error::InvalidInput("problem has no matrices".into()));
        }
        if weights.len() != matrices.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} matrices",
                weights.len(),
                matrices.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive and finite".into()));
        }
        let n = matrices[0].dim();
        if let Some(m) = matrices.iter().find(|m| m.dim() != n) {
            return Err(Error::DimensionMismatch(n, m.dim()));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let lo = matrices.iter().map(|m| m.min_eig()).fold(f64::INFINITY, f64::min);
        let hi = matrices.iter().map(|m| m.max_eig()).fold(0.0, f64::max);
        let alpha = alpha.unwrap_or(lo);
        let beta = beta.unwrap_or(hi);
        check_box(alpha, beta)?;
        let tol = 1e-10 * beta;
        for (j, m) in matrices.iter().enumerate() {
            if !m.within_box(alpha, beta, tol) {
                return Err(Error::InvalidInput(format!(
                    "matrix {j} has spectrum [{}, {}] outside the box [{alpha}, {beta}]",
                    m.min_eig(),
                    m.max_eig()
                )));
            }
        }
        let fp_terms = matrices
            .iter()
            .map(|m| {
                let s = m.max_eig();
                let scaled = SpdMatrix::new(m.scale(1.0 / s)).map(|a| a.power((1.0 - t) / t));
                scaled.map(|a| (a, s.powf(1.0 - t)))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            matrices,
            weights,
            t,
            alpha,
            beta,
            fp_terms,
        })
    }

    pub fn from_json(p: &ProblemJson) -> Result<Self> {
        let matrices = p
            .matrices
            .iter()
            .map(MatrixJson::to_spd)
            .collect::<Result<Vec<_>>>()?;
        Self::new(matrices, p.weights.clone(), p.t, p.alpha, p.beta)
    }

    pub fn to_json(&self) -> ProblemJson {
        ProblemJson {
            t: self.t,
            weights: self.weights.clone(),
            matrices: self.matrices.iter().map(MatrixJson::from).collect(),
            alpha: Some(self.alpha),
            beta: Some(self.beta),
        }
    }

    pub fn matrices(&self) -> &[SpdMatrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// `1e-10 t n`.
    pub fn default_tol(&self) -> f64 {
        1e-10 * self.t * self.dim() as f64
    }

    fn check_point(&self, x: &SpdMatrix) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch(self.dim(), x.dim()));
        }
        Ok(())
    }
}

/// `φ_t(X)`.
pub fn objective(p: &BarycenterProblem, x: &SpdMatrix) -> Result<f64> {
    p.check_point(x)?;
    let t = p.t;
    let mut total = 0.0;
    for (a, w) in p.matrices.iter().zip(&p.weights) {
        total += w * ((1.0 - t) * a.trace() + t * x.trace() - fidelity_unchecked(a, x, t)?);
    }
    Ok(total)
}

/// `∇φ_t(X) = t [I - Σ w_j (A_j^{(1-t)/t} #_{1-t} X^{-1})]`.
pub fn objective_gradient(p: &BarycenterProblem, x: &SpdMatrix) -> Result<HermitianMatrix> {
    p.check_point(x)?;
    let mut g = HermitianMatrix::identity(p.dim()).scale(p.t);
    for (a, w) in p.matrices.iter().zip(&p.weights) {
        g = &g - &gradient_f(a, x, p.t)?.scale(*w);
    }
    Ok(g)
}

/// `F(X) = Σ w_j (X^{1/2} A_j^{(1-t)/t} X^{1/2})^t`; its fixed points are the minimizers.
pub fn fixed_point_map(p: &BarycenterProblem, x: &SpdMatrix) -> Result<HermitianMatrix> {
    p.check_point(x)?;
    let root = x.sqrt();
    let mut out = HermitianMatrix::zeros(p.dim());
    for ((a2, factor), w) in p.fp_terms.iter().zip(&p.weights) {
        let inner = a2.congruence(&root).decompose()?;
        let powered = inner.map(|l| l.max(0.0).powf(p.t));
        out = &out + &powered.scale(w * factor);
    }
    Ok(out)
}

/// `||X - F(X)||`.
pub fn fixed_point_residual(p: &BarycenterProblem, x: &SpdMatrix) -> Result<f64> {
    Ok(x.frobenius_distance(&fixed_point_map(p, x)?))
}

/// Constants of the linear-rate certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub alpha_star: f64,
    pub beta_star: f64,
    pub eta: f64,
    pub q: f64,
}

/// `α* = t(1-t)β^{t-2}α^{1-t}`, `β* = t(1-t)β^{1-t}α^{t-2}`,
/// `q = max{|1-ηα*|, |1-ηβ*|}`; `η` defaults to `1/β*`.
pub fn certified_rate(p: &BarycenterProblem, eta: Option<f64>) -> Result<RateCertificate> {
    let c = convexity_constants(p.t, p.alpha, p.beta)?;
    let (alpha_star, beta_star) = (c.k1, c.k2);
    let limit = 2.0 / beta_star;
    let eta = eta.unwrap_or(1.0 / beta_star);
    if !(eta > 0.0 && eta < limit) {
        return Err(Error::InvalidStepSize { eta, limit });
    }
    let q = (1.0 - eta * alpha_star).abs().max((1.0 - eta * beta_star).abs());
    Ok(RateCertificate {
        alpha_star,
        beta_star,
        eta,
        q,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    GradientProjection,
    FixedPoint,
}

/// Why a solver stopped. For the fixed-point solver `GradientTol` means the
/// residual `||X - F(X)||` reached the tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTol,
    MaxIters,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Step size; gradient projection only.
    pub eta: Option<f64>,
    pub tol: Option<f64>,
    pub max_iters: usize,
    pub x0: Option<SpdMatrix>,
    /// Keep the iterates (same subsampling as the history).
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            eta: None,
            tol: None,
            max_iters: DEFAULT_MAX_ITERS,
            x0: None,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverReport {
    pub solver: SolverKind,
    #[serde(serialize_with = "ser_spd")]
    pub minimizer: SpdMatrix,
    pub iterations: usize,
    /// `||∇φ_t(X_k)||` at the recorded iterations, see [`recorded_iteration`].
    pub grad_norms: Vec<f64>,
    /// `||X_k - F(X_k)||` at the recorded iterations (fixed-point solver only).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<f64>,
    pub alpha_star: f64,
    pub beta_star: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub tol: f64,
    pub termination: Termination,
    /// `||∇φ_t(X_final)|| / α*`, a bound on the distance to the minimizer.
    pub error_bound: f64,
    pub fixed_point_residual: f64,
    /// Largest distance of an iterate's spectrum outside `[α, β]`.
    pub max_box_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", serialize_with = "ser_spd_list")]
    pub iterates: Vec<SpdMatrix>,
}

/// Iteration number of the `i`-th recorded history entry.
pub fn recorded_iteration(i: usize) -> usize {
    if i < HISTORY_FULL {
        i
    } else {
        HISTORY_FULL + (i - HISTORY_FULL + 1) * HISTORY_STRIDE - 1
    }
}

fn records(k: usize) -> bool {
    k < HISTORY_FULL || (k + 1 - HISTORY_FULL) % HISTORY_STRIDE == 0
}

fn ser_spd<S: Serializer>(m: &SpdMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    MatrixJson::from(m).serialize(s)
}

fn ser_spd_list<S: Serializer>(ms: &[SpdMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<MatrixJson> = ms.iter().map(MatrixJson::from).collect();
    v.serialize(s)
}

fn box_violation(p: &BarycenterProblem, x: &SpdMatrix) -> f64 {
    (p.alpha - x.min_eig()).max(x.max_eig() - p.beta).max(0.0)
}

fn start_point(p: &BarycenterProblem, x0: &Option<SpdMatrix>) -> Result<SpdMatrix> {
    match x0 {
        None => Ok(SpdMatrix::scalar_identity(p.dim(), 0.5 * (p.alpha + p.beta))),
        Some(x) => {
            p.check_point(x)?;
            if !x.within_box(p.alpha, p.beta, 1e-10 * p.beta) {
                return Err(Error::InvalidStart(format!(
                    "start spectrum [{}, {}] is outside [{}, {}]",
                    x.min_eig(),
                    x.max_eig(),
                    p.alpha,
                    p.beta
                )));
            }
            Ok(x.clone())
        }
    }
}

fn check_tol(tol: f64) -> Result<f64> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::ParameterError(format!("tolerance {tol} must be positive")));
    }
    Ok(tol)
}

/// Projected gradient descent `X_{k+1} = proj_[αI,βI](X_k - η ∇φ_t(X_k))`.
pub fn solve_gradient_projection(
    p: &BarycenterProblem,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    let rate = certified_rate(p, opts.eta)?;
    let tol = check_tol(opts.tol.unwrap_or_else(|| p.default_tol()))?;
    let mut x = start_point(p, &opts.x0)?;
    let mut grad_norms = Vec::new();
    let mut iterates = Vec::new();
    let mut violation = 0.0f64;
    let mut k = 0;
    let (termination, gnorm) = loop {
        let g = objective_gradient(p, &x)?;
        let gn = g.norm(NormKind::Frobenius);
        if !gn.is_finite() {
            return Err(Error::NumericalError(format!("gradient is not finite at iteration {k}")));
        }
        if records(k) {
            grad_norms.push(gn);
            if opts.trace {
                iterates.push(x.clone());
            }
        }
        violation = violation.max(box_violation(p, &x));
        if gn <= tol {
            break (Termination::GradientTol, gn);
        }
        if k >= opts.max_iters {
            break (Termination::MaxIters, gn);
        }
        x = project_box(&(x.as_hermitian() - &g.scale(rate.eta)), p.alpha, p.beta)?;
        k += 1;
    };
    let residual = fixed_point_residual(p, &x)?;
    Ok(SolverReport {
        solver: SolverKind::GradientProjection,
        minimizer: x,
        iterations: k,
        grad_norms,
        residuals: Vec::new(),
        alpha_star: rate.alpha_star,
        beta_star: rate.beta_star,
        q: Some(rate.q),
        eta: Some(rate.eta),
        tol,
        termination,
        error_bound: gnorm / rate.alpha_star,
        fixed_point_residual: residual,
        max_box_violation: violation,
        diagnostics: None,
        iterates,
    })
}

/// Fixed-point iteration `X_{k+1} = F(X_k)`, stopping once `||X_k - F(X_k)|| <= tol`.
///
/// Gives up (reported as `MaxIters` with diagnostics) once the residual has
/// grown for [`FP_DIVERGENCE_STEPS`] consecutive steps.
pub fn solve_fixed_point(p: &BarycenterProblem, opts: &SolverOptions) -> Result<SolverReport> {
    let c = convexity_constants(p.t, p.alpha, p.beta)?;
    let tol = check_tol(opts.tol.unwrap_or_else(|| p.default_tol()))?;
    let mut x = start_point(p, &opts.x0)?;
    let mut grad_norms = Vec::new();
    let mut residuals = Vec::new();
    let mut iterates = Vec::new();
    let mut violation = 0.0f64;
    let mut diagnostics = None;
    let mut increases = 0;
    let mut last = f64::INFINITY;
    let mut k = 0;
    let (termination, residual) = loop {
        let fx = fixed_point_map(p, &x)?;
        let r = x.frobenius_distance(&fx);
        if !r.is_finite() {
            return Err(Error::NumericalError(format!("residual is not finite at iteration {k}")));
        }
        violation = violation.max(box_violation(p, &x));
        if records(k) {
            residuals.push(r);
            grad_norms.push(objective_gradient(p, &x)?.norm(NormKind::Frobenius));
            if opts.trace {
                iterates.push(x.clone());
            }
        }
        if r <= tol {
            break (Termination::GradientTol, r);
        }
        increases = if r > last { increases + 1 } else { 0 };
        last = r;
        if increases >= FP_DIVERGENCE_STEPS {
            diagnostics = Some(format!(
                "residual increased for {FP_DIVERGENCE_STEPS} consecutive steps, last value {r:e}"
            ));
            break (Termination::MaxIters, r);
        }
        if k >= opts.max_iters {
            break (Termination::MaxIters, r);
        }
        x = SpdMatrix::new(fx)?;
        k += 1;
    };
    let gn = objective_gradient(p, &x)?.norm(NormKind::Frobenius);
    Ok(SolverReport {
        solver: SolverKind::FixedPoint,
        minimizer: x,
        iterations: k,
        grad_norms,
        residuals,
        alpha_star: c.k1,
        beta_star: c.k2,
        q: None,
        eta: None,
        tol,
        termination,
        error_bound: gn / c.k1,
        fixed_point_residual: residual,
        max_box_violation: violation,
        diagnostics,
        iterates,
    })
}

#[cfg(test)]
mod tests;

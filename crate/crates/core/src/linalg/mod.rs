//! Dense Hermitian and positive definite matrices.
//!
//! Every matrix function in the crate goes through a [`SpectralDecomp`]:
//! `f(H) = U diag(f(λ)) U*`. Incoming matrices are symmetrized as
//! `(H + H*)/2`, which makes them exactly Hermitian in floating point.
//! Eigenvalues are always sorted in decreasing order.

use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::{Error, Result};

mod jacobi;
mod json;
mod random;

pub use jacobi::{graded_congruence, jacobi_decompose, GradedCongruence};
pub use json::MatrixJson;
pub use random::{
    derive_seed, random_density, random_hermitian, random_spd, random_spd_with, random_unitary,
    seeded_rng, trial_seed, SeededRng,
};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative floor on the smallest eigenvalue of an [`SpdMatrix`].
pub const SPD_REL_TOL: f64 = 1e-12;

/// Relative gap below which two eigenvalues share a single divided difference.
pub const EQUAL_EIG_REL_TOL: f64 = 1e-8;

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Dense `n x n` complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: CMatrix,
}

impl HermitianMatrix {
    /// Validates and symmetrizes an arbitrary square complex matrix.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!(
                "matrix is not square: {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("empty matrix".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self::symmetrized(m))
    }

    /// Real matrix from row-major entries.
    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| c(entries[i * n + j])))
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(values[i])
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: CMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: CMatrix::zeros(n, n),
        }
    }

    /// `(M + M*)/2`; the result is exactly Hermitian in floating point.
    pub(crate) fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            data: (m + adj) * c(0.5),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Trace inner product `<X, Y> = Re tr(X Y)`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum()
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self {
            data: &self.data * c(s),
        }
    }

    /// `W X W*` for an arbitrary square `W`.
    pub fn conjugate_by(&self, w: &CMatrix) -> HermitianMatrix {
        Self::symmetrized(w * &self.data * w.adjoint())
    }

    /// `P X P` for Hermitian `P`.
    pub fn congruence(&self, p: &HermitianMatrix) -> HermitianMatrix {
        Self::symmetrized(&p.data * &self.data * &p.data)
    }

    pub fn decompose(&self) -> Result<SpectralDecomp> {
        spectral_decompose(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.decompose()?.eigenvalues)
    }

    pub fn norm(&self, kind: NormKind) -> f64 {
        norm(self, kind)
    }

    pub fn frobenius_distance(&self, other: &HermitianMatrix) -> f64 {
        (self - other).norm(NormKind::Frobenius)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data + &rhs.data,
        }
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix {
            data: &self.data - &rhs.data,
        }
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

/// Eigenvalues (descending) with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(f(λ)) U*`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = c(f(l));
            scaled.column_mut(j).iter_mut().for_each(|z| *z *= fl);
        }
        HermitianMatrix::symmetrized(scaled * u.adjoint())
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Moves a block of eigenpairs into descending order, stably.
    fn sorted(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Self {
        let n = eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
        let vals = order.iter().map(|&k| eigenvalues[k]).collect();
        let vecs = CMatrix::from_fn(n, n, |i, j| eigenvectors[(i, order[j])]);
        Self {
            eigenvalues: vals,
            eigenvectors: vecs,
        }
    }
}

pub fn spectral_decompose(h: &HermitianMatrix) -> Result<SpectralDecomp> {
    if !h.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::new(h.data.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalError("eigensolver produced non-finite values".into()));
    }
    Ok(SpectralDecomp::sorted(vals, eig.eigenvectors))
}

/// Hermitian matrix with strictly positive spectrum; keeps its decomposition.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    herm: HermitianMatrix,
    decomp: SpectralDecomp,
}

impl SpdMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let decomp = spectral_decompose(&h)?;
        check_positive(&decomp.eigenvalues)?;
        Ok(Self { herm: h, decomp })
    }

    pub fn from_real(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real(n, entries)?)
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::diag(values)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar_identity(n, 1.0)
    }

    /// `s I` for `s > 0`.
    pub fn scalar_identity(n: usize, s: f64) -> Self {
        assert!(s > 0.0, "scalar_identity needs a positive scale");
        Self {
            herm: HermitianMatrix::identity(n).scale(s),
            decomp: SpectralDecomp {
                eigenvalues: vec![s; n],
                eigenvectors: CMatrix::identity(n, n),
            },
        }
    }

    /// Builds `U diag(λ) U*` from a trusted decomposition.
    pub(crate) fn from_decomp(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let decomp = SpectralDecomp::sorted(eigenvalues, eigenvectors);
        check_positive(&decomp.eigenvalues)?;
        Ok(Self {
            herm: decomp.reconstruct(),
            decomp,
        })
    }

    pub fn as_hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn into_hermitian(self) -> HermitianMatrix {
        self.herm
    }

    pub fn decomp(&self) -> &SpectralDecomp {
        &self.decomp
    }

    pub fn min_eig(&self) -> f64 {
        self.decomp.min()
    }

    pub fn max_eig(&self) -> f64 {
        self.decomp.max()
    }

    /// `A^s`, sharing this matrix's eigenvectors.
    ///
    /// The result may be far worse conditioned than `A` itself; it is only
    /// required to have a positive, finite spectrum.
    ///
    /// # Panics
    /// If some `λ^s` overflows or underflows to zero.
    pub fn power(&self, s: f64) -> SpdMatrix {
        if s == 1.0 {
            return self.clone();
        }
        let vals: Vec<f64> = self.decomp.eigenvalues.iter().map(|l| l.powf(s)).collect();
        assert!(
            vals.iter().all(|v| v.is_finite() && *v > 0.0),
            "A^{s} is not representable in double precision"
        );
        let decomp = SpectralDecomp::sorted(vals, self.decomp.eigenvectors.clone());
        Self {
            herm: decomp.reconstruct(),
            decomp,
        }
    }

    pub fn sqrt(&self) -> SpdMatrix {
        self.power(0.5)
    }

    pub fn inv(&self) -> SpdMatrix {
        self.power(-1.0)
    }

    pub fn log(&self) -> HermitianMatrix {
        self.decomp.map(f64::ln)
    }

    /// `αI <= A <= βI` up to `tol`.
    pub fn within_box(&self, alpha: f64, beta: f64, tol: f64) -> bool {
        self.min_eig() >= alpha - tol && self.max_eig() <= beta + tol
    }
}

impl Deref for SpdMatrix {
    type Target = HermitianMatrix;
    fn deref(&self) -> &HermitianMatrix {
        &self.herm
    }
}

impl TryFrom<HermitianMatrix> for SpdMatrix {
    type Error = Error;
    fn try_from(h: HermitianMatrix) -> Result<Self> {
        SpdMatrix::new(h)
    }
}

fn check_positive(eigs: &[f64]) -> Result<()> {
    let max = eigs[0];
    let min = eigs[eigs.len() - 1];
    if min <= SPD_REL_TOL * max.max(1.0) {
        return Err(Error::NotPositiveDefinite {
            min_eig: min,
            max_eig: max,
        });
    }
    Ok(())
}

pub fn matrix_power(a: &SpdMatrix, s: f64) -> HermitianMatrix {
    a.power(s).into_hermitian()
}

pub fn matrix_log(a: &SpdMatrix) -> HermitianMatrix {
    a.log()
}

pub fn matrix_exp(h: &HermitianMatrix) -> Result<SpdMatrix> {
    let d = spectral_decompose(h)?;
    let vals = d.eigenvalues.iter().map(|l| l.exp()).collect();
    SpdMatrix::from_decomp(vals, d.eigenvectors)
}

/// Scalar functions with a matrix extension through the spectral calculus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarFn {
    Power(f64),
    Log,
    Exp,
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Power(s) => x.powf(s),
            ScalarFn::Log => x.ln(),
            ScalarFn::Exp => x.exp(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            ScalarFn::Power(s) if s == 0.0 => 0.0,
            ScalarFn::Power(s) => s * x.powf(s - 1.0),
            ScalarFn::Log => 1.0 / x,
            ScalarFn::Exp => x.exp(),
        }
    }

    fn is_poly(&self) -> bool {
        matches!(*self, ScalarFn::Power(s) if s >= 0.0 && s.fract() == 0.0)
    }

    pub fn defined_at(&self, x: f64) -> bool {
        match self {
            ScalarFn::Exp => x.is_finite(),
            _ if self.is_poly() => x.is_finite(),
            _ => x > 0.0 && x.is_finite(),
        }
    }

    /// First divided difference `(f(a) - f(b)) / (a - b)`, with `f'` at the
    /// midpoint when the two points are (relatively) equal.
    pub fn divided_difference(&self, a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if (a - b).abs() <= EQUAL_EIG_REL_TOL * scale {
            return self.deriv(0.5 * (a + b));
        }
        match *self {
            _ if self.is_poly() => (self.eval(a) - self.eval(b)) / (a - b),
            ScalarFn::Power(s) => {
                // b^{s-1} ((1+δ)^s - 1)/δ with δ = (a-b)/b avoids cancellation.
                let delta = (a - b) / b;
                b.powf(s - 1.0) * (s * delta.ln_1p()).exp_m1() / delta
            }
            ScalarFn::Log => (a / b).ln() / (a - b),
            ScalarFn::Exp => b.exp() * (a - b).exp_m1() / (a - b),
        }
    }
}

/// Loewner matrix of first divided differences of `f` at `lambda`.
pub fn loewner_matrix(f: ScalarFn, lambda: &[f64]) -> Result<DMatrix<f64>> {
    if let Some(bad) = lambda.iter().find(|&&l| !f.defined_at(l)) {
        return Err(Error::DomainError(format!("{f:?} is not defined at {bad}")));
    }
    let n = lambda.len();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = f.deriv(lambda[i]);
        for j in 0..i {
            let v = f.divided_difference(lambda[i], lambda[j]);
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Ok(l)
}

/// `U (L ∘ U* Y U) U*`, where `L` is the Loewner matrix of `f` at the spectrum of `X`.
pub fn frechet_derivative(
    f: ScalarFn,
    x: &HermitianMatrix,
    y: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let d = spectral_decompose(x)?;
    frechet_derivative_with(f, &d, y)
}

pub(crate) fn frechet_derivative_with(
    f: ScalarFn,
    d: &SpectralDecomp,
    y: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    let l = loewner_matrix(f, &d.eigenvalues)?;
    let u = &d.eigenvectors;
    let inner = u.adjoint() * y.matrix() * u;
    let had = inner.component_mul(&l.map(c));
    Ok(HermitianMatrix::symmetrized(u * had * u.adjoint()))
}

/// `f(H)` for any supported scalar function defined on the spectrum.
pub fn apply_fn(f: ScalarFn, h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let d = spectral_decompose(h)?;
    if let Some(bad) = d.eigenvalues.iter().find(|&&l| !f.defined_at(l)) {
        return Err(Error::DomainError(format!("{f:?} is not defined at eigenvalue {bad}")));
    }
    Ok(d.map(|l| f.eval(l)))
}

pub fn check_box(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= beta && beta.is_finite()) {
        return Err(Error::InvalidBox { alpha, beta });
    }
    Ok(())
}

/// Frobenius-nearest point of `{X : αI <= X <= βI}`: clip the eigenvalues.
pub fn project_box(h: &HermitianMatrix, alpha: f64, beta: f64) -> Result<SpdMatrix> {
    check_box(alpha, beta)?;
    let d = spectral_decompose(h)?;
    let vals = d.eigenvalues.iter().map(|l| l.clamp(alpha, beta)).collect();
    SpdMatrix::from_decomp(vals, d.eigenvectors)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    Frobenius,
    Operator,
    Trace,
    /// Schatten-p norm, `p >= 1`.
    Schatten(f64),
}

pub fn norm(h: &HermitianMatrix, kind: NormKind) -> f64 {
    match kind {
        NormKind::Frobenius => h.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(),
        _ => {
            let eigs = match spectral_decompose(h) {
                Ok(d) => d.eigenvalues,
                Err(_) => return f64::NAN,
            };
            let sv = eigs.iter().map(|l| l.abs());
            match kind {
                NormKind::Operator => sv.fold(0.0, f64::max),
                NormKind::Trace => sv.sum(),
                NormKind::Schatten(p) if p.is_infinite() => sv.fold(0.0, f64::max),
                NormKind::Schatten(p) => sv.map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p),
                NormKind::Frobenius => unreachable!(),
            }
        }
    }
}

/// Orthonormal basis of the real vector space of `n x n` Hermitian matrices
/// under `<X, Y> = Re tr(XY)`: diagonal units, symmetric pairs / √2 and
/// antisymmetric imaginary pairs / √2.
pub fn hermitian_basis(n: usize) -> Vec<HermitianMatrix> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut m = CMatrix::zeros(n, n);
        m[(i, i)] = c(1.0);
        basis.push(HermitianMatrix { data: m });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = CMatrix::zeros(n, n);
            m[(i, j)] = c(r);
            m[(j, i)] = c(r);
            basis.push(HermitianMatrix { data: m });
            let mut m = CMatrix::zeros(n, n);
            m[(i, j)] = C64::new(0.0, -r);
            m[(j, i)] = C64::new(0.0, r);
            basis.push(HermitianMatrix { data: m });
        }
    }
    basis
}

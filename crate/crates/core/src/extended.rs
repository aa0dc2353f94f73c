//! Double-double arithmetic (about 106 significand bits) and a cyclic Jacobi
//! eigensolver on top of it.
//!
//! This path is slow and only used to re-check values that sit close to a
//! decision threshold in double precision, and as an oracle in tests.
//! Complex Hermitian `H = X + iY` is handled through the real symmetric
//! embedding `[[X, -Y], [Y, X]]`, whose spectrum is that of `H` with every
//! eigenvalue doubled and which commutes with the spectral calculus.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::HermitianMatrix;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let y = self.hi.sqrt();
        let (p, e) = two_prod(y, y);
        let r = (self - Dd { hi: p, lo: e }).to_f64();
        let (s, t) = quick_two_sum(y, r / (2.0 * y));
        Dd { hi: s, lo: t }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::new(k)).ldexp(-10);
        // expm1 of the reduced argument, then (1+m)² - 1 = m (m + 2) ten times
        let mut m = r;
        let mut term = r;
        for i in 2..40 {
            term = term * r / Dd::new(f64::from(i));
            m = m + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            m = m * (m + Dd::new(2.0));
        }
        (Dd::ONE + m).ldexp(k as i32)
    }

    /// Natural logarithm by Newton's method on `exp`.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of a non-positive double-double");
        let mut y = Dd::new(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - Dd::ONE;
        }
        y
    }

    pub fn powf(self, s: Dd) -> Dd {
        (s * self.ln()).exp()
    }

    pub fn total_cmp(&self, other: &Dd) -> Ordering {
        self.hi.total_cmp(&other.hi).then(self.lo.total_cmp(&other.lo))
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::new(x)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Dense real square matrix in double-double, row-major.
#[derive(Clone, Debug)]
pub struct DdMatrix {
    n: usize,
    a: Vec<Dd>,
}

impl DdMatrix {
    pub fn zeros(n: usize) -> DdMatrix {
        DdMatrix {
            n,
            a: vec![Dd::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> DdMatrix {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = Dd::ONE;
        }
        m
    }

    /// Real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]` of a Hermitian matrix.
    pub fn embed(h: &HermitianMatrix) -> DdMatrix {
        let n = h.dim();
        let mut m = Self::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = h.get(i, j);
                m.set(i, j, Dd::new(z.re));
                m.set(i + n, j + n, Dd::new(z.re));
                m.set(i, j + n, Dd::new(-z.im));
                m.set(i + n, j, Dd::new(z.im));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Dd {
        self.a[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: Dd) {
        self.a[i * self.n + j] = v;
    }

    pub fn matmul(&self, o: &DdMatrix) -> DdMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.hi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.a[i * n + j] = out.a[i * n + j] + aik * o.get(k, j);
                }
            }
        }
        out
    }

    /// `s * self + t * other`.
    pub fn combine(&self, s: Dd, other: &DdMatrix, t: Dd) -> DdMatrix {
        DdMatrix {
            n: self.n,
            a: self.a.iter().zip(&other.a).map(|(&x, &y)| s * x + t * y).collect(),
        }
    }

    pub fn symmetrized(&self) -> DdMatrix {
        let n = self.n;
        let half = Dd::new(0.5);
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..i {
                let v = (self.get(i, j) + self.get(j, i)) * half;
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn trace(&self) -> Dd {
        (0..self.n).fold(Dd::ZERO, |acc, i| acc + self.get(i, i))
    }

    fn frobenius_sq(&self) -> Dd {
        self.a.iter().fold(Dd::ZERO, |acc, &x| acc + x * x)
    }

    /// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
    pub fn eigh(&self) -> DdEigen {
        let n = self.n;
        let mut a = self.symmetrized();
        let mut v = Self::identity(n);
        let scale = self.frobenius_sq();
        let threshold = scale * Dd::new(1e-62);
        for _sweep in 0..60 {
            let mut off = Dd::ZERO;
            for p in 0..n {
                for q in (p + 1)..n {
                    let x = a.get(p, q);
                    off = off + x * x;
                }
            }
            if off.hi <= threshold.hi {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.hi == 0.0 {
                        continue;
                    }
                    let gap = a.get(q, q) - a.get(p, p);
                    let t = if gap.hi.abs() > 1e30 * apq.hi.abs() {
                        apq / gap
                    } else {
                        let theta = gap / (Dd::new(2.0) * apq);
                        let r = Dd::ONE / (theta.abs() + (theta * theta + Dd::ONE).sqrt());
                        if theta.hi < 0.0 {
                            -r
                        } else {
                            r
                        }
                    };
                    let c = Dd::ONE / (t * t + Dd::ONE).sqrt();
                    let s = t * c;
                    rotate_columns(&mut a, p, q, c, s);
                    rotate_rows(&mut a, p, q, c, s);
                    rotate_columns(&mut v, p, q, c, s);
                    a.set(p, q, Dd::ZERO);
                    a.set(q, p, Dd::ZERO);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
        let values = order.iter().map(|&k| a.get(k, k)).collect();
        let mut vectors = Self::zeros(n);
        for (col, &k) in order.iter().enumerate() {
            for i in 0..n {
                vectors.set(i, col, v.get(i, k));
            }
        }
        DdEigen { values, vectors }
    }
}

fn rotate_columns(m: &mut DdMatrix, p: usize, q: usize, c: Dd, s: Dd) {
    for k in 0..m.n {
        let (mkp, mkq) = (m.get(k, p), m.get(k, q));
        m.set(k, p, c * mkp - s * mkq);
        m.set(k, q, s * mkp + c * mkq);
    }
}

fn rotate_rows(m: &mut DdMatrix, p: usize, q: usize, c: Dd, s: Dd) {
    for k in 0..m.n {
        let (mpk, mqk) = (m.get(p, k), m.get(q, k));
        m.set(p, k, c * mpk - s * mqk);
        m.set(q, k, s * mpk + c * mqk);
    }
}

/// Descending eigenvalues with eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct DdEigen {
    pub values: Vec<Dd>,
    pub vectors: DdMatrix,
}

impl DdEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn map<F: Fn(Dd) -> Dd>(&self, f: F) -> DdMatrix {
        let n = self.values.len();
        let fv: Vec<Dd> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        let mut out = DdMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = Dd::ZERO;
                for k in 0..n {
                    acc = acc + v.get(i, k) * fv[k] * v.get(j, k);
                }
                out.set(i, j, acc);
                out.set(j, i, acc);
            }
        }
        out
    }

    /// Eigenvalues of the embedded Hermitian matrix (every other value).
    pub fn hermitian_values(&self) -> Vec<Dd> {
        self.values.iter().step_by(2).copied().collect()
    }
}

/// Descending eigenvalues of `(A^{(1-t)/2t} B A^{(1-t)/2t})^t`.
pub fn sandwich_eigenvalues(a: &HermitianMatrix, b: &HermitianMatrix, t: f64) -> Vec<Dd> {
    let td = Dd::new(t);
    let s = (Dd::ONE - td) / (Dd::new(2.0) * td);
    let p = DdMatrix::embed(a).eigh().map(|l| l.powf(s));
    let m = p.matmul(&DdMatrix::embed(b)).matmul(&p);
    m.eigh()
        .hermitian_values()
        .into_iter()
        .map(|l| l.powf(td))
        .collect()
}

/// Descending eigenvalues of `(1-t) A + t B`.
pub fn mean_eigenvalues(a: &HermitianMatrix, b: &HermitianMatrix, t: f64) -> Vec<Dd> {
    let td = Dd::new(t);
    DdMatrix::embed(a)
        .combine(Dd::ONE - td, &DdMatrix::embed(b), td)
        .eigh()
        .hermitian_values()
}

/// `F_t(A, B)` in double-double.
pub fn fidelity(a: &HermitianMatrix, b: &HermitianMatrix, t: f64) -> Dd {
    sandwich_eigenvalues(a, b, t)
        .into_iter()
        .fold(Dd::ZERO, |acc, x| acc + x)
}

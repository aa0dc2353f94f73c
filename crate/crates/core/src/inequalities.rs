//! Trace, majorization and convexity inequalities around the sandwiched
//! fidelity, with seeded verification suites built on top of them.
//!
//! Every verdict carries the most violated difference (`worst_margin`,
//! positive when there is room) and passes when
//! `worst_margin >= -VERDICT_TOL * scale`, `scale` being the largest
//! aggregate taking part in the comparison.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    bures_distance, check_dims, check_t_unit, fidelity, geometric_mean, max_relative_entropy,
    relative_spectrum, sandwich_log_eigenvalues, sandwich_power, sandwiched_divergence_unchecked,
    thompson_metric, umegaki_relative_entropy,
};
use crate::linalg::{
    graded_congruence, random_hermitian, seeded_rng, HermitianMatrix, NormKind, SpdMatrix,
};
use crate::{Error, Result, T_MIN};

mod suites;

pub use suites::{
    open_question_search, run_suite, thread_limit, CheckSummary, OpenQuestionCandidate,
    OpenQuestionReport, OpenQuestionSummary, Suite, SuiteConfig, SuiteReport, TrialFailure,
    THREADS_ENV,
};

/// Relative tolerance of every verdict.
pub const VERDICT_TOL: f64 = 1e-10;

/// `x ≺ y` in one of the usual orders on decreasingly sorted vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    WeakMajorize,
    Majorize,
    WeakLogMajorize,
    LogMajorize,
    EntrywiseLe,
}

impl Relation {
    pub fn is_log(self) -> bool {
        matches!(self, Relation::WeakLogMajorize | Relation::LogMajorize)
    }

    /// Whether the totals must agree as well.
    fn is_balanced(self) -> bool {
        matches!(self, Relation::Majorize | Relation::LogMajorize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MajorizationVerdict {
    pub relation: Relation,
    pub holds: bool,
    pub worst_margin: f64,
    /// Aggregate the tolerance is relative to.
    pub scale: f64,
}

impl MajorizationVerdict {
    /// `worst_margin / scale`.
    pub fn relative_margin(&self) -> f64 {
        if self.scale > 0.0 {
            self.worst_margin / self.scale
        } else {
            self.worst_margin
        }
    }
}

fn sorted_desc(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn partial_sums(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Verdict on decreasingly sorted inputs; log relations take logarithms.
fn compare_sorted(x: &[f64], y: &[f64], relation: Relation, scale: Option<f64>) -> MajorizationVerdict {
    let (diffs, default_scale) = if relation == Relation::EntrywiseLe {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - a).collect();
        let s = x.iter().chain(y).fold(0.0f64, |m, v| m.max(v.abs()));
        (d, s)
    } else {
        let (px, py) = (partial_sums(x), partial_sums(y));
        let n = px.len();
        let mut d: Vec<f64> = px.iter().zip(&py).map(|(a, b)| b - a).collect();
        if relation.is_balanced() {
            d[n - 1] = -d[n - 1].abs();
        }
        let s = px.iter().chain(&py).fold(0.0f64, |m, v| m.max(v.abs()));
        // a log aggregate of zero still carries relative rounding on the products
        (d, if relation.is_log() { s.max(1.0) } else { s })
    };
    let scale = scale.unwrap_or(default_scale);
    let worst = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    MajorizationVerdict {
        relation,
        holds: worst >= -VERDICT_TOL * scale,
        worst_margin: worst,
        scale,
    }
}

/// Verdict on `x ≺ y` (`x` dominated by `y`) for the chosen relation.
///
/// Log relations compare partial sums of logarithms, so their margins are
/// log ratios of the partial products.
pub fn majorizes(x: &[f64], y: &[f64], relation: Relation) -> Result<MajorizationVerdict> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "vectors have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("vectors are empty".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("vectors have non-finite entries".into()));
    }
    let (xs, ys) = (sorted_desc(x), sorted_desc(y));
    if relation.is_log() {
        if xs[xs.len() - 1] <= 0.0 || ys[ys.len() - 1] <= 0.0 {
            return Err(Error::DomainError(
                "log majorization needs positive entries".into(),
            ));
        }
        let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
        return Ok(compare_sorted(&lx, &ly, relation, None));
    }
    Ok(compare_sorted(&xs, &ys, relation, None))
}

/// Named vector (or scalar, as a vector of length one) in a chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkVerdict {
    pub lower: String,
    pub upper: String,
    #[serde(flatten)]
    pub verdict: MajorizationVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub t: f64,
    pub links: Vec<ChainLink>,
    pub verdicts: Vec<LinkVerdict>,
    pub all_hold: bool,
}

impl ChainReport {
    fn new(t: f64, links: Vec<ChainLink>, verdicts: Vec<LinkVerdict>) -> Self {
        let all_hold = verdicts.iter().all(|v| v.verdict.holds);
        Self {
            t,
            links,
            verdicts,
            all_hold,
        }
    }
}

fn link(label: &str, values: Vec<f64>) -> ChainLink {
    ChainLink {
        label: label.into(),
        values,
    }
}

/// `tr A #_t B <= tr A^{1-t} B^t <= F_t(A, B) <= tr[(1-t)A + tB]`.
pub fn trace_chain_check(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<ChainReport> {
    check_t_unit(t)?;
    check_dims(a, b)?;
    let values = [
        ("mean", geometric_mean(a, b, t)?.trace()),
        ("product", a.power(1.0 - t).inner(&b.power(t))),
        ("sandwich", fidelity(a, b, t)?),
        ("arithmetic", (1.0 - t) * a.trace() + t * b.trace()),
    ];
    let scale = values[3].1;
    let verdicts = values
        .windows(2)
        .map(|w| LinkVerdict {
            lower: w[0].0.into(),
            upper: w[1].0.into(),
            verdict: compare_sorted(&[w[0].1], &[w[1].1], Relation::EntrywiseLe, Some(scale)),
        })
        .collect();
    let links = values.iter().map(|(l, v)| link(l, vec![*v])).collect();
    Ok(ChainReport::new(t, links, verdicts))
}

/// Spectral links of the chain as logarithms, descending.
struct LogLinks {
    mean: Vec<f64>,
    product: Vec<f64>,
    sandwich: Vec<f64>,
    singular: Vec<f64>,
    arithmetic: Vec<f64>,
}

fn log_links(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<LogLinks> {
    let logs = |v: &[f64]| -> Result<Vec<f64>> {
        if v[v.len() - 1] <= 0.0 {
            return Err(Error::NumericalError("chain link lost positivity".into()));
        }
        Ok(v.iter().map(|x| x.ln()).collect())
    };
    let mean = logs(&geometric_mean(a, b, t)?.decomp().eigenvalues)?;
    // λ(A^{1-t} B^t) = λ(A^{(1-t)/2} B^t A^{(1-t)/2})
    let product = graded_congruence(a, (1.0 - t) / 2.0, &b.power(t))?.log_eigenvalues()?;
    let sandwich = sandwich_log_eigenvalues(a, b, t)?;
    // s(A^{1-t} B^t)² = λ(A^{1-t} B^{2t} A^{1-t})
    let singular = graded_congruence(a, 1.0 - t, &b.power(2.0 * t))?
        .log_eigenvalues()?
        .into_iter()
        .map(|l| 0.5 * l)
        .collect();
    let arithmetic = logs(&(&a.scale(1.0 - t) + &b.scale(t)).eigenvalues()?)?;
    Ok(LogLinks {
        mean,
        product,
        sandwich,
        singular,
        arithmetic,
    })
}

fn exp_all(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.exp()).collect()
}

/// Eigenvalue chains between the geometric and arithmetic means:
///
/// - `t >= 1/2`: `λ(A #_t B) ≺log λ(A^{1-t}B^t) ≺log λ(sandwich)^t ≺log s(A^{1-t}B^t) <= λ((1-t)A + tB)`
/// - `t <= 1/2`: `λ(A #_t B) ≺log λ(A^{1-t}B^t) ≺log s(A^{1-t}B^t) ≺log λ(sandwich)^t`
///
/// with `sandwich = A^{(1-t)/2t} B A^{(1-t)/2t}`. Both chains are checked at `t = 1/2`.
pub fn log_majorization_chain(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<ChainReport> {
    check_t_unit(t)?;
    check_dims(a, b)?;
    let l = log_links(a, b, t)?;
    let log_major = |lower: &str, x: &[f64], upper: &str, y: &[f64]| LinkVerdict {
        lower: lower.into(),
        upper: upper.into(),
        verdict: compare_sorted(x, y, Relation::LogMajorize, None),
    };
    let mut verdicts = vec![log_major("mean", &l.mean, "product", &l.product)];
    if t >= 0.5 {
        verdicts.push(log_major("product", &l.product, "sandwich", &l.sandwich));
        verdicts.push(log_major("sandwich", &l.sandwich, "singular", &l.singular));
        let (s, m) = (exp_all(&l.singular), exp_all(&l.arithmetic));
        verdicts.push(LinkVerdict {
            lower: "singular".into(),
            upper: "arithmetic".into(),
            verdict: compare_sorted(&s, &m, Relation::EntrywiseLe, None),
        });
    }
    if t <= 0.5 {
        verdicts.push(log_major("product", &l.product, "singular", &l.singular));
        verdicts.push(log_major("singular", &l.singular, "sandwich", &l.sandwich));
    }
    let links = vec![
        link("mean", exp_all(&l.mean)),
        link("product", exp_all(&l.product)),
        link("sandwich", exp_all(&l.sandwich)),
        link("singular", exp_all(&l.singular)),
        link("arithmetic", exp_all(&l.arithmetic)),
    ];
    Ok(ChainReport::new(t, links, verdicts))
}

/// At `t = 1/2`: the middle trace link against `tr (A^{1/2} B A^{1/2})^{1/2}`,
/// and the squared Bures distance against `tr(A+B)/2 - F_{1/2}(A, B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfConsistency {
    pub fidelity: f64,
    pub classical_fidelity: f64,
    pub bures_squared: f64,
    pub trace_gap: f64,
    pub fidelity_holds: bool,
    pub bures_holds: bool,
}

pub fn half_consistency_check(a: &SpdMatrix, b: &SpdMatrix) -> Result<HalfConsistency> {
    check_dims(a, b)?;
    let f = fidelity(a, b, 0.5)?;
    let classical: f64 = b
        .congruence(&a.sqrt())
        .eigenvalues()?
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let d = bures_distance(a, b)?;
    let half_trace = 0.5 * (a.trace() + b.trace());
    let gap = half_trace - f;
    Ok(HalfConsistency {
        fidelity: f,
        classical_fidelity: classical,
        bures_squared: d * d,
        trace_gap: gap,
        fidelity_holds: (f - classical).abs() <= VERDICT_TOL * f,
        bures_holds: (d * d - gap).abs() <= VERDICT_TOL * half_trace,
    })
}

/// The four objectives whose minimum over positive definite `X` is `F_t(A, B)`,
/// with `Q = A^{(t-1)/2t}` and `r = t/(t-1)`:
///
/// - `I`: `tr[(1-t)(QXQ)^r + tXB]`
/// - `Ii`: `[tr (QXQ)^r]^{1-t} [tr XB]^t`
/// - `Iii`: `tr[t A^{(1-t)/t} X + (1-t)(B^{-1/2} X B^{-1/2})^r]`
/// - `Iv`: `[tr A^{(1-t)/t} X]^t [tr (B^{-1/2} X B^{-1/2})^r]^{1-t}`
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    I,
    Ii,
    Iii,
    Iv,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::I,
        Representation::Ii,
        Representation::Iii,
        Representation::Iv,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Representation::I => "i",
            Representation::Ii => "ii",
            Representation::Iii => "iii",
            Representation::Iv => "iv",
        }
    }
}

/// Traces entering the objectives at `X`.
struct RepTraces {
    /// `tr (QXQ)^r`
    sq: f64,
    /// `tr XB`
    tb: f64,
    /// `tr A^{(1-t)/t} X`
    ta: f64,
    /// `tr (B^{-1/2} X B^{-1/2})^r`
    sb: f64,
}

fn power_trace(a: &SpdMatrix, s: f64, x: &SpdMatrix, r: f64) -> Result<f64> {
    let logs = graded_congruence(a, s, x)?.log_eigenvalues()?;
    Ok(logs.iter().map(|l| (r * l).exp()).sum())
}

fn rep_traces(a: &SpdMatrix, b: &SpdMatrix, t: f64, x: &SpdMatrix, rep: Representation) -> Result<RepTraces> {
    let r = t / (t - 1.0);
    let q = (t - 1.0) / (2.0 * t);
    let (mut tr, uses_q) = (
        RepTraces {
            sq: 0.0,
            tb: 0.0,
            ta: 0.0,
            sb: 0.0,
        },
        matches!(rep, Representation::I | Representation::Ii),
    );
    if uses_q {
        tr.sq = power_trace(a, q, x, r)?;
        tr.tb = x.inner(b);
    } else {
        tr.ta = power_trace(a, -q, x, 1.0)?;
        tr.sb = power_trace(b, -0.5, x, r)?;
    }
    Ok(tr)
}

fn check_variational(a: &SpdMatrix, b: &SpdMatrix, t: f64, x: &SpdMatrix) -> Result<()> {
    check_t_unit(t)?;
    check_dims(a, b)?;
    check_dims(a, x)
}

/// Value of objective `rep` at `X`; never below `F_t(A, B)`.
pub fn variational_value(
    a: &SpdMatrix,
    b: &SpdMatrix,
    t: f64,
    x: &SpdMatrix,
    rep: Representation,
) -> Result<f64> {
    check_variational(a, b, t, x)?;
    let tr = rep_traces(a, b, t, x, rep)?;
    Ok(match rep {
        Representation::I => (1.0 - t) * tr.sq + t * tr.tb,
        Representation::Ii => tr.sq.powf(1.0 - t) * tr.tb.powf(t),
        Representation::Iii => t * tr.ta + (1.0 - t) * tr.sb,
        Representation::Iv => tr.ta.powf(t) * tr.sb.powf(1.0 - t),
    })
}

/// Euclidean gradient of objective `rep` at `X`.
pub fn variational_gradient(
    a: &SpdMatrix,
    b: &SpdMatrix,
    t: f64,
    x: &SpdMatrix,
    rep: Representation,
) -> Result<HermitianMatrix> {
    check_variational(a, b, t, x)?;
    let r = t / (t - 1.0);
    let q = (t - 1.0) / (2.0 * t);
    let tr = rep_traces(a, b, t, x, rep)?;
    // ∇ tr (C X C)^r = r C (C X C)^{r-1} C for C = M^p
    let grad_power = |m: &SpdMatrix, p: f64| -> Result<HermitianMatrix> {
        let inner = graded_congruence(m, p, x)?.map_log(|l| r * ((r - 1.0) * l).exp())?;
        Ok(inner.congruence(&m.power(p)))
    };
    let bh: &HermitianMatrix = b;
    Ok(match rep {
        Representation::I => &grad_power(a, q)?.scale(1.0 - t) + &bh.scale(t),
        Representation::Ii => {
            let g = tr.sq.powf(1.0 - t) * tr.tb.powf(t);
            &grad_power(a, q)?.scale(g * (1.0 - t) / tr.sq) + &bh.scale(g * t / tr.tb)
        }
        Representation::Iii => {
            &a.power(-2.0 * q).scale(t) + &grad_power(b, -0.5)?.scale(1.0 - t)
        }
        Representation::Iv => {
            let g = tr.ta.powf(t) * tr.sb.powf(1.0 - t);
            &a.power(-2.0 * q).scale(g * t / tr.ta) + &grad_power(b, -0.5)?.scale(g * (1.0 - t) / tr.sb)
        }
    })
}

/// `X0 = A^{(t-1)/t} #_t B`, the minimizer of objectives `Iii` and `Iv`.
pub fn variational_minimizer(a: &SpdMatrix, b: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_t_unit(t)?;
    check_dims(a, b)?;
    geometric_mean(&a.power((t - 1.0) / t), b, t)
}

#[derive(Clone, Debug, Serialize)]
pub struct RepresentationMinimum {
    pub representation: Representation,
    pub value: f64,
    pub fidelity: f64,
    /// `(value - F_t) / F_t`.
    pub relative_gap: f64,
    pub iterations: usize,
    pub start_value: f64,
    #[serde(skip)]
    pub minimizer: SpdMatrix,
}

/// Armijo constant of the descent below.
const ARMIJO: f64 = 1e-4;

/// Minimizes objective `rep` by gradient descent from `X0`.
///
/// Steps follow the affine-invariant geometry,
/// `X <- X^{1/2} exp(-η X^{1/2} ∇ X^{1/2}) X^{1/2}`, so iterates stay positive
/// definite and can travel across orders of magnitude: the minimizers of `I`
/// and `Ii` may sit far from `X0`. The first step is the inverse of a
/// finite-difference smoothness estimate; later trial steps are
/// Barzilai-Borwein and backtrack on the Armijo condition.
pub fn minimize_representation(
    a: &SpdMatrix,
    b: &SpdMatrix,
    t: f64,
    rep: Representation,
    max_iters: usize,
) -> Result<RepresentationMinimum> {
    let x0 = variational_minimizer(a, b, t)?;
    let f = fidelity(a, b, t)?;
    let value = |x: &SpdMatrix| variational_value(a, b, t, x, rep);
    let riemannian_grad = |x: &SpdMatrix| -> Result<HermitianMatrix> {
        Ok(variational_gradient(a, b, t, x, rep)?.congruence(&x.sqrt()))
    };
    let step = |x: &SpdMatrix, g: &HermitianMatrix, eta: f64| -> Result<SpdMatrix> {
        let e = g.decompose()?.map(|l| (-eta * l).exp());
        SpdMatrix::new(e.congruence(&x.sqrt()))
    };

    let mut x = x0;
    let mut fx = value(&x)?;
    let start_value = fx;
    let mut eta = initial_step(&x, &riemannian_grad, &step)?;
    let mut iterations = 0;
    // previous point's X^{-1/2}, whitened gradient and step, for the Barzilai-Borwein trial step
    let mut previous: Option<(SpdMatrix, HermitianMatrix, f64)> = None;
    while iterations < max_iters {
        let euclid = variational_gradient(a, b, t, &x, rep)?;
        let g = euclid.congruence(&x.sqrt());
        let gg = g.inner(&g);
        if gg.sqrt() <= 1e-13 * fx.abs() {
            break;
        }
        if let Some((inv_half, g_prev, eta_prev)) = &previous {
            // transport X ∇ X into the previous whitened frame
            let moved = euclid.congruence(x.as_hermitian()).congruence(inv_half.as_hermitian());
            let y = &moved - g_prev;
            let sy = -eta_prev * g_prev.inner(&y);
            let ss = eta_prev * eta_prev * g_prev.inner(g_prev);
            if sy > 0.0 {
                eta = ss / sy;
            }
        }
        let mut accepted = None;
        while eta > 1e-300 {
            if let Ok(y) = step(&x, &g, eta) {
                let fy = value(&y)?;
                if fy <= fx - ARMIJO * eta * gg {
                    accepted = Some((y, fy));
                    break;
                }
            }
            eta *= 0.5;
        }
        let Some((y, fy)) = accepted else { break };
        iterations += 1;
        let decrease = fx - fy;
        previous = Some((x.power(-0.5), g, eta));
        x = y;
        fx = fy;
        eta *= 2.0;
        if decrease <= 1e-16 * fx.abs() {
            break;
        }
    }
    Ok(RepresentationMinimum {
        representation: rep,
        value: fx,
        fidelity: f,
        relative_gap: (fx - f) / f,
        iterations,
        start_value,
        minimizer: x,
    })
}

/// Inverse of `max ||∇(exp_X(hE)) - ∇(X)|| / h` over a few seeded unit directions `E`.
fn initial_step<G, S>(x: &SpdMatrix, grad: &G, step: &S) -> Result<f64>
where
    G: Fn(&SpdMatrix) -> Result<HermitianMatrix>,
    S: Fn(&SpdMatrix, &HermitianMatrix, f64) -> Result<SpdMatrix>,
{
    let n = x.dim();
    let g0 = grad(x)?;
    let mut rng = seeded_rng(0x5157 ^ n as u64);
    let h = 1e-4;
    let mut lip: f64 = 0.0;
    for _ in 0..4 {
        let e = random_hermitian(n, 1.0, &mut rng);
        let e = e.scale(1.0 / e.inner(&e).sqrt());
        let xe = step(x, &e, h)?;
        let ge = grad(&xe)?;
        lip = lip.max((&ge - &g0).norm(NormKind::Frobenius) / h);
    }
    Ok(if lip > 0.0 { 1.0 / lip } else { 1.0 })
}

/// One point of the small-`t` limit `γ(t) = (A^{(1-t)/2t} B A^{(1-t)/2t})^t -> A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub t: f64,
    /// `||γ(t) - A||_op`.
    pub error: f64,
    /// `λ_min(γ(t) - α^t A^{1-t})`.
    pub lower_margin: f64,
    /// `λ_min(β^t A^{1-t} - γ(t))`.
    pub upper_margin: f64,
    /// `max(||β^t A^{1-t} - A||_op, ||α^t A^{1-t} - A||_op)`.
    pub envelope_bound: f64,
    pub envelope_holds: bool,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub alpha: f64,
    pub beta: f64,
    pub points: Vec<GammaPoint>,
    pub final_error: f64,
    pub final_bound: f64,
    pub all_hold: bool,
}

/// The standard small-`t` grid.
pub const GAMMA_GRID: [f64; 5] = [0.2, 0.1, 0.05, 0.01, 0.005];

/// Envelope `α^t A^{1-t} ⪯ γ(t) ⪯ β^t A^{1-t}`, `α, β` the extreme eigenvalues
/// of `B`, at every point of a decreasing grid, and the error bound it implies.
pub fn gamma_limit_check(a: &SpdMatrix, b: &SpdMatrix, t_grid: &[f64]) -> Result<GammaReport> {
    check_dims(a, b)?;
    if t_grid.is_empty() {
        return Err(Error::ParameterError("t grid is empty".into()));
    }
    for &t in t_grid {
        check_t_unit(t)?;
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::ParameterError("t grid must be strictly decreasing".into()));
    }
    let (alpha, beta) = (b.min_eig(), b.max_eig());
    let ah: &HermitianMatrix = a;
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let gamma = sandwich_power(a, b, t)?;
        let a1t = a.power(1.0 - t).into_hermitian();
        let lower = a1t.scale(alpha.powf(t));
        let upper = a1t.scale(beta.powf(t));
        let min_eig = |h: HermitianMatrix| -> Result<f64> { Ok(h.decompose()?.min()) };
        let lower_margin = min_eig(&gamma - &lower)?;
        let upper_margin = min_eig(&upper - &gamma)?;
        let tol = VERDICT_TOL * upper.norm(NormKind::Operator);
        let error = (&gamma - ah).norm(NormKind::Operator);
        let envelope_bound = (&upper - ah)
            .norm(NormKind::Operator)
            .max((&lower - ah).norm(NormKind::Operator));
        points.push(GammaPoint {
            t,
            error,
            lower_margin,
            upper_margin,
            envelope_bound,
            envelope_holds: lower_margin >= -tol && upper_margin >= -tol,
            bound_holds: error <= envelope_bound + tol,
        });
    }
    let last = points[points.len() - 1];
    let all_hold = points.iter().all(|p| p.envelope_holds && p.bound_holds);
    Ok(GammaReport {
        alpha,
        beta,
        points,
        final_error: last.error,
        final_bound: last.envelope_bound,
        all_hold,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitPoint {
    pub t: f64,
    pub value: f64,
    /// Distance to the limit value.
    pub gap: f64,
    /// Allowed distance; absent where only monotonicity is asserted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceLimitReport {
    /// `D(B || A) = tr B (log B - log A)`.
    pub relative_entropy: f64,
    /// `log λ_max(A^{-1/2} B A^{-1/2})`.
    pub max_relative: f64,
    pub thompson: f64,
    pub near_one: Vec<LimitPoint>,
    pub large_t: Vec<LimitPoint>,
    pub near_one_holds: bool,
    pub monotone_holds: bool,
    pub all_hold: bool,
}

pub const NEAR_ONE_GRID: [f64; 4] = [1.0 - 1e-3, 1.0 + 1e-3, 1.0 - 1e-4, 1.0 + 1e-4];
pub const LARGE_T_GRID: [f64; 4] = [8.0, 16.0, 32.0, 64.0];

/// Trace tolerance for density matrices.
const DENSITY_TOL: f64 = 1e-10;

/// `D_t(B || A)` near `t = 1` against the relative entropy, with
/// `|D_t - D| <= 10 |t - 1| (1 + |D|)`, and for large `t`, a nondecreasing
/// approach from below to `log λ_max(A^{-1/2} B A^{-1/2})`.
pub fn divergence_limit_check(a: &SpdMatrix, b: &SpdMatrix) -> Result<DivergenceLimitReport> {
    check_dims(a, b)?;
    for (name, m) in [("A", a), ("B", b)] {
        if (m.trace() - 1.0).abs() > DENSITY_TOL {
            return Err(Error::DomainError(format!(
                "{name} has trace {} but a density matrix is needed",
                m.trace()
            )));
        }
    }
    let re = umegaki_relative_entropy(b, a)?;
    let near_one = NEAR_ONE_GRID
        .iter()
        .map(|&t| -> Result<LimitPoint> {
            let value = sandwiched_divergence_unchecked(a, b, t)?;
            let bound = 10.0 * (t - 1.0).abs() * (1.0 + re.abs());
            let gap = (value - re).abs();
            Ok(LimitPoint {
                t,
                value,
                gap,
                bound: Some(bound),
                holds: gap <= bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_relative = relative_spectrum(a, b)?[0].ln();
    let tol = VERDICT_TOL * (1.0 + max_relative.abs());
    let mut large_t = Vec::with_capacity(LARGE_T_GRID.len());
    let mut previous = f64::NEG_INFINITY;
    for &t in &LARGE_T_GRID {
        let value = sandwiched_divergence_unchecked(a, b, t)?;
        let holds = value >= previous - tol && value <= max_relative + tol;
        large_t.push(LimitPoint {
            t,
            value,
            gap: max_relative - value,
            bound: None,
            holds,
        });
        previous = value;
    }
    let near_one_holds = near_one.iter().all(|p| p.holds);
    let monotone_holds = large_t.iter().all(|p| p.holds);
    Ok(DivergenceLimitReport {
        relative_entropy: re,
        max_relative,
        thompson: thompson_metric(a, b)?,
        near_one,
        large_t,
        near_one_holds,
        monotone_holds,
        all_hold: near_one_holds && monotone_holds,
    })
}

/// `D_max(B || A)`, the large-`t` limit of `D_t(B || A)`.
pub fn divergence_limit_target(a: &SpdMatrix, b: &SpdMatrix) -> Result<f64> {
    max_relative_entropy(b, a)
}

/// Convex scalar functions on `(0, ∞)` lifted through Schatten norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeFn {
    /// `x^s`, `s` outside `(0, 1)`.
    Power(f64),
    Exp,
}

impl GaugeFn {
    /// Parses `power:<s>`, `negative-power[:<s>]` (default `s = -1`) or `exp`.
    pub fn parse(id: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unsupported function id {id:?}"));
        let exponent = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        let f = match id.split_once(':') {
            None if id == "exp" => GaugeFn::Exp,
            None if id == "negative-power" => GaugeFn::Power(-1.0),
            Some(("power", s)) => GaugeFn::Power(exponent(s)?),
            Some(("negative-power", s)) => {
                let s = exponent(s)?;
                if s >= 0.0 {
                    return Err(bad());
                }
                GaugeFn::Power(s)
            }
            _ => return Err(bad()),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(self) -> Result<()> {
        match self {
            GaugeFn::Power(s) if !s.is_finite() || (s > 0.0 && s < 1.0) => Err(Error::InvalidInput(
                format!("x^{s} is not convex on the positive axis"),
            )),
            _ => Ok(()),
        }
    }

    pub fn id(self) -> String {
        match self {
            GaugeFn::Power(s) => format!("power:{s}"),
            GaugeFn::Exp => "exp".into(),
        }
    }

    pub fn eval(self, x: f64) -> f64 {
        match self {
            GaugeFn::Power(s) => x.powf(s),
            GaugeFn::Exp => x.exp(),
        }
    }

    pub fn strictly_convex(self) -> bool {
        match self {
            GaugeFn::Power(s) => s != 0.0 && s != 1.0,
            GaugeFn::Exp => true,
        }
    }
}

fn check_schatten(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::ParameterError(format!("Schatten index p = {p} must be >= 1")));
    }
    Ok(())
}

/// `||f(A)||_p` through the eigenvalues of `A`.
fn gauge_value(f: GaugeFn, p: f64, a: &SpdMatrix) -> f64 {
    let v = a.decomp().eigenvalues.iter().map(|&l| f.eval(l).abs());
    if p.is_infinite() {
        v.fold(0.0, f64::max)
    } else {
        v.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Midpoint inequality `||f((A+B)/2)||_p <= (||f(A)||_p + ||f(B)||_p)/2` on one pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeTrial {
    pub margin: f64,
    pub scale: f64,
    pub holds: bool,
    /// Whether strictness is asserted: strictly convex `f`, finite `p`,
    /// `||A - B||_F >= 0.1`.
    pub strict_required: bool,
    pub strict_holds: bool,
}

pub fn gauge_midpoint(f: GaugeFn, p: f64, a: &SpdMatrix, b: &SpdMatrix) -> Result<GaugeTrial> {
    f.validate()?;
    check_schatten(p)?;
    check_dims(a, b)?;
    let mid = SpdMatrix::new((a.as_hermitian() + b.as_hermitian()).scale(0.5))?;
    let (fa, fb) = (gauge_value(f, p, a), gauge_value(f, p, b));
    let margin = 0.5 * (fa + fb) - gauge_value(f, p, &mid);
    let scale = fa.max(fb);
    let strict_required =
        f.strictly_convex() && p.is_finite() && a.frobenius_distance(b) >= 0.1;
    Ok(GaugeTrial {
        margin,
        scale,
        holds: margin >= -VERDICT_TOL * scale,
        strict_required,
        strict_holds: margin > 1e-12 * scale,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub function: String,
    pub p: f64,
    pub trials: usize,
    pub seed: u64,
    pub violations: usize,
    pub strict_checked: usize,
    pub strict_violations: usize,
    /// Smallest `margin / scale` over the trials.
    pub worst_relative_margin: f64,
    pub all_hold: bool,
}

/// Midpoint convexity of `X -> ||f(X)||_p` on seeded random pairs of `n x n`
/// matrices with spectra in `[0.1, 10]`.
pub fn gauge_convexity_check(
    f: GaugeFn,
    p: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<GaugeReport> {
    f.validate()?;
    check_schatten(p)?;
    let mut cfg = SuiteConfig::new(Suite::Gauge, n, trials, seed);
    cfg.gauge = vec![(f, p)];
    let report = run_suite(&cfg)?;
    let strict = report.checks.iter().find(|c| c.check.ends_with("strict"));
    let main = report
        .checks
        .iter()
        .find(|c| !c.check.ends_with("strict"))
        .ok_or_else(|| Error::InvalidInput("no trials were run".into()))?;
    Ok(GaugeReport {
        function: f.id(),
        p,
        trials,
        seed,
        violations: main.total - main.passed,
        strict_checked: strict.map_or(0, |c| c.total),
        strict_violations: strict.map_or(0, |c| c.total - c.passed),
        worst_relative_margin: main.worst_margin,
        all_hold: report.all_hold,
    })
}

/// `t` in `(T_MIN, 1/2]`.
fn check_t_half(t: f64) -> Result<()> {
    if !(t > T_MIN && t <= 0.5) {
        return Err(Error::ParameterError(format!(
            "t = {t} must lie in ({T_MIN}, 0.5]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;

//! Seeded verification suites. Trials are independent: trial `i` draws its
//! matrices from `trial_seed(derive_seed(seed, suite), i)`, trials run on a
//! rayon pool and results are merged by trial index, so reports do not
//! depend on the thread count.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    check_t_half, compare_sorted, divergence_limit_check, gamma_limit_check, gauge_midpoint,
    half_consistency_check, log_majorization_chain, minimize_representation, trace_chain_check,
    variational_minimizer, variational_value, ChainReport, GaugeFn, Relation, Representation,
    GAMMA_GRID, VERDICT_TOL,
};
use crate::entropy::{check_t_unit, fidelity, sandwich_log_eigenvalues};
use crate::extended::{self, Dd};
use crate::linalg::{
    derive_seed, random_density, random_hermitian, random_spd_with, seeded_rng, trial_seed,
    MatrixJson, SeededRng, SpdMatrix,
};
use crate::{Error, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SANDWICH_OPT_THREADS";

/// At most this many failing trials are listed in a report.
const MAX_FAILURES: usize = 100;

/// At most this many open-question candidates are stored.
const MAX_CANDIDATES: usize = 200;

/// Iteration budget of the descent on objectives `I` and `Ii`.
const DESCENT_ITERS: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    TraceChain,
    Variational,
    LogMajor,
    Limits,
    Gauge,
    OpenQuestion,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::TraceChain,
        Suite::Variational,
        Suite::LogMajor,
        Suite::Limits,
        Suite::Gauge,
        Suite::OpenQuestion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Suite::TraceChain => "trace-chain",
            Suite::Variational => "variational",
            Suite::LogMajor => "log-major",
            Suite::Limits => "limits",
            Suite::Gauge => "gauge",
            Suite::OpenQuestion => "open-question",
        }
    }

    pub fn default_t_grid(self) -> Vec<f64> {
        match self {
            Suite::TraceChain | Suite::Variational | Suite::LogMajor => {
                vec![0.1, 0.3, 0.5, 0.7, 0.9]
            }
            Suite::Limits => GAMMA_GRID.to_vec(),
            Suite::Gauge => Vec::new(),
            Suite::OpenQuestion => vec![0.1, 0.25, 0.4, 0.5],
        }
    }

    /// Spectral box of the random matrices. The variational suite uses a
    /// narrower one: its minimizer `A^{(t-1)/t} #_t B` has condition number
    /// near `cond(A)^{(1-t)²/t}`, which leaves double precision at `t = 0.1`
    /// for spectra spanning two decades.
    pub fn default_box(self) -> (f64, f64) {
        match self {
            Suite::Variational => (1.0, 4.0),
            _ => (0.1, 10.0),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

/// Function and Schatten index pairs run by the gauge suite by default.
pub fn default_gauge_cases() -> Vec<(GaugeFn, f64)> {
    vec![
        (GaugeFn::Power(2.0), 1.0),
        (GaugeFn::Power(-1.0), 2.0),
        (GaugeFn::Power(3.0), 3.0),
        (GaugeFn::Power(-0.5), 1.5),
        (GaugeFn::Exp, 1.0),
        (GaugeFn::Exp, 4.0),
        (GaugeFn::Power(2.0), f64::INFINITY),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    /// Spectral box of the random matrices.
    pub alpha: f64,
    pub beta: f64,
    #[serde(skip)]
    pub gauge: Vec<(GaugeFn, f64)>,
}

impl SuiteConfig {
    pub fn new(suite: Suite, n: usize, trials: usize, seed: u64) -> Self {
        let (alpha, beta) = suite.default_box();
        Self {
            suite,
            n,
            trials,
            seed,
            t_grid: suite.default_t_grid(),
            alpha,
            beta,
            gauge: default_gauge_cases(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        crate::linalg::check_box(self.alpha, self.beta)?;
        match self.suite {
            Suite::TraceChain | Suite::Variational | Suite::LogMajor => {
                self.t_grid.iter().try_for_each(|&t| check_t_unit(t))
            }
            Suite::Limits => self.t_grid.iter().try_for_each(|&t| check_t_unit(t)),
            Suite::Gauge => {
                if self.gauge.is_empty() {
                    return Err(Error::InvalidInput("no gauge cases".into()));
                }
                Ok(())
            }
            Suite::OpenQuestion => {
                if self.n > 8 {
                    return Err(Error::ParameterError(format!(
                        "open-question search needs n <= 8, got {}",
                        self.n
                    )));
                }
                self.t_grid.iter().try_for_each(|&t| check_t_half(t))
            }
        }
    }
}

/// Pass count and worst relative margin of one check at one `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub passed: usize,
    pub total: usize,
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub all_hold: bool,
    pub checks: Vec<CheckSummary>,
    pub failures: Vec<TrialFailure>,
    pub failures_dropped: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_question: Option<OpenQuestionReport>,
}

/// One asserted property evaluated in one trial.
struct Outcome {
    check: String,
    t: Option<f64>,
    holds: bool,
    /// Relative margin; negative beyond tolerance means a violation.
    margin: f64,
    detail: Option<String>,
}

impl Outcome {
    fn new(check: impl Into<String>, t: Option<f64>, holds: bool, margin: f64) -> Self {
        Self {
            check: check.into(),
            t,
            holds,
            margin,
            detail: None,
        }
    }
}

/// Thread cap from [`THREADS_ENV`]; `None` uses the machine parallelism.
pub fn thread_limit() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
}

/// Runs `f(index, seed)` for every trial and returns the results in index order.
fn run_trials<T, F>(trials: usize, stream: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_limit().unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| f(i, trial_seed(stream, i as u64)))
            .collect()
    }))
}

fn random_pair(cfg: &SuiteConfig, rng: &mut SeededRng) -> Result<(SpdMatrix, SpdMatrix)> {
    let a = random_spd_with(cfg.n, cfg.alpha, cfg.beta, rng)?;
    let b = random_spd_with(cfg.n, cfg.alpha, cfg.beta, rng)?;
    Ok((a, b))
}

fn chain_outcomes(report: &ChainReport, out: &mut Vec<Outcome>) {
    for v in &report.verdicts {
        out.push(Outcome::new(
            format!("{}<={}", v.lower, v.upper),
            Some(report.t),
            v.verdict.holds,
            v.verdict.relative_margin(),
        ));
    }
}

fn relative(x: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        x / scale
    } else {
        x
    }
}

fn trace_chain_trial(cfg: &SuiteConfig, seed: u64) -> Result<Vec<Outcome>> {
    let (a, b) = random_pair(cfg, &mut seeded_rng(seed))?;
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        chain_outcomes(&trace_chain_check(&a, &b, t)?, &mut out);
        if t == 0.5 {
            let h = half_consistency_check(&a, &b)?;
            out.push(Outcome::new(
                "half:classical-fidelity",
                Some(t),
                h.fidelity_holds,
                -relative((h.fidelity - h.classical_fidelity).abs(), h.fidelity),
            ));
            out.push(Outcome::new(
                "half:bures",
                Some(t),
                h.bures_holds,
                -relative((h.bures_squared - h.trace_gap).abs(), 0.5 * (a.trace() + b.trace())),
            ));
        }
    }
    Ok(out)
}

fn log_major_trial(cfg: &SuiteConfig, seed: u64) -> Result<Vec<Outcome>> {
    let (a, b) = random_pair(cfg, &mut seeded_rng(seed))?;
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        chain_outcomes(&log_majorization_chain(&a, &b, t)?, &mut out);
    }
    Ok(out)
}

fn variational_trial(cfg: &SuiteConfig, seed: u64) -> Result<Vec<Outcome>> {
    let mut rng = seeded_rng(seed);
    let (a, b) = random_pair(cfg, &mut rng)?;
    let mut out = Vec::new();
    for &t in &cfg.t_grid {
        let f = fidelity(&a, &b, t)?;
        for rep in Representation::ALL {
            let x = random_spd_with(cfg.n, cfg.alpha, cfg.beta, &mut rng)?;
            let v = variational_value(&a, &b, t, &x, rep)?;
            let margin = (v - f) / f;
            out.push(Outcome::new(
                format!("lower-bound:{}", rep.label()),
                Some(t),
                margin >= -1e-9,
                margin,
            ));
        }
        let x0 = variational_minimizer(&a, &b, t)?;
        for rep in [Representation::Iii, Representation::Iv] {
            let gap = (variational_value(&a, &b, t, &x0, rep)? - f).abs() / f;
            out.push(Outcome::new(
                format!("tight:{}", rep.label()),
                Some(t),
                gap <= 1e-9,
                -gap,
            ));
        }
        // X0 is a local minimum of (iii): a small perturbation raises the value
        let base = variational_value(&a, &b, t, &x0, Representation::Iii)?;
        let e = random_hermitian(cfg.n, 1e-3 * x0.min_eig(), &mut rng);
        let xp = SpdMatrix::new(x0.as_hermitian() + &e)?;
        let raised = variational_value(&a, &b, t, &xp, Representation::Iii)?;
        out.push(Outcome::new(
            "perturbed:iii",
            Some(t),
            raised > base,
            (raised - base) / f,
        ));
        for rep in [Representation::I, Representation::Ii] {
            let m = minimize_representation(&a, &b, t, rep, DESCENT_ITERS)?;
            out.push(Outcome::new(
                format!("minimized:{}", rep.label()),
                Some(t),
                m.relative_gap.abs() <= 1e-6,
                -m.relative_gap.abs(),
            ));
        }
    }
    Ok(out)
}

fn limits_trial(cfg: &SuiteConfig, seed: u64) -> Result<Vec<Outcome>> {
    let mut rng = seeded_rng(seed);
    let a = random_density(cfg.n, cfg.alpha, cfg.beta, &mut rng)?;
    let b = random_density(cfg.n, cfg.alpha, cfg.beta, &mut rng)?;
    let d = divergence_limit_check(&a, &b)?;
    let mut out = Vec::new();
    for p in &d.near_one {
        let bound = p.bound.unwrap_or(0.0);
        out.push(Outcome::new(
            "near-one",
            Some(p.t),
            p.holds,
            relative(bound - p.gap, bound),
        ));
    }
    for p in &d.large_t {
        out.push(Outcome::new(
            "large-t-monotone",
            Some(p.t),
            p.holds,
            relative(p.gap, 1.0 + d.max_relative.abs()),
        ));
    }
    let (ga, gb) = random_pair(cfg, &mut rng)?;
    let g = gamma_limit_check(&ga, &gb, &cfg.t_grid)?;
    for p in &g.points {
        let scale = gb.max_eig().powf(p.t) * ga.max_eig().powf(1.0 - p.t);
        out.push(Outcome::new(
            "gamma-envelope",
            Some(p.t),
            p.envelope_holds,
            relative(p.lower_margin.min(p.upper_margin), scale),
        ));
        out.push(Outcome::new(
            "gamma-bound",
            Some(p.t),
            p.bound_holds,
            relative(p.envelope_bound - p.error, p.envelope_bound),
        ));
    }
    Ok(out)
}

fn gauge_trial(cfg: &SuiteConfig, seed: u64) -> Result<Vec<Outcome>> {
    let (a, b) = random_pair(cfg, &mut seeded_rng(seed))?;
    let mut out = Vec::new();
    for &(f, p) in &cfg.gauge {
        let g = gauge_midpoint(f, p, &a, &b)?;
        let label = format!("{} p={p}", f.id());
        let m = relative(g.margin, g.scale);
        out.push(Outcome::new(label.clone(), None, g.holds, m));
        if g.strict_required {
            out.push(Outcome::new(format!("{label} strict"), None, g.strict_holds, m));
        }
    }
    Ok(out)
}

/// Runs one suite and merges the trial outcomes by index.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let stream = derive_seed(cfg.seed, cfg.suite.label());
    let open_question = if cfg.suite == Suite::OpenQuestion {
        Some(search(cfg, stream)?)
    } else {
        None
    };
    let trial = |_: usize, seed: u64| -> Result<Vec<Outcome>> {
        match cfg.suite {
            Suite::TraceChain => trace_chain_trial(cfg, seed),
            Suite::LogMajor => log_major_trial(cfg, seed),
            Suite::Variational => variational_trial(cfg, seed),
            Suite::Limits => limits_trial(cfg, seed),
            Suite::Gauge => gauge_trial(cfg, seed),
            Suite::OpenQuestion => Ok(Vec::new()),
        }
    };
    let results = if cfg.suite == Suite::OpenQuestion {
        Vec::new()
    } else {
        run_trials(cfg.trials, stream, trial)?
    };

    let mut checks: Vec<CheckSummary> = Vec::new();
    let mut failures = Vec::new();
    let mut failures_dropped = 0;
    let mut push_failure = |f: TrialFailure| {
        if failures.len() < MAX_FAILURES {
            failures.push(f);
        } else {
            failures_dropped += 1;
        }
    };
    for (i, result) in results.into_iter().enumerate() {
        let seed = trial_seed(stream, i as u64);
        let outcomes = match result {
            Ok(o) => o,
            Err(e) => {
                let mut o = Outcome::new("evaluation", None, false, f64::NAN);
                o.detail = Some(e.to_string());
                vec![o]
            }
        };
        for o in outcomes {
            let pos = checks
                .iter()
                .position(|c| c.check == o.check && c.t == o.t)
                .unwrap_or_else(|| {
                    checks.push(CheckSummary {
                        check: o.check.clone(),
                        t: o.t,
                        passed: 0,
                        total: 0,
                        worst_margin: f64::INFINITY,
                    });
                    checks.len() - 1
                });
            let c = &mut checks[pos];
            c.total += 1;
            if o.holds {
                c.passed += 1;
            } else {
                push_failure(TrialFailure {
                    check: o.check,
                    t: o.t,
                    trial: i,
                    seed,
                    margin: o.margin,
                    detail: o.detail,
                });
            }
            if !(o.margin >= c.worst_margin) {
                c.worst_margin = o.margin;
            }
        }
    }
    let all_hold = checks.iter().all(|c| c.passed == c.total);
    Ok(SuiteReport {
        suite: cfg.suite,
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        t_grid: cfg.t_grid.clone(),
        alpha: cfg.alpha,
        beta: cfg.beta,
        all_hold,
        checks,
        failures,
        failures_dropped,
        open_question,
    })
}

/// Relations tried in the open-question search.
const OPEN_RELATIONS: [Relation; 3] = [
    Relation::WeakMajorize,
    Relation::WeakLogMajorize,
    Relation::EntrywiseLe,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenQuestionSummary {
    pub t: f64,
    pub trials: usize,
    pub relation: Relation,
    /// Trials flagged in double precision.
    pub violations: usize,
    /// Flagged trials that the double-double recomputation confirms.
    pub confirmed: usize,
    /// Smallest relative margin over all trials.
    pub worst_margin: f64,
}

/// A trial where `λ(sandwich)^t` is not dominated by `λ((1-t)A + tB)`,
/// with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenQuestionCandidate {
    pub trial: usize,
    pub seed: u64,
    pub t: f64,
    pub relation: Relation,
    pub margin: f64,
    pub extended_margin: f64,
    pub confirmed: bool,
    pub a: MatrixJson,
    pub b: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenQuestionReport {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub summaries: Vec<OpenQuestionSummary>,
    pub candidates: Vec<OpenQuestionCandidate>,
    pub candidates_dropped: usize,
}

/// Empirical search on whether `λ(A^{(1-t)/2t} B A^{(1-t)/2t})^t` is dominated
/// by `λ((1-t)A + tB)` for `t <= 1/2`, under weak majorization, weak log
/// majorization and entrywise order. Flagged trials are recomputed in
/// double-double before being counted as confirmed. No claim either way is
/// made from the result.
pub fn open_question_search(
    n: usize,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<OpenQuestionReport> {
    let mut cfg = SuiteConfig::new(Suite::OpenQuestion, n, trials, seed);
    cfg.t_grid = t_grid.to_vec();
    cfg.validate()?;
    search(&cfg, derive_seed(seed, Suite::OpenQuestion.label()))
}

struct Flag {
    t_index: usize,
    relation_index: usize,
    margin: f64,
    candidate: Option<OpenQuestionCandidate>,
}

fn search(cfg: &SuiteConfig, stream: u64) -> Result<OpenQuestionReport> {
    let per_trial = run_trials(cfg.trials, stream, |i, seed| -> Result<Vec<Flag>> {
        let (a, b) = random_pair(cfg, &mut seeded_rng(seed))?;
        let mut flags = Vec::new();
        for (ti, &t) in cfg.t_grid.iter().enumerate() {
            let logs = sandwich_log_eigenvalues(&a, &b, t)?;
            let vals: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
            let mean = (&a.scale(1.0 - t) + &b.scale(t)).eigenvalues()?;
            let mean_logs: Vec<f64> = mean.iter().map(|m| m.ln()).collect();
            for (ri, &rel) in OPEN_RELATIONS.iter().enumerate() {
                let v = if rel.is_log() {
                    compare_sorted(&logs, &mean_logs, rel, None)
                } else {
                    compare_sorted(&vals, &mean, rel, None)
                };
                let margin = v.relative_margin();
                let candidate = if v.holds {
                    None
                } else {
                    let ext = extended_margin(&a, &b, t, rel);
                    Some(OpenQuestionCandidate {
                        trial: i,
                        seed,
                        t,
                        relation: rel,
                        margin,
                        extended_margin: ext / v.scale,
                        confirmed: ext < -VERDICT_TOL * v.scale,
                        a: MatrixJson::from(&a),
                        b: MatrixJson::from(&b),
                    })
                };
                flags.push(Flag {
                    t_index: ti,
                    relation_index: ri,
                    margin,
                    candidate,
                });
            }
        }
        Ok(flags)
    })?;

    let mut summaries: Vec<OpenQuestionSummary> = cfg
        .t_grid
        .iter()
        .flat_map(|&t| {
            OPEN_RELATIONS.iter().map(move |&relation| OpenQuestionSummary {
                t,
                trials: 0,
                relation,
                violations: 0,
                confirmed: 0,
                worst_margin: f64::INFINITY,
            })
        })
        .collect();
    let mut candidates = Vec::new();
    let mut candidates_dropped = 0;
    for flags in per_trial {
        for f in flags? {
            let s = &mut summaries[f.t_index * OPEN_RELATIONS.len() + f.relation_index];
            s.trials += 1;
            s.worst_margin = s.worst_margin.min(f.margin);
            if let Some(c) = f.candidate {
                s.violations += 1;
                s.confirmed += usize::from(c.confirmed);
                if candidates.len() < MAX_CANDIDATES {
                    candidates.push(c);
                } else {
                    candidates_dropped += 1;
                }
            }
        }
    }
    Ok(OpenQuestionReport {
        n: cfg.n,
        trials: cfg.trials,
        seed: cfg.seed,
        t_grid: cfg.t_grid.clone(),
        summaries,
        candidates,
        candidates_dropped,
    })
}

/// Worst margin of `λ(sandwich)^t ≺ λ((1-t)A + tB)` in double-double.
fn extended_margin(a: &SpdMatrix, b: &SpdMatrix, t: f64, relation: Relation) -> f64 {
    let x = extended::sandwich_eigenvalues(a, b, t);
    let y = extended::mean_eigenvalues(a, b, t);
    let (x, y): (Vec<Dd>, Vec<Dd>) = if relation.is_log() {
        (x.into_iter().map(Dd::ln).collect(), y.into_iter().map(Dd::ln).collect())
    } else {
        (x, y)
    };
    let mut worst = f64::INFINITY;
    let (mut sx, mut sy) = (Dd::ZERO, Dd::ZERO);
    for (xi, yi) in x.into_iter().zip(y) {
        let d = if relation == Relation::EntrywiseLe {
            yi - xi
        } else {
            sx = sx + xi;
            sy = sy + yi;
            sy - sx
        };
        worst = worst.min(d.to_f64());
    }
    worst
}

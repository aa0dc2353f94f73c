//! `sandwich-opt`: batch front end for the sandwich-core library.
//!
//! Exit codes: 0 on success, 1 when an asserted property fails, 2 on usage or
//! input errors. Diagnostics go to standard error.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use sandwich_core::barycenter::{
    solve_fixed_point, solve_gradient_projection, BarycenterProblem, ProblemJson, SolverOptions,
    SolverReport, Termination, DEFAULT_MAX_ITERS,
};
use sandwich_core::calculus::{
    convexity_constants, gradient_f, hessian_extreme_eigs, sharp_lower_bound, HessianOperator,
};
use sandwich_core::entropy::{evaluate, fidelity, geometric_mean, DivergenceKind};
use sandwich_core::inequalities::{run_suite, GaugeFn, Suite, SuiteConfig, SuiteReport};
use sandwich_core::linalg::{check_box, random_spd, trial_seed};
use sandwich_core::{MatrixJson, SpdMatrix};

use output::{Format, Output, Table};

#[derive(Parser, Debug)]
#[command(name = "sandwich-opt", version, about = "Sandwiched quasi-relative entropies and entropic barycenters")]
struct Cli {
    /// Output format; matrices are always JSON.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// F_t(A, B) = tr (A^s B A^s)^t with s = (1-t)/2t.
    Fidelity {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// A divergence or distance between A and B, optionally over a grid of t.
    Divergence {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// One value or a comma-separated grid.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted geometric mean A #_t B.
    Gmean {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gradient of X -> F_t(A, X).
    Grad {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extreme eigenvalues of -∇²F_t(A, ·) at X against the convexity bounds.
    HessBounds {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        t: f64,
        /// Box bounds; default to the joint spectral range of A and X.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strong-convexity and smoothness constants on [αI, βI].
    Constants {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves the weighted barycenter problem.
    Barycenter {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, value_enum, default_value_t = SolverArg::Gp)]
        solver: SolverArg,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Include the iterates in the report.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a randomized verification suite.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// One value or a comma-separated grid; defaults to the suite's grid.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Gauge suite only: `exp`, `power:<s>` or `negative-power[:<s>]`.
        #[arg(long)]
        gauge_fn: Option<String>,
        /// Gauge suite only: Schatten index, `inf` allowed.
        #[arg(long)]
        p: Option<f64>,
        /// Open-question suite only: where to store the candidate pairs.
        #[arg(long)]
        artifact: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes seeded random SPD matrices with spectra in [α, β].
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; created if missing.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Sandwiched,
    Renyi,
    Umegaki,
    Thompson,
    Max,
    Bures,
    Riemannian,
}

impl From<KindArg> for DivergenceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sandwiched => DivergenceKind::Sandwiched,
            KindArg::Renyi => DivergenceKind::RenyiClassic,
            KindArg::Umegaki => DivergenceKind::Umegaki,
            KindArg::Thompson => DivergenceKind::Thompson,
            KindArg::Max => DivergenceKind::MaxRelative,
            KindArg::Bures => DivergenceKind::Bures,
            KindArg::Riemannian => DivergenceKind::Riemannian,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolverArg {
    Gp,
    Fp,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| e.to_string())
}

/// A failed command: what to print and which exit code to use.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<sandwich_core::Error> for Failure {
    fn from(e: sandwich_core::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Reads and parses a JSON file, reporting the path and position of syntax errors.
fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        Failure::usage(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

fn read_spd(path: &Path) -> Result<SpdMatrix, Failure> {
    let m: MatrixJson = read_json(path)?;
    m.to_spd().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> CmdResult {
    let format = cli.format;
    match cli.command {
        Command::Fidelity { a, b, t, out } => {
            let (a, b) = (read_spd(&a)?, read_spd(&b)?);
            let value = fidelity(&a, &b, t)?;
            let v = evaluate_row(DivergenceKind::Fidelity, Some(t), value);
            Output::new(format, out).scalars(&[v])?;
            Ok(true)
        }
        Command::Divergence { kind, a, b, t, out } => {
            let kind = DivergenceKind::from(kind);
            let (a, b) = (read_spd(&a)?, read_spd(&b)?);
            let grid: Vec<Option<f64>> = match (kind.takes_t(), t.is_empty()) {
                (true, true) => return Err(Failure::usage(format!("--kind {kind:?} needs --t"))),
                (true, false) => t.into_iter().map(Some).collect(),
                (false, true) => vec![None],
                (false, false) => {
                    return Err(Failure::usage(format!("--kind {kind:?} takes no --t")))
                }
            };
            let values = grid
                .into_iter()
                .map(|t| evaluate(kind, &a, &b, t).map(|v| evaluate_row(v.kind, v.t, v.value)))
                .collect::<Result<Vec<_>, _>>()?;
            Output::new(format, out).scalars(&values)?;
            Ok(true)
        }
        Command::Gmean { a, b, t, out } => {
            let (a, b) = (read_spd(&a)?, read_spd(&b)?);
            let m = geometric_mean(&a, &b, t)?;
            Output::new(format, out).matrix(&MatrixJson::from(&m))?;
            Ok(true)
        }
        Command::Grad { a, x, t, out } => {
            let (a, x) = (read_spd(&a)?, read_spd(&x)?);
            let g = gradient_f(&a, &x, t)?;
            Output::new(format, out).matrix(&MatrixJson::from(&g))?;
            Ok(true)
        }
        Command::HessBounds { a, x, t, alpha, beta, out } => {
            let (a, x) = (read_spd(&a)?, read_spd(&x)?);
            let report = hess_bounds(&a, &x, t, alpha, beta)?;
            let holds = report.holds;
            Output::new(format, out).record(&report, &report.table())?;
            Ok(holds)
        }
        Command::Constants { t, alpha, beta, out } => {
            let c = convexity_constants(t, alpha, beta)?;
            let table = Table::row(
                &["t", "alpha", "beta", "k1", "k2", "cond_bound"],
                &[c.t, c.alpha, c.beta, c.k1, c.k2, c.cond_bound],
            );
            Output::new(format, out).record(&c, &table)?;
            Ok(true)
        }
        Command::Barycenter { problem, solver, eta, tol, max_iters, x0, trace, out } => {
            let pj: ProblemJson = read_json(&problem)?;
            let p = BarycenterProblem::from_json(&pj)
                .map_err(|e| Failure::usage(format!("{}: {e}", problem.display())))?;
            let x0 = x0.map(|path| read_spd(&path)).transpose()?;
            let opts = SolverOptions { eta, tol, max_iters, x0, trace };
            let report = match solver {
                SolverArg::Gp => solve_gradient_projection(&p, &opts)?,
                SolverArg::Fp => {
                    if eta.is_some() {
                        return Err(Failure::usage("--eta applies to --solver gp only"));
                    }
                    solve_fixed_point(&p, &opts)?
                }
            };
            if let Some(d) = &report.diagnostics {
                eprintln!("warning: {d}");
            }
            Output::new(format, out).record(&report, &barycenter_table(&report))?;
            Ok(report.termination == Termination::GradientTol)
        }
        Command::Verify {
            suite,
            n,
            trials,
            seed,
            t,
            alpha,
            beta,
            gauge_fn,
            p,
            artifact,
            out,
        } => {
            let mut cfg = SuiteConfig::new(suite, n, trials, seed);
            if !t.is_empty() {
                cfg.t_grid = t;
            }
            cfg.alpha = alpha.unwrap_or(cfg.alpha);
            cfg.beta = beta.unwrap_or(cfg.beta);
            match (gauge_fn, p) {
                (None, None) => {}
                _ if suite != Suite::Gauge => {
                    return Err(Failure::usage("--gauge-fn and --p apply to --suite gauge only"))
                }
                (f, p) => {
                    let f = GaugeFn::parse(f.as_deref().unwrap_or("power:2"))?;
                    f.validate()?;
                    cfg.gauge = vec![(f, p.unwrap_or(1.0))];
                }
            }
            if artifact.is_some() && suite != Suite::OpenQuestion {
                return Err(Failure::usage("--artifact applies to --suite open-question only"));
            }
            cfg.validate()?;
            let report = run_suite(&cfg)?;
            if let (Some(path), Some(oq)) = (&artifact, &report.open_question) {
                output::write_file(path, &output::json(&oq.candidates)?)?;
            }
            Output::new(format, out).record(&report, &suite_table(&report))?;
            Ok(report.all_hold)
        }
        Command::Gen { n, count, alpha, beta, seed, out } => {
            if n == 0 {
                return Err(Failure::usage("--n must be at least 1"));
            }
            check_box(alpha, beta)?;
            std::fs::create_dir_all(&out)
                .map_err(|e| Failure::usage(format!("{}: {e}", out.display())))?;
            let width = count.saturating_sub(1).to_string().len().max(3);
            let mut written = Vec::with_capacity(count);
            for i in 0..count {
                let m = random_spd(n, alpha, beta, trial_seed(seed, i as u64))?;
                let path = out.join(format!("matrix_{i:0width$}.json"));
                output::write_file(&path, &output::json(&MatrixJson::from(&m))?)?;
                written.push(path.display().to_string());
            }
            for p in written {
                println!("{p}");
            }
            Ok(true)
        }
    }
}

#[derive(Serialize)]
struct ScalarRow {
    kind: DivergenceKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    value: f64,
}

fn evaluate_row(kind: DivergenceKind, t: Option<f64>, value: f64) -> ScalarRow {
    ScalarRow { kind, t, value }
}

#[derive(Serialize)]
struct HessBounds {
    t: f64,
    alpha: f64,
    beta: f64,
    lambda_min: f64,
    lambda_max: f64,
    condition: f64,
    k1: f64,
    k2: f64,
    sharp_lower: f64,
    cond_bound: f64,
    holds: bool,
}

impl HessBounds {
    fn table(&self) -> Table {
        let mut t = Table::row(
            &[
                "t", "alpha", "beta", "lambda_min", "lambda_max", "condition", "k1", "k2",
                "sharp_lower", "cond_bound",
            ],
            &[
                self.t,
                self.alpha,
                self.beta,
                self.lambda_min,
                self.lambda_max,
                self.condition,
                self.k1,
                self.k2,
                self.sharp_lower,
                self.cond_bound,
            ],
        );
        t.push_text("holds", self.holds.to_string());
        t
    }
}

/// Relative slack allowed on each bound.
const BOUND_SLACK: f64 = 1e-8;

fn hess_bounds(
    a: &SpdMatrix,
    x: &SpdMatrix,
    t: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<HessBounds, Failure> {
    let alpha = alpha.unwrap_or(a.min_eig().min(x.min_eig()));
    let beta = beta.unwrap_or(a.max_eig().max(x.max_eig()));
    let c = convexity_constants(t, alpha, beta)?;
    let tol = 1e-10 * beta;
    if !(a.within_box(alpha, beta, tol) && x.within_box(alpha, beta, tol)) {
        return Err(Failure::usage(format!(
            "A and X must have spectra in [{alpha}, {beta}]"
        )));
    }
    let op = HessianOperator::new(a, x, t)?;
    let (lo, hi) = hessian_extreme_eigs(&op);
    let sharp = sharp_lower_bound(t, beta, a)?;
    let holds = lo >= c.k1 * (1.0 - BOUND_SLACK)
        && hi <= c.k2 * (1.0 + BOUND_SLACK)
        && lo >= sharp * (1.0 - BOUND_SLACK)
        && hi / lo <= c.cond_bound * (1.0 + BOUND_SLACK);
    Ok(HessBounds {
        t,
        alpha,
        beta,
        lambda_min: lo,
        lambda_max: hi,
        condition: hi / lo,
        k1: c.k1,
        k2: c.k2,
        sharp_lower: sharp,
        cond_bound: c.cond_bound,
        holds,
    })
}

/// Convergence trace: recorded iteration, gradient norm and, for the
/// fixed-point solver, the residual.
fn barycenter_table(r: &SolverReport) -> Table {
    let mut headers = vec!["iteration", "grad_norm"];
    if !r.residuals.is_empty() {
        headers.push("residual");
    }
    let rows = r
        .grad_norms
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut row = vec![sandwich_core::barycenter::recorded_iteration(i).to_string()];
            row.push(sandwich_core::format::sig17(*g));
            if let Some(res) = r.residuals.get(i) {
                row.push(sandwich_core::format::sig17(*res));
            }
            row
        })
        .collect();
    Table::new(&headers, rows)
}

fn suite_table(r: &SuiteReport) -> Table {
    let rows = r
        .checks
        .iter()
        .map(|c| {
            vec![
                c.check.clone(),
                c.t.map(sandwich_core::format::sig17).unwrap_or_default(),
                c.passed.to_string(),
                c.total.to_string(),
                sandwich_core::format::sig17(c.worst_margin),
            ]
        })
        .collect();
    Table::new(&["check", "t", "passed", "total", "worst_margin"], rows)
}

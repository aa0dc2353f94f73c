use super::*;
use crate::entropy::fidelity;
use crate::linalg::{random_hermitian, random_spd_with, random_unitary, seeded_rng};
use proptest::prelude::*;

fn scalar_problem(a: &[f64], w: &[f64], t: f64) -> BarycenterProblem {
    let ms = a.iter().map(|&x| SpdMatrix::diag(&[x]).unwrap()).collect();
    BarycenterProblem::new(ms, w.to_vec(), t, None, None).unwrap()
}

fn random_problem(seed: u64, m: usize, n: usize, t: f64) -> BarycenterProblem {
    let mut rng = seeded_rng(seed);
    let ms = (0..m).map(|_| random_spd_with(n, 1.0, 4.0, &mut rng).unwrap()).collect();
    let ws = (0..m).map(|j| 1.0 + j as f64).collect();
    BarycenterProblem::new(ms, ws, t, Some(1.0), Some(4.0)).unwrap()
}

#[test]
fn problem_validation() {
    let a = SpdMatrix::diag(&[1.0, 2.0]).unwrap();
    let p = BarycenterProblem::new(vec![a.clone(), a.clone()], vec![1.0, 3.0], 0.5, None, None)
        .unwrap();
    assert_eq!(p.weights(), &[0.25, 0.75]);
    assert_eq!((p.alpha(), p.beta()), (1.0, 2.0));
    assert!(BarycenterProblem::new(vec![a.clone()], vec![1.0, 1.0], 0.5, None, None).is_err());
    assert!(BarycenterProblem::new(vec![a.clone()], vec![-1.0], 0.5, None, None).is_err());
    assert!(BarycenterProblem::new(vec![a.clone()], vec![1.0], 1.0, None, None).is_err());
    assert!(BarycenterProblem::new(vec![a.clone()], vec![1.0], 0.5, Some(1.5), None).is_err());
    assert!(BarycenterProblem::new(vec![a.clone()], vec![1.0], 0.5, Some(1.0 + 1e-12), None).is_ok());
    let b = SpdMatrix::identity(3);
    assert!(matches!(
        BarycenterProblem::new(vec![a, b], vec![1.0, 1.0], 0.5, None, None),
        Err(Error::DimensionMismatch(2, 3))
    ));
}

#[test]
fn json_round_trip() {
    let p = random_problem(1, 2, 3, 0.4);
    let text = serde_json::to_string(&p.to_json()).unwrap();
    let back = BarycenterProblem::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.weights(), p.weights());
    for (x, y) in back.matrices().iter().zip(p.matrices()) {
        assert_eq!(x.as_hermitian(), y.as_hermitian());
    }
}

#[test]
fn objective_examples() {
    let mut rng = seeded_rng(2);
    let a = random_spd_with(3, 1.0, 3.0, &mut rng).unwrap();
    let p = BarycenterProblem::new(vec![a.clone()], vec![1.0], 0.3, None, None).unwrap();
    assert!(objective(&p, &a).unwrap().abs() < 1e-13);

    let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5], 0.5);
    assert!((objective(&p, &SpdMatrix::identity(1)).unwrap() - 0.25).abs() < 1e-15);

    let p = random_problem(3, 3, 4, 0.6);
    let x = random_spd_with(4, 1.0, 4.0, &mut rng).unwrap();
    let want: f64 = p
        .matrices()
        .iter()
        .zip(p.weights())
        .map(|(a, w)| w * (0.4 * a.trace() + 0.6 * x.trace() - fidelity(a, &x, 0.6).unwrap()))
        .sum();
    assert!((objective(&p, &x).unwrap() - want).abs() <= 1e-12 * want.abs().max(1.0));
}

#[test]
fn gradient_examples() {
    let mut rng = seeded_rng(4);
    let a = random_spd_with(3, 1.0, 3.0, &mut rng).unwrap();
    let p = BarycenterProblem::new(vec![a.clone()], vec![1.0], 0.3, None, None).unwrap();
    assert!(objective_gradient(&p, &a).unwrap().norm(NormKind::Frobenius) < 1e-13);
    let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5], 0.5);
    let x = SpdMatrix::diag(&[2.25]).unwrap();
    assert!(objective_gradient(&p, &x).unwrap().trace().abs() < 1e-15);
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = seeded_rng(5);
    for t in [0.2, 0.5, 0.8] {
        let p = random_problem(6, 3, 3, t);
        let x = random_spd_with(3, 1.0, 4.0, &mut rng).unwrap();
        let g = objective_gradient(&p, &x).unwrap();
        let h = 1e-5;
        for _ in 0..5 {
            let y = random_hermitian(3, 1.0, &mut rng);
            let up = objective(&p, &SpdMatrix::new(x.as_hermitian() + &y.scale(h)).unwrap()).unwrap();
            let dn = objective(&p, &SpdMatrix::new(x.as_hermitian() - &y.scale(h)).unwrap()).unwrap();
            let fd = (up - dn) / (2.0 * h);
            let exact = g.inner(&y);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{fd} vs {exact}");
        }
    }
}

#[test]
fn gradient_is_scaled_fixed_point_defect() {
    // ∇φ = t X^{-1/2} (X - F(X)) X^{-1/2}
    let mut rng = seeded_rng(7);
    let p = random_problem(8, 3, 4, 0.35);
    let x = random_spd_with(4, 1.0, 4.0, &mut rng).unwrap();
    let defect = x.as_hermitian() - &fixed_point_map(&p, &x).unwrap();
    let want = defect.congruence(&x.power(-0.5)).scale(0.35);
    let got = objective_gradient(&p, &x).unwrap();
    assert!(got.frobenius_distance(&want) <= 1e-12 * want.norm(NormKind::Frobenius).max(1.0));
}

#[test]
fn certified_rate_examples() {
    let p = scalar_problem(&[1.0, 4.0], &[1.0, 1.0], 0.5);
    let r = certified_rate(&p, Some(2.0)).unwrap();
    assert!((r.alpha_star - 1.0 / 32.0).abs() < 1e-16 && (r.beta_star - 0.5).abs() < 1e-16);
    assert!((r.q - 15.0 / 16.0).abs() < 1e-15);
    let d = certified_rate(&p, None).unwrap();
    assert_eq!(d.eta, 2.0);

    let p = scalar_problem(&[2.0, 2.0], &[1.0, 1.0], 0.3);
    let r = certified_rate(&p, None).unwrap();
    assert!((r.alpha_star - 0.21 / 2.0).abs() < 1e-15 && r.q.abs() < 1e-15);

    let p = scalar_problem(&[1.0, 2.0], &[1.0, 1.0], 0.3);
    let r = certified_rate(&p, None).unwrap();
    assert!((r.q - (1.0 - 0.5f64.powf(2.4))).abs() < 1e-15);

    for eta in [0.0, -1.0, 4.0, 5.0] {
        let p = scalar_problem(&[1.0, 4.0], &[1.0, 1.0], 0.5);
        assert!(matches!(certified_rate(&p, Some(eta)), Err(Error::InvalidStepSize { .. })));
    }
}

#[test]
fn single_matrix_recovered() {
    let mut rng = seeded_rng(9);
    let a = random_spd_with(3, 1.0, 4.0, &mut rng).unwrap();
    let p = BarycenterProblem::new(vec![a.clone()], vec![1.0], 0.5, Some(1.0), Some(4.0)).unwrap();
    let r = solve_gradient_projection(&p, &SolverOptions::default()).unwrap();
    assert_eq!(r.termination, Termination::GradientTol);
    assert!(r.minimizer.frobenius_distance(&a) <= r.error_bound);
    let f = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
    assert_eq!(f.termination, Termination::GradientTol);
    assert!(f.minimizer.frobenius_distance(&a) < 1e-8);
    assert!(fixed_point_map(&p, &a).unwrap().frobenius_distance(&a) < 1e-13);
}

#[test]
fn commuting_family_power_mean() {
    let p = scalar_problem(&[1.0, 4.0], &[0.5, 0.5], 0.5);
    let r = solve_gradient_projection(&p, &SolverOptions::default()).unwrap();
    assert!((r.minimizer.trace() - 2.25).abs() < 1e-8);
    let f = solve_fixed_point(&p, &SolverOptions::default()).unwrap();
    assert!((f.minimizer.trace() - 2.25).abs() < 1e-8);

    let mut rng = seeded_rng(10);
    let u = random_unitary(3, &mut rng);
    let spectra = [[1.0, 2.0, 3.0], [4.0, 1.5, 2.0], [2.5, 3.5, 1.0]];
    let ws = [0.2, 0.3, 0.5];
    let t = 0.3;
    let ms = spectra
        .iter()
        .map(|s| SpdMatrix::new(HermitianMatrix::diag(s).unwrap().conjugate_by(&u)).unwrap())
        .collect();
    let p = BarycenterProblem::new(ms, ws.to_vec(), t, None, None).unwrap();
    let r = solve_gradient_projection(&p, &SolverOptions::default()).unwrap();
    let want: Vec<f64> = (0..3)
        .map(|i| {
            let s: f64 = (0..3).map(|j| ws[j] * spectra[j][i].powf(1.0 - t)).sum();
            s.powf(1.0 / (1.0 - t))
        })
        .collect();
    let want = HermitianMatrix::diag(&want).unwrap().conjugate_by(&u);
    assert!(r.minimizer.frobenius_distance(&want) < 1e-8);
}

#[test]
fn solvers_agree_on_random_problems() {
    for (seed, t) in [(11, 0.3), (12, 0.5), (13, 0.7)] {
        let p = random_problem(seed, 3, 4, t);
        let gp = solve_gradient_projection(&p, &SolverOptions::default()).unwrap();
        let fp = solve_fixed_point(&p, &SolverOptions { tol: Some(1e-12), ..Default::default() })
            .unwrap();
        assert_eq!(gp.termination, Termination::GradientTol);
        assert_eq!(fp.termination, Termination::GradientTol);
        let gap = gp.minimizer.frobenius_distance(&fp.minimizer);
        assert!(gap <= 1e-7f64.max(10.0 * gp.tol / gp.alpha_star), "gap {gap}");
        assert!(gp.fixed_point_residual <= 1e-7);
        assert!(fp.grad_norms.last().unwrap() <= &(10.0 * 1e-12 * t));
        assert!(gp.max_box_violation == 0.0 && fp.max_box_violation <= 1e-10);
    }
}

#[test]
fn descent_contraction_and_error_bounds() {
    let p = random_problem(14, 3, 4, 0.5);
    let opts = SolverOptions { trace: true, ..Default::default() };
    let r = solve_gradient_projection(&p, &opts).unwrap();
    let star = solve_fixed_point(&p, &SolverOptions { tol: Some(1e-13), ..Default::default() })
        .unwrap()
        .minimizer;
    let q = r.q.unwrap();
    let d0 = r.iterates[0].frobenius_distance(&star);
    let mut prev = f64::INFINITY;
    for (k, x) in r.iterates.iter().enumerate() {
        let val = objective(&p, x).unwrap();
        assert!(val <= prev + 1e-12);
        prev = val;
        let dk = x.frobenius_distance(&star);
        assert!(dk <= q.powi(k as i32) * d0 * (1.0 + 1e-6) + 1e-12, "k={k}");
        assert!(dk <= r.grad_norms[k] / r.alpha_star + 1e-12);
    }
}

#[test]
fn start_and_step_validation() {
    let p = random_problem(15, 2, 2, 0.5);
    let bad = SpdMatrix::diag(&[0.5, 2.0]).unwrap();
    let opts = SolverOptions { x0: Some(bad), ..Default::default() };
    assert!(matches!(solve_gradient_projection(&p, &opts), Err(Error::InvalidStart(_))));
    assert!(matches!(solve_fixed_point(&p, &opts), Err(Error::InvalidStart(_))));
    let opts = SolverOptions { eta: Some(1e9), ..Default::default() };
    assert!(matches!(solve_gradient_projection(&p, &opts), Err(Error::InvalidStepSize { .. })));
    let opts = SolverOptions { max_iters: 3, ..Default::default() };
    let r = solve_gradient_projection(&p, &opts).unwrap();
    assert_eq!((r.termination, r.iterations, r.grad_norms.len()), (Termination::MaxIters, 3, 4));
}

#[test]
fn history_subsampling() {
    assert_eq!(recorded_iteration(5), 5);
    assert_eq!(recorded_iteration(HISTORY_FULL - 1), HISTORY_FULL - 1);
    assert_eq!(recorded_iteration(HISTORY_FULL), HISTORY_FULL + 9);
    for i in 0..(HISTORY_FULL + 50) {
        assert!(records(recorded_iteration(i)));
    }
    let n = (0..HISTORY_FULL + 100).filter(|&k| records(k)).count();
    assert_eq!(n, HISTORY_FULL + 10);
}

#[test]
fn report_serializes_deterministically() {
    let p = random_problem(16, 2, 3, 0.4);
    let a = serde_json::to_string(&solve_gradient_projection(&p, &SolverOptions::default()).unwrap())
        .unwrap();
    let b = serde_json::to_string(&solve_gradient_projection(&p, &SolverOptions::default()).unwrap())
        .unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"termination\":\"gradient_tol\""));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_nonnegative(seed in any::<u64>(), t in 0.05f64..0.95) {
        let p = random_problem(seed, 3, 3, t);
        let mut rng = seeded_rng(seed ^ 1);
        let x = random_spd_with(3, 0.2, 6.0, &mut rng).unwrap();
        prop_assert!(objective(&p, &x).unwrap() >= -1e-10);
    }
}

use std::sync::Arc;

use dmpfem::bench::{make_problem, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::residual::{NonlinearSystem, TransportSystem};
use dmpfem::solvers::{
    anderson_solve, golden_section, line_search, newton_solve, project_admissible, AdmissibleBounds,
    AndersonOptions, NewtonOptions,
};
use dmpfem::sparse::{Pattern, SparseOperator};
use dmpfem::timeloop::{run_steady, SolverKind, TimeConfig};
use dmpfem::Result;

fn scalar(v: f64) -> SparseOperator {
    let mut a = SparseOperator::zeros(Arc::new(Pattern::from_rows(vec![vec![0]])));
    a.set(0, 0, v);
    a
}

/// Fixed point `u = 0.5 u + 1`.
struct Contraction;

impl NonlinearSystem for Contraction {
    fn dim(&self) -> usize {
        1
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.5 * u[0] - 1.0])
    }
    fn picard(&self, u: &[f64]) -> Result<(SparseOperator, Vec<f64>)> {
        Ok((scalar(1.0), vec![0.5 * u[0] + 1.0]))
    }
    fn jacobian(&self, _: &[f64]) -> Result<SparseOperator> {
        Ok(scalar(0.5))
    }
}

/// `T(u) = u² − 4`.
struct Square;

impl NonlinearSystem for Square {
    fn dim(&self) -> usize {
        1
    }
    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![u[0] * u[0] - 4.0])
    }
    fn picard(&self, u: &[f64]) -> Result<(SparseOperator, Vec<f64>)> {
        Ok((scalar(u[0]), vec![4.0]))
    }
    fn jacobian(&self, u: &[f64]) -> Result<SparseOperator> {
        Ok(scalar(2.0 * u[0]))
    }
}

#[test]
fn plain_picard_contracts_geometrically_to_two() {
    let opts = AndersonOptions {
        m: 1,
        omega0: 1.0,
        s_min: f64::NEG_INFINITY,
        tol: 1e-12,
        ..Default::default()
    };
    let (u, rep) = anderson_solve(&Contraction, &[0.0], &opts, None).unwrap();
    assert!(rep.converged);
    assert!((u[0] - 2.0).abs() < 1e-11);
    // u_k = 2 − 2^{1−k}: the update halves every step.
    for w in rep.nlerr.windows(2).skip(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
    }
    assert!(rep.step.iter().all(|&w| w == 1.0));
}

#[test]
fn newton_iterates_match_hand_computation() {
    // 3 → 13/6 → 313/156 → …
    let expected = [13.0 / 6.0, 313.0 / 156.0];
    for (k, want) in expected.iter().enumerate() {
        let opts = NewtonOptions {
            k_max: k + 2,
            tol: 1e-300,
            ..Default::default()
        };
        let (u, rep) = newton_solve(&Square, &[3.0], &opts, None).unwrap();
        assert_eq!(rep.iterations, k + 1);
        assert!((u[0] - want).abs() < 1e-14, "{} vs {want}", u[0]);
        assert!(rep.step.iter().all(|&xi| xi == 1.0));
    }
    let (u, rep) = newton_solve(&Square, &[3.0], &NewtonOptions { tol: 1e-14, ..Default::default() }, None).unwrap();
    assert!(rep.converged && (u[0] - 2.0).abs() < 1e-14);
    // Quadratic convergence: e_{k+1} ≈ e_k² / 4.
    let e = &rep.nlerr;
    assert!(e[2] < 10.0 * e[1] * e[1]);
}

#[test]
fn line_search_examples() {
    let mut decreasing = |x: f64| Ok(1.0 - x);
    let (x, _) = golden_section(&mut decreasing, 0.0, 1.0, 1e-4).unwrap();
    assert!((1.0 - x) <= 1e-4);
    let mut bowl = |x: f64| Ok((x - 0.3) * (x - 0.3) + 1.0);
    let (x, v) = golden_section(&mut bowl, 0.0, 1.0, 1e-4).unwrap();
    assert!((x - 0.3).abs() <= 1e-4 && (v - 1.0).abs() < 1e-8);
    // Exact Newton step of a linear residual.
    let (xi, _) = line_search(&Contraction, &[0.0], &[2.0], 1e-4).unwrap();
    assert!((xi - 1.0).abs() <= 1e-4);
}

#[test]
fn projection_examples() {
    let b = AdmissibleBounds::new(0.0, 1.0).unwrap();
    let mut u = vec![-0.1, 0.5, 1.2];
    project_admissible(&mut u, &b);
    assert_eq!(u, vec![0.0, 0.5, 1.0]);
    let again = {
        let mut v = u.clone();
        project_admissible(&mut v, &b);
        v
    };
    assert_eq!(again, u);
    let mut inside = vec![0.25, 0.75];
    project_admissible(&mut inside, &b);
    assert_eq!(inside, vec![0.25, 0.75]);
}

#[test]
fn projected_anderson_clips_overshoot() {
    // Picard lands on 1.2 at the first step; the stored iterate is clipped.
    struct Overshoot;
    impl NonlinearSystem for Overshoot {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![u[0] - 1.2])
        }
        fn picard(&self, _: &[f64]) -> Result<(SparseOperator, Vec<f64>)> {
            Ok((scalar(1.0), vec![1.2]))
        }
        fn jacobian(&self, _: &[f64]) -> Result<SparseOperator> {
            Ok(scalar(1.0))
        }
    }
    let b = AdmissibleBounds::new(0.0, 1.0).unwrap();
    let opts = AndersonOptions { project: true, k_max: 4, ..Default::default() };
    let (u, rep) = anderson_solve(&Overshoot, &[0.0], &opts, Some(&b)).unwrap();
    assert!(u[0] <= 1.0);
    assert!(rep.dmp_violation.iter().all(|&(a, c)| a == 0.0 && c == 0.0));
}

fn steady_system(name: ProblemName, n: usize, cfg: &TimeConfig) -> (TransportSystem, Vec<f64>) {
    let problem = make_problem(name);
    let mesh = Arc::new(problem.mesh(n, n, ElementKind::Q1).unwrap());
    let bounds = problem.admissible_bounds(&mesh).unwrap();
    let params = cfg.stab.resolve(&problem, &mesh, &bounds);
    let sys = TransportSystem::new(mesh.clone(), problem.velocity.clone(), params)
        .with_form(cfg.form)
        .with_dirichlet(problem.dirichlet_values(&mesh, 0.0));
    let run = run_steady(&problem, &mesh, cfg).unwrap();
    (sys, run.u)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn converged_solutions_have_small_residuals() {
    for name in [ProblemName::SteadyParabolic, ProblemName::StraightDiscontinuity] {
        for solver in [SolverKind::Newton, SolverKind::Anderson] {
            let problem = make_problem(name);
            let cfg = TimeConfig::for_problem(&problem).with_solver(solver);
            let (sys, u) = steady_system(name, 12, &cfg);
            let t = sys.residual(&u).unwrap();
            let g = sys.rhs(&u);
            let rel = norm(&t) / norm(&g);
            assert!(rel <= 10.0 * cfg.newton.tol, "{name} {}: {rel:e}", solver.name());
        }
    }
}

#[test]
fn newton_converges_superlinearly_on_steady_benchmarks() {
    for name in [ProblemName::SteadyParabolic, ProblemName::StraightDiscontinuity] {
        let problem = make_problem(name);
        let mesh = Arc::new(problem.mesh(12, 12, ElementKind::Q1).unwrap());
        let cfg = TimeConfig::for_problem(&problem).with_tolerance(1e-10);
        let run = run_steady(&problem, &mesh, &cfg).unwrap();
        assert!(run.report.converged);
        let e = &run.report.nlerr;
        let k = e.len();
        assert!(k >= 3);
        let (a, b, c) = (e[k - 3], e[k - 2], e[k - 1]);
        assert!(c / b < b / a, "{name}: ratios {} {}", b / a, c / b);
        let order = (c / b).ln() / (b / a).ln();
        assert!(order >= 1.5, "{name}: order {order}");
    }
}

#[test]
fn straight_headline_case_takes_about_eighteen_newton_steps() {
    let problem = make_problem(ProblemName::StraightDiscontinuity);
    let mesh = Arc::new(problem.mesh(48, 48, ElementKind::Q1).unwrap());
    let run = run_steady(&problem, &mesh, &TimeConfig::for_problem(&problem)).unwrap();
    assert!(run.report.converged);
    assert!((9..=36).contains(&run.report.iterations), "{}", run.report.iterations);
}

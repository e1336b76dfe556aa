//! Anderson-accelerated Picard against damped Newton, with and without the
//! projection onto admissible values.
//!
//! Usage: `solver_comparison [n]`

use std::sync::Arc;

use dmpfem::bench::{make_problem, violating_iterations, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::timeloop::{run_steady, SolverKind, TimeConfig};

fn main() -> dmpfem::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(32, |s| s.parse().expect("n"));
    let problem = make_problem(ProblemName::StraightDiscontinuity);
    let mesh = Arc::new(problem.mesh(n, n, ElementKind::Q1)?);
    for solver in [SolverKind::Anderson, SolverKind::Newton] {
        for project in [false, true] {
            let mut cfg = TimeConfig::for_problem(&problem).with_solver(solver);
            cfg.projection = project;
            let run = run_steady(&problem, &mesh, &cfg)?;
            println!(
                "{:<8} projected={project:<5} iterations={:4} converged={} iterates outside bounds={}",
                solver.name(),
                run.report.iterations,
                run.report.converged,
                violating_iterations(&run.report).len()
            );
        }
    }
    Ok(())
}

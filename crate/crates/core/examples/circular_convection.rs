//! Steady rotation of a band on `[0,1]×[−1,1]` with a 64×128 Q1 mesh.
//!
//! Usage: `circular_convection [q] [eps] [anderson|newton] [sigma_factor]`

use std::sync::Arc;

use dmpfem::bench::{make_problem, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::timeloop::{run_steady, SolverKind, TimeConfig};

fn main() -> dmpfem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let q: f64 = args.first().map_or(Ok(1.0), |s| s.parse()).expect("q");
    let eps: f64 = args.get(1).map_or(Ok(1e-1), |s| s.parse()).expect("eps");
    let solver: SolverKind = args.get(2).map_or(Ok(SolverKind::Newton), |s| s.parse())?;
    let sigma_factor: f64 = args.get(3).map_or(Ok(1e-5), |s| s.parse()).expect("sigma factor");

    let problem = make_problem(ProblemName::CircularConvection);
    let d = problem.defaults;
    let mesh = Arc::new(problem.mesh(d.nx, d.ny, ElementKind::Q1)?);
    let mut cfg = TimeConfig::for_problem(&problem).with_solver(solver);
    cfg.stab.q = q;
    cfg.stab.eps = eps;
    cfg.stab.sigma_factor = sigma_factor;
    let run = run_steady(&problem, &mesh, &cfg)?;
    let e = problem.errors(&mesh, &run.u)?;
    println!(
        "q={q} eps={eps:e} solver={} iterations={} converged={}",
        solver.name(),
        run.report.iterations,
        run.report.converged
    );
    println!(
        "L1={:.3e} L1_out={:.3e} L2={:.3e} L2_out={:.3e}",
        e.l1, e.l1_out, e.l2, e.l2_out
    );
    Ok(())
}

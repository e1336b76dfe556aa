//! Steady transport of a discontinuity at 48×48, the headline table case.
//!
//! Usage: `straight_discontinuity [q] [eps] [anderson|newton] [n] [sigma_factor]`

use std::sync::Arc;

use dmpfem::bench::{make_problem, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::stabilization::{DetectorKind, SigmaRule};
use dmpfem::timeloop::{run_steady, SolverKind, TimeConfig};

fn main() -> dmpfem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let q: f64 = args.first().map_or(Ok(25.0), |s| s.parse()).expect("q");
    let eps: f64 = args.get(1).map_or(Ok(1e-4), |s| s.parse()).expect("eps");
    let solver: SolverKind = args.get(2).map_or(Ok(SolverKind::Newton), |s| s.parse())?;
    let n: usize = args.get(3).map_or(Ok(48), |s| s.parse()).expect("n");
    let sigma_factor: f64 = args.get(4).map_or(Ok(1e-5), |s| s.parse()).expect("sigma factor");

    let problem = make_problem(ProblemName::StraightDiscontinuity);
    let mesh = Arc::new(problem.mesh(n, n, ElementKind::Q1)?);
    let mut cfg = TimeConfig::for_problem(&problem).with_solver(solver);
    cfg.stab.q = q;
    cfg.stab.eps = eps;
    cfg.stab.sigma_rule = SigmaRule::BetaEps;
    cfg.stab.sigma_factor = sigma_factor;
    if eps == 0.0 {
        cfg.stab.detector = DetectorKind::Nonsmooth;
    }
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
    if std::env::var_os("SHOW_HISTORY").is_some() {
        for (k, (e, w)) in run.report.nlerr.iter().zip(&run.report.step).enumerate() {
            println!("{:4} {e:.3e} {w:.2}", k + 1);
        }
    }
    Ok(())
}

//! Mesh refinement on the smooth parabolic layer problem.
//!
//! Usage: `convergence_study [q1|p1] [galerkin]`

use dmpfem::bench::{convergence_study, make_problem, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::stabilization::DetectorKind;
use dmpfem::timeloop::TimeConfig;

fn main() -> dmpfem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = match args.first().map(String::as_str) {
        Some("p1") => ElementKind::P1,
        _ => ElementKind::Q1,
    };
    let problem = make_problem(ProblemName::SteadyParabolic);
    let mut cfg = TimeConfig::for_problem(&problem);
    if args.iter().any(|a| a == "galerkin") {
        cfg.stab.detector = DetectorKind::Off;
    }
    println!("{:>4} {:>10} {:>10} {:>10} {:>6} {:>5}", "n", "L1", "L2", "EOC", "iters", "conv");
    for row in convergence_study(&problem, &[12, 24, 48, 96], kind, &cfg)? {
        let eoc = row.eoc.map_or("-".to_string(), |e| format!("{e:.3}"));
        println!(
            "{:>4} {:>10.3e} {:>10.3e} {:>10} {:>6} {:>5}",
            row.n, row.l1, row.l2, eoc, row.iterations, row.converged
        );
    }
    Ok(())
}

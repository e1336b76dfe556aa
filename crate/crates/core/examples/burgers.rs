//! Inviscid 2D Burgers equation on a unit square, written as a VTK field.
//!
//! Usage: `burgers [n] [out.vtk]`

use std::path::PathBuf;
use std::sync::Arc;

use dmpfem::bench::{make_problem, ProblemName};
use dmpfem::io::write_field;
use dmpfem::mesh::ElementKind;
use dmpfem::timeloop::{run_transient, TimeConfig};

fn main() -> dmpfem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(64, |s| s.parse().expect("n"));
    let out = PathBuf::from(args.get(1).map_or("burgers.vtk", String::as_str));
    let problem = make_problem(ProblemName::Burgers2d);
    let mesh = Arc::new(problem.mesh(n, n, ElementKind::Q1)?);
    let cfg = TimeConfig::for_problem(&problem);
    let traj = run_transient(&problem, &mesh, &cfg, |_, _, _| {})?;
    let hi = traj.maxima.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = traj.minima.iter().cloned().fold(f64::INFINITY, f64::min);
    println!(
        "t={} range over run [{lo:.6}, {hi:.6}] admissible [{}, {}]",
        cfg.t_end, traj.bounds.lower, traj.bounds.upper
    );
    write_field(&out, &mesh, &traj.u, cfg.t_end)?;
    println!("wrote {}", out.display());
    Ok(())
}

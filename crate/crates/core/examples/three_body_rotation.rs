//! Solid-body rotation of a slotted cylinder, a cone and a hump.
//!
//! Usage: `three_body_rotation [n] [steps] [lumping|symmetric]`
//!
//! Prints the global extrema every tenth step and checks they never grow.

use std::sync::Arc;

use dmpfem::bench::{led_audit, make_problem, ProblemName};
use dmpfem::mesh::ElementKind;
use dmpfem::stabilization::MassKind;
use dmpfem::timeloop::{run_transient, TimeConfig};

fn main() -> dmpfem::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(64, |s| s.parse().expect("n"));
    let steps: usize = args.get(1).map_or(100, |s| s.parse().expect("steps"));
    let problem = make_problem(ProblemName::ThreeBodyRotation);
    let mesh = Arc::new(problem.mesh(n, n, ElementKind::Q1)?);
    let mut cfg = TimeConfig::for_problem(&problem);
    if args.get(2).map(String::as_str) == Some("symmetric") {
        cfg.stab.mass = MassKind::SymmetricMass;
    }
    cfg.t_end = steps as f64 * cfg.dt;

    let traj = run_transient(&problem, &mesh, &cfg, |k, t, u| {
        if k % 10 == 0 {
            let hi = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = u.iter().cloned().fold(f64::INFINITY, f64::min);
            println!("step {k:4} t={t:.3} min={lo:+.3e} max={hi:.6}");
        }
    })?;
    let led = led_audit(&traj.maxima, &traj.minima, 1e-10);
    println!(
        "{} steps, {} nonlinear iterations, {} extremum violations",
        traj.reports.len(),
        traj.total_iterations(),
        led.len()
    );
    Ok(())
}

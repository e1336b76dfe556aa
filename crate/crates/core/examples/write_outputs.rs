//! Runs a configuration file end to end and writes the field, the solver log
//! and a one-row error table.
//!
//! Usage: `write_outputs [dir]`

use std::path::PathBuf;
use std::sync::Arc;

use dmpfem::io::{parse_config_str, write_field, write_log, write_table, Iterations, TableRow};
use dmpfem::bench::make_problem;
use dmpfem::timeloop::run_steady;

const CONFIG: &str = "\
[run]
problem = STRAIGHT_DISCONTINUITY
[mesh]
nx = 24
ny = 24
[stabilization]
q = 4
eps = 1e-3
";

fn main() -> dmpfem::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "example_out".into()));
    let cfg = parse_config_str(CONFIG)?;
    let problem = make_problem(cfg.problem);
    let mesh = Arc::new(cfg.mesh()?);
    let run = run_steady(&problem, &mesh, &cfg.time_config())?;
    let e = problem.errors(&mesh, &run.u)?;

    write_field(&dir.join("field.vtk"), &mesh, &run.u, 0.0)?;
    write_log(&dir.join("log.csv"), &run.report)?;
    let row = TableRow {
        q: cfg.q,
        eps: cfg.eps,
        iterations: [Iterations::Skipped, Iterations::Skipped, Iterations::from(&run.report), Iterations::Skipped],
        l1: e.l1,
        l1_out: e.l1_out,
        l2: e.l2,
        l2_out: e.l2_out,
    };
    let table = write_table(&dir.join("table.csv"), &[row])?;
    print!("{}", cfg.echo());
    println!("wrote field.vtk, log.csv, table.csv and {}", table.display());
    Ok(())
}

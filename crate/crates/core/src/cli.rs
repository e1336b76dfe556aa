//! Command-line driver: `run`, `table`, `converge` and `audit`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bench::{
    convergence_study, dmp_audit, led_audit, local_dmp_audit, make_problem, ProblemName, ProblemSpec,
};
use crate::error::{Error, Result};
use crate::io::{self, Iterations, RunConfig, TableRow};
use crate::mesh::{ElementKind, Mesh2D, Rect};
use crate::solvers::AdmissibleBounds;
use crate::stabilization::DetectorKind;
use crate::timeloop::{run_steady, run_transient, SolverKind, SteadyRun};

#[derive(Debug, Parser)]
#[command(name = "dmpfem", version, about = "Stabilized finite element runs for scalar conservation laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Configuration file of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides as `--key value` pairs, one per configuration key.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one problem and write the field and the iteration log.
    Run(Common),
    /// Sweep q × ε on a steady problem with every solver variant.
    Table {
        /// Comma-separated q values.
        #[arg(long = "q-list", default_value = "1,4,8,25", value_delimiter = ',')]
        q_list: Vec<f64>,
        /// Comma-separated ε values; 0 runs the non-smooth detector with Anderson only.
        #[arg(long = "eps-list", default_value = "1e-1,1e-2,1e-3,1e-4", value_delimiter = ',')]
        eps_list: Vec<f64>,
        /// Solver variants to run, out of A, Ap, N, Np.
        #[arg(long, default_value = "A,Ap,N,Np", value_delimiter = ',')]
        solvers: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Mesh-refinement study with experimental orders of convergence.
    Converge {
        /// Comma-separated cells per side.
        #[arg(long, default_value = "12,24,48,96", value_delimiter = ',')]
        sizes: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check maximum principles on saved fields, in time order.
    Audit {
        /// VTK fields written by `run`.
        #[arg(required = true)]
        fields: Vec<PathBuf>,
        /// Problem whose admissible bounds apply.
        #[arg(long)]
        problem: Option<ProblemName>,
        /// Also check the local DMP at interior nodes of structured fields.
        #[arg(long)]
        local: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

/// Process exit code of an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::UnknownProblem { .. } | Error::InvalidArgument(_) | Error::Unsupported(_) => 2,
        Error::Solver { .. } | Error::SingularMatrix { .. } => 3,
        Error::Io { .. } => 4,
        Error::Parse(_) => 2,
    }
}

/// Entry point of the `dmpfem` binary.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(common) => run(&load(&common, &mut [])?),
        Command::Table { q_list, eps_list, solvers, common } => {
            let mut q_list = join(&q_list);
            let mut eps_list = join(&eps_list);
            let mut solvers = solvers.join(",");
            let cfg = load(
                &common,
                &mut [("q_list", &mut q_list), ("eps_list", &mut eps_list), ("solvers", &mut solvers)],
            )?;
            let variants = split(&solvers).map(parse_variant).collect::<Result<Vec<_>>>()?;
            table(&cfg, &parse_list(&q_list, "q_list")?, &parse_list(&eps_list, "eps_list")?, &variants)
        }
        Command::Converge { sizes, common } => {
            let mut sizes = join(&sizes);
            let cfg = load(&common, &mut [("sizes", &mut sizes)])?;
            converge(&cfg, &parse_list(&sizes, "sizes")?)
        }
        Command::Audit { fields, problem, local, tol } => audit(&fields, problem, local, tol),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn split(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|t| !t.is_empty())
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    split(s)
        .map(|t| t.parse().map_err(|e: T::Err| Error::config(key, format!("cannot parse `{t}`: {e}"))))
        .collect()
}

fn override_pairs(raw: &[String]) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut it = raw.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| Error::Config {
                line: None,
                key: None,
                message: format!("expected `--key value`, got `{flag}`"),
            })?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| Error::config(key, "missing value"))?;
                (key.to_string(), v.clone())
            }
        };
        pairs.push((key.replace('-', "_"), value));
    }
    Ok(pairs)
}

/// Builds the run configuration. Trailing pairs naming one of the sweep
/// options in `extra` replace its value instead.
fn load(common: &Common, extra: &mut [(&str, &mut String)]) -> Result<RunConfig> {
    let mut pairs = override_pairs(&common.overrides)?;
    pairs.retain(|(k, v)| match extra.iter_mut().find(|(name, _)| name == k) {
        Some((_, slot)) => {
            **slot = v.clone();
            false
        }
        None => true,
    });
    let mut cfg = match &common.config {
        Some(path) => io::parse_config(path)?,
        None => {
            let name = pairs
                .iter()
                .rev()
                .find(|(k, _)| k == "problem")
                .ok_or_else(|| Error::config("problem", "missing required key (use --problem NAME or --config FILE)"))?;
            RunConfig::for_problem(name.1.parse()?)
        }
    };
    cfg.apply(&pairs)?;
    cfg.validate()?;
    Ok(cfg)
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let echo = cfg.echo();
    print!("{echo}");
    let path = dir.join("config.txt");
    fs::write(&path, echo).map_err(|e| Error::io(&path, e))?;
    Ok(dir)
}

fn stem(cfg: &RunConfig) -> String {
    cfg.problem.name().to_ascii_lowercase()
}

fn run(cfg: &RunConfig) -> Result<i32> {
    let dir = prepare_output(cfg)?;
    let problem = make_problem(cfg.problem);
    let mesh = Arc::new(cfg.mesh()?);
    let tc = cfg.time_config();
    let stem = stem(cfg);
    if cfg.steady {
        let SteadyRun { u, report, bounds, .. } = run_steady(&problem, &mesh, &tc)?;
        io::write_field(&dir.join(format!("{stem}.vtk")), &mesh, &u, 0.0)?;
        io::write_log(&dir.join(format!("{stem}_log.csv")), &report)?;
        let (above, below) = dmp_audit(&u, &bounds);
        println!(
            "iterations = {}\nconverged = {}\nnlerr = {:.3e}\ndmp_violation = {above:.3e} {below:.3e}",
            report.iterations,
            report.converged,
            report.final_error()
        );
        if problem.exact.is_some() {
            let e = problem.errors(&mesh, &u)?;
            println!("L1 = {:.6e}\nL2 = {:.6e}\nL1_out = {:.6e}\nL2_out = {:.6e}", e.l1, e.l2, e.l1_out, e.l2_out);
        }
        return Ok(if report.converged { 0 } else { 3 });
    }
    let traj = run_transient(&problem, &mesh, &tc, |_, _, _| {})?;
    let t_final = *traj.times.last().unwrap_or(&0.0);
    io::write_field(&dir.join(format!("{stem}.vtk")), &mesh, &traj.u, t_final)?;
    io::write_logs(&dir.join(format!("{stem}_log.csv")), &traj.reports)?;
    let mut ext = String::from("step,t,max,min\n");
    for (n, t) in traj.times.iter().enumerate() {
        let _ = writeln!(ext, "{n},{t},{},{}", traj.maxima[n], traj.minima[n]);
    }
    let path = dir.join(format!("{stem}_extrema.csv"));
    fs::write(&path, ext).map_err(|e| Error::io(&path, e))?;
    let (above, below) = dmp_audit(&traj.u, &traj.bounds);
    println!(
        "steps = {}\niterations = {}\nled_violations = {}\ndmp_violation = {above:.3e} {below:.3e}",
        traj.reports.len(),
        traj.total_iterations(),
        led_audit(&traj.maxima, &traj.minima, 1e-10).len()
    );
    Ok(0)
}

/// Solver column of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Anderson,
    AndersonProjected,
    Newton,
    NewtonProjected,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Anderson,
        Variant::AndersonProjected,
        Variant::Newton,
        Variant::NewtonProjected,
    ];

    pub fn solver(self) -> SolverKind {
        match self {
            Variant::Anderson | Variant::AndersonProjected => SolverKind::Anderson,
            Variant::Newton | Variant::NewtonProjected => SolverKind::Newton,
        }
    }

    pub fn projected(self) -> bool {
        matches!(self, Variant::AndersonProjected | Variant::NewtonProjected)
    }
}

fn parse_variant(s: &str) -> Result<Variant> {
    match s.trim() {
        "A" => Ok(Variant::Anderson),
        "Ap" => Ok(Variant::AndersonProjected),
        "N" => Ok(Variant::Newton),
        "Np" => Ok(Variant::NewtonProjected),
        other => Err(Error::config("solvers", format!("unknown variant `{other}` (valid: A, Ap, N, Np)"))),
    }
}

/// One `(q, ε)` row of a table. Rows with `ε = 0` use the non-smooth
/// detector and only the Anderson variants.
pub fn table_row(
    problem: &ProblemSpec,
    mesh: &Arc<Mesh2D>,
    base: &RunConfig,
    q: f64,
    eps: f64,
    variants: &[Variant],
) -> Result<TableRow> {
    let mut cfg = base.clone();
    cfg.q = q;
    cfg.eps = eps;
    cfg.steady = true;
    if eps == 0.0 {
        cfg.detector = DetectorKind::Nonsmooth;
    }
    cfg.validate()?;
    let mut iterations = [Iterations::Skipped; 4];
    let mut best: Option<Vec<f64>> = None;
    for (slot, v) in Variant::ALL.into_iter().enumerate() {
        if !variants.contains(&v) || (eps == 0.0 && v.solver() == SolverKind::Newton) {
            continue;
        }
        let mut c = cfg.clone();
        c.solver = v.solver();
        c.projection = v.projected();
        match run_steady(problem, mesh, &c.time_config()) {
            Ok(run) => {
                iterations[slot] = Iterations::from(&run.report);
                if run.report.converged && best.is_none() {
                    best = Some(run.u);
                }
            }
            Err(Error::Solver { .. } | Error::SingularMatrix { .. }) => iterations[slot] = Iterations::NotConverged,
            Err(e) => return Err(e),
        }
    }
    let e = match &best {
        Some(u) if problem.exact.is_some() => Some(problem.errors(mesh, u)?),
        _ => None,
    };
    let nan = f64::NAN;
    Ok(TableRow {
        q,
        eps,
        iterations,
        l1: e.map_or(nan, |e| e.l1),
        l1_out: e.map_or(nan, |e| e.l1_out),
        l2: e.map_or(nan, |e| e.l2),
        l2_out: e.map_or(nan, |e| e.l2_out),
    })
}

fn table(cfg: &RunConfig, q_list: &[f64], eps_list: &[f64], variants: &[Variant]) -> Result<i32> {
    if !cfg.steady {
        return Err(Error::config("steady", "table sweeps need a steady problem"));
    }
    let dir = prepare_output(cfg)?;
    let problem = make_problem(cfg.problem);
    let mesh = Arc::new(cfg.mesh()?);
    let mut rows = Vec::new();
    for &q in q_list {
        for &eps in eps_list {
            let row = table_row(&problem, &mesh, cfg, q, eps, variants)?;
            eprintln!(
                "q={q} eps={eps}: {} {} {} {}",
                row.iterations[0], row.iterations[1], row.iterations[2], row.iterations[3]
            );
            rows.push(row);
        }
    }
    let path = dir.join(format!("{}_table.csv", stem(cfg)));
    io::write_table(&path, &rows)?;
    print!("{}", io::format_table(&rows, false));
    let all_converged = rows
        .iter()
        .all(|r| r.iterations.iter().all(|i| *i != Iterations::NotConverged));
    Ok(if all_converged { 0 } else { 3 })
}

fn converge(cfg: &RunConfig, sizes: &[usize]) -> Result<i32> {
    if !cfg.steady {
        return Err(Error::config("steady", "convergence studies need a steady problem"));
    }
    let problem = make_problem(cfg.problem);
    if problem.exact.is_none() {
        return Err(Error::config("problem", format!("{} has no exact solution", cfg.problem)));
    }
    let dir = prepare_output(cfg)?;
    let rows = convergence_study(&problem, sizes, cfg.element, &cfg.time_config())?;
    let mut s = String::from("n,h,L1,L2,eoc_L2,iterations,converged\n");
    for r in &rows {
        let eoc = r.eoc.map(|e| e.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{eoc},{},{}", r.n, r.h, r.l1, r.l2, r.iterations, r.converged);
    }
    let path = dir.join(format!("{}_converge.csv", stem(cfg)));
    fs::write(&path, &s).map_err(|e| Error::io(&path, e))?;
    print!("{s}");
    Ok(if rows.iter().all(|r| r.converged) { 0 } else { 3 })
}

fn structured_mesh(field: &io::FieldFile) -> Option<Mesh2D> {
    let (px, py) = field.dimensions?;
    let (first, last) = (field.points.first()?, field.points.last()?);
    let domain = Rect::new(first[0], first[1], last[0], last[1]);
    let mesh = Mesh2D::build_structured(px - 1, py - 1, domain, ElementKind::Q1).ok()?;
    let same = mesh
        .coords()
        .iter()
        .zip(&field.points)
        .all(|(a, b)| (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    same.then_some(mesh)
}

fn audit(paths: &[PathBuf], problem: Option<ProblemName>, local: bool, tol: f64) -> Result<i32> {
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut violations = 0usize;
    for path in paths {
        let field = io::read_field(path)?;
        let (hi, lo) = field
            .values
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(h, l), &v| (h.max(v), l.min(v)));
        maxima.push(hi);
        minima.push(lo);
        let mesh = structured_mesh(&field);
        if let Some(name) = problem {
            let bounds = match &mesh {
                Some(m) => make_problem(name).admissible_bounds(m)?,
                None => global_bounds_without_mesh(name, path)?,
            };
            let (above, below) = dmp_audit(&field.values, &bounds);
            let ok = above <= tol && below <= tol;
            violations += usize::from(!ok);
            println!(
                "{}: global DMP [{}, {}] {} (above {above:.3e}, below {below:.3e})",
                path.display(),
                bounds.lower,
                bounds.upper,
                if ok { "ok" } else { "VIOLATED" }
            );
        }
        if local {
            match &mesh {
                Some(m) => {
                    let bad = local_dmp_audit(m, &field.values, tol);
                    violations += usize::from(!bad.is_empty());
                    println!("{}: local DMP violations at {} interior nodes", path.display(), bad.len());
                }
                None => println!("{}: local DMP skipped (not a structured field)", path.display()),
            }
        }
    }
    if paths.len() > 1 {
        let bad = led_audit(&maxima, &minima, tol);
        violations += bad.len();
        println!("LED: {} violating transitions {:?}", bad.len(), bad);
    }
    Ok(if violations == 0 { 0 } else { 1 })
}

fn global_bounds_without_mesh(name: ProblemName, path: &Path) -> Result<AdmissibleBounds> {
    let p = make_problem(name);
    let d = p.defaults;
    let mesh = p.mesh(d.nx.min(64), d.ny.min(64), ElementKind::Q1).map_err(|_| {
        Error::Parse(format!("{}: cannot rebuild a mesh for the bounds", path.display()))
    })?;
    p.admissible_bounds(&mesh)
}

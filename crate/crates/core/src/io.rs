//! Run configuration files and result export: CSV tables, iteration logs
//! and legacy VTK fields.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::assembly::ConvectionForm;
use crate::bench::{make_problem, ProblemName};
use crate::error::{Error, Result};
use crate::mesh::{ElementKind, Mesh2D};
use crate::solvers::{AndersonOptions, NewtonOptions, SolverReport};
use crate::stabilization::{DetectorKind, MassKind, SigmaRule, StabParams};
use crate::timeloop::{SolverKind, StabSettings, TimeConfig};

/// Environment variable overriding the output directory.
pub const OUTPUT_ENV: &str = "DMPFEM_OUT";

const SECTIONS: [&str; 6] = ["run", "mesh", "stabilization", "solver", "time", "output"];

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemName,
    pub nx: usize,
    pub ny: usize,
    pub element: ElementKind,
    pub detector: DetectorKind,
    pub mass: MassKind,
    pub form: ConvectionForm,
    pub q: f64,
    pub eps: f64,
    pub sigma_rule: SigmaRule,
    pub sigma_factor: f64,
    pub gamma: f64,
    pub solver: SolverKind,
    pub tol: f64,
    pub k_max: usize,
    pub m: usize,
    pub s_min: f64,
    pub omega0: f64,
    pub omega_min: f64,
    pub line_search_tol: f64,
    pub freeze_mass_derivative: bool,
    pub steady: bool,
    pub dt: f64,
    pub t_end: f64,
    pub projection: bool,
    pub output: PathBuf,
    pub seed: u64,
}

/// Recognized keys, in echo order.
pub const KEYS: [&str; 27] = [
    "problem",
    "nx",
    "ny",
    "element",
    "detector",
    "mass",
    "form",
    "q",
    "eps",
    "sigma_rule",
    "sigma_factor",
    "gamma",
    "solver",
    "tol",
    "k_max",
    "m",
    "s_min",
    "omega0",
    "omega_min",
    "line_search_tol",
    "freeze_mass_derivative",
    "steady",
    "dt",
    "t_end",
    "projection",
    "output",
    "seed",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got `{value}`"))),
    }
}

impl RunConfig {
    /// Defaults of a catalog problem.
    pub fn for_problem(problem: ProblemName) -> Self {
        let spec = make_problem(problem);
        let d = spec.defaults;
        let a = AndersonOptions::default();
        let n = NewtonOptions::default();
        Self {
            problem,
            nx: d.nx,
            ny: d.ny,
            element: ElementKind::Q1,
            detector: DetectorKind::Smooth,
            mass: MassKind::GradualLumping,
            form: ConvectionForm::default(),
            q: d.q,
            eps: d.eps,
            sigma_rule: d.sigma_rule,
            sigma_factor: d.sigma_factor,
            gamma: d.gamma,
            solver: d.solver,
            tol: n.tol,
            k_max: n.k_max,
            m: a.m,
            s_min: a.s_min,
            omega0: a.omega0,
            omega_min: a.omega_min,
            line_search_tol: n.line_search_tol,
            freeze_mass_derivative: false,
            steady: d.steady,
            dt: d.dt,
            t_end: d.t_end,
            projection: false,
            output: PathBuf::from("out"),
            seed: 0,
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "problem" => self.problem = value.parse()?,
            "nx" => self.nx = parse_value(key, value)?,
            "ny" => self.ny = parse_value(key, value)?,
            "element" => self.element = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "detector" => self.detector = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "mass" => self.mass = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "form" => self.form = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "q" => self.q = parse_value(key, value)?,
            "eps" => self.eps = parse_value(key, value)?,
            "sigma_rule" => {
                self.sigma_rule = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?
            }
            "sigma_factor" => self.sigma_factor = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "solver" => self.solver = value.parse().map_err(|e: Error| Error::config(key, e.to_string()))?,
            "tol" => self.tol = parse_value(key, value)?,
            "k_max" => self.k_max = parse_value(key, value)?,
            "m" => self.m = parse_value(key, value)?,
            "s_min" => self.s_min = parse_value(key, value)?,
            "omega0" => self.omega0 = parse_value(key, value)?,
            "omega_min" => self.omega_min = parse_value(key, value)?,
            "line_search_tol" => self.line_search_tol = parse_value(key, value)?,
            "freeze_mass_derivative" => self.freeze_mass_derivative = parse_bool(key, value)?,
            "steady" => self.steady = parse_bool(key, value)?,
            "dt" => self.dt = parse_value(key, value)?,
            "t_end" => self.t_end = parse_value(key, value)?,
            "projection" => self.projection = parse_bool(key, value)?,
            "output" => self.output = PathBuf::from(value),
            "seed" => self.seed = parse_value(key, value)?,
            _ => {
                return Err(Error::config(
                    key,
                    format!("unknown key (valid keys: {})", KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// Textual value of a key.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "problem" => self.problem.name().to_string(),
            "nx" => self.nx.to_string(),
            "ny" => self.ny.to_string(),
            "element" => format!("{:?}", self.element),
            "detector" => self.detector.name().to_string(),
            "mass" => self.mass.name().to_string(),
            "form" => self.form.name().to_string(),
            "q" => self.q.to_string(),
            "eps" => self.eps.to_string(),
            "sigma_rule" => self.sigma_rule.name().to_string(),
            "sigma_factor" => self.sigma_factor.to_string(),
            "gamma" => self.gamma.to_string(),
            "solver" => self.solver.name().to_string(),
            "tol" => self.tol.to_string(),
            "k_max" => self.k_max.to_string(),
            "m" => self.m.to_string(),
            "s_min" => self.s_min.to_string(),
            "omega0" => self.omega0.to_string(),
            "omega_min" => self.omega_min.to_string(),
            "line_search_tol" => self.line_search_tol.to_string(),
            "freeze_mass_derivative" => self.freeze_mass_derivative.to_string(),
            "steady" => self.steady.to_string(),
            "dt" => self.dt.to_string(),
            "t_end" => self.t_end.to_string(),
            "projection" => self.projection.to_string(),
            "output" => self.output.display().to_string(),
            "seed" => self.seed.to_string(),
            _ => return None,
        })
    }

    /// `key = value` lines of every setting.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.get(k).unwrap_or_default());
        }
        s
    }

    /// Applies `(key, value)` pairs; `problem` is applied first so that its
    /// defaults do not clobber the other keys.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "problem") {
            let name: ProblemName = v.parse()?;
            if name != self.problem {
                let output = self.output.clone();
                *self = Self::for_problem(name);
                self.output = output;
            }
        }
        for (k, v) in pairs {
            if k != "problem" {
                self.set(k, v)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::config("nx", "mesh counts must be positive"));
        }
        self.stab_params_unscaled().validate()?;
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "tol must be positive"));
        }
        if self.k_max < 2 {
            return Err(Error::config("k_max", "k_max must be at least 2"));
        }
        if self.m == 0 {
            return Err(Error::config("m", "m must be at least 1"));
        }
        if !(self.omega_min > 0.0 && self.omega_min <= self.omega0 && self.omega0 <= 1.0) {
            return Err(Error::config("omega0", "need 0 < omega_min <= omega0 <= 1"));
        }
        if !(self.line_search_tol > 0.0) {
            return Err(Error::config("line_search_tol", "line_search_tol must be positive"));
        }
        self.time_config().validate()
    }

    fn stab_params_unscaled(&self) -> StabParams {
        StabParams {
            q: self.q,
            eps: self.eps,
            sigma: self.sigma_factor,
            gamma: self.gamma,
            detector: self.detector,
            mass: self.mass,
            beta_bound: 1.0,
        }
    }

    pub fn time_config(&self) -> TimeConfig {
        TimeConfig {
            dt: self.dt,
            t_end: self.t_end,
            steady: self.steady,
            solver: self.solver,
            anderson: AndersonOptions {
                m: self.m,
                s_min: self.s_min,
                omega0: self.omega0,
                omega_min: self.omega_min,
                tol: self.tol,
                k_max: self.k_max,
                project: self.projection,
            },
            newton: NewtonOptions {
                tol: self.tol,
                k_max: self.k_max,
                line_search_tol: self.line_search_tol,
                project: self.projection,
            },
            stab: StabSettings {
                q: self.q,
                eps: self.eps,
                sigma_rule: self.sigma_rule,
                sigma_factor: self.sigma_factor,
                gamma: self.gamma,
                detector: self.detector,
                mass: self.mass,
            },
            projection: self.projection,
            form: self.form,
            freeze_mass_derivative: self.freeze_mass_derivative,
        }
    }

    pub fn mesh(&self) -> Result<Mesh2D> {
        make_problem(self.problem).mesh(self.nx, self.ny, self.element)
    }

    /// Output directory after the environment override.
    pub fn output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(v) if !v.is_empty() => PathBuf::from(v),
            _ => self.output.clone(),
        }
    }
}

/// `key = value` pairs with their line numbers. Blank lines, `#` comments
/// and `[section]` headers are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| Error::Config {
                line: Some(line_no),
                key: None,
                message: format!("malformed section header `{line}`"),
            })?;
            if !SECTIONS.contains(&name.trim()) {
                return Err(Error::Config {
                    line: Some(line_no),
                    key: None,
                    message: format!("unknown section `{}` (valid: {})", name.trim(), SECTIONS.join(", ")),
                });
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
            line: Some(line_no),
            key: None,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        out.push((line_no, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parses a configuration text. `problem` must be present; every other key
/// falls back to the problem defaults.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let pairs = parse_pairs(text)?;
    let with_line = |line: usize, key: &str, e: Error| match e {
        Error::Config { message, .. } => Error::Config {
            line: Some(line),
            key: Some(key.to_string()),
            message,
        },
        Error::UnknownProblem { .. } => Error::Config {
            line: Some(line),
            key: Some(key.to_string()),
            message: e.to_string(),
        },
        other => other,
    };
    let (line, _, name) = pairs
        .iter()
        .rev()
        .find(|(_, k, _)| k == "problem")
        .ok_or_else(|| Error::config("problem", "missing required key"))?;
    let problem: ProblemName = name.parse().map_err(|e| with_line(*line, "problem", e))?;
    let mut cfg = RunConfig::for_problem(problem);
    for (line, k, v) in &pairs {
        if k != "problem" {
            cfg.set(k, v).map_err(|e| with_line(*line, k, e))?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Iteration count of one table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Iterations {
    /// The solver was not run for this row.
    Skipped,
    NotConverged,
    Count(usize),
}

impl std::fmt::Display for Iterations {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Iterations::Skipped => Ok(()),
            Iterations::NotConverged => f.write_str("--"),
            Iterations::Count(n) => write!(f, "{n}"),
        }
    }
}

impl From<&SolverReport> for Iterations {
    fn from(r: &SolverReport) -> Self {
        if r.converged {
            Iterations::Count(r.iterations)
        } else {
            Iterations::NotConverged
        }
    }
}

/// One row of an iterations/errors table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub q: f64,
    pub eps: f64,
    /// Anderson, projected Anderson, Newton, projected Newton.
    pub iterations: [Iterations; 4],
    pub l1: f64,
    pub l1_out: f64,
    pub l2: f64,
    pub l2_out: f64,
}

pub const TABLE_HEADER: &str = "q,eps,iters_A,iters_Ap,iters_N,iters_Np,L1,L1_out,L2,L2_out";
pub const LOG_HEADER: &str = "iter,nlerr,dmp_max_viol,dmp_min_viol,omega_or_xi";

fn sci3(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.2e}")
    } else {
        "--".to_string()
    }
}

/// CSV text of a table, at 3 significant digits or at full precision.
pub fn format_table(rows: &[TableRow], full: bool) -> String {
    let mut s = String::from(TABLE_HEADER);
    s.push('\n');
    let num = |x: f64| if full { x.to_string() } else { sci3(x) };
    for r in rows {
        let [a, ap, n, np] = r.iterations;
        let _ = writeln!(
            s,
            "{},{},{a},{ap},{n},{np},{},{},{},{}",
            r.q,
            if full { r.eps.to_string() } else { format!("{:.0e}", r.eps) },
            num(r.l1),
            num(r.l1_out),
            num(r.l2),
            num(r.l2_out)
        );
    }
    s
}

/// Writes `path` (3 significant digits) and `<stem>_full.csv` next to it.
pub fn write_table(path: &Path, rows: &[TableRow]) -> Result<PathBuf> {
    write_file(path, &format_table(rows, false))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let full = path.with_file_name(format!("{stem}_full.csv"));
    write_file(&full, &format_table(rows, true))?;
    Ok(full)
}

pub fn format_log(report: &SolverReport) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    append_log(&mut s, report);
    s
}

fn append_log(s: &mut String, report: &SolverReport) {
    for (k, e) in report.nlerr.iter().enumerate() {
        let (hi, lo) = report
            .dmp_violation
            .get(k)
            .map(|&(a, b)| (a.to_string(), b.to_string()))
            .unwrap_or_default();
        let w = report.step.get(k).map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{e},{hi},{lo},{w}", k + 1);
    }
}

/// Iteration log of one solve.
pub fn write_log(path: &Path, report: &SolverReport) -> Result<()> {
    write_file(path, &format_log(report))
}

/// Iteration logs of consecutive solves in one file; `iter` restarts with
/// every solve.
pub fn write_logs(path: &Path, reports: &[SolverReport]) -> Result<()> {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for r in reports {
        append_log(&mut s, r);
    }
    write_file(path, &s)
}

/// Legacy ASCII VTK text of a nodal field: `STRUCTURED_GRID` for structured
/// Q1 meshes, `UNSTRUCTURED_GRID` otherwise.
pub fn format_field(mesh: &Mesh2D, u: &[f64], time: f64) -> String {
    let n = mesh.num_nodes();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\ndmpfem field u\nASCII\n");
    let structured = mesh.structured().filter(|_| mesh.kind() == ElementKind::Q1);
    match structured {
        Some(info) => {
            let _ = writeln!(s, "DATASET STRUCTURED_GRID\nDIMENSIONS {} {} 1", info.nx + 1, info.ny + 1);
        }
        None => s.push_str("DATASET UNSTRUCTURED_GRID\n"),
    }
    let _ = writeln!(s, "FIELD FieldData 1\nTIME 1 1 double\n{time}");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.coords() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    if structured.is_none() {
        let npe = mesh.kind().nodes_per_element();
        let ne = mesh.num_elements();
        let _ = writeln!(s, "CELLS {ne} {}", ne * (npe + 1));
        for el in mesh.elements() {
            let ids: Vec<String> = el.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "{npe} {}", ids.join(" "));
        }
        let _ = writeln!(s, "CELL_TYPES {ne}");
        let t = if npe == 3 { 5 } else { 9 };
        for _ in 0..ne {
            let _ = writeln!(s, "{t}");
        }
    }
    let _ = writeln!(s, "POINT_DATA {n}\nSCALARS u double 1\nLOOKUP_TABLE default");
    for v in u {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn write_field(path: &Path, mesh: &Mesh2D, u: &[f64], time: f64) -> Result<()> {
    write_file(path, &format_field(mesh, u, time))
}

/// Contents of a legacy VTK field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub time: Option<f64>,
    pub dimensions: Option<(usize, usize)>,
}

/// Reads the subset of legacy VTK written by [`write_field`].
pub fn parse_field(text: &str) -> Result<FieldFile> {
    let mut tokens = text.lines().flat_map(|l| l.split_whitespace());
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut time = None;
    let mut dimensions = None;
    let bad = |what: &str| Error::Parse(format!("malformed VTK field: {what}"));
    let num = |tokens: &mut dyn Iterator<Item = &str>, what: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| bad(what))?
            .parse::<f64>()
            .map_err(|_| bad(what))
    };
    while let Some(tok) = tokens.next() {
        match tok {
            "DIMENSIONS" => {
                let a = num(&mut tokens, "DIMENSIONS")? as usize;
                let b = num(&mut tokens, "DIMENSIONS")? as usize;
                let _ = num(&mut tokens, "DIMENSIONS")?;
                dimensions = Some((a, b));
            }
            "TIME" => {
                for _ in 0..2 {
                    tokens.next();
                }
                let _ = tokens.next();
                time = Some(num(&mut tokens, "TIME")?);
            }
            "POINTS" => {
                let n = num(&mut tokens, "POINTS")? as usize;
                tokens.next();
                points.reserve(n);
                for _ in 0..n {
                    let x = num(&mut tokens, "point")?;
                    let y = num(&mut tokens, "point")?;
                    let _ = num(&mut tokens, "point")?;
                    points.push([x, y]);
                }
            }
            "POINT_DATA" => {
                let n = num(&mut tokens, "POINT_DATA")? as usize;
                let mut header = Vec::new();
                for t in tokens.by_ref() {
                    header.push(t);
                    if t == "default" {
                        break;
                    }
                }
                if header.first() != Some(&"SCALARS") {
                    return Err(bad("expected SCALARS after POINT_DATA"));
                }
                values.reserve(n);
                for _ in 0..n {
                    values.push(num(&mut tokens, "scalar")?);
                }
            }
            _ => {}
        }
    }
    if points.is_empty() || points.len() != values.len() {
        return Err(bad("point and value counts differ"));
    }
    Ok(FieldFile { points, values, time, dimensions })
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn minimal_config_takes_problem_defaults() {
        let cfg = parse_config_str("problem = STRAIGHT_DISCONTINUITY\n").unwrap();
        assert_eq!((cfg.q, cfg.eps, cfg.gamma), (25.0, 1e-4, 1e-10));
        assert_eq!((cfg.nx, cfg.ny), (48, 48));
        assert!(cfg.steady);
    }

    #[test]
    fn sections_and_comments_are_accepted() {
        let text = "# run\n[run]\nproblem = BURGERS2D\n[stabilization]\nq = 4 # sharper\n[time]\ndt = 0.05\n";
        let cfg = parse_config_str(text).unwrap();
        assert_eq!(cfg.q, 4.0);
        assert_eq!(cfg.dt, 0.05);
        assert!(!cfg.steady);
    }

    #[test]
    fn negative_q_is_rejected() {
        let err = parse_config_str("problem = STEADY_PARABOLIC\nq = -1\n").unwrap_err();
        assert!(err.to_string().contains("q must be positive"), "{err}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config_str("problem = STEADY_PARABOLIC\n\nbogus = 3\n").unwrap_err();
        match err {
            Error::Config { line, key, .. } => {
                assert_eq!(line, Some(3));
                assert_eq!(key.as_deref(), Some("bogus"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_problem_lists_names() {
        let err = parse_config_str("problem = SQUARE\n").unwrap_err().to_string();
        assert!(err.contains("STEADY_PARABOLIC") && err.contains("BURGERS2D"), "{err}");
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::for_problem(ProblemName::CircularConvection);
        cfg.q = 8.0;
        cfg.projection = true;
        let again = parse_config_str(&cfg.echo()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn empty_table_and_log_are_header_only() {
        assert_eq!(format_table(&[], false), format!("{TABLE_HEADER}\n"));
        assert_eq!(format_log(&SolverReport::default()), format!("{LOG_HEADER}\n"));
    }

    #[test]
    fn table_rounds_to_three_digits() {
        let row = TableRow {
            q: 1.0,
            eps: 0.1,
            iterations: [
                Iterations::Count(42),
                Iterations::NotConverged,
                Iterations::Count(9),
                Iterations::Skipped,
            ],
            l1: 0.027712,
            l1_out: 0.0557,
            l2: 0.08649,
            l2_out: 0.123,
        };
        let t = format_table(&[row], false);
        assert_eq!(t.lines().nth(1).unwrap(), "1,1e-1,42,--,9,,2.77e-2,5.57e-2,8.65e-2,1.23e-1");
        let f = format_table(&[row], true);
        assert!(f.lines().nth(1).unwrap().contains("0.027712"));
    }

    #[test]
    fn field_round_trip() {
        for kind in [ElementKind::Q1, ElementKind::P1] {
            let mesh = Mesh2D::build_structured(2, 2, Rect::unit(), kind).unwrap();
            let u: Vec<f64> = (0..9).map(|i| (i as f64).sqrt() / 3.0 - 0.1).collect();
            let text = format_field(&mesh, &u, 0.25);
            let f = parse_field(&text).unwrap();
            assert_eq!(f.points.len(), 9);
            assert_eq!(f.values, u);
            assert_eq!(f.time, Some(0.25));
            assert_eq!(f.dimensions.is_some(), kind == ElementKind::Q1);
        }
    }

    #[test]
    fn truncated_field_is_rejected() {
        let mesh = Mesh2D::build_structured(1, 1, Rect::unit(), ElementKind::Q1).unwrap();
        let text = format_field(&mesh, &[0.0; 4], 0.0);
        let cut = &text[..text.len() - 3];
        assert!(parse_field(cut).is_err());
    }
}

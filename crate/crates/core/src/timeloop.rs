//! Steady and Backward-Euler drivers.

use std::sync::Arc;

use crate::assembly::ConvectionForm;
use crate::bench::ProblemSpec;
use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::residual::TransportSystem;
use crate::solvers::{
    anderson_solve, newton_solve, AdmissibleBounds, AndersonOptions, NewtonOptions, SolverReport,
};
use crate::stabilization::{DetectorKind, MassKind, SigmaRule, StabParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Anderson,
    Newton,
}

impl std::str::FromStr for SolverKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "anderson" => Ok(SolverKind::Anderson),
            "newton" => Ok(SolverKind::Newton),
            _ => Err(Error::InvalidArgument(format!(
                "unknown solver `{s}` (expected anderson or newton)"
            ))),
        }
    }
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Anderson => "anderson",
            SolverKind::Newton => "newton",
        }
    }
}

/// Stabilization constants before `σ` is scaled for a given mesh and flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabSettings {
    pub q: f64,
    pub eps: f64,
    pub sigma_rule: SigmaRule,
    pub sigma_factor: f64,
    pub gamma: f64,
    pub detector: DetectorKind,
    pub mass: MassKind,
}

impl Default for StabSettings {
    fn default() -> Self {
        Self {
            q: 1.0,
            eps: 1e-4,
            sigma_rule: SigmaRule::Beta,
            sigma_factor: 1e-9,
            gamma: 1e-10,
            detector: DetectorKind::Smooth,
            mass: MassKind::GradualLumping,
        }
    }
}

impl StabSettings {
    /// Absolute parameters for `problem` on `mesh`.
    pub fn resolve(&self, problem: &ProblemSpec, mesh: &Mesh2D, bounds: &AdmissibleBounds) -> StabParams {
        let beta = problem.beta_bound(mesh, bounds);
        let sigma = self.sigma_rule.resolve(
            self.sigma_factor,
            beta,
            self.eps,
            mesh.mean_edge_length(),
            problem.domain.diameter(),
        );
        StabParams {
            q: self.q,
            eps: self.eps,
            sigma,
            gamma: self.gamma,
            detector: self.detector,
            mass: self.mass,
            beta_bound: beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
    pub steady: bool,
    pub solver: SolverKind,
    pub anderson: AndersonOptions,
    pub newton: NewtonOptions,
    pub stab: StabSettings,
    pub projection: bool,
    pub form: ConvectionForm,
    /// Drop the detector derivative of the lumping term from the Jacobian.
    pub freeze_mass_derivative: bool,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-2,
            t_end: 1.0,
            steady: true,
            solver: SolverKind::Newton,
            anderson: AndersonOptions::default(),
            newton: NewtonOptions::default(),
            stab: StabSettings::default(),
            projection: false,
            form: ConvectionForm::default(),
            freeze_mass_derivative: false,
        }
    }
}

impl TimeConfig {
    /// Defaults recommended for `problem`.
    pub fn for_problem(problem: &ProblemSpec) -> Self {
        let d = problem.defaults;
        Self {
            dt: d.dt,
            t_end: d.t_end,
            steady: d.steady,
            solver: d.solver,
            stab: StabSettings {
                q: d.q,
                eps: d.eps,
                sigma_rule: d.sigma_rule,
                sigma_factor: d.sigma_factor,
                gamma: d.gamma,
                ..StabSettings::default()
            },
            ..Self::default()
        }
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.anderson.tol = tol;
        self.newton.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.steady {
            if !(self.dt > 0.0 && self.dt.is_finite()) {
                return Err(Error::config("dt", "dt must be positive"));
            }
            if !(self.t_end >= self.dt) {
                return Err(Error::config("t_end", "t_end must be at least dt"));
            }
        }
        Ok(())
    }

    /// Number of Backward-Euler steps covering `[0, t_end]`.
    pub fn num_steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn solve(&self, sys: &TransportSystem, u0: &[f64], bounds: &AdmissibleBounds) -> Result<(Vec<f64>, SolverReport)> {
        match self.solver {
            SolverKind::Anderson => {
                let opts = AndersonOptions { project: self.projection, ..self.anderson };
                anderson_solve(sys, u0, &opts, Some(bounds))
            }
            SolverKind::Newton => {
                let opts = NewtonOptions { project: self.projection, ..self.newton };
                newton_solve(sys, u0, &opts, Some(bounds))
            }
        }
    }
}

fn build_system(problem: &ProblemSpec, mesh: &Arc<Mesh2D>, cfg: &TimeConfig, params: StabParams) -> TransportSystem {
    let mut sys = TransportSystem::new(mesh.clone(), problem.velocity.clone(), params)
        .with_form(cfg.form)
        .with_frozen_mass_derivative(cfg.freeze_mass_derivative);
    if let Some(g) = &problem.forcing {
        let g = g.clone();
        sys = sys.with_forcing(move |p| g(p));
    }
    sys
}

/// Result of a steady solve.
#[derive(Debug, Clone)]
pub struct SteadyRun {
    pub u: Vec<f64>,
    pub report: SolverReport,
    pub bounds: AdmissibleBounds,
    pub params: StabParams,
}

/// Solves `K(u)u = g` with inflow data, starting from the inflow data
/// extended by zero.
pub fn run_steady(problem: &ProblemSpec, mesh: &Arc<Mesh2D>, cfg: &TimeConfig) -> Result<SteadyRun> {
    let bounds = {
        let vals = problem.dirichlet_values(mesh, 0.0);
        AdmissibleBounds::from_values(vals.into_iter().flatten())?
    };
    let params = cfg.stab.resolve(problem, mesh, &bounds);
    params.validate()?;
    let sys = build_system(problem, mesh, cfg, params).with_dirichlet(problem.dirichlet_values(mesh, 0.0));
    let mut u0 = vec![0.0; mesh.num_nodes()];
    sys.apply_dirichlet(&mut u0);
    let (u, report) = cfg.solve(&sys, &u0, &bounds)?;
    Ok(SteadyRun { u, report, bounds, params })
}

/// One Backward-Euler step from `u_old` to time `t_new`.
pub fn step_backward_euler(
    problem: &ProblemSpec,
    sys: &mut TransportSystem,
    u_old: &[f64],
    t_new: f64,
    cfg: &TimeConfig,
    bounds: &AdmissibleBounds,
) -> Result<(Vec<f64>, SolverReport)> {
    if u_old.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite state".into()));
    }
    sys.set_time_step(u_old, cfg.dt)?;
    sys.set_dirichlet(problem.dirichlet_values(sys.mesh(), t_new));
    let mut u0 = u_old.to_vec();
    sys.apply_dirichlet(&mut u0);
    cfg.solve(sys, &u0, bounds)
}

/// Transient run with per-step extrema.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Global maximum per time level, initial state included.
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    pub reports: Vec<SolverReport>,
    pub bounds: AdmissibleBounds,
    pub params: StabParams,
    pub u: Vec<f64>,
}

impl Trajectory {
    pub fn total_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).sum()
    }
}

fn extrema(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)))
}

/// Backward-Euler integration from the initial data to `t_end`.
/// `observer` sees every new time level.
pub fn run_transient(
    problem: &ProblemSpec,
    mesh: &Arc<Mesh2D>,
    cfg: &TimeConfig,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> Result<Trajectory> {
    cfg.validate()?;
    let bounds = problem.admissible_bounds(mesh)?;
    let params = cfg.stab.resolve(problem, mesh, &bounds);
    params.validate()?;
    let mut sys = build_system(problem, mesh, cfg, params);
    let mut u = problem.initial_state(mesh)?;
    let (hi, lo) = extrema(&u);
    let mut traj = Trajectory {
        times: vec![0.0],
        maxima: vec![hi],
        minima: vec![lo],
        reports: Vec::new(),
        bounds,
        params,
        u: Vec::new(),
    };
    observer(0, 0.0, &u);
    for n in 1..=cfg.num_steps() {
        let t = n as f64 * cfg.dt;
        let (next, report) = step_backward_euler(problem, &mut sys, &u, t, cfg, &bounds)
            .map_err(|e| match e {
                Error::Solver { message, .. } => Error::Solver { step: Some(n), message },
                other => other,
            })?;
        if !report.converged {
            return Err(Error::Solver {
                step: Some(n),
                message: format!(
                    "no convergence in {} iterations (last update {:.3e})",
                    report.iterations,
                    report.final_error()
                ),
            });
        }
        u = next;
        let (hi, lo) = extrema(&u);
        traj.times.push(t);
        traj.maxima.push(hi);
        traj.minima.push(lo);
        traj.reports.push(report);
        observer(n, t, &u);
    }
    traj.u = u;
    Ok(traj)
}

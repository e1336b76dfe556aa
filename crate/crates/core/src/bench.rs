//! Benchmark catalog, error norms, convergence studies and maximum-principle
//! audits.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::assembly::{BurgersVelocity, LinearVelocity, Velocity};
use crate::error::{Error, Result};
use crate::mesh::{dist, q1_shape, q1_shape_grad_ref, ElementKind, Mesh2D, Point, Rect};
use crate::quadrature::subdivided_rule;
use crate::solvers::{AdmissibleBounds, SolverReport};
use crate::stabilization::SigmaRule;
use crate::timeloop::{run_steady, SolverKind, TimeConfig};

pub use crate::stabilization::dissipation;

/// Scalar field of space and time.
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
/// Scalar field of space.
pub type SpaceFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

/// Tolerance on `a · n` below which a boundary point is inflow.
pub const INFLOW_TOL: f64 = 1e-12;

/// Subdivision level of the error quadrature.
pub const ERROR_SUBDIVISION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemName {
    SteadyParabolic,
    StraightDiscontinuity,
    CircularConvection,
    ThreeBodyRotation,
    Burgers2d,
}

impl ProblemName {
    pub const ALL: [ProblemName; 5] = [
        ProblemName::SteadyParabolic,
        ProblemName::StraightDiscontinuity,
        ProblemName::CircularConvection,
        ProblemName::ThreeBodyRotation,
        ProblemName::Burgers2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemName::SteadyParabolic => "STEADY_PARABOLIC",
            ProblemName::StraightDiscontinuity => "STRAIGHT_DISCONTINUITY",
            ProblemName::CircularConvection => "CIRCULAR_CONVECTION",
            ProblemName::ThreeBodyRotation => "THREE_BODY_ROTATION",
            ProblemName::Burgers2d => "BURGERS2D",
        }
    }
}

impl std::fmt::Display for ProblemName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ProblemName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::UnknownProblem {
                name: s.to_string(),
                valid: Self::ALL.iter().map(|p| p.name()).collect::<Vec<_>>().join(", "),
            })
    }
}

/// Inflow boundary classification.
#[derive(Clone, Copy)]
pub enum InflowRule {
    /// `a(x, u_D(x)) · n < 0`.
    Characteristic,
    /// A fixed predicate on the boundary point.
    Predicate(fn(Point) -> bool),
}

/// Run parameters recommended for a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemDefaults {
    pub nx: usize,
    pub ny: usize,
    pub q: f64,
    pub eps: f64,
    pub sigma_rule: SigmaRule,
    pub sigma_factor: f64,
    pub gamma: f64,
    pub dt: f64,
    pub t_end: f64,
    pub steady: bool,
    pub solver: SolverKind,
}

/// Domain, flux, data and (if known) exact solution of a benchmark.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub domain: Rect,
    pub velocity: Velocity,
    /// Inflow data `u_D(x, t)`.
    pub boundary: SpaceTimeFn,
    pub initial: Option<SpaceFn>,
    pub exact: Option<SpaceFn>,
    pub forcing: Option<SpaceFn>,
    pub inflow: InflowRule,
    pub defaults: ProblemDefaults,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("defaults", &self.defaults)
            .finish_non_exhaustive()
    }
}

fn straight_exact(p: Point) -> f64 {
    if p[1] > 0.7 + 2.0 * p[0] * (-PI / 3.0).sin() {
        1.0
    } else {
        0.0
    }
}

fn circular_exact(p: Point) -> f64 {
    let r = p[0].hypot(p[1]);
    if 0.35 < r && r < 0.65 {
        1.0
    } else {
        0.0
    }
}

/// Cosine hump, cone and slotted disk.
pub fn three_body_initial(p: Point) -> f64 {
    let (x, y) = (p[0], p[1]);
    let r_hump = (x - 0.25).hypot(y - 0.5) / 0.15;
    if r_hump <= 1.0 {
        return 0.25 + (PI * r_hump).cos() / 4.0;
    }
    let r_cone = (x - 0.5).hypot(y - 0.25) / 0.15;
    if r_cone <= 1.0 {
        return 1.0 - r_cone;
    }
    let r_disk = (x - 0.5).hypot(y - 0.75) / 0.15;
    if r_disk <= 1.0 && !(0.45 < x && x < 0.55 && y < 0.85) {
        return 1.0;
    }
    0.0
}

/// Four constant quadrants; the lines `x = 0.5` and `y = 0.5` belong to the
/// right and bottom quadrants.
pub fn burgers_initial(p: Point) -> f64 {
    let left = p[0] < 0.5;
    let top = p[1] > 0.5;
    match (left, top) {
        (true, true) => -0.2,
        (false, true) => -1.0,
        (true, false) => 0.5,
        (false, false) => 0.8,
    }
}

/// Builds a catalog problem.
pub fn make_problem(name: ProblemName) -> ProblemSpec {
    let steady = |nx, ny, q, eps, sigma_rule, sigma_factor, gamma| ProblemDefaults {
        nx,
        ny,
        q,
        eps,
        sigma_rule,
        sigma_factor,
        gamma,
        dt: 1.0,
        t_end: 1.0,
        steady: true,
        solver: SolverKind::Newton,
    };
    match name {
        ProblemName::SteadyParabolic => ProblemSpec {
            name,
            domain: Rect::unit(),
            velocity: Arc::new(LinearVelocity::constant([1.0, 0.0])),
            boundary: Arc::new(|p, _| p[1] - p[1] * p[1]),
            initial: None,
            exact: Some(Arc::new(|p| p[1] - p[1] * p[1])),
            forcing: None,
            inflow: InflowRule::Predicate(|p| p[0] < 1.0 - 1e-12),
            defaults: steady(12, 12, 4.0, 1e-7, SigmaRule::BetaH4, 1e-8, 1e-10),
        },
        ProblemName::StraightDiscontinuity => ProblemSpec {
            name,
            domain: Rect::unit(),
            velocity: Arc::new(LinearVelocity::constant([0.5, (-PI / 3.0).sin()])),
            boundary: Arc::new(|p, _| straight_exact(p)),
            initial: None,
            exact: Some(Arc::new(straight_exact)),
            forcing: None,
            inflow: InflowRule::Characteristic,
            defaults: steady(48, 48, 25.0, 1e-4, SigmaRule::Beta, 1e-9, 1e-10),
        },
        ProblemName::CircularConvection => ProblemSpec {
            name,
            domain: Rect::new(0.0, -1.0, 1.0, 1.0),
            velocity: Arc::new(LinearVelocity::new(|p| [p[1], -p[0]])),
            boundary: Arc::new(|p, _| circular_exact(p)),
            initial: None,
            exact: Some(Arc::new(circular_exact)),
            forcing: None,
            inflow: InflowRule::Characteristic,
            defaults: steady(64, 128, 1.0, 1e-1, SigmaRule::BetaEps, 1e-5, 1e-10),
        },
        ProblemName::ThreeBodyRotation => ProblemSpec {
            name,
            domain: Rect::unit(),
            velocity: Arc::new(LinearVelocity::new(|p| [0.5 - p[1], p[0] - 0.5])),
            boundary: Arc::new(|_, _| 0.0),
            initial: Some(Arc::new(three_body_initial)),
            exact: None,
            forcing: None,
            inflow: InflowRule::Characteristic,
            defaults: ProblemDefaults {
                dt: 1e-3,
                t_end: 2.0 * PI,
                steady: false,
                ..steady(150, 150, 25.0, 1e-4, SigmaRule::Beta, 1e-10, 1e-8)
            },
        },
        ProblemName::Burgers2d => ProblemSpec {
            name,
            domain: Rect::unit(),
            velocity: Arc::new(BurgersVelocity::default()),
            boundary: Arc::new(|p, _| burgers_initial(p)),
            initial: Some(Arc::new(burgers_initial)),
            exact: None,
            forcing: None,
            inflow: InflowRule::Characteristic,
            defaults: ProblemDefaults {
                dt: 1e-2,
                t_end: 0.5,
                steady: false,
                ..steady(150, 150, 1.0, 1e-3, SigmaRule::Beta, 1e-6, 1e-8)
            },
        },
    }
}

/// Looks a problem up by name.
pub fn problem_by_name(name: &str) -> Result<ProblemSpec> {
    Ok(make_problem(name.parse()?))
}

impl ProblemSpec {
    pub fn is_transient(&self) -> bool {
        !self.defaults.steady
    }

    /// Structured mesh of the problem domain.
    pub fn mesh(&self, nx: usize, ny: usize, kind: ElementKind) -> Result<Mesh2D> {
        Mesh2D::build_structured(nx, ny, self.domain, kind)
    }

    /// Whether boundary point `x` with outward normal `n` is on `Γ_in`.
    pub fn is_inflow(&self, x: Point, n: [f64; 2], t: f64) -> bool {
        match self.inflow {
            InflowRule::Predicate(f) => f(x),
            InflowRule::Characteristic => {
                let a = self.velocity.advective(x, (self.boundary)(x, t));
                a[0] * n[0] + a[1] * n[1] < -INFLOW_TOL
            }
        }
    }

    /// Nodal Dirichlet values at time `t`: a boundary node is constrained
    /// when it is inflow for one of its boundary edges. Predicate rules
    /// classify whole edges at their midpoints and constrain both ends.
    pub fn dirichlet_values(&self, mesh: &Mesh2D, t: f64) -> Vec<Option<f64>> {
        let mut out = vec![None; mesh.num_nodes()];
        for e in mesh.boundary_edges() {
            let (a, b) = (mesh.node(e.nodes[0]), mesh.node(e.nodes[1]));
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let edge_inflow = matches!(self.inflow, InflowRule::Predicate(_)) && self.is_inflow(mid, e.normal, t);
            for &i in &e.nodes {
                if out[i].is_none() && (edge_inflow || self.is_inflow(mesh.node(i), e.normal, t)) {
                    out[i] = Some((self.boundary)(mesh.node(i), t));
                }
            }
        }
        out
    }

    /// Boundary edges outside `Γ_in`, classified at their midpoints.
    pub fn outflow_edges(&self, mesh: &Mesh2D) -> Vec<usize> {
        mesh.boundary_edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let (a, b) = (mesh.node(e.nodes[0]), mesh.node(e.nodes[1]));
                let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                !self.is_inflow(mid, e.normal, 0.0)
            })
            .map(|(k, _)| k)
            .collect()
    }

    /// Nodal interpolant of the initial data.
    pub fn initial_state(&self, mesh: &Mesh2D) -> Result<Vec<f64>> {
        let u0 = self.initial.as_ref().ok_or_else(|| {
            Error::Unsupported(format!("{} has no initial data", self.name))
        })?;
        Ok(mesh.coords().iter().map(|&p| u0(p)).collect())
    }

    /// Extrema of the inflow data (and of the initial data for transient
    /// problems).
    pub fn admissible_bounds(&self, mesh: &Mesh2D) -> Result<AdmissibleBounds> {
        let mut vals: Vec<f64> = self.dirichlet_values(mesh, 0.0).into_iter().flatten().collect();
        if self.is_transient() {
            vals.extend(self.initial_state(mesh)?);
        }
        AdmissibleBounds::from_values(vals)
    }

    /// `|β|`: largest `|v(x, w)|` over mesh nodes and admissible states.
    pub fn beta_bound(&self, mesh: &Mesh2D, bounds: &AdmissibleBounds) -> f64 {
        let mut beta: f64 = 0.0;
        for &p in mesh.coords() {
            for w in [bounds.lower, bounds.upper] {
                let a = self.velocity.velocity(p, w);
                beta = beta.max(a[0].hypot(a[1]));
            }
        }
        beta
    }
}

/// Integration region of [`error_norms`].
#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Omega,
    /// The listed boundary edges.
    Boundary(&'a [usize]),
}

/// `(L1, L2)` norms of `u_h − exact` over `region`.
pub fn error_norms(mesh: &Mesh2D, u: &[f64], exact: &dyn Fn(Point) -> f64, region: Region) -> (f64, f64) {
    let (mut l1, mut l2) = (0.0, 0.0);
    match region {
        Region::Omega => {
            let rule = subdivided_rule(mesh.kind(), ERROR_SUBDIVISION);
            let npe = mesh.kind().nodes_per_element();
            let shapes: Vec<(Vec<f64>, Vec<[f64; 2]>)> = rule
                .iter()
                .map(|&(xi, _)| match mesh.kind() {
                    ElementKind::Q1 => (q1_shape(xi).to_vec(), q1_shape_grad_ref(xi).to_vec()),
                    ElementKind::P1 => (
                        vec![1.0 - xi[0] - xi[1], xi[0], xi[1]],
                        vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
                    ),
                })
                .collect();
            for e in 0..mesh.num_elements() {
                let el = mesh.element(e);
                for ((_, w), (phi, grad)) in rule.iter().zip(&shapes) {
                    let mut x = [0.0; 2];
                    let mut jac = [[0.0; 2]; 2];
                    let mut uh = 0.0;
                    for a in 0..npe {
                        let p = mesh.node(el[a]);
                        uh += phi[a] * u[el[a]];
                        for r in 0..2 {
                            x[r] += phi[a] * p[r];
                            jac[r][0] += p[r] * grad[a][0];
                            jac[r][1] += p[r] * grad[a][1];
                        }
                    }
                    let det = (jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]).abs();
                    let d = (uh - exact(x)).abs();
                    l1 += w * det * d;
                    l2 += w * det * d * d;
                }
            }
        }
        Region::Boundary(edges) => {
            let g = [-(0.6f64).sqrt(), 0.0, 0.6f64.sqrt()];
            let gw = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
            let s = ERROR_SUBDIVISION;
            for &k in edges {
                let [i, j] = mesh.boundary_edges()[k].nodes;
                let (a, b) = (mesh.node(i), mesh.node(j));
                let len = dist(a, b) / s as f64;
                for c in 0..s {
                    for (&gq, &wq) in g.iter().zip(&gw) {
                        let t = (c as f64 + 0.5 * (gq + 1.0)) / s as f64;
                        let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                        let uh = (1.0 - t) * u[i] + t * u[j];
                        let d = (uh - exact(x)).abs();
                        l1 += 0.5 * wq * len * d;
                        l2 += 0.5 * wq * len * d * d;
                    }
                }
            }
        }
    }
    (l1, l2.sqrt())
}

/// Domain and outflow errors of one solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub l1_out: f64,
    pub l2_out: f64,
}

impl ProblemSpec {
    pub fn errors(&self, mesh: &Mesh2D, u: &[f64]) -> Result<ErrorNorms> {
        let exact = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("{} has no exact solution", self.name)))?;
        let (l1, l2) = error_norms(mesh, u, exact.as_ref(), Region::Omega);
        let out = self.outflow_edges(mesh);
        let (l1_out, l2_out) = error_norms(mesh, u, exact.as_ref(), Region::Boundary(&out));
        Ok(ErrorNorms { l1, l2, l1_out, l2_out })
    }
}

/// Experimental order of convergence between two refinements, `None` when
/// either error sits at round-off level.
pub fn eoc(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if e_coarse < 1e-13 || e_fine < 1e-13 {
        return None;
    }
    Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l1: f64,
    pub l2: f64,
    pub eoc: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Steady solves on `n × n` meshes with L2 errors and EOC per refinement.
pub fn convergence_study(
    problem: &ProblemSpec,
    sizes: &[usize],
    kind: ElementKind,
    cfg: &TimeConfig,
) -> Result<Vec<ConvergenceRow>> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mesh = Arc::new(problem.mesh(n, n, kind)?);
        let run = run_steady(problem, &mesh, cfg)?;
        let e = problem.errors(&mesh, &run.u)?;
        let h = problem.domain.width() / n as f64;
        let eoc = rows.last().and_then(|p| eoc(p.l2, e.l2, p.h, h));
        rows.push(ConvergenceRow {
            n,
            h,
            l1: e.l1,
            l2: e.l2,
            eoc,
            iterations: run.report.iterations,
            converged: run.report.converged,
        });
    }
    Ok(rows)
}

/// Positive parts of `(max u − upper, lower − min u)`.
pub fn dmp_audit(u: &[f64], bounds: &AdmissibleBounds) -> (f64, f64) {
    bounds.violation(u)
}

/// Interior nodes whose value leaves the range of their neighbours by more
/// than `tol`.
pub fn local_dmp_audit(mesh: &Mesh2D, u: &[f64], tol: f64) -> Vec<usize> {
    (0..mesh.num_nodes())
        .filter(|&i| !mesh.is_boundary(i))
        .filter(|&i| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &j in mesh.neighborhood(i) {
                if j != i {
                    lo = lo.min(u[j]);
                    hi = hi.max(u[j]);
                }
            }
            u[i] > hi + tol || u[i] < lo - tol
        })
        .collect()
}

/// Steps at which the global maximum grew or the minimum decreased by more
/// than `tol`.
pub fn led_audit(maxima: &[f64], minima: &[f64], tol: f64) -> Vec<usize> {
    (1..maxima.len())
        .filter(|&n| maxima[n] > maxima[n - 1] + tol || minima[n] < minima[n - 1] - tol)
        .collect()
}

/// Iterations with a non-zero DMP violation.
pub fn violating_iterations(report: &SolverReport) -> Vec<usize> {
    report
        .dmp_violation
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| a > 0.0 || b > 0.0)
        .map(|(k, _)| k + 1)
        .collect()
}

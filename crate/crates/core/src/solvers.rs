//! Nonlinear solvers: relaxed Anderson acceleration of the Picard iteration
//! and Newton's method with an exact line search.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::residual::NonlinearSystem;

/// Interval `[lower, upper]` of physically admissible states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleBounds {
    pub lower: f64,
    pub upper: f64,
}

impl AdmissibleBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidArgument(format!(
                "empty admissible interval [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Smallest interval containing all values.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            return Err(Error::InvalidArgument("no values to bound".into()));
        }
        Self::new(lo, hi)
    }

    /// Positive parts `(max(u) − upper, lower − min(u))`.
    pub fn violation(&self, u: &[f64]) -> (f64, f64) {
        let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
        ((max - self.upper).max(0.0), (self.lower - min).max(0.0))
    }

    pub fn contains(&self, u: &[f64], tol: f64) -> bool {
        let (a, b) = self.violation(u);
        a <= tol && b <= tol
    }
}

/// Componentwise clamp onto the admissible interval.
pub fn project_admissible(u: &mut [f64], bounds: &AdmissibleBounds) {
    for x in u {
        *x = x.clamp(bounds.lower, bounds.upper);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndersonOptions {
    /// Depth of the history.
    pub m: usize,
    /// Relaxation is reduced by 0.1 whenever the slope of `log10(nlerr)`
    /// over the window falls below this.
    pub s_min: f64,
    pub omega0: f64,
    pub omega_min: f64,
    pub tol: f64,
    pub k_max: usize,
    /// Clamp every iterate onto the admissible bounds.
    pub project: bool,
}

impl Default for AndersonOptions {
    fn default() -> Self {
        Self {
            m: 5,
            s_min: -0.05,
            omega0: 1.0,
            omega_min: 0.3,
            tol: 1e-6,
            k_max: 500,
            project: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub k_max: usize,
    /// Final bracket width of the golden-section line search.
    pub line_search_tol: f64,
    /// Clamp every iterate onto the admissible bounds.
    pub project: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            k_max: 500,
            line_search_tol: 1e-4,
            project: false,
        }
    }
}

/// History of one nonlinear solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub converged: bool,
    /// Relative update size per iteration.
    pub nlerr: Vec<f64>,
    /// `(above upper, below lower)` of each iterate.
    pub dmp_violation: Vec<(f64, f64)>,
    /// Relaxation ω (Anderson) or step length ξ (Newton) per iteration.
    pub step: Vec<f64>,
}

impl SolverReport {
    pub fn final_error(&self) -> f64 {
        self.nlerr.last().copied().unwrap_or(f64::INFINITY)
    }

    /// Largest recorded violation over all iterates.
    pub fn max_violation(&self) -> f64 {
        self.dmp_violation
            .iter()
            .map(|&(a, b)| a.max(b))
            .fold(0.0, f64::max)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let d = old.iter().zip(new).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let n = norm(new);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

/// Least-squares slope of `log10(e)` against the iteration index.
pub fn log_slope(errors: &[f64]) -> Option<f64> {
    if errors.len() < 3 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let n = errors.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = errors.iter().map(|e| e.log10()).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, e) in errors.iter().enumerate() {
        let dx = k as f64 - xm;
        sxy += dx * (e.log10() - ym);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

/// Weights `ξ` with `Σ ξ = 1` minimizing `‖Σ ξ_i r_i‖`, oldest residual
/// first.
pub fn anderson_coefficients(residuals: &[Vec<f64>]) -> Vec<f64> {
    let k = residuals.len();
    assert!(k > 0);
    if k == 1 {
        return vec![1.0];
    }
    let n = residuals[0].len();
    let last = &residuals[k - 1];
    let d = DMatrix::from_fn(n, k - 1, |r, c| residuals[c][r] - last[r]);
    let rhs = DVector::from_fn(n, |r, _| -last[r]);
    let svd = d.svd(true, true);
    let smax = svd.singular_values.max();
    let theta = svd
        .solve(&rhs, smax * 1e-12)
        .unwrap_or_else(|_| DVector::zeros(k - 1));
    let mut xi: Vec<f64> = theta.iter().copied().collect();
    if xi.iter().any(|x| !x.is_finite()) {
        xi.iter_mut().for_each(|x| *x = 0.0);
    }
    let s: f64 = xi.iter().sum();
    xi.push(1.0 - s);
    xi
}

/// Fixed-point iteration `u ← A(u)⁻¹ G(u)` accelerated by Anderson mixing
/// with adaptive relaxation. Violations of `bounds` are recorded per iterate.
pub fn anderson_solve(
    sys: &dyn NonlinearSystem,
    u0: &[f64],
    opts: &AndersonOptions,
    bounds: Option<&AdmissibleBounds>,
) -> Result<(Vec<f64>, SolverReport)> {
    let mut u = u0.to_vec();
    let mut report = SolverReport::default();
    let mut omega = opts.omega0;
    let mut hist_u: Vec<Vec<f64>> = Vec::new();
    let mut hist_t: Vec<Vec<f64>> = Vec::new();
    let mut hist_r: Vec<Vec<f64>> = Vec::new();
    let mut nlerr = opts.tol;
    let mut k = 1;
    while nlerr >= opts.tol && k < opts.k_max {
        let (a, g) = sys.picard(&u)?;
        let ut = a.solve(&g).map_err(|e| Error::Solver {
            step: None,
            message: format!("Picard solve failed at iteration {k}: {e}"),
        })?;
        let r: Vec<f64> = ut.iter().zip(&u).map(|(a, b)| a - b).collect();
        hist_u.push(u.clone());
        hist_t.push(ut);
        hist_r.push(r);
        let mk = k.min(opts.m.max(1));
        while hist_r.len() > mk {
            hist_u.remove(0);
            hist_t.remove(0);
            hist_r.remove(0);
        }
        let xi = anderson_coefficients(&hist_r);
        let mut next = vec![0.0; u.len()];
        for (c, (uh, th)) in xi.iter().zip(hist_u.iter().zip(&hist_t)) {
            for (x, (a, b)) in next.iter_mut().zip(uh.iter().zip(th)) {
                *x += c * ((1.0 - omega) * a + omega * b);
            }
        }
        if let (true, Some(b)) = (opts.project, bounds) {
            project_admissible(&mut next, b);
        }
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver {
                step: None,
                message: format!("non-finite iterate at iteration {k}"),
            });
        }
        nlerr = relative_change(&u, &next);
        report.nlerr.push(nlerr);
        report.step.push(omega);
        if let Some(b) = bounds {
            report.dmp_violation.push(b.violation(&next));
        }
        let w = report.nlerr.len().min(mk);
        if let Some(s) = log_slope(&report.nlerr[report.nlerr.len() - w..]) {
            if s < opts.s_min && omega > opts.omega_min {
                omega = (omega - 0.1).max(opts.omega_min);
            }
        }
        u = next;
        k += 1;
    }
    report.iterations = report.nlerr.len();
    report.converged = nlerr < opts.tol;
    Ok((u, report))
}

/// Minimizer of `f` on `[a, b]` by golden-section search down to a bracket of
/// width `tol`. Returns the best sampled point and its value.
pub fn golden_section(f: &mut dyn FnMut(f64) -> Result<f64>, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
            if fc < best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
            if fd < best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Step length in `[0, 1]` minimizing `‖T(u + ξ du)‖`; the full step is
/// always a candidate.
pub fn line_search(sys: &dyn NonlinearSystem, u: &[f64], du: &[f64], tol: f64) -> Result<(f64, f64)> {
    let mut trial = vec![0.0; u.len()];
    let mut phi = |xi: f64| -> Result<f64> {
        for (t, (a, b)) in trial.iter_mut().zip(u.iter().zip(du)) {
            *t = a + xi * b;
        }
        Ok(norm(&sys.residual(&trial)?))
    };
    let full = phi(1.0)?;
    let (x, fx) = golden_section(&mut phi, 0.0, 1.0, tol)?;
    Ok(if full <= fx { (1.0, full) } else { (x, fx) })
}

/// Newton's method with line search. Violations of `bounds` are recorded per
/// iterate.
pub fn newton_solve(
    sys: &dyn NonlinearSystem,
    u0: &[f64],
    opts: &NewtonOptions,
    bounds: Option<&AdmissibleBounds>,
) -> Result<(Vec<f64>, SolverReport)> {
    let mut u = u0.to_vec();
    let mut report = SolverReport::default();
    let mut nlerr = opts.tol;
    let mut k = 1;
    while nlerr >= opts.tol && k < opts.k_max {
        let t = sys.residual(&u)?;
        let j = sys.jacobian(&u)?;
        let neg: Vec<f64> = t.iter().map(|x| -x).collect();
        let du = j.solve(&neg).map_err(|e| Error::Solver {
            step: None,
            message: format!("Newton solve failed at iteration {k}: {e}"),
        })?;
        let (xi, _) = line_search(sys, &u, &du, opts.line_search_tol)?;
        let mut next: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + xi * b).collect();
        if let (true, Some(b)) = (opts.project, bounds) {
            project_admissible(&mut next, b);
        }
        nlerr = relative_change(&u, &next);
        report.nlerr.push(nlerr);
        report.step.push(xi);
        if let Some(b) = bounds {
            report.dmp_violation.push(b.violation(&next));
        }
        u = next;
        k += 1;
    }
    report.iterations = report.nlerr.len();
    report.converged = nlerr < opts.tol;
    Ok((u, report))
}

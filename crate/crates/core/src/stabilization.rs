//! Shock detectors, graph-Laplacian artificial diffusion and the gradually
//! lumped mass matrix.

use crate::error::{Error, Result};
use crate::mesh::Mesh2D;
use crate::sparse::SparseOperator;

const DENOMINATOR_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// `α ≡ 0` and no artificial diffusion: plain Galerkin.
    Off,
    /// Jump-based detector with the nonsmooth maximum viscosity.
    Nonsmooth,
    /// Neighbour-difference detector with the nonsmooth maximum viscosity.
    Simplified,
    /// Regularised jump-based detector with the smooth maximum viscosity.
    Smooth,
    /// Regularised neighbour-difference detector with the smooth maximum.
    SimplifiedSmooth,
}

impl DetectorKind {
    pub fn is_smooth(self) -> bool {
        matches!(self, DetectorKind::Smooth | DetectorKind::SimplifiedSmooth)
    }

    /// Whether the residual is differentiable with this detector.
    pub fn is_differentiable(self) -> bool {
        self.is_smooth() || self == DetectorKind::Off
    }

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Off => "off",
            DetectorKind::Nonsmooth => "nonsmooth",
            DetectorKind::Simplified => "simplified",
            DetectorKind::Smooth => "smooth",
            DetectorKind::SimplifiedSmooth => "simplified_smooth",
        }
    }
}

impl std::str::FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "off" | "galerkin" | "none" => Ok(DetectorKind::Off),
            "nonsmooth" => Ok(DetectorKind::Nonsmooth),
            "simplified" => Ok(DetectorKind::Simplified),
            "smooth" => Ok(DetectorKind::Smooth),
            "simplified_smooth" => Ok(DetectorKind::SimplifiedSmooth),
            _ => Err(Error::InvalidArgument(format!(
                "unknown detector `{s}` (expected off, nonsmooth, simplified, smooth or simplified_smooth)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MassKind {
    /// `M(u)_ij = (1 − α_i) M_ij + α_i δ_ij m_i`.
    #[default]
    GradualLumping,
    /// Consistent mass with the extra diffusion `max{α_i M_ij, 0, α_j M_ji}/Δt`.
    SymmetricMass,
}

impl MassKind {
    pub fn name(self) -> &'static str {
        match self {
            MassKind::GradualLumping => "gradual_lumping",
            MassKind::SymmetricMass => "symmetric_mass",
        }
    }
}

impl std::str::FromStr for MassKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gradual_lumping" | "gradual" => Ok(MassKind::GradualLumping),
            "symmetric_mass" | "symmetric" => Ok(MassKind::SymmetricMass),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mass kind `{s}` (expected gradual_lumping or symmetric_mass)"
            ))),
        }
    }
}

/// How the smooth-maximum parameter σ is derived from a user factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaRule {
    /// `σ = factor`.
    Absolute,
    /// `σ = |β|² ℓ² · factor`, ℓ the domain diameter.
    #[default]
    Domain,
    /// `σ = |β| · factor`.
    Beta,
    /// `σ = |β| ε · factor`.
    BetaEps,
    /// `σ = |β| h⁴ · factor`, h the mean edge length.
    BetaH4,
}

impl SigmaRule {
    pub fn resolve(self, factor: f64, beta: f64, eps: f64, h: f64, diameter: f64) -> f64 {
        match self {
            SigmaRule::Absolute => factor,
            SigmaRule::Domain => beta * beta * diameter * diameter * factor,
            SigmaRule::Beta => beta * factor,
            SigmaRule::BetaEps => beta * eps * factor,
            SigmaRule::BetaH4 => beta * h.powi(4) * factor,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SigmaRule::Absolute => "absolute",
            SigmaRule::Domain => "domain",
            SigmaRule::Beta => "beta",
            SigmaRule::BetaEps => "beta_eps",
            SigmaRule::BetaH4 => "beta_h4",
        }
    }
}

impl std::str::FromStr for SigmaRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absolute" => Ok(SigmaRule::Absolute),
            "domain" => Ok(SigmaRule::Domain),
            "beta" => Ok(SigmaRule::Beta),
            "beta_eps" => Ok(SigmaRule::BetaEps),
            "beta_h4" => Ok(SigmaRule::BetaH4),
            _ => Err(Error::InvalidArgument(format!(
                "unknown sigma rule `{s}` (expected absolute, domain, beta, beta_eps or beta_h4)"
            ))),
        }
    }
}

/// Stabilization constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabParams {
    pub q: f64,
    pub eps: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub detector: DetectorKind,
    pub mass: MassKind,
    /// `|β|`, the largest flux speed over admissible states.
    pub beta_bound: f64,
}

impl Default for StabParams {
    fn default() -> Self {
        Self {
            q: 1.0,
            eps: 1e-4,
            sigma: 1e-9,
            gamma: 1e-10,
            detector: DetectorKind::Smooth,
            mass: MassKind::GradualLumping,
            beta_bound: 1.0,
        }
    }
}

impl StabParams {
    pub fn galerkin() -> Self {
        Self {
            detector: DetectorKind::Off,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::config("q", "q must be positive"));
        }
        for (name, v) in [("eps", self.eps), ("sigma", self.sigma), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("{name} must be non-negative")));
            }
        }
        if self.detector.is_smooth() && self.eps == 0.0 && self.gamma == 0.0 {
            return Err(Error::config(
                "eps",
                "smooth detectors need eps > 0 or gamma > 0",
            ));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Smooth building blocks

/// `sqrt(x² + ε) ≥ |x|`.
pub fn smooth_abs_upper(x: f64, eps: f64) -> f64 {
    (x * x + eps).sqrt()
}

pub fn smooth_abs_upper_deriv(x: f64, eps: f64) -> f64 {
    let r = (x * x + eps).sqrt();
    if r == 0.0 {
        0.0
    } else {
        x / r
    }
}

/// `x² / sqrt(x² + ε) ≤ |x|`.
pub fn smooth_abs_lower(x: f64, eps: f64) -> f64 {
    let r = (x * x + eps).sqrt();
    if r == 0.0 {
        0.0
    } else {
        x * x / r
    }
}

pub fn smooth_abs_lower_deriv(x: f64, eps: f64) -> f64 {
    let s = x * x + eps;
    if s == 0.0 {
        0.0
    } else {
        x * (x * x + 2.0 * eps) / (s * s.sqrt())
    }
}

/// `(sqrt((x − y)² + σ) + x + y) / 2 ≥ max(x, y)`.
pub fn smooth_max(x: f64, y: f64, sigma: f64) -> f64 {
    0.5 * (((x - y) * (x - y) + sigma).sqrt() + x + y)
}

/// Partial derivatives of [`smooth_max`] with respect to `x` and `y`.
pub fn smooth_max_partials(x: f64, y: f64, sigma: f64) -> (f64, f64) {
    let r = ((x - y) * (x - y) + sigma).sqrt();
    let t = if r == 0.0 { 0.0 } else { (x - y) / r };
    (0.5 * (1.0 + t), 0.5 * (1.0 - t))
}

/// `f(x) = 2x⁴ − 5x³ + 3x² + x` below 1, and 1 from there on.
pub fn limiter_f(x: f64) -> f64 {
    if x < 1.0 {
        x * (1.0 + x * (3.0 + x * (-5.0 + 2.0 * x)))
    } else {
        1.0
    }
}

/// `f'(x) = (x − 1)² (8x + 1)` below 1, zero from there on.
pub fn limiter_f_deriv(x: f64) -> f64 {
    if x < 1.0 {
        (x - 1.0) * (x - 1.0) * (8.0 * x + 1.0)
    } else {
        0.0
    }
}

// ---------------------------------------------------------------------------
// Jumps

/// Directional jump of the gradient at `i` along `x_j − x_i`. The symmetric
/// term is dropped when the symmetric point is outside the domain.
pub fn jump(mesh: &Mesh2D, u: &[f64], i: usize, j: usize) -> f64 {
    let g = mesh.neighbor_pair(i, j).expect("j must be a neighbour of i");
    let mut s = (u[j] - u[i]) / g.dist;
    if let Some(us) = mesh.symmetric_value(u, i, j) {
        s += (us - u[i]) / g.sym_dist;
    }
    s
}

/// Mean of the absolute directional derivatives at `i` along `x_j − x_i`.
/// One-sided when the symmetric point is outside the domain.
pub fn mean_abs(mesh: &Mesh2D, u: &[f64], i: usize, j: usize) -> f64 {
    let g = mesh.neighbor_pair(i, j).expect("j must be a neighbour of i");
    let mut s = (u[j] - u[i]).abs() / g.dist;
    if let Some(us) = mesh.symmetric_value(u, i, j) {
        s += (us - u[i]).abs() / g.sym_dist;
    }
    0.5 * s
}

// ---------------------------------------------------------------------------
// Detectors

pub fn detector_nonsmooth(mesh: &Mesh2D, u: &[f64], i: usize, params: &StabParams) -> f64 {
    let row = mesh.neighborhood(i);
    let mut num = 0.0;
    let mut den = 0.0;
    for g in mesh.neighbor_geometry(i) {
        let d1 = (u[g.node] - u[i]) / g.dist;
        num += d1;
        den += d1.abs();
        if g.has_sym() {
            let us: f64 = g.sym_weights.iter().map(|&(p, w)| w * u[row[p]]).sum();
            let d2 = (us - u[i]) / g.sym_dist;
            num += d2;
            den += d2.abs();
        }
    }
    if den < DENOMINATOR_FLOOR {
        return 0.0;
    }
    (num.abs() / den).min(1.0).powf(params.q)
}

pub fn detector_simplified(mesh: &Mesh2D, u: &[f64], i: usize, params: &StabParams) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &j in mesh.neighborhood(i) {
        let d = u[i] - u[j];
        num += d;
        den += d.abs();
    }
    if den < DENOMINATOR_FLOOR {
        return 0.0;
    }
    (num.abs() / den).min(1.0).powf(params.q)
}

pub fn detector_smooth(mesh: &Mesh2D, u: &[f64], i: usize, params: &StabParams) -> f64 {
    smooth_detector_impl(mesh, u, i, params, None)
}

pub fn detector_simplified_smooth(mesh: &Mesh2D, u: &[f64], i: usize, params: &StabParams) -> f64 {
    simplified_smooth_impl(mesh, u, i, params, None)
}

/// Detector selected by `params.detector`.
pub fn detector(mesh: &Mesh2D, u: &[f64], i: usize, params: &StabParams) -> f64 {
    match params.detector {
        DetectorKind::Off => 0.0,
        DetectorKind::Nonsmooth => detector_nonsmooth(mesh, u, i, params),
        DetectorKind::Simplified => detector_simplified(mesh, u, i, params),
        DetectorKind::Smooth => detector_smooth(mesh, u, i, params),
        DetectorKind::SimplifiedSmooth => detector_simplified_smooth(mesh, u, i, params),
    }
}

/// Detector values at every node.
pub fn detectors(mesh: &Mesh2D, u: &[f64], params: &StabParams) -> Vec<f64> {
    (0..mesh.num_nodes()).map(|i| detector(mesh, u, i, params)).collect()
}

/// Detector at `i` and its gradient with respect to the values on the
/// neighbourhood of `i`, written into `grad` in neighbourhood order.
pub fn detector_gradient(
    mesh: &Mesh2D,
    u: &[f64],
    i: usize,
    params: &StabParams,
    grad: &mut [f64],
) -> Result<f64> {
    grad.iter_mut().for_each(|g| *g = 0.0);
    match params.detector {
        DetectorKind::Off => Ok(0.0),
        DetectorKind::Smooth => Ok(smooth_detector_impl(mesh, u, i, params, Some(grad))),
        DetectorKind::SimplifiedSmooth => Ok(simplified_smooth_impl(mesh, u, i, params, Some(grad))),
        k => Err(Error::Unsupported(format!(
            "the {} detector is not differentiable",
            k.name()
        ))),
    }
}

/// Detector values and gradients at every node. Entry `(i, k)` of the
/// returned operator is `∂α_i/∂u_k`.
pub fn detectors_with_gradient(
    mesh: &Mesh2D,
    u: &[f64],
    params: &StabParams,
) -> Result<(Vec<f64>, SparseOperator)> {
    let mut grad = SparseOperator::zeros(mesh.adjacency().clone());
    let mut alpha = Vec::with_capacity(mesh.num_nodes());
    for i in 0..mesh.num_nodes() {
        alpha.push(detector_gradient(mesh, u, i, params, grad.row_values_mut(i))?);
    }
    Ok((alpha, grad))
}

/// `[f((num + γ) / (den + γ))]^q` and its chain-rule factors
/// `∂α/∂num`, `∂α/∂den`.
fn limited_ratio(num: f64, den: f64, gamma: f64, q: f64) -> (f64, f64, f64) {
    let d = den + gamma;
    if d <= 0.0 {
        return (1.0, 0.0, 0.0);
    }
    let x = (num + gamma) / d;
    let fx = limiter_f(x);
    let alpha = fx.powf(q);
    let df = limiter_f_deriv(x);
    if df == 0.0 || fx <= 0.0 {
        return (alpha, 0.0, 0.0);
    }
    let da_dx = q * fx.powf(q - 1.0) * df;
    (alpha, da_dx / d, -da_dx * x / d)
}

fn smooth_detector_impl(
    mesh: &Mesh2D,
    u: &[f64],
    i: usize,
    params: &StabParams,
    grad: Option<&mut [f64]>,
) -> f64 {
    let eps = params.eps;
    let row = mesh.neighborhood(i);
    let pi = row.binary_search(&i).expect("node in own neighbourhood");
    let mut s = 0.0;
    let mut den = 0.0;
    for g in mesh.neighbor_geometry(i) {
        let d1 = (u[g.node] - u[i]) / g.dist;
        s += d1;
        den += smooth_abs_lower(d1, eps);
        if g.has_sym() {
            let us: f64 = g.sym_weights.iter().map(|&(p, w)| w * u[row[p]]).sum();
            let d2 = (us - u[i]) / g.sym_dist;
            s += d2;
            den += smooth_abs_lower(d2, eps);
        }
    }
    let num = smooth_abs_upper(s, eps);
    let (alpha, a_num, a_den) = limited_ratio(num, den, params.gamma, params.q);
    if let Some(grad) = grad {
        if a_num == 0.0 && a_den == 0.0 {
            return alpha;
        }
        let a_s = a_num * smooth_abs_upper_deriv(s, eps);
        for g in mesh.neighbor_geometry(i) {
            let pj = row.binary_search(&g.node).expect("neighbour in row");
            let d1 = (u[g.node] - u[i]) / g.dist;
            let c1 = (a_s + a_den * smooth_abs_lower_deriv(d1, eps)) / g.dist;
            grad[pj] += c1;
            grad[pi] -= c1;
            if g.has_sym() {
                let us: f64 = g.sym_weights.iter().map(|&(p, w)| w * u[row[p]]).sum();
                let d2 = (us - u[i]) / g.sym_dist;
                let c2 = (a_s + a_den * smooth_abs_lower_deriv(d2, eps)) / g.sym_dist;
                for &(p, w) in &g.sym_weights {
                    grad[p] += c2 * w;
                }
                grad[pi] -= c2;
            }
        }
    }
    alpha
}

fn simplified_smooth_impl(
    mesh: &Mesh2D,
    u: &[f64],
    i: usize,
    params: &StabParams,
    grad: Option<&mut [f64]>,
) -> f64 {
    let h = mesh.mean_edge_length();
    let eps = h * h * params.eps;
    let gamma = h * params.gamma;
    let row = mesh.neighborhood(i);
    let mut s = 0.0;
    let mut den = 0.0;
    for &j in row {
        let d = u[i] - u[j];
        s += d;
        den += smooth_abs_lower(d, eps);
    }
    let num = smooth_abs_upper(s, eps);
    let (alpha, a_num, a_den) = limited_ratio(num, den, gamma, params.q);
    if let Some(grad) = grad {
        if a_num == 0.0 && a_den == 0.0 {
            return alpha;
        }
        let a_s = a_num * smooth_abs_upper_deriv(s, eps);
        let pi = row.binary_search(&i).expect("node in own neighbourhood");
        for (pj, &j) in row.iter().enumerate() {
            if j == i {
                continue;
            }
            let c = a_s + a_den * smooth_abs_lower_deriv(u[i] - u[j], eps);
            grad[pi] += c;
            grad[pj] -= c;
        }
    }
    alpha
}

// ---------------------------------------------------------------------------
// Viscosity

/// Artificial diffusion `ν` with the partial derivatives of every
/// off-diagonal entry with respect to its two arguments.
#[derive(Debug, Clone)]
pub struct Viscosity {
    /// `ν_ij` off the diagonal, `ν_ii = Σ_{j≠i} ν_ij` on it.
    pub nu: SparseOperator,
    /// `∂ν_ij / ∂(α_i A_ij)`.
    pub d_first: SparseOperator,
    /// `∂ν_ij / ∂(α_j A_ji)`.
    pub d_second: SparseOperator,
}

/// `ν_ij = max{α_i s A_ij, α_j s A_ji, 0}` (or its smooth counterpart).
pub fn graph_viscosity(
    a: &SparseOperator,
    scale: f64,
    alphas: &[f64],
    detector: DetectorKind,
    sigma: f64,
) -> Viscosity {
    let pat = a.pattern().clone();
    let mut nu = SparseOperator::zeros(pat.clone());
    let mut d1 = SparseOperator::zeros(pat.clone());
    let mut d2 = SparseOperator::zeros(pat.clone());
    if detector == DetectorKind::Off {
        return Viscosity { nu, d_first: d1, d_second: d2 };
    }
    let smooth = detector.is_smooth();
    let av = a.values();
    for i in 0..pat.nrows() {
        let range = pat.row_range(i);
        let mut diag = 0.0;
        let mut diag_pos = None;
        for k in range {
            let j = pat.row(i)[k - pat.row_range(i).start];
            if j == i {
                diag_pos = Some(k);
                continue;
            }
            let kt = pat.find(j, i).expect("symmetric pattern");
            let x = alphas[i] * scale * av[k];
            let y = alphas[j] * scale * av[kt];
            let (v, px, py) = if smooth {
                let inner = smooth_max(x, y, sigma);
                let (ix, iy) = smooth_max_partials(x, y, sigma);
                let (o, _) = smooth_max_partials(inner, 0.0, sigma);
                (smooth_max(inner, 0.0, sigma), o * ix, o * iy)
            } else {
                let v = x.max(y).max(0.0);
                let (px, py) = if v <= 0.0 {
                    (0.0, 0.0)
                } else if x >= y {
                    (1.0, 0.0)
                } else {
                    (0.0, 1.0)
                };
                (v, px, py)
            };
            nu.values_mut()[k] = v;
            d1.values_mut()[k] = px;
            d2.values_mut()[k] = py;
            diag += v;
        }
        if let Some(p) = diag_pos {
            nu.values_mut()[p] = diag;
        }
    }
    Viscosity { nu, d_first: d1, d_second: d2 }
}

fn check_pattern(mesh: &Mesh2D, op: &SparseOperator, name: &str) -> Result<()> {
    if op.same_pattern(mesh.adjacency()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} does not have the mesh adjacency pattern"
        )))
    }
}

/// Artificial diffusion from the convection matrix.
pub fn viscosity(mesh: &Mesh2D, f: &SparseOperator, alphas: &[f64], params: &StabParams) -> Result<SparseOperator> {
    check_pattern(mesh, f, "convection matrix")?;
    Ok(graph_viscosity(f, 1.0, alphas, params.detector, params.sigma).nu)
}

/// Artificial diffusion of the symmetric-mass scheme:
/// `ν̃_ij = ν_ij + max{α_i M_ij, 0, α_j M_ji}/Δt`.
pub fn viscosity_symmetric_mass(
    mesh: &Mesh2D,
    f: &SparseOperator,
    m: &SparseOperator,
    alphas: &[f64],
    dt: f64,
    params: &StabParams,
) -> Result<SparseOperator> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    check_pattern(mesh, m, "mass matrix")?;
    let mut nu = viscosity(mesh, f, alphas, params)?;
    let mu = graph_viscosity(m, 1.0 / dt, alphas, params.detector, params.sigma).nu;
    nu.axpy(1.0, &mu);
    Ok(nu)
}

/// `B_ii = ν_ii`, `B_ij = −ν_ij`.
pub fn assemble_b(nu: &SparseOperator) -> SparseOperator {
    let mut b = nu.clone();
    let pat = nu.pattern().clone();
    for i in 0..pat.nrows() {
        let start = pat.row_range(i).start;
        for (p, &j) in pat.row(i).iter().enumerate() {
            if j != i {
                b.values_mut()[start + p] = -nu.values()[start + p];
            }
        }
    }
    b
}

/// `M(u)_ij = (1 − α_i) M_ij + α_i δ_ij m_i`.
pub fn assemble_nonlinear_mass(m: &SparseOperator, lumped: &[f64], alphas: &[f64]) -> SparseOperator {
    let mut out = m.clone();
    let pat = m.pattern().clone();
    for i in 0..pat.nrows() {
        let a = alphas[i];
        let start = pat.row_range(i).start;
        for (p, &j) in pat.row(i).iter().enumerate() {
            let k = start + p;
            let v = (1.0 - a) * m.values()[k] + if j == i { a * lumped[i] } else { 0.0 };
            out.values_mut()[k] = v;
        }
    }
    out
}

/// Double sum `Σ_i Σ_{j≠i} ν_ij (u_i − u_j)²`. Every pair is counted twice,
/// so this is `2⟨B u, u⟩`.
pub fn dissipation(nu: &SparseOperator, u: &[f64]) -> f64 {
    let pat = nu.pattern();
    let mut s = 0.0;
    for i in 0..pat.nrows() {
        for (j, v) in nu.row(i) {
            if j != i {
                let d = u[i] - u[j];
                s += v * d * d;
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_convection, assemble_mass, lumped_masses, LinearVelocity};
    use crate::mesh::{ElementKind, Rect};
    use crate::sparse::Pattern;
    use std::sync::Arc;

    fn params(kind: DetectorKind) -> StabParams {
        StabParams {
            q: 2.0,
            eps: 1e-4,
            sigma: 1e-8,
            gamma: 1e-10,
            detector: kind,
            ..StabParams::default()
        }
    }

    const ALL: [DetectorKind; 4] = [
        DetectorKind::Nonsmooth,
        DetectorKind::Simplified,
        DetectorKind::Smooth,
        DetectorKind::SimplifiedSmooth,
    ];

    #[test]
    fn smooth_function_examples() {
        assert_eq!(smooth_max(1.0, 2.0, 0.0), 2.0);
        assert!((smooth_max(0.0, 0.0, 0.04) - 0.1).abs() < 1e-15);
        assert_eq!(limiter_f(0.0), 0.0);
        assert_eq!(limiter_f(1.0), 1.0);
        assert!((limiter_f(0.5) - 0.75).abs() < 1e-15);
        assert_eq!(limiter_f(2.0), 1.0);
        assert!((smooth_abs_upper(0.0, 0.25) - 0.5).abs() < 1e-15);
        assert_eq!(smooth_abs_lower(0.0, 0.25), 0.0);
        for k in -20..=20 {
            let x = k as f64 * 0.137;
            assert!(smooth_abs_upper(x, 1e-3) >= x.abs());
            assert!(smooth_abs_lower(x, 1e-3) <= x.abs());
        }
    }

    #[test]
    fn limiter_is_c1_at_one() {
        assert!(limiter_f_deriv(1.0 - 1e-12).abs() < 1e-10);
        // f''(1) = 24 − 30 + 6 = 0 as well.
        let h = 1e-5;
        let second = (limiter_f_deriv(1.0 - h) - limiter_f_deriv(1.0 - 2.0 * h)) / h;
        assert!(second.abs() < 1e-3);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-6;
        for &x in &[-0.8, -0.1, 0.03, 0.4, 0.95] {
            let fd = |f: &dyn Fn(f64) -> f64| (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((fd(&|t| smooth_abs_upper(t, 1e-2)) - smooth_abs_upper_deriv(x, 1e-2)).abs() < 1e-7);
            assert!((fd(&|t| smooth_abs_lower(t, 1e-2)) - smooth_abs_lower_deriv(x, 1e-2)).abs() < 1e-7);
            assert!((fd(&limiter_f) - limiter_f_deriv(x)).abs() < 1e-7);
            let (px, py) = smooth_max_partials(x, 0.2, 1e-3);
            assert!((fd(&|t| smooth_max(t, 0.2, 1e-3)) - px).abs() < 1e-7);
            let g = |t: f64| smooth_max(x, t, 1e-3);
            assert!(((g(0.2 + h) - g(0.2 - h)) / (2.0 * h) - py).abs() < 1e-7);
        }
    }

    fn grid(n: usize) -> Mesh2D {
        Mesh2D::build_structured(n, n, Rect::unit(), ElementKind::Q1).unwrap()
    }

    #[test]
    fn jump_and_mean_examples() {
        let mesh = grid(2);
        let h = 0.5;
        let c = mesh.structured_node(1, 1).unwrap();
        let e = mesh.structured_node(2, 1).unwrap();
        let mut u = vec![0.0; 9];
        u[c] = 1.0;
        assert!((jump(&mesh, &u, c, e) + 2.0 / h).abs() < 1e-14);
        assert!((mean_abs(&mesh, &u, c, e) - 1.0 / h).abs() < 1e-14);
        let constant = vec![3.0; 9];
        assert_eq!(jump(&mesh, &constant, c, e), 0.0);
        assert_eq!(mean_abs(&mesh, &constant, c, e), 0.0);
        let affine: Vec<f64> = mesh.coords().iter().map(|p| 0.3 * p[0] - 2.0 * p[1] + 1.0).collect();
        for &j in mesh.neighborhood(c) {
            if j != c {
                assert!(jump(&mesh, &affine, c, j).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn detector_examples() {
        let mesh = grid(2);
        let c = mesh.structured_node(1, 1).unwrap();
        let mut hat = vec![0.0; 9];
        hat[c] = 1.0;
        let affine: Vec<f64> = mesh.coords().iter().map(|p| 0.3 * p[0] - 2.0 * p[1] + 1.0).collect();
        let constant = vec![0.4; 9];
        for kind in ALL {
            let p = params(kind);
            assert_eq!(detector(&mesh, &hat, c, &p), 1.0, "{kind:?}");
        }
        let p = params(DetectorKind::Nonsmooth);
        assert!(detector(&mesh, &affine, c, &p) < 1e-12);
        assert_eq!(detector(&mesh, &constant, c, &p), 0.0);
        let p = params(DetectorKind::Smooth);
        assert_eq!(detector(&mesh, &constant, c, &p), 1.0);
        assert!(detector(&mesh, &affine, c, &p) < 1e-6);
        assert_eq!(detector(&mesh, &constant, c, &params(DetectorKind::SimplifiedSmooth)), 1.0);
    }

    #[test]
    fn simplified_detector_examples() {
        // Node 0 with two neighbours valued 0 and 2 on a single triangle.
        let mesh = Mesh2D::from_elements(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![0, 1, 2],
            ElementKind::P1,
        )
        .unwrap();
        let p = params(DetectorKind::Simplified);
        assert_eq!(detector_simplified(&mesh, &[1.0, 0.0, 2.0], 0, &p), 0.0);
        assert_eq!(detector_simplified(&mesh, &[1.0, 0.0, 0.0], 0, &p), 1.0);
    }

    #[test]
    fn smooth_affine_detector_vanishes_with_gamma() {
        let mesh = grid(4);
        let c = mesh.structured_node(2, 2).unwrap();
        let affine: Vec<f64> = mesh.coords().iter().map(|p| p[0] + 0.5 * p[1]).collect();
        let mut last = f64::INFINITY;
        for gamma in [1e-2, 1e-4, 1e-6, 1e-8] {
            let p = StabParams { gamma, ..params(DetectorKind::Smooth) };
            let a = detector(&mesh, &affine, c, &p);
            assert!(a < last);
            last = a;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn detector_gradients_match_finite_differences() {
        let mesh = Mesh2D::build_structured(3, 3, Rect::unit(), ElementKind::P1).unwrap();
        let u: Vec<f64> = mesh
            .coords()
            .iter()
            .map(|p| (4.0 * p[0]).sin() * (3.0 * p[1] + 0.2).cos())
            .collect();
        for kind in [DetectorKind::Smooth, DetectorKind::SimplifiedSmooth] {
            let p = StabParams { q: 3.0, eps: 1e-2, gamma: 1e-3, ..params(kind) };
            for i in 0..mesh.num_nodes() {
                let row = mesh.neighborhood(i).to_vec();
                let mut g = vec![0.0; row.len()];
                detector_gradient(&mesh, &u, i, &p, &mut g).unwrap();
                for (k, &j) in row.iter().enumerate() {
                    let h = 1e-6;
                    let mut up = u.clone();
                    up[j] += h;
                    let mut um = u.clone();
                    um[j] -= h;
                    let fd = (detector(&mesh, &up, i, &p) - detector(&mesh, &um, i, &p)) / (2.0 * h);
                    assert!((fd - g[k]).abs() < 1e-6 * (1.0 + fd.abs()), "{kind:?} {i} {j}: {fd} {}", g[k]);
                }
            }
        }
        let p = params(DetectorKind::Nonsmooth);
        let mut g = vec![0.0; 9];
        assert!(matches!(
            detector_gradient(&mesh, &u, 5, &p, &mut g),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn viscosity_examples() {
        let pat = Arc::new(Pattern::from_rows(vec![vec![0, 1], vec![0, 1]]));
        let mut f = SparseOperator::zeros(pat);
        f.set(0, 1, 2.0);
        f.set(1, 0, -1.0);
        let nu = graph_viscosity(&f, 1.0, &[1.0, 0.0], DetectorKind::Nonsmooth, 0.0).nu;
        assert_eq!(nu.get(0, 1), 2.0);
        assert_eq!(nu.get(1, 0), 2.0);
        assert_eq!(nu.get(0, 0), 2.0);
        let nu = graph_viscosity(&f, 1.0, &[0.0, 0.0], DetectorKind::Nonsmooth, 0.0).nu;
        assert_eq!(nu.max_abs(), 0.0);
        let smooth = graph_viscosity(&f, 1.0, &[1.0, 0.0], DetectorKind::Smooth, 1e-6).nu;
        assert!(smooth.get(0, 1) >= 2.0);
    }

    #[test]
    fn two_node_dissipation() {
        let pat = Arc::new(Pattern::from_rows(vec![vec![0, 1], vec![0, 1]]));
        let mut nu = SparseOperator::zeros(pat);
        nu.set(0, 1, 1.0);
        nu.set(1, 0, 1.0);
        nu.set(0, 0, 1.0);
        nu.set(1, 1, 1.0);
        let b = assemble_b(&nu);
        let u = [0.0, 1.0];
        let bu = b.mul_vec(&u);
        let quad: f64 = bu.iter().zip(&u).map(|(a, b)| a * b).sum();
        // ⟨Bu, u⟩ = 0·(0 − 1) + 1·(1 − 0) = 1; the double sum counts the pair
        // once per row: 1 + 1 = 2.
        assert!((quad - 1.0).abs() < 1e-15);
        assert!((dissipation(&nu, &u) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn k_sign_condition_at_extrema() {
        let mesh = grid(4);
        let vel = LinearVelocity::constant([0.7, -0.4]);
        let mut u = vec![0.0; mesh.num_nodes()];
        let c = mesh.structured_node(2, 2).unwrap();
        u[c] = 1.0;
        let f = assemble_convection(&mesh, &vel, &u);
        for kind in [DetectorKind::Nonsmooth, DetectorKind::Smooth] {
            let p = params(kind);
            let alphas = detectors(&mesh, &u, &p);
            assert_eq!(alphas[c], 1.0);
            let nu = viscosity(&mesh, &f, &alphas, &p).unwrap();
            let mut k = f.clone();
            k.axpy(1.0, &assemble_b(&nu));
            let mut sum = 0.0;
            for (j, v) in k.row(c) {
                if j != c {
                    assert!(v <= 1e-12, "{kind:?}: K[{c},{j}] = {v}");
                }
                sum += v;
            }
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_mass_viscosity_examples() {
        let mesh = grid(3);
        let vel = LinearVelocity::constant([1.0, 0.3]);
        let u: Vec<f64> = mesh.coords().iter().map(|p| (5.0 * p[0] * p[1]).sin()).collect();
        let f = assemble_convection(&mesh, &vel, &u);
        let m = assemble_mass(&mesh);
        let p = params(DetectorKind::Nonsmooth);
        let zero = vec![0.0; mesh.num_nodes()];
        let a = viscosity_symmetric_mass(&mesh, &f, &m, &zero, 0.1, &p).unwrap();
        assert_eq!(a, viscosity(&mesh, &f, &zero, &p).unwrap());
        let ones = vec![1.0; mesh.num_nodes()];
        let base = viscosity(&mesh, &f, &ones, &p).unwrap();
        let dt = 0.01;
        let sym = viscosity_symmetric_mass(&mesh, &f, &m, &ones, dt, &p).unwrap();
        for i in 0..mesh.num_nodes() {
            for &j in mesh.neighborhood(i) {
                if j != i {
                    assert!((sym.get(i, j) - base.get(i, j) - m.get(i, j) / dt).abs() < 1e-12);
                }
            }
        }
        let big = viscosity_symmetric_mass(&mesh, &f, &m, &ones, 1e12, &p).unwrap();
        for (x, y) in big.values().iter().zip(base.values()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(matches!(
            viscosity_symmetric_mass(&mesh, &f, &m, &ones, 0.0, &p),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn nonlinear_mass_examples() {
        let mesh = grid(3);
        let m = assemble_mass(&mesh);
        let ml = lumped_masses(&mesh);
        let n = mesh.num_nodes();
        assert_eq!(assemble_nonlinear_mass(&m, &ml, &vec![0.0; n]), m);
        let lumped = assemble_nonlinear_mass(&m, &ml, &vec![1.0; n]);
        for i in 0..n {
            for (j, v) in lumped.row(i) {
                if j == i {
                    assert!((v - ml[i]).abs() < 1e-15);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
        let alphas: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).fract()).collect();
        let mix = assemble_nonlinear_mass(&m, &ml, &alphas);
        for (i, s) in mix.row_sums().iter().enumerate() {
            assert!((s - ml[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn viscosity_rejects_foreign_pattern() {
        let mesh = grid(2);
        let pat = Arc::new(Pattern::from_rows(vec![vec![0]; 9]));
        let f = SparseOperator::zeros(pat);
        assert!(matches!(
            viscosity(&mesh, &f, &[0.0; 9], &params(DetectorKind::Nonsmooth)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn params_validation() {
        let bad = StabParams { q: -1.0, ..StabParams::default() };
        let err = bad.validate().unwrap_err().to_string();
        assert!(err.contains("q must be positive"));
        assert!(StabParams::default().validate().is_ok());
    }
}

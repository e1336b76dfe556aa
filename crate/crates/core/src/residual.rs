//! Nonlinear residual, Picard operator and exact Jacobian of one implicit
//! step (or of the steady problem).

use std::sync::Arc;

use crate::assembly::{
    assemble_convection_with, assemble_forcing, assemble_mass, convection_tangent, lumped_masses,
    ConvectionForm, Velocity,
};
use crate::error::{Error, Result};
use crate::mesh::{Mesh2D, Point};
use crate::sparse::SparseOperator;
use crate::stabilization::{
    assemble_b, assemble_nonlinear_mass, detectors, detectors_with_gradient, graph_viscosity,
    MassKind, StabParams, Viscosity,
};

/// A square nonlinear system `T(u) = 0` with a fixed-point splitting
/// `A(u) u = G(u)`.
pub trait NonlinearSystem {
    fn dim(&self) -> usize;

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>>;

    /// Picard matrix `A(u)` and right-hand side `G(u)`.
    fn picard(&self, u: &[f64]) -> Result<(SparseOperator, Vec<f64>)>;

    /// `∂T/∂u`.
    fn jacobian(&self, u: &[f64]) -> Result<SparseOperator>;
}

/// Stabilized transport operator on a mesh.
///
/// Rows of Dirichlet nodes are replaced by `u_i − u_D,i`.
#[derive(Clone)]
pub struct TransportSystem {
    mesh: Arc<Mesh2D>,
    velocity: Velocity,
    form: ConvectionForm,
    params: StabParams,
    mass: Arc<SparseOperator>,
    lumped: Arc<Vec<f64>>,
    forcing: Vec<f64>,
    dirichlet: Vec<Option<f64>>,
    old: Option<(Vec<f64>, f64)>,
    freeze_mass_derivative: bool,
}

/// Operators evaluated at one state.
struct Evaluated {
    f: SparseOperator,
    alphas: Vec<f64>,
    visc: Viscosity,
    mass_visc: Option<Viscosity>,
}

impl TransportSystem {
    /// Steady system `K(u) u = g` without boundary conditions.
    pub fn new(mesh: Arc<Mesh2D>, velocity: Velocity, params: StabParams) -> Self {
        let n = mesh.num_nodes();
        let mass = Arc::new(assemble_mass(&mesh));
        let lumped = Arc::new(lumped_masses(&mesh).into_inner());
        Self {
            mesh,
            velocity,
            form: ConvectionForm::default(),
            params,
            mass,
            lumped,
            forcing: vec![0.0; n],
            dirichlet: vec![None; n],
            old: None,
            freeze_mass_derivative: false,
        }
    }

    pub fn with_form(mut self, form: ConvectionForm) -> Self {
        self.form = form;
        self
    }

    pub fn with_forcing(mut self, g: impl Fn(Point) -> f64) -> Self {
        self.forcing = assemble_forcing(&self.mesh, g).into_inner();
        self
    }

    /// Strongly imposed values; `None` marks a free node.
    pub fn with_dirichlet(mut self, values: Vec<Option<f64>>) -> Self {
        assert_eq!(values.len(), self.mesh.num_nodes());
        self.dirichlet = values;
        self
    }

    /// Drops the `(m_i d_i − (M d)_i) ∂α_i/∂u` term from the Jacobian.
    pub fn with_frozen_mass_derivative(mut self, freeze: bool) -> Self {
        self.freeze_mass_derivative = freeze;
        self
    }

    /// Turns the system into a Backward-Euler step from `u_old` of size `dt`.
    pub fn set_time_step(&mut self, u_old: &[f64], dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        self.old = Some((u_old.to_vec(), dt));
        Ok(())
    }

    pub fn set_steady(&mut self) {
        self.old = None;
    }

    pub fn set_dirichlet(&mut self, values: Vec<Option<f64>>) {
        assert_eq!(values.len(), self.mesh.num_nodes());
        self.dirichlet = values;
    }

    pub fn mesh(&self) -> &Arc<Mesh2D> {
        &self.mesh
    }

    pub fn params(&self) -> &StabParams {
        &self.params
    }

    pub fn form(&self) -> ConvectionForm {
        self.form
    }

    pub fn dirichlet(&self) -> &[Option<f64>] {
        &self.dirichlet
    }

    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    pub fn lumped(&self) -> &[f64] {
        &self.lumped
    }

    pub fn is_steady(&self) -> bool {
        self.old.is_none()
    }

    /// Copies the Dirichlet values into `u`.
    pub fn apply_dirichlet(&self, u: &mut [f64]) {
        for (x, d) in u.iter_mut().zip(&self.dirichlet) {
            if let Some(v) = d {
                *x = *v;
            }
        }
    }

    pub fn convection(&self, u: &[f64]) -> SparseOperator {
        assemble_convection_with(&self.mesh, self.velocity.as_ref(), u, self.form)
    }

    /// Shock detectors at `u`; Dirichlet nodes get zero.
    pub fn detectors(&self, u: &[f64]) -> Vec<f64> {
        let mut alphas = detectors(&self.mesh, u, &self.params);
        self.mask_dirichlet(&mut alphas);
        alphas
    }

    fn mask_dirichlet(&self, alphas: &mut [f64]) {
        for (a, d) in alphas.iter_mut().zip(&self.dirichlet) {
            if d.is_some() {
                *a = 0.0;
            }
        }
    }

    fn evaluate(&self, u: &[f64], alphas: Vec<f64>) -> Evaluated {
        let f = self.convection(u);
        let visc = graph_viscosity(&f, 1.0, &alphas, self.params.detector, self.params.sigma);
        let mass_visc = match (&self.old, self.params.mass) {
            (Some((_, dt)), MassKind::SymmetricMass) => Some(graph_viscosity(
                &self.mass,
                1.0 / dt,
                &alphas,
                self.params.detector,
                self.params.sigma,
            )),
            _ => None,
        };
        Evaluated { f, alphas, visc, mass_visc }
    }

    /// Total artificial diffusion `ν` (plus the mass part for the symmetric
    /// scheme) at state `u`.
    pub fn viscosity(&self, u: &[f64]) -> SparseOperator {
        let ev = self.evaluate(u, self.detectors(u));
        let mut nu = ev.visc.nu;
        if let Some(mv) = ev.mass_visc {
            nu.axpy(1.0, &mv.nu);
        }
        nu
    }

    /// Right-hand side of the Picard splitting, Dirichlet rows included.
    /// Its norm scales the residual.
    pub fn rhs(&self, u: &[f64]) -> Vec<f64> {
        let alphas = self.detectors(u);
        self.rhs_with(&alphas)
    }

    fn rhs_with(&self, alphas: &[f64]) -> Vec<f64> {
        let mut g = self.forcing.clone();
        if let Some((uo, dt)) = &self.old {
            let mu = match self.params.mass {
                MassKind::GradualLumping => {
                    assemble_nonlinear_mass(&self.mass, &self.lumped, alphas).mul_vec(uo)
                }
                MassKind::SymmetricMass => self.mass.mul_vec(uo),
            };
            for (gi, m) in g.iter_mut().zip(mu) {
                *gi += m / dt;
            }
        }
        for (gi, d) in g.iter_mut().zip(&self.dirichlet) {
            if let Some(v) = d {
                *gi = *v;
            }
        }
        g
    }
}

impl NonlinearSystem for TransportSystem {
    fn dim(&self) -> usize {
        self.mesh.num_nodes()
    }

    fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let ev = self.evaluate(u, self.detectors(u));
        let mut t = ev.f.mul_vec(u);
        let pat = ev.visc.nu.pattern().clone();
        for i in 0..t.len() {
            let start = pat.row_range(i).start;
            let mut s = 0.0;
            for (p, &j) in pat.row(i).iter().enumerate() {
                if j != i {
                    let mut nu = ev.visc.nu.values()[start + p];
                    if let Some(mv) = &ev.mass_visc {
                        nu += mv.nu.values()[start + p];
                    }
                    s += nu * (u[i] - u[j]);
                }
            }
            t[i] += s - self.forcing[i];
        }
        if let Some((uo, dt)) = &self.old {
            let d: Vec<f64> = u.iter().zip(uo).map(|(a, b)| a - b).collect();
            let md = self.mass.mul_vec(&d);
            for i in 0..t.len() {
                let mut m = md[i];
                if self.params.mass == MassKind::GradualLumping {
                    m += ev.alphas[i] * (self.lumped[i] * d[i] - md[i]);
                }
                t[i] += m / dt;
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if let Some(v) = d {
                t[i] = u[i] - v;
            }
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver {
                step: None,
                message: "non-finite residual".into(),
            });
        }
        Ok(t)
    }

    fn picard(&self, u: &[f64]) -> Result<(SparseOperator, Vec<f64>)> {
        let ev = self.evaluate(u, self.detectors(u));
        let mut a = ev.f;
        let mut nu = ev.visc.nu;
        if let Some(mv) = &ev.mass_visc {
            nu.axpy(1.0, &mv.nu);
        }
        a.axpy(1.0, &assemble_b(&nu));
        if let Some((_, dt)) = &self.old {
            match self.params.mass {
                MassKind::GradualLumping => a.axpy(
                    1.0 / dt,
                    &assemble_nonlinear_mass(&self.mass, &self.lumped, &ev.alphas),
                ),
                MassKind::SymmetricMass => a.axpy(1.0 / dt, &self.mass),
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if d.is_some() {
                a.set_identity_row(i);
            }
        }
        let g = self.rhs_with(&ev.alphas);
        Ok((a, g))
    }

    fn jacobian(&self, u: &[f64]) -> Result<SparseOperator> {
        if !self.params.detector.is_differentiable() {
            return Err(Error::Unsupported(format!(
                "exact Jacobian needs a smooth detector, got {}",
                self.params.detector.name()
            )));
        }
        let mesh = &self.mesh;
        let n = mesh.num_nodes();
        let (mut alphas, mut dalpha) = detectors_with_gradient(mesh, u, &self.params)?;
        self.mask_dirichlet(&mut alphas);
        for (i, d) in self.dirichlet.iter().enumerate() {
            if d.is_some() {
                dalpha.row_values_mut(i).fill(0.0);
            }
        }
        let ev = self.evaluate(u, alphas);
        let target = mesh.distance2_pattern().clone();

        // Galerkin, B and mass blocks on the adjacency pattern.
        let mut base = ev.f.clone();
        let mut nu = ev.visc.nu.clone();
        if let Some(mv) = &ev.mass_visc {
            nu.axpy(1.0, &mv.nu);
        }
        base.axpy(1.0, &assemble_b(&nu));
        let mut mass_weights: Option<Vec<f64>> = None;
        if let Some((uo, dt)) = &self.old {
            match self.params.mass {
                MassKind::GradualLumping => {
                    base.axpy(
                        1.0 / dt,
                        &assemble_nonlinear_mass(&self.mass, &self.lumped, &ev.alphas),
                    );
                    if !self.freeze_mass_derivative {
                        let d: Vec<f64> = u.iter().zip(uo).map(|(a, b)| a - b).collect();
                        let md = self.mass.mul_vec(&d);
                        mass_weights =
                            Some((0..n).map(|i| (self.lumped[i] * d[i] - md[i]) / dt).collect());
                    }
                }
                MassKind::SymmetricMass => base.axpy(1.0 / dt, &self.mass),
            }
        }
        let mut j = base.embed(target);

        // Convection tangent: Σ_b ∂F_ab/∂u_c u_b.
        let tangent = convection_tangent(mesh, self.velocity.as_ref(), u, self.form);
        let npe = mesh.kind().nodes_per_element();
        if !tangent.is_empty() {
            for e in 0..mesh.num_elements() {
                let el = mesh.element(e);
                let blk = tangent.element(e);
                for a in 0..npe {
                    for c in 0..npe {
                        let mut s = 0.0;
                        for b in 0..npe {
                            s += blk[(a * npe + b) * npe + c] * u[el[b]];
                        }
                        j.add(el[a], el[c], s);
                    }
                }
            }
        }

        // Derivative of ν_ij through α_i, α_j and F_ij, F_ji.
        let adj = mesh.adjacency().clone();
        let fv = ev.f.values();
        let mut own = vec![0.0; n];
        for i in 0..n {
            if self.dirichlet[i].is_some() {
                continue;
            }
            let start = adj.row_range(i).start;
            if let Some(w) = &mass_weights {
                own[i] += w[i];
            }
            for (p, &k) in adj.row(i).iter().enumerate() {
                if k == i {
                    continue;
                }
                let pos = start + p;
                let tpos = adj.find(k, i).expect("symmetric pattern");
                let diff = u[i] - u[k];
                let mut c1 = ev.visc.d_first.values()[pos] * fv[pos];
                let mut c2 = ev.visc.d_second.values()[pos] * fv[tpos];
                if let (Some(mv), Some((_, dt))) = (&ev.mass_visc, &self.old) {
                    c1 += mv.d_first.values()[pos] * self.mass.values()[pos] / dt;
                    c2 += mv.d_second.values()[pos] * self.mass.values()[tpos] / dt;
                }
                own[i] += diff * c1;
                // diff·c2·∂α_k/∂u_l for l in the neighbourhood of k.
                let c = diff * c2;
                if c != 0.0 {
                    for (l, g) in dalpha.row(k) {
                        j.add(i, l, c * g);
                    }
                }
            }
        }
        for i in 0..n {
            if own[i] != 0.0 {
                for (l, g) in dalpha.row(i) {
                    j.add(i, l, own[i] * g);
                }
            }
        }
        if !tangent.is_empty() {
            let alphas = &ev.alphas;
            for e in 0..mesh.num_elements() {
                let el = mesh.element(e);
                let blk = tangent.element(e);
                for a in 0..npe {
                    let i = el[a];
                    if self.dirichlet[i].is_some() {
                        continue;
                    }
                    for b in 0..npe {
                        if a == b {
                            continue;
                        }
                        let k = el[b];
                        let pos = adj.find(i, k).expect("element pair");
                        let p1 = ev.visc.d_first.values()[pos] * alphas[i];
                        let p2 = ev.visc.d_second.values()[pos] * alphas[k];
                        let diff = u[i] - u[k];
                        if diff == 0.0 || (p1 == 0.0 && p2 == 0.0) {
                            continue;
                        }
                        for c in 0..npe {
                            let v = p1 * blk[(a * npe + b) * npe + c] + p2 * blk[(b * npe + a) * npe + c];
                            j.add(i, el[c], diff * v);
                        }
                    }
                }
            }
        }
        for (i, d) in self.dirichlet.iter().enumerate() {
            if d.is_some() {
                j.set_identity_row(i);
            }
        }
        Ok(j)
    }
}

//! Element quadrature and shape-function tabulation.

use crate::mesh::{q1_shape, q1_shape_grad_ref, ElementKind, Mesh2D};

/// Quadrature points `(reference coordinates, weight)` of the standard rule:
/// 2×2 Gauss on `[-1,1]²` for Q1, the 3-point degree-2 rule on the unit
/// triangle for P1.
pub fn reference_rule(kind: ElementKind) -> Vec<([f64; 2], f64)> {
    match kind {
        ElementKind::Q1 => {
            let g = 1.0 / 3f64.sqrt();
            let mut r = Vec::with_capacity(4);
            for &y in &[-g, g] {
                for &x in &[-g, g] {
                    r.push(([x, y], 1.0));
                }
            }
            r
        }
        ElementKind::P1 => vec![
            ([1.0 / 6.0, 1.0 / 6.0], 1.0 / 6.0),
            ([2.0 / 3.0, 1.0 / 6.0], 1.0 / 6.0),
            ([1.0 / 6.0, 2.0 / 3.0], 1.0 / 6.0),
        ],
    }
}

/// Composite rule splitting the reference element into `s × s` cells (Q1) or
/// `s²` congruent triangles (P1), each integrated with a 3×3 Gauss rule or a
/// 6-point degree-4 rule respectively.
pub fn subdivided_rule(kind: ElementKind, s: usize) -> Vec<([f64; 2], f64)> {
    let s = s.max(1);
    let g = [-(0.6f64).sqrt(), 0.0, 0.6f64.sqrt()];
    let gw = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut r = Vec::new();
    match kind {
        ElementKind::Q1 => {
            let h = 2.0 / s as f64;
            for cy in 0..s {
                for cx in 0..s {
                    let (x0, y0) = (-1.0 + cx as f64 * h, -1.0 + cy as f64 * h);
                    for (a, &ga) in g.iter().enumerate() {
                        for (b, &gb) in g.iter().enumerate() {
                            let p = [x0 + 0.5 * h * (ga + 1.0), y0 + 0.5 * h * (gb + 1.0)];
                            r.push((p, gw[a] * gw[b] * 0.25 * h * h));
                        }
                    }
                }
            }
        }
        ElementKind::P1 => {
            // Dunavant degree-4 rule on the unit triangle.
            let (a1, b1, w1) = (0.445948490915965, 0.108103018168070, 0.223381589678011);
            let (a2, b2, w2) = (0.091576213509771, 0.816847572980459, 0.109951743655322);
            let base = [
                ([a1, a1], w1),
                ([b1, a1], w1),
                ([a1, b1], w1),
                ([a2, a2], w2),
                ([b2, a2], w2),
                ([a2, b2], w2),
            ];
            let h = 1.0 / s as f64;
            for cy in 0..s {
                for cx in 0..s - cy {
                    let (x0, y0) = (cx as f64 * h, cy as f64 * h);
                    for &(p, w) in &base {
                        r.push(([x0 + h * p[0], y0 + h * p[1]], 0.5 * w * h * h));
                    }
                    if cx + cy + 1 < s {
                        // Inverted cell with corners (x0+h, y0), (x0, y0+h), (x0+h, y0+h).
                        for &(p, w) in &base {
                            r.push(([x0 + h - h * p[0], y0 + h - h * p[1]], 0.5 * w * h * h));
                        }
                    }
                }
            }
        }
    }
    r
}

/// Shape values and physical gradients of every element at every point of a
/// reference rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    npe: usize,
    nq: usize,
    /// `weight × |det J|` per (element, point).
    pub weights: Vec<f64>,
    /// `φ_a` per (element, point, a).
    pub phi: Vec<f64>,
    /// `∇φ_a` per (element, point, a).
    pub grad: Vec<[f64; 2]>,
    /// Physical coordinates per (element, point).
    pub points: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(mesh: &Mesh2D, rule: &[([f64; 2], f64)]) -> Self {
        let npe = mesh.kind().nodes_per_element();
        let nq = rule.len();
        let ne = mesh.num_elements();
        let mut t = Tabulation {
            npe,
            nq,
            weights: Vec::with_capacity(ne * nq),
            phi: Vec::with_capacity(ne * nq * npe),
            grad: Vec::with_capacity(ne * nq * npe),
            points: Vec::with_capacity(ne * nq),
        };
        let mut ref_phi = vec![0.0; npe];
        let mut ref_grad = vec![[0.0; 2]; npe];
        for e in 0..ne {
            let el = mesh.element(e);
            for &(xi, w) in rule {
                match mesh.kind() {
                    ElementKind::Q1 => {
                        ref_phi.copy_from_slice(&q1_shape(xi));
                        ref_grad.copy_from_slice(&q1_shape_grad_ref(xi));
                    }
                    ElementKind::P1 => {
                        ref_phi.copy_from_slice(&[1.0 - xi[0] - xi[1], xi[0], xi[1]]);
                        ref_grad.copy_from_slice(&[[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]]);
                    }
                }
                let mut jac = [[0.0; 2]; 2];
                let mut x = [0.0; 2];
                for a in 0..npe {
                    let p = mesh.node(el[a]);
                    for r in 0..2 {
                        x[r] += ref_phi[a] * p[r];
                        jac[r][0] += p[r] * ref_grad[a][0];
                        jac[r][1] += p[r] * ref_grad[a][1];
                    }
                }
                let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                let inv = [
                    [jac[1][1] / det, -jac[0][1] / det],
                    [-jac[1][0] / det, jac[0][0] / det],
                ];
                t.weights.push(w * det.abs());
                t.points.push(x);
                for a in 0..npe {
                    t.phi.push(ref_phi[a]);
                    // ∇φ = J^{-T} ∇̂φ
                    let g = ref_grad[a];
                    t.grad.push([
                        inv[0][0] * g[0] + inv[1][0] * g[1],
                        inv[0][1] * g[0] + inv[1][1] * g[1],
                    ]);
                }
            }
        }
        t
    }

    pub fn nodes_per_element(&self) -> usize {
        self.npe
    }

    pub fn points_per_element(&self) -> usize {
        self.nq
    }

    /// Slice offsets for point `q` of element `e`.
    #[inline]
    pub fn at(&self, e: usize, q: usize) -> PointData<'_> {
        let k = e * self.nq + q;
        PointData {
            weight: self.weights[k],
            x: self.points[k],
            phi: &self.phi[k * self.npe..(k + 1) * self.npe],
            grad: &self.grad[k * self.npe..(k + 1) * self.npe],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PointData<'a> {
    pub weight: f64,
    pub x: [f64; 2],
    pub phi: &'a [f64],
    pub grad: &'a [[f64; 2]],
}

impl PointData<'_> {
    /// Value and gradient of the finite element function with local nodal
    /// values `u`.
    #[inline]
    pub fn eval(&self, u: &[f64]) -> (f64, [f64; 2]) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for a in 0..self.phi.len() {
            v += self.phi[a] * u[a];
            g[0] += self.grad[a][0] * u[a];
            g[1] += self.grad[a][1] * u[a];
        }
        (v, g)
    }
}

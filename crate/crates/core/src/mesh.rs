//! Conforming 2D meshes of P1 triangles or Q1 quadrilaterals.
//!
//! Besides coordinates and connectivity, a [`Mesh2D`] carries the node
//! neighbourhoods (nodes sharing an element, the node itself included) and,
//! for every node `i` and neighbour `j`, the point where the line through
//! `x_i` and `x_j` leaves the macroelement of `i` on the opposite side of
//! `x_j`. The shock detector compares gradients on both sides of `i` using
//! the solution value at that point.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::quadrature::{reference_rule, Tabulation};
use crate::sparse::Pattern;

pub type Point = [f64; 2];

const GEOM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1,
    Q1,
}

impl ElementKind {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementKind::P1 => 3,
            ElementKind::Q1 => 4,
        }
    }
}

impl std::str::FromStr for ElementKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "P1" => Ok(ElementKind::P1),
            "Q1" => Ok(ElementKind::Q1),
            _ => Err(Error::InvalidArgument(format!(
                "unknown element kind `{s}` (expected P1 or Q1)"
            ))),
        }
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub const fn unit() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// Location of the symmetric point of neighbour `j` with respect to node `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum SymInfo {
    /// The symmetric point is the mesh node with this index.
    Node(usize),
    /// The symmetric point lies inside (the closure of) an element.
    Point { element: usize, point: Point },
    /// The symmetric point would leave the domain.
    Absent,
}

/// Geometry of the pair `(i, j)` for a neighbour `j != i` of node `i`.
#[derive(Debug, Clone)]
pub struct NeighborGeometry {
    pub node: usize,
    /// `|x_j - x_i|`.
    pub dist: f64,
    pub sym: SymInfo,
    /// `|x_ij^sym - x_i|`; zero when the symmetric point is absent.
    pub sym_dist: f64,
    /// Interpolation weights of the symmetric value as
    /// `(position in the neighbourhood of i, weight)`.
    pub sym_weights: Vec<(usize, f64)>,
}

impl NeighborGeometry {
    pub fn has_sym(&self) -> bool {
        !matches!(self.sym, SymInfo::Absent)
    }
}

/// A boundary edge with its outward unit normal.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub normal: [f64; 2],
    pub element: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredInfo {
    pub nx: usize,
    pub ny: usize,
    pub domain: Rect,
}

#[derive(Debug)]
pub struct Mesh2D {
    kind: ElementKind,
    coords: Vec<Point>,
    elements: Vec<usize>,
    adjacency: Arc<Pattern>,
    node_elements: Vec<Vec<usize>>,
    boundary: Vec<bool>,
    boundary_edges: Vec<BoundaryEdge>,
    neighbors: Vec<Vec<NeighborGeometry>>,
    structured: Option<StructuredInfo>,
    mean_edge: f64,
    distance2: OnceLock<Arc<Pattern>>,
    tabulation: OnceLock<Arc<Tabulation>>,
    positions: OnceLock<Vec<usize>>,
}

impl Mesh2D {
    /// Structured mesh of `nx × ny` cells on `domain`. P1 meshes split every
    /// cell along the diagonal from its lower-left to its upper-right corner.
    /// Nodes are numbered with `x` running fastest.
    pub fn build_structured(nx: usize, ny: usize, domain: Rect, kind: ElementKind) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "cell counts must be positive, got {nx} x {ny}"
            )));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(Error::InvalidArgument("degenerate domain".into()));
        }
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;
        let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { domain.x1 } else { domain.x0 + i as f64 * hx };
                let y = if j == ny { domain.y1 } else { domain.y0 + j as f64 * hy };
                coords.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let (ll, lr, ur, ul) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                match kind {
                    ElementKind::Q1 => elements.extend_from_slice(&[ll, lr, ur, ul]),
                    ElementKind::P1 => {
                        elements.extend_from_slice(&[ll, lr, ur]);
                        elements.extend_from_slice(&[ll, ur, ul]);
                    }
                }
            }
        }
        let mut mesh = Self::from_elements(coords, elements, kind)?;
        mesh.structured = Some(StructuredInfo { nx, ny, domain });
        Ok(mesh)
    }

    /// Mesh from explicit coordinates and flat connectivity (3 or 4 node
    /// indices per element). Element orientation is normalised to
    /// counter-clockwise.
    pub fn from_elements(coords: Vec<Point>, mut elements: Vec<usize>, kind: ElementKind) -> Result<Self> {
        let npe = kind.nodes_per_element();
        if elements.is_empty() || !elements.len().is_multiple_of(npe) {
            return Err(Error::InvalidArgument(format!(
                "connectivity length {} is not a positive multiple of {npe}",
                elements.len()
            )));
        }
        let n = coords.len();
        if let Some(&bad) = elements.iter().find(|&&k| k >= n) {
            return Err(Error::InvalidArgument(format!("node index {bad} out of range")));
        }
        for el in elements.chunks_mut(npe) {
            let area = polygon_area(el.iter().map(|&k| coords[k]));
            if area.abs() < 1e-300 {
                return Err(Error::InvalidArgument("degenerate element".into()));
            }
            if area < 0.0 {
                el.reverse();
            }
        }
        let ne = elements.len() / npe;
        let mut node_elements = vec![Vec::new(); n];
        for e in 0..ne {
            for &k in &elements[e * npe..(e + 1) * npe] {
                node_elements[k].push(e);
            }
        }
        let rows: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut r = vec![i];
                for &e in &node_elements[i] {
                    r.extend_from_slice(&elements[e * npe..(e + 1) * npe]);
                }
                r
            })
            .collect();
        let adjacency = Arc::new(Pattern::from_rows(rows));

        // Boundary edges are the element edges used by exactly one element.
        let mut edge_count: std::collections::HashMap<(usize, usize), (usize, usize)> =
            std::collections::HashMap::new();
        for e in 0..ne {
            let el = &elements[e * npe..(e + 1) * npe];
            for a in 0..npe {
                let (p, q) = (el[a], el[(a + 1) % npe]);
                let key = (p.min(q), p.max(q));
                edge_count.entry(key).and_modify(|c| c.0 += 1).or_insert((1, e));
            }
        }
        let mut boundary = vec![false; n];
        let mut boundary_edges = Vec::new();
        let mut keys: Vec<_> = edge_count.into_iter().filter(|(_, c)| c.0 == 1).collect();
        keys.sort_unstable_by_key(|(k, _)| *k);
        for ((p, q), (_, e)) in keys {
            boundary[p] = true;
            boundary[q] = true;
            let (a, b) = (coords[p], coords[q]);
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = t[0].hypot(t[1]);
            let mut normal = [t[1] / len, -t[0] / len];
            let el = &elements[e * npe..(e + 1) * npe];
            let c = centroid(el.iter().map(|&k| coords[k]));
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            if (mid[0] - c[0]) * normal[0] + (mid[1] - c[1]) * normal[1] < 0.0 {
                normal = [-normal[0], -normal[1]];
            }
            boundary_edges.push(BoundaryEdge {
                nodes: [p, q],
                normal,
                element: e,
            });
        }

        let mut mesh = Self {
            kind,
            coords,
            elements,
            adjacency,
            node_elements,
            boundary,
            boundary_edges,
            neighbors: Vec::new(),
            structured: None,
            mean_edge: 0.0,
            distance2: OnceLock::new(),
            tabulation: OnceLock::new(),
            positions: OnceLock::new(),
        };
        mesh.neighbors = (0..n).map(|i| mesh.compute_neighbor_geometry(i)).collect();
        mesh.mean_edge = mesh.compute_mean_edge_length();
        Ok(mesh)
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / self.kind.nodes_per_element()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn node(&self, i: usize) -> Point {
        self.coords[i]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.kind.nodes_per_element();
        &self.elements[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.elements.chunks(self.kind.nodes_per_element())
    }

    /// Sorted neighbourhood of node `i` (including `i`).
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        self.adjacency.row(i)
    }

    pub fn adjacency(&self) -> &Arc<Pattern> {
        &self.adjacency
    }

    /// Pattern of nodes within graph distance two.
    pub fn distance2_pattern(&self) -> &Arc<Pattern> {
        self.distance2.get_or_init(|| Arc::new(self.adjacency.squared()))
    }

    /// Shape functions tabulated at the standard quadrature points.
    pub fn tabulation(&self) -> &Arc<Tabulation> {
        self.tabulation
            .get_or_init(|| Arc::new(Tabulation::new(self, &reference_rule(self.kind))))
    }

    /// Positions in the adjacency pattern of all local pairs `(a, b)` of
    /// element `e`, row-major.
    pub fn element_positions(&self, e: usize) -> &[usize] {
        let npe = self.kind.nodes_per_element();
        let all = self.positions.get_or_init(|| {
            let mut v = Vec::with_capacity(self.elements.len() * npe);
            for el in self.elements.chunks(npe) {
                for &i in el {
                    for &j in el {
                        v.push(self.adjacency.find(i, j).expect("element pair in adjacency"));
                    }
                }
            }
            v
        });
        &all[e * npe * npe..(e + 1) * npe * npe]
    }

    pub fn node_elements(&self, i: usize) -> &[usize] {
        &self.node_elements[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_nodes()).filter(|&i| self.boundary[i])
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Geometry of all neighbours `j != i` of node `i`, in neighbourhood order.
    pub fn neighbor_geometry(&self, i: usize) -> &[NeighborGeometry] {
        &self.neighbors[i]
    }

    pub fn neighbor_pair(&self, i: usize, j: usize) -> Option<&NeighborGeometry> {
        self.neighbors[i].iter().find(|g| g.node == j)
    }

    pub fn structured(&self) -> Option<StructuredInfo> {
        self.structured
    }

    /// Index of structured node `(ix, iy)`.
    pub fn structured_node(&self, ix: usize, iy: usize) -> Option<usize> {
        let s = self.structured?;
        (ix <= s.nx && iy <= s.ny).then(|| iy * (s.nx + 1) + ix)
    }

    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect::new(f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in &self.coords {
            r.x0 = r.x0.min(p[0]);
            r.y0 = r.y0.min(p[1]);
            r.x1 = r.x1.max(p[0]);
            r.y1 = r.y1.max(p[1]);
        }
        r
    }

    pub fn element_area(&self, e: usize) -> f64 {
        polygon_area(self.element(e).iter().map(|&k| self.coords[k]))
    }

    pub fn area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_area(e)).sum()
    }

    /// Mean length of the element edges.
    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge
    }

    fn compute_mean_edge_length(&self) -> f64 {
        let npe = self.kind.nodes_per_element();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for el in self.elements() {
            for a in 0..npe {
                let (p, q) = (el[a], el[(a + 1) % npe]);
                edges.push((p.min(q), p.max(q)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let total: f64 = edges.iter().map(|&(p, q)| dist(self.coords[p], self.coords[q])).sum();
        total / edges.len() as f64
    }

    /// Whether `p` lies in the closure of element `e`.
    pub fn element_contains(&self, e: usize, p: Point, tol: f64) -> bool {
        let el = self.element(e);
        let npe = el.len();
        let scale = self.element_area(e).sqrt();
        (0..npe).all(|a| {
            let (s, t) = (self.coords[el[a]], self.coords[el[(a + 1) % npe]]);
            let cross = (t[0] - s[0]) * (p[1] - s[1]) - (t[1] - s[1]) * (p[0] - s[0]);
            cross >= -tol * scale * dist(s, t)
        })
    }

    /// Values of the shape functions of element `e` at physical point `p`.
    pub fn shape_values_at(&self, e: usize, p: Point) -> Vec<f64> {
        let el = self.element(e);
        match self.kind {
            ElementKind::P1 => {
                let (a, b, c) = (self.coords[el[0]], self.coords[el[1]], self.coords[el[2]]);
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
                let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
                vec![1.0 - l1 - l2, l1, l2]
            }
            ElementKind::Q1 => {
                let xs: Vec<Point> = el.iter().map(|&k| self.coords[k]).collect();
                let xi = q1_inverse_map(&xs, p);
                q1_shape(xi).to_vec()
            }
        }
    }

    /// Interpolated value of the field `u` at the symmetric point of `j` with
    /// respect to `i`, or `None` when that point is outside the domain.
    pub fn symmetric_value(&self, u: &[f64], i: usize, j: usize) -> Option<f64> {
        let g = self.neighbor_pair(i, j)?;
        if !g.has_sym() {
            return None;
        }
        let row = self.neighborhood(i);
        Some(g.sym_weights.iter().map(|&(p, w)| w * u[row[p]]).sum())
    }

    fn compute_neighbor_geometry(&self, i: usize) -> Vec<NeighborGeometry> {
        let xi = self.coords[i];
        let row = self.adjacency.row(i);
        row.iter()
            .filter(|&&j| j != i)
            .map(|&j| {
                let xj = self.coords[j];
                let d = dist(xi, xj);
                let dir = [(xi[0] - xj[0]) / d, (xi[1] - xj[1]) / d];
                let (sym, sym_dist, sym_weights) = match self.locate_symmetric_point(i, dir) {
                    None => (SymInfo::Absent, 0.0, Vec::new()),
                    Some((e, p, t)) => {
                        let el = self.element(e);
                        let values = self.shape_values_at(e, p);
                        let scale = d.max(t);
                        let at_node = el
                            .iter()
                            .copied()
                            .find(|&k| dist(self.coords[k], p) <= GEOM_TOL * scale);
                        match at_node {
                            Some(k) => {
                                let pos = row.binary_search(&k).expect("node of patch element");
                                (SymInfo::Node(k), dist(self.coords[k], xi), vec![(pos, 1.0)])
                            }
                            None => {
                                let w = el
                                    .iter()
                                    .zip(values)
                                    .filter(|(_, v)| v.abs() > 1e-15)
                                    .map(|(&k, v)| (row.binary_search(&k).expect("patch node"), v))
                                    .collect();
                                (SymInfo::Point { element: e, point: p }, t, w)
                            }
                        }
                    }
                };
                NeighborGeometry {
                    node: j,
                    dist: d,
                    sym,
                    sym_dist,
                    sym_weights,
                }
            })
            .collect()
    }

    /// Walks the elements around `i` and intersects the ray `x_i + t dir`
    /// with the edges not touching `i`. Returns the element containing the
    /// segment, the exit point and its distance.
    fn locate_symmetric_point(&self, i: usize, dir: [f64; 2]) -> Option<(usize, Point, f64)> {
        let xi = self.coords[i];
        let mut best: Option<(usize, Point, f64)> = None;
        for &e in &self.node_elements[i] {
            let el = self.element(e);
            let npe = el.len();
            let scale = self.element_area(e).sqrt();
            for a in 0..npe {
                let (p, q) = (el[a], el[(a + 1) % npe]);
                if p == i || q == i {
                    continue;
                }
                let (xa, xb) = (self.coords[p], self.coords[q]);
                let eb = [xb[0] - xa[0], xb[1] - xa[1]];
                let det = -dir[0] * eb[1] + eb[0] * dir[1];
                if det.abs() < 1e-14 * scale {
                    continue;
                }
                let rhs = [xa[0] - xi[0], xa[1] - xi[1]];
                let t = (-rhs[0] * eb[1] + eb[0] * rhs[1]) / det;
                let s = (dir[0] * rhs[1] - dir[1] * rhs[0]) / det;
                if t <= GEOM_TOL * scale || !(-GEOM_TOL..=1.0 + GEOM_TOL).contains(&s) {
                    continue;
                }
                let mid = [xi[0] + 0.5 * t * dir[0], xi[1] + 0.5 * t * dir[1]];
                if !self.element_contains(e, mid, GEOM_TOL) {
                    continue;
                }
                let point = [xi[0] + t * dir[0], xi[1] + t * dir[1]];
                let better = match best {
                    None => true,
                    Some((be, _, bt)) => t < bt - GEOM_TOL * scale || ((t - bt).abs() <= GEOM_TOL * scale && e < be),
                };
                if better {
                    best = Some((e, point, t));
                }
            }
        }
        best
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn polygon_area(pts: impl Iterator<Item = Point>) -> f64 {
    let pts: Vec<Point> = pts.collect();
    let n = pts.len();
    (0..n)
        .map(|a| {
            let (p, q) = (pts[a], pts[(a + 1) % n]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
        / 2.0
}

fn centroid(pts: impl Iterator<Item = Point>) -> Point {
    let mut c = [0.0, 0.0];
    let mut n = 0.0;
    for p in pts {
        c[0] += p[0];
        c[1] += p[1];
        n += 1.0;
    }
    [c[0] / n, c[1] / n]
}

pub(crate) const Q1_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

pub(crate) fn q1_shape(xi: [f64; 2]) -> [f64; 4] {
    let mut n = [0.0; 4];
    for (a, c) in Q1_CORNERS.iter().enumerate() {
        n[a] = 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]);
    }
    n
}

pub(crate) fn q1_shape_grad_ref(xi: [f64; 2]) -> [[f64; 2]; 4] {
    let mut g = [[0.0; 2]; 4];
    for (a, c) in Q1_CORNERS.iter().enumerate() {
        g[a] = [
            0.25 * c[0] * (1.0 + c[1] * xi[1]),
            0.25 * c[1] * (1.0 + c[0] * xi[0]),
        ];
    }
    g
}

/// Reference coordinates of `p` in the bilinear quadrilateral `xs` (Newton).
fn q1_inverse_map(xs: &[Point], p: Point) -> [f64; 2] {
    let mut xi = [0.0, 0.0];
    for _ in 0..20 {
        let n = q1_shape(xi);
        let g = q1_shape_grad_ref(xi);
        let mut f = [-p[0], -p[1]];
        let mut jac = [[0.0; 2]; 2];
        for a in 0..4 {
            f[0] += n[a] * xs[a][0];
            f[1] += n[a] * xs[a][1];
            for r in 0..2 {
                jac[r][0] += xs[a][r] * g[a][0];
                jac[r][1] += xs[a][r] * g[a][1];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let d0 = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let d1 = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
        xi[0] -= d0;
        xi[1] -= d1;
        if d0.abs() + d1.abs() < 1e-15 {
            break;
        }
    }
    xi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_q1(n: usize) -> Mesh2D {
        Mesh2D::build_structured(n, n, Rect::unit(), ElementKind::Q1).unwrap()
    }

    #[test]
    fn two_by_two_q1_counts() {
        let m = unit_q1(2);
        assert_eq!(m.num_nodes(), 9);
        assert_eq!(m.num_elements(), 4);
        let c = m.structured_node(1, 1).unwrap();
        assert_eq!(m.neighborhood(c).len(), 9);
    }

    #[test]
    fn single_q1_element_neighbourhoods() {
        let m = unit_q1(1);
        assert_eq!(m.num_nodes(), 4);
        assert_eq!(m.num_elements(), 1);
        for i in 0..4 {
            assert_eq!(m.neighborhood(i), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn p1_structured_counts() {
        let m = Mesh2D::build_structured(3, 2, Rect::unit(), ElementKind::P1).unwrap();
        assert_eq!(m.num_nodes(), 12);
        assert_eq!(m.num_elements(), 12);
        assert!((m.area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(matches!(
            Mesh2D::build_structured(0, 2, Rect::unit(), ElementKind::Q1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn east_neighbour_mirrors_to_west() {
        let m = unit_q1(2);
        let c = m.structured_node(1, 1).unwrap();
        let east = m.structured_node(2, 1).unwrap();
        let west = m.structured_node(0, 1).unwrap();
        let g = m.neighbor_pair(c, east).unwrap();
        assert_eq!(g.sym, SymInfo::Node(west));
        assert!((g.sym_dist - g.dist).abs() < 1e-14);
    }

    #[test]
    fn symmetric_value_is_lookup_on_q1() {
        let m = unit_q1(2);
        let u: Vec<f64> = m.coords().iter().map(|p| p[0]).collect();
        let c = m.structured_node(1, 1).unwrap();
        let east = m.structured_node(2, 1).unwrap();
        let west = m.structured_node(0, 1).unwrap();
        assert_eq!(m.symmetric_value(&u, c, east), Some(u[west]));
    }

    #[test]
    fn corner_node_has_no_symmetric_points() {
        let m = unit_q1(3);
        let corner = m.structured_node(0, 0).unwrap();
        for g in m.neighbor_geometry(corner) {
            assert_eq!(g.sym, SymInfo::Absent);
            assert!(m.symmetric_value(&vec![0.0; m.num_nodes()], corner, g.node).is_none());
        }
    }

    #[test]
    fn boundary_node_keeps_tangential_symmetry() {
        let m = unit_q1(3);
        let i = m.structured_node(1, 0).unwrap();
        let w = m.structured_node(0, 0).unwrap();
        let e = m.structured_node(2, 0).unwrap();
        let n = m.structured_node(1, 1).unwrap();
        assert_eq!(m.neighbor_pair(i, w).unwrap().sym, SymInfo::Node(e));
        assert_eq!(m.neighbor_pair(i, n).unwrap().sym, SymInfo::Absent);
    }

    #[test]
    fn skewed_p1_patch_uses_interior_point() {
        // Node 0 at the centre of a patch whose symmetric points are not nodes.
        let coords = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.3, 1.0],
            [-1.0, 0.2],
            [-0.4, -1.0],
            [0.8, -0.9],
        ];
        let elements = vec![0, 1, 2, 0, 2, 3, 0, 3, 4, 0, 4, 5, 0, 5, 1];
        let m = Mesh2D::from_elements(coords, elements, ElementKind::P1).unwrap();
        let g = m.neighbor_pair(0, 1).unwrap();
        match g.sym {
            SymInfo::Point { point, .. } => {
                assert!(point[0] < 0.0);
                assert!(point[1].abs() < 1e-12);
            }
            ref other => panic!("expected interior point, got {other:?}"),
        }
        // Linear fields are reproduced exactly at the symmetric point.
        let u: Vec<f64> = m.coords().iter().map(|p| 2.0 * p[0] + p[1]).collect();
        if let SymInfo::Point { point, .. } = g.sym {
            let v = m.symmetric_value(&u, 0, 1).unwrap();
            assert!((v - (2.0 * point[0] + point[1])).abs() < 1e-12);
        }
    }
}

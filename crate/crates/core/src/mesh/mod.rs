//! Polygonal meshes of a planar domain.
//!
//! A mesh is built from a vertex list and counterclockwise cell loops. Edges
//! are derived, deduplicated by their sorted vertex pair and numbered in
//! lexicographic order of that pair, so DOF numbering downstream is
//! reproducible. Each edge carries a fixed tangent `t_E` (from its lower to
//! its higher vertex id) and the normal `n_E` obtained by rotating `t_E` by
//! `+pi/2`, so that `(t_E, n_E)` is right-handed.

mod families;
mod io;
mod refine;

pub use families::{hexagonal_mesh, locally_refined_mesh, triangular_mesh, MeshFamily};
pub use io::{load_mesh, parse_json_mesh, parse_typ2_mesh, write_json_mesh, MeshFormat};
pub use refine::uniform_refine;

use std::collections::BTreeMap;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug)]
pub struct Vertex<T: Real> {
    pub id: usize,
    pub x: Vector2<T>,
}

#[derive(Clone, Debug)]
pub struct Edge<T: Real> {
    pub id: usize,
    /// Endpoints, lower id first; `tangent` points from `vertices[0]` to `vertices[1]`.
    pub vertices: [usize; 2],
    pub tangent: Vector2<T>,
    pub normal: Vector2<T>,
    pub length: T,
    pub midpoint: Vector2<T>,
    pub boundary: bool,
    /// Incident elements in increasing id order (one for boundary edges).
    pub elements: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Element<T: Real> {
    pub id: usize,
    /// Vertex ids in counterclockwise order.
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]`.
    pub edges: Vec<usize>,
    /// `orientations[i] * n_E` is the outward unit normal on `edges[i]`.
    pub orientations: Vec<T>,
    pub diameter: T,
    pub area: T,
    /// Point the scaled polynomial bases are centred at.
    pub center: Vector2<T>,
    pub centroid: Vector2<T>,
}

impl<T: Real> Element<T> {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Outward unit normal on the `i`-th local edge.
    pub fn outward_normal(&self, mesh: &PolygonalMesh<T>, i: usize) -> Vector2<T> {
        mesh.edges[self.edges[i]].normal * self.orientations[i]
    }
}

#[derive(Clone, Debug)]
pub struct PolygonalMesh<T: Real> {
    pub vertices: Vec<Vertex<T>>,
    pub edges: Vec<Edge<T>>,
    pub elements: Vec<Element<T>>,
    /// Maximum element diameter.
    pub h: T,
    pub interior_edges: Vec<usize>,
    pub boundary_edges: Vec<usize>,
    pub boundary_vertex: Vec<bool>,
}

fn signed_area<T: Real>(pts: &[Vector2<T>]) -> T {
    let n = pts.len();
    let mut a = T::zero();
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    a * lit(0.5)
}

fn polygon_centroid<T: Real>(pts: &[Vector2<T>], area: T) -> Vector2<T> {
    let n = pts.len();
    let mut c = Vector2::zeros();
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let cross = p.x * q.y - q.x * p.y;
        c += (p + q) * cross;
    }
    c / (area * lit(6.0))
}

fn triangle_area<T: Real>(a: &Vector2<T>, b: &Vector2<T>, c: &Vector2<T>) -> T {
    ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) * lit(0.5)
}

/// True when every fan triangle `(x, p_i, p_{i+1})` has positive area.
pub fn is_star_shaped_wrt<T: Real>(pts: &[Vector2<T>], x: &Vector2<T>) -> bool {
    let n = pts.len();
    (0..n).all(|i| triangle_area(x, &pts[i], &pts[(i + 1) % n]) > T::zero())
}

fn distance_to_segment<T: Real>(x: &Vector2<T>, a: &Vector2<T>, b: &Vector2<T>) -> T {
    let d = b - a;
    let s = ((x - a).dot(&d) / d.norm_squared()).clamp(T::zero(), T::one());
    (a + d * s - x).norm()
}

/// Distance from `x` to the polygon boundary.
fn inradius_at<T: Real>(pts: &[Vector2<T>], x: &Vector2<T>) -> T {
    let n = pts.len();
    (0..n)
        .map(|i| distance_to_segment(x, &pts[i], &pts[(i + 1) % n]))
        .fold(T::max_value().unwrap(), |a, b| a.min(b))
}

/// Element center: the centroid when the element is star-shaped with respect
/// to it, otherwise the sampled point maximising the inscribed-ball radius
/// among the points the element is star-shaped with respect to.
fn element_center<T: Real>(pts: &[Vector2<T>], centroid: Vector2<T>) -> Option<Vector2<T>> {
    if is_star_shaped_wrt(pts, &centroid) {
        return Some(centroid);
    }
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let samples = 64;
    let mut best: Option<(T, Vector2<T>)> = None;
    for i in 1..samples {
        for j in 1..samples {
            let s: T = lit(i as f64 / samples as f64);
            let r: T = lit(j as f64 / samples as f64);
            let x = Vector2::new(lo.x + (hi.x - lo.x) * s, lo.y + (hi.y - lo.y) * r);
            if !is_star_shaped_wrt(pts, &x) {
                continue;
            }
            let rad = inradius_at(pts, &x);
            if best.is_none_or(|(b, _)| rad > b) {
                best = Some((rad, x));
            }
        }
    }
    best.map(|(_, x)| x)
}

impl<T: Real> PolygonalMesh<T> {
    /// Builds and validates a mesh from coordinates and counterclockwise cells.
    pub fn new(coords: Vec<Vector2<T>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        let nv = coords.len();
        if cells.is_empty() {
            return Err(Error::Topology("mesh has no cells".into()));
        }
        let vertices: Vec<Vertex<T>> = coords.into_iter().enumerate().map(|(id, x)| Vertex { id, x }).collect();

        // (sorted pair) -> list of (cell, traversed along tangent?)
        let mut edge_map: BTreeMap<(usize, usize), Vec<(usize, bool)>> = BTreeMap::new();
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(Error::Topology(format!("cell {c} has fewer than 3 vertices")));
            }
            for (i, &a) in cell.iter().enumerate() {
                let b = cell[(i + 1) % cell.len()];
                if a >= nv || b >= nv {
                    return Err(Error::Topology(format!("cell {c} references vertex out of range")));
                }
                if a == b {
                    return Err(Error::Topology(format!("cell {c} repeats vertex {a}")));
                }
                let key = (a.min(b), a.max(b));
                edge_map.entry(key).or_default().push((c, a < b));
            }
        }

        let mut edges = Vec::with_capacity(edge_map.len());
        let mut edge_index = BTreeMap::new();
        for (id, (&(a, b), incident)) in edge_map.iter().enumerate() {
            if incident.len() > 2 {
                return Err(Error::Topology(format!(
                    "edge ({a},{b}) is shared by {} elements",
                    incident.len()
                )));
            }
            if incident.len() == 2 {
                if incident[0].0 == incident[1].0 {
                    return Err(Error::Topology(format!(
                        "edge ({a},{b}) appears twice in cell {}",
                        incident[0].0
                    )));
                }
                if incident[0].1 == incident[1].1 {
                    return Err(Error::Topology(format!(
                        "edge ({a},{b}) traversed in the same direction by two cells"
                    )));
                }
            }
            let xa = vertices[a].x;
            let xb = vertices[b].x;
            let d = xb - xa;
            let length = d.norm();
            if length <= T::zero() {
                return Err(Error::Geometry(format!("edge ({a},{b}) has zero length")));
            }
            let tangent = d / length;
            let normal = Vector2::new(-tangent.y, tangent.x);
            let mut elems: Vec<usize> = incident.iter().map(|&(c, _)| c).collect();
            elems.sort_unstable();
            edges.push(Edge {
                id,
                vertices: [a, b],
                tangent,
                normal,
                length,
                midpoint: (xa + xb) * lit::<T>(0.5),
                boundary: incident.len() == 1,
                elements: elems,
            });
            edge_index.insert((a, b), id);
        }

        let mut elements = Vec::with_capacity(cells.len());
        for (id, cell) in cells.into_iter().enumerate() {
            let pts: Vec<Vector2<T>> = cell.iter().map(|&v| vertices[v].x).collect();
            let area = signed_area(&pts);
            if area <= T::zero() {
                return Err(Error::Geometry(format!(
                    "element {id} has non-positive signed area (cells must be counterclockwise)"
                )));
            }
            let centroid = polygon_centroid(&pts, area);
            let center = element_center(&pts, centroid)
                .ok_or_else(|| Error::Geometry(format!("element {id} is not star-shaped w.r.t. any sampled point")))?;
            let mut diameter = T::zero();
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    diameter = diameter.max((pts[i] - pts[j]).norm());
                }
            }
            let n = cell.len();
            let mut el_edges = Vec::with_capacity(n);
            let mut orientations = Vec::with_capacity(n);
            for i in 0..n {
                let a = cell[i];
                let b = cell[(i + 1) % n];
                el_edges.push(edge_index[&(a.min(b), a.max(b))]);
                // Traversing along t_E counterclockwise puts the outward
                // normal at t_E rotated by -pi/2, i.e. -n_E.
                orientations.push(if a < b { -T::one() } else { T::one() });
            }
            elements.push(Element {
                id,
                vertices: cell,
                edges: el_edges,
                orientations,
                diameter,
                area,
                center,
                centroid,
            });
        }

        let h = elements.iter().map(|e| e.diameter).fold(T::zero(), |a, b| a.max(b));
        let interior_edges = edges.iter().filter(|e| !e.boundary).map(|e| e.id).collect();
        let boundary_edges: Vec<usize> = edges.iter().filter(|e| e.boundary).map(|e| e.id).collect();
        let mut boundary_vertex = vec![false; nv];
        let mut boundary_degree = vec![0usize; nv];
        for &e in &boundary_edges {
            for &v in &edges[e].vertices {
                boundary_vertex[v] = true;
                boundary_degree[v] += 1;
            }
        }
        if let Some(v) = boundary_degree.iter().position(|&d| d != 0 && d != 2) {
            return Err(Error::Topology(format!(
                "boundary is not a union of closed loops at vertex {v}"
            )));
        }

        let mesh = PolygonalMesh {
            vertices,
            edges,
            elements,
            h,
            interior_edges,
            boundary_edges,
            boundary_vertex,
        };
        mesh.check_area_partition()?;
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, t: usize) -> Vec<Vector2<T>> {
        self.elements[t].vertices.iter().map(|&v| self.vertices[v].x).collect()
    }

    /// Area enclosed by the boundary loops, computed from boundary edges only.
    pub fn domain_area(&self) -> T {
        let mut a = T::zero();
        for &e in &self.boundary_edges {
            let edge = &self.edges[e];
            let t = edge.elements[0];
            let el = &self.elements[t];
            let i = el.edges.iter().position(|&x| x == e).unwrap();
            let p = self.vertices[el.vertices[i]].x;
            let q = self.vertices[el.vertices[(i + 1) % el.vertices.len()]].x;
            a += p.x * q.y - q.x * p.y;
        }
        a * lit(0.5)
    }

    pub fn total_area(&self) -> T {
        self.elements.iter().fold(T::zero(), |a, e| a + e.area)
    }

    fn check_area_partition(&self) -> Result<()> {
        let omega = self.domain_area();
        let sum = self.total_area();
        let tol = T::default_epsilon().sqrt() * lit(1e-4);
        if ((sum - omega) / omega).abs() > tol.max(lit(1e-12)) {
            return Err(Error::Topology(format!(
                "element areas sum to {sum} but the boundary encloses {omega}"
            )));
        }
        Ok(())
    }

    /// Smallest ratio (distance from `x_T` to the element boundary) / `h_T`.
    ///
    /// Recorded as mesh metadata; no threshold is enforced.
    pub fn regularity(&self) -> T {
        self.elements
            .iter()
            .map(|e| inradius_at(&self.element_points(e.id), &e.center) / e.diameter)
            .fold(T::max_value().unwrap(), |a, b| a.min(b))
    }

    /// Converts the mesh to another scalar type.
    pub fn cast<U: Real>(&self) -> Result<PolygonalMesh<U>> {
        let coords = self
            .vertices
            .iter()
            .map(|v| {
                Vector2::new(
                    lit::<U>(crate::scalar::to_f64(v.x.x)),
                    lit(crate::scalar::to_f64(v.x.y)),
                )
            })
            .collect();
        PolygonalMesh::new(coords, self.elements.iter().map(|e| e.vertices.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> PolygonalMesh<f64> {
        PolygonalMesh::new(
            vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(1.0, 0.0),
                Vector2::new(1.0, 1.0),
                Vector2::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn single_quad() {
        let m = unit_square();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.n_edges(), 4);
        assert_eq!(m.n_vertices(), 4);
        assert!((m.h - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.boundary_edges.len(), 4);
    }

    #[test]
    fn orientation_gives_outward_normals() {
        let m = triangular_mesh::<f64>(3).unwrap();
        for el in &m.elements {
            for i in 0..el.n_edges() {
                let e = &m.edges[el.edges[i]];
                let n = el.outward_normal(&m, i);
                assert!((e.midpoint - el.center).dot(&n) > 0.0);
                assert!((e.tangent.norm() - 1.0).abs() < 1e-14);
                // right-handed frame
                let det = e.tangent.x * e.normal.y - e.tangent.y * e.normal.x;
                assert!((det - 1.0).abs() < 1e-14);
                assert!(e.length <= el.diameter + 1e-15);
            }
        }
    }

    #[test]
    fn divergence_of_constants_vanishes() {
        let m = hexagonal_mesh::<f64>(3).unwrap();
        for el in &m.elements {
            let mut s = Vector2::zeros();
            for i in 0..el.n_edges() {
                s += el.outward_normal(&m, i) * m.edges[el.edges[i]].length;
            }
            assert!(s.norm() < 1e-12 * el.diameter);
        }
    }

    #[test]
    fn interior_edges_have_opposite_orientations() {
        let m = locally_refined_mesh::<f64>(2).unwrap();
        for &e in &m.interior_edges {
            let [t1, t2] = [m.edges[e].elements[0], m.edges[e].elements[1]];
            let o = |t: usize| {
                let el = &m.elements[t];
                el.orientations[el.edges.iter().position(|&x| x == e).unwrap()]
            };
            assert_eq!(o(t1) + o(t2), 0.0);
        }
    }

    #[test]
    fn two_by_two_triangulation_partition() {
        let m = triangular_mesh::<f64>(2).unwrap();
        assert_eq!(m.n_elements(), 8);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
        assert_eq!(m.n_edges(), 16);
        assert_eq!(m.interior_edges.len(), 8);
    }

    #[test]
    fn edge_shared_by_three_cells_is_rejected() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.5, 1.0),
            Vector2::new(0.5, -1.0),
            Vector2::new(0.5, 0.5),
        ];
        let err = PolygonalMesh::new(coords, vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn clockwise_cell_is_rejected() {
        let coords = vec![Vector2::new(0.0, 0.0), Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
        let err = PolygonalMesh::new(coords, vec![vec![0, 2, 1]]).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn zero_length_edge_is_rejected() {
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
        ];
        let err = PolygonalMesh::new(coords, vec![vec![0, 1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn non_star_centroid_falls_back_to_sampled_center() {
        // Thin "C" shape: the centroid lies outside the material.
        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.1),
            Vector2::new(0.1, 0.1),
            Vector2::new(0.1, 0.9),
            Vector2::new(1.0, 0.9),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        let res = PolygonalMesh::new(coords, vec![(0..8).collect()]);
        // Not star-shaped with respect to any point: must be reported.
        assert!(matches!(res, Err(Error::Geometry(_))));

        let coords = vec![
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(1.0, 0.2),
            Vector2::new(0.3, 0.2),
            Vector2::new(0.3, 1.0),
            Vector2::new(0.0, 1.0),
        ];
        let m = PolygonalMesh::new(coords, vec![(0..6).collect()]).unwrap();
        let el = &m.elements[0];
        let pts = m.element_points(0);
        assert!(is_star_shaped_wrt(&pts, &el.center));
        assert!(m.regularity() > 0.0);
    }
}

//! Degrees of freedom of the discrete rotation space `Theta_h^k` and the
//! discrete displacement space `U_h^k`, their interpolators, and the index
//! sets of clamped boundary unknowns.
//!
//! Global ordering (both spaces): element blocks by element id, then edge
//! blocks by edge id, then (for `U_h^k`) one value per vertex.
//!
//! * Theta element block: `Roly^{k-1}` coefficients then `cRoly^k`
//!   coefficients, in the orthonormal bases of [`ElementBasis`].
//! * Theta edge block: `2(k+1)` coefficients of `eta_E` in the orthonormal
//!   Legendre basis of `P^k(E)`, tangential (`eta_E . t_E`) first, then normal.
//! * U element block: `P^{k-1}` coefficients; U edge block: the `k` moments
//!   against the first Legendre functions; U vertex block: point values.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::PolygonalMesh;
use crate::polyspace::{dim_p2, dim_p2i, edge_legendre, segment_rule, ElementBasis, PolySpace};
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaSpace {
    pub k: usize,
    pub n_roly: usize,
    pub n_croly: usize,
    pub n_elements: usize,
    pub n_edges: usize,
}

impl ThetaSpace {
    pub fn new(k: usize, n_elements: usize, n_edges: usize) -> Self {
        ThetaSpace {
            k,
            n_roly: dim_p2(k) - 1,
            n_croly: dim_p2i(k as isize - 1),
            n_elements,
            n_edges,
        }
    }

    pub fn n_element_dofs(&self) -> usize {
        self.n_roly + self.n_croly
    }

    pub fn n_edge_dofs(&self) -> usize {
        2 * (self.k + 1)
    }

    pub fn element_offset(&self, t: usize) -> usize {
        t * self.n_element_dofs()
    }

    pub fn edge_offset(&self, e: usize) -> usize {
        self.n_elements * self.n_element_dofs() + e * self.n_edge_dofs()
    }

    pub fn dim(&self) -> usize {
        self.n_elements * self.n_element_dofs() + self.n_edges * self.n_edge_dofs()
    }

    /// Local dimension on an element with `n_edges` edges.
    pub fn local_dim(&self, n_edges: usize) -> usize {
        self.n_element_dofs() + n_edges * self.n_edge_dofs()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct USpace {
    pub k: usize,
    pub n_elements: usize,
    pub n_edges: usize,
    pub n_vertices: usize,
}

impl USpace {
    pub fn new(k: usize, n_elements: usize, n_edges: usize, n_vertices: usize) -> Self {
        USpace {
            k,
            n_elements,
            n_edges,
            n_vertices,
        }
    }

    pub fn n_element_dofs(&self) -> usize {
        dim_p2i(self.k as isize - 1)
    }

    pub fn n_edge_dofs(&self) -> usize {
        self.k
    }

    pub fn element_offset(&self, t: usize) -> usize {
        t * self.n_element_dofs()
    }

    pub fn edge_offset(&self, e: usize) -> usize {
        self.n_elements * self.n_element_dofs() + e * self.k
    }

    pub fn vertex_offset(&self, v: usize) -> usize {
        self.n_elements * self.n_element_dofs() + self.n_edges * self.k + v
    }

    pub fn dim(&self) -> usize {
        self.n_elements * self.n_element_dofs() + self.n_edges * self.k + self.n_vertices
    }

    pub fn local_dim(&self, n_edges: usize) -> usize {
        // polygon: as many vertices as edges
        self.n_element_dofs() + n_edges * (self.k + 1)
    }
}

/// Quadrature on an edge with the Legendre coordinate of every point.
#[derive(Clone, Debug)]
pub struct EdgeRule<T: Real> {
    pub points: Vec<Vector2<T>>,
    pub weights: Vec<T>,
    pub s: Vec<T>,
}

/// Per-edge data: frame, quadrature and the map from skeleton unknowns to
/// the `P^{k+1}(E)` trace.
#[derive(Clone, Debug)]
pub struct EdgeTrace<T: Real> {
    pub k: usize,
    pub h: T,
    pub midpoint: Vector2<T>,
    pub tangent: Vector2<T>,
    pub normal: Vector2<T>,
    pub a: Vector2<T>,
    pub b: Vector2<T>,
    /// Rule of degree `2k + 4`.
    pub rule: EdgeRule<T>,
    /// `(k+2) x (k+2)`: `[moments; v(a); v(b)]` to Legendre coefficients of
    /// the trace in `P^{k+1}(E)`.
    pub trace: DMatrix<T>,
    /// `(k+1) x (k+2)`: trace coefficients to the coefficients in `P^k(E)`
    /// of its derivative along `t_E`.
    pub deriv: DMatrix<T>,
}

impl<T: Real> EdgeTrace<T> {
    pub fn new(mesh: &PolygonalMesh<T>, e: usize, k: usize) -> Self {
        let edge = &mesh.edges[e];
        let a = mesh.vertices[edge.vertices[0]].x;
        let b = mesh.vertices[edge.vertices[1]].x;
        let mut et = EdgeTrace {
            k,
            h: edge.length,
            midpoint: edge.midpoint,
            tangent: edge.tangent,
            normal: edge.normal,
            a,
            b,
            rule: EdgeRule {
                points: vec![],
                weights: vec![],
                s: vec![],
            },
            trace: DMatrix::zeros(0, 0),
            deriv: DMatrix::zeros(0, 0),
        };
        et.rule = et.make_rule(2 * k + 4);

        let n = k + 2;
        let half: T = lit(0.5);
        let (va, _) = edge_legendre(-half, n, et.h);
        let (vb, _) = edge_legendre(half, n, et.h);
        // Rows of the system: k moment conditions then the two endpoints.
        let mut sys = DMatrix::zeros(n, n);
        for j in 0..k {
            sys[(j, j)] = T::one();
        }
        for j in 0..n {
            sys[(k, j)] = va[j];
            sys[(k + 1, j)] = vb[j];
        }
        et.trace = sys.lu().try_inverse().expect("Legendre endpoint system is regular");

        let mut deriv = DMatrix::zeros(k + 1, n);
        for (q, &s) in et.rule.s.iter().enumerate() {
            let (v, d) = edge_legendre(s, n, et.h);
            let w = et.rule.weights[q] / et.h;
            for i in 0..=k {
                for j in 0..n {
                    deriv[(i, j)] += w * v[i] * d[j];
                }
            }
        }
        et.deriv = deriv;
        et
    }

    pub fn make_rule(&self, degree: usize) -> EdgeRule<T> {
        let r = segment_rule(&self.a, &self.b, degree);
        let s = r
            .points
            .iter()
            .map(|p| (p - self.midpoint).dot(&self.tangent) / self.h)
            .collect();
        EdgeRule {
            points: r.points,
            weights: r.weights,
            s,
        }
    }

    /// Legendre values (`n x points`) at the rule points.
    pub fn legendre(&self, rule: &EdgeRule<T>, n: usize) -> DMatrix<T> {
        let mut out = DMatrix::zeros(n, rule.s.len());
        for (q, &s) in rule.s.iter().enumerate() {
            let (v, _) = edge_legendre(s, n, self.h);
            for i in 0..n {
                out[(i, q)] = v[i];
            }
        }
        out
    }

    /// Coefficients of the L2 projection of a scalar function onto `P^{n-1}(E)`.
    pub fn project(&self, rule: &EdgeRule<T>, n: usize, f: impl Fn(&Vector2<T>) -> T) -> DVector<T> {
        let psi = self.legendre(rule, n);
        let mut out = DVector::zeros(n);
        for (q, p) in rule.points.iter().enumerate() {
            let v = f(p) * rule.weights[q];
            for i in 0..n {
                out[i] += psi[(i, q)] * v;
            }
        }
        out
    }
}

/// Everything the local constructions need for one mesh and degree.
#[derive(Clone, Debug)]
pub struct DdrContext<T: Real> {
    pub mesh: PolygonalMesh<T>,
    pub k: usize,
    pub theta: ThetaSpace,
    pub u: USpace,
    pub bases: Vec<ElementBasis<T>>,
    pub edges: Vec<EdgeTrace<T>>,
    /// Exactness degree for interpolating and loading non-polynomial data.
    pub data_degree: usize,
}

impl<T: Real> DdrContext<T> {
    pub fn new(mesh: PolygonalMesh<T>, k: usize, quad_boost: usize) -> Result<Self> {
        let bases = (0..mesh.n_elements())
            .into_par_iter()
            .map(|t| ElementBasis::new(&mesh, t, k).map_err(|e| e.context(format!("element {t}"))))
            .collect::<Result<Vec<_>>>()?;
        let edges = (0..mesh.n_edges())
            .into_par_iter()
            .map(|e| EdgeTrace::new(&mesh, e, k))
            .collect();
        Ok(DdrContext {
            theta: ThetaSpace::new(k, mesh.n_elements(), mesh.n_edges()),
            u: USpace::new(k, mesh.n_elements(), mesh.n_edges(), mesh.n_vertices()),
            k,
            bases,
            edges,
            data_degree: 2 * k + 6 + quad_boost,
            mesh,
        })
    }

    /// Global indices of the local Theta unknowns of element `t`.
    pub fn theta_dofs(&self, t: usize) -> Vec<usize> {
        let el = &self.mesh.elements[t];
        let ne = self.theta.n_element_dofs();
        let nd = self.theta.n_edge_dofs();
        let mut out: Vec<usize> = (0..ne).map(|i| self.theta.element_offset(t) + i).collect();
        for &e in &el.edges {
            out.extend((0..nd).map(|i| self.theta.edge_offset(e) + i));
        }
        out
    }

    /// Global indices of the local U unknowns of element `t`: element block,
    /// the moments of each edge, then each vertex.
    pub fn u_dofs(&self, t: usize) -> Vec<usize> {
        let el = &self.mesh.elements[t];
        let ne = self.u.n_element_dofs();
        let mut out: Vec<usize> = (0..ne).map(|i| self.u.element_offset(t) + i).collect();
        for &e in &el.edges {
            out.extend((0..self.k).map(|i| self.u.edge_offset(e) + i));
        }
        out.extend(el.vertices.iter().map(|&v| self.u.vertex_offset(v)));
        out
    }

    /// Offset of local edge `i` inside the local Theta vector of `t`.
    pub fn theta_local_edge_offset(&self, i: usize) -> usize {
        self.theta.n_element_dofs() + i * self.theta.n_edge_dofs()
    }

    /// For local edge `i` of element `t`, the positions inside the local U
    /// vector of `[moments..., v(a), v(b)]` in the edge's own orientation.
    pub fn u_local_edge_positions(&self, t: usize, i: usize) -> Vec<usize> {
        let el = &self.mesh.elements[t];
        let nv = el.vertices.len();
        let base = self.u.n_element_dofs();
        let mut out: Vec<usize> = (0..self.k).map(|j| base + i * self.k + j).collect();
        let vstart = base + nv * self.k;
        let e = &self.mesh.edges[el.edges[i]];
        let (p, q) = (i, (i + 1) % nv);
        if el.vertices[p] == e.vertices[0] {
            out.push(vstart + p);
            out.push(vstart + q);
        } else {
            out.push(vstart + q);
            out.push(vstart + p);
        }
        out
    }

    /// Legendre coefficients of the `P^{k+1}(E)` skeleton trace on edge `e`.
    pub fn edge_trace(&self, e: usize, u: &DVector<T>) -> DVector<T> {
        let et = &self.edges[e];
        let edge = &self.mesh.edges[e];
        let mut dofs = DVector::zeros(self.k + 2);
        for j in 0..self.k {
            dofs[j] = u[self.u.edge_offset(e) + j];
        }
        dofs[self.k] = u[self.u.vertex_offset(edge.vertices[0])];
        dofs[self.k + 1] = u[self.u.vertex_offset(edge.vertices[1])];
        &et.trace * dofs
    }
}

/// Which unknowns are fixed by the clamped boundary condition.
#[derive(Clone, Debug)]
pub struct BoundaryDofs {
    pub theta: Vec<bool>,
    pub u: Vec<bool>,
}

impl BoundaryDofs {
    pub fn n_free_theta(&self) -> usize {
        self.theta.iter().filter(|&&b| !b).count()
    }

    pub fn n_free_u(&self) -> usize {
        self.u.iter().filter(|&&b| !b).count()
    }
}

pub fn boundary_dof_sets<T: Real>(ctx: &DdrContext<T>) -> BoundaryDofs {
    let mut theta = vec![false; ctx.theta.dim()];
    let mut u = vec![false; ctx.u.dim()];
    for &e in &ctx.mesh.boundary_edges {
        let o = ctx.theta.edge_offset(e);
        theta[o..o + ctx.theta.n_edge_dofs()].fill(true);
        let o = ctx.u.edge_offset(e);
        u[o..o + ctx.k].fill(true);
    }
    for (v, &b) in ctx.mesh.boundary_vertex.iter().enumerate() {
        if b {
            u[ctx.u.vertex_offset(v)] = true;
        }
    }
    BoundaryDofs { theta, u }
}

fn edge_theta_block<T: Real>(
    et: &EdgeTrace<T>,
    degree: usize,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
    tangential_only: bool,
) -> DVector<T> {
    let n = et.k + 1;
    let rule = et.make_rule(degree);
    let mut out = DVector::zeros(2 * n);
    let tan = et.project(&rule, n, |p| f(p).dot(&et.tangent));
    out.rows_mut(0, n).copy_from(&tan);
    if !tangential_only {
        let nor = et.project(&rule, n, |p| f(p).dot(&et.normal));
        out.rows_mut(n, n).copy_from(&nor);
    }
    out
}

fn element_theta_block<T: Real>(
    ctx: &DdrContext<T>,
    t: usize,
    degree: usize,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
) -> Result<DVector<T>> {
    let k = ctx.k;
    let mut out = DVector::zeros(ctx.theta.n_element_dofs());
    if k == 0 {
        return Ok(out);
    }
    let b = &ctx.bases[t];
    let rule = b.rule(degree)?;
    let r = b.project_vector(PolySpace::Roly(k - 1), &rule, f)?;
    let c = b.project_vector(PolySpace::CRoly(k), &rule, f)?;
    out.rows_mut(0, r.len()).copy_from(&r);
    out.rows_mut(r.len(), c.len()).copy_from(&c);
    Ok(out)
}

fn interpolate_theta_impl<T: Real>(
    ctx: &DdrContext<T>,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
    tangential_only: bool,
) -> Result<DVector<T>> {
    let mut out = DVector::zeros(ctx.theta.dim());
    let deg = ctx.data_degree;
    let blocks = (0..ctx.mesh.n_elements())
        .into_par_iter()
        .map(|t| element_theta_block(ctx, t, deg, f))
        .collect::<Result<Vec<_>>>()?;
    for (t, b) in blocks.iter().enumerate() {
        out.rows_mut(ctx.theta.element_offset(t), b.len()).copy_from(b);
    }
    let eblocks: Vec<_> = ctx
        .edges
        .par_iter()
        .map(|et| edge_theta_block(et, deg, f, tangential_only))
        .collect();
    for (e, b) in eblocks.iter().enumerate() {
        out.rows_mut(ctx.theta.edge_offset(e), b.len()).copy_from(b);
    }
    Ok(out)
}

/// `I_Theta`: element Roly/cRoly projections and full vector edge projections.
pub fn interpolate_theta<T: Real>(
    ctx: &DdrContext<T>,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
) -> Result<DVector<T>> {
    interpolate_theta_impl(ctx, f, false)
}

/// Modified interpolator keeping only `pi^k_E(eta . t_E) t_E` on edges.
pub fn interpolate_theta_tangential<T: Real>(
    ctx: &DdrContext<T>,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
) -> Result<DVector<T>> {
    interpolate_theta_impl(ctx, f, true)
}

/// Local `I_Theta` on element `t`, in the local ordering of [`DdrContext::theta_dofs`].
pub fn interpolate_theta_local<T: Real>(
    ctx: &DdrContext<T>,
    t: usize,
    degree: usize,
    f: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
) -> Result<DVector<T>> {
    let el = &ctx.mesh.elements[t];
    let mut out = DVector::zeros(ctx.theta.local_dim(el.n_edges()));
    let eb = element_theta_block(ctx, t, degree, f)?;
    out.rows_mut(0, eb.len()).copy_from(&eb);
    for (i, &e) in el.edges.iter().enumerate() {
        let b = edge_theta_block(&ctx.edges[e], degree, f, false);
        out.rows_mut(ctx.theta_local_edge_offset(i), b.len()).copy_from(&b);
    }
    Ok(out)
}

/// `I_U`: element `P^{k-1}` projections, edge moments and vertex values.
pub fn interpolate_u<T: Real>(ctx: &DdrContext<T>, f: &(dyn Fn(&Vector2<T>) -> T + Sync)) -> Result<DVector<T>> {
    let k = ctx.k;
    let deg = ctx.data_degree;
    let mut out = DVector::zeros(ctx.u.dim());
    if k > 0 {
        let blocks = (0..ctx.mesh.n_elements())
            .into_par_iter()
            .map(|t| {
                let b = &ctx.bases[t];
                b.project_scalar(k - 1, &b.rule(deg)?, f)
            })
            .collect::<Result<Vec<_>>>()?;
        for (t, b) in blocks.iter().enumerate() {
            out.rows_mut(ctx.u.element_offset(t), b.len()).copy_from(b);
        }
        let eblocks: Vec<_> = ctx
            .edges
            .par_iter()
            .map(|et| et.project(&et.make_rule(deg), k, f))
            .collect();
        for (e, b) in eblocks.iter().enumerate() {
            out.rows_mut(ctx.u.edge_offset(e), k).copy_from(b);
        }
    }
    for v in &ctx.mesh.vertices {
        out[ctx.u.vertex_offset(v.id)] = f(&v.x);
    }
    Ok(out)
}

/// Gathers the local vector of element `t` from a global one.
pub fn gather<T: Real>(global: &DVector<T>, dofs: &[usize]) -> DVector<T> {
    DVector::from_iterator(dofs.len(), dofs.iter().map(|&i| global[i]))
}

//! Global assembly of the plate forms, clamped/Dirichlet boundary handling,
//! the direct solve, and the discrete energy norm.
//!
//! Global unknown vectors are `[theta; u]`, the `Theta_h^k` block first.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::ddr_ops::{build_ddr_locals, symmetrize, DdrLocal};
use crate::ddr_spaces::{boundary_dof_sets, interpolate_theta, interpolate_u, BoundaryDofs, DdrContext};
use crate::error::{Error, Result};
use crate::hho::{build_hho_locals, HhoLocal};
use crate::mesh::PolygonalMesh;
use crate::polyspace::dim_p2;
use crate::scalar::{lit, to_f64, Real};
use crate::sparse::{CooMatrix, CsrMatrix, LdlFactor};

/// Relative residual required of the reduced linear solve.
pub const SOLVER_TOL: f64 = 1e-10;
/// Relative asymmetry tolerated in the assembled matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams<T: Real> {
    pub young: T,
    pub poisson: T,
    pub thickness: T,
    pub kappa0: T,
}

impl<T: Real> MaterialParams<T> {
    pub fn new(young: T, poisson: T, thickness: T, kappa0: T) -> Result<Self> {
        if !(young > T::zero()) {
            return Err(Error::Config(format!(
                "Young modulus must be positive, got {}",
                to_f64(young)
            )));
        }
        if !(poisson >= T::zero() && poisson < lit(0.5)) {
            return Err(Error::Config(format!(
                "Poisson ratio must lie in [0, 1/2), got {}",
                to_f64(poisson)
            )));
        }
        if !(thickness > T::zero() && thickness < T::one()) {
            return Err(Error::Config(format!(
                "thickness must lie in (0, 1), got {}",
                to_f64(thickness)
            )));
        }
        if !(kappa0 > T::zero()) {
            return Err(Error::Config(format!(
                "shear correction factor must be positive, got {}",
                to_f64(kappa0)
            )));
        }
        Ok(MaterialParams {
            young,
            poisson,
            thickness,
            kappa0,
        })
    }

    /// `E = 1`, `nu = 0.3`, `kappa0 = 5/6`.
    pub fn standard(thickness: T) -> Result<Self> {
        Self::new(T::one(), lit(0.3), thickness, lit(5.0 / 6.0))
    }

    pub fn beta0(&self) -> T {
        self.young / (lit::<T>(12.0) * (T::one() + self.poisson))
    }

    pub fn beta1(&self) -> T {
        self.young * self.poisson / (lit::<T>(12.0) * (T::one() - self.poisson * self.poisson))
    }

    pub fn kappa(&self) -> T {
        self.kappa0 * self.young / (lit::<T>(2.0) * (T::one() + self.poisson))
    }

    pub fn mu(&self) -> T {
        self.kappa().min(self.beta0())
    }

    /// `kappa / t^2`.
    pub fn shear_weight(&self) -> T {
        self.kappa() / (self.thickness * self.thickness)
    }
}

/// Mesh, spaces and all local operators for one degree.
#[derive(Clone, Debug)]
pub struct Discretisation<T: Real> {
    pub ctx: DdrContext<T>,
    pub ddr: Vec<DdrLocal<T>>,
    pub hho: Vec<HhoLocal<T>>,
}

impl<T: Real> Discretisation<T> {
    pub fn new(mesh: PolygonalMesh<T>, k: usize, quad_boost: usize) -> Result<Self> {
        let ctx = DdrContext::new(mesh, k, quad_boost)?;
        let ddr = build_ddr_locals(&ctx)?;
        let hho = build_hho_locals(&ctx, &ddr)?;
        Ok(Discretisation { ctx, ddr, hho })
    }

    pub fn k(&self) -> usize {
        self.ctx.k
    }

    pub fn n_theta(&self) -> usize {
        self.ctx.theta.dim()
    }

    pub fn n_u(&self) -> usize {
        self.ctx.u.dim()
    }

    pub fn dim(&self) -> usize {
        self.n_theta() + self.n_u()
    }

    /// Global indices of `[theta_T; u_T]` in the full unknown vector.
    pub fn pair_dofs(&self, t: usize) -> Vec<usize> {
        let off = self.n_theta();
        let mut d = self.ctx.theta_dofs(t);
        d.extend(self.ctx.u_dofs(t).into_iter().map(|i| i + off));
        d
    }

    /// Boundary flags on the full unknown vector.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let BoundaryDofs { mut theta, u } = boundary_dof_sets(&self.ctx);
        theta.extend(u);
        theta
    }

    /// `[I_Theta theta; I_U u]`.
    pub fn interpolate_pair(
        &self,
        theta: &(dyn Fn(&Vector2<T>) -> Vector2<T> + Sync),
        u: &(dyn Fn(&Vector2<T>) -> T + Sync),
    ) -> Result<DVector<T>> {
        let th = interpolate_theta(&self.ctx, theta)?;
        let uu = interpolate_u(&self.ctx, u)?;
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, th.len()).copy_from(&th);
        out.rows_mut(th.len(), uu.len()).copy_from(&uu);
        Ok(out)
    }

    pub fn split(&self, x: &DVector<T>) -> (DVector<T>, DVector<T>) {
        (
            x.rows(0, self.n_theta()).into_owned(),
            x.rows(self.n_theta(), self.n_u()).into_owned(),
        )
    }
}

/// `j_h` contribution of every edge on `Theta` unknowns (empty for `k >= 1`):
/// `(global dofs, local matrix)` in edge order.
fn jump_blocks<T: Real>(disc: &Discretisation<T>) -> Vec<(Vec<usize>, DMatrix<T>)> {
    if disc.k() > 0 {
        return Vec::new();
    }
    let ctx = &disc.ctx;
    (0..ctx.mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let edge = &ctx.mesh.edges[e];
            let w = &ctx.edges[e].rule.weights;
            let mut dofs = Vec::new();
            let mut vals: Vec<(DMatrix<T>, DMatrix<T>)> = Vec::new();
            for (side, &t) in edge.elements.iter().enumerate() {
                let i = ctx.mesh.elements[t].edges.iter().position(|&x| x == e).unwrap();
                let (px, py) = &disc.hho[t].p_edge[i];
                let s = if side == 0 { T::one() } else { -T::one() };
                vals.push((px * s, py * s));
                dofs.extend(ctx.theta_dofs(t));
            }
            let n: usize = vals.iter().map(|v| v.0.ncols()).sum();
            let nq = w.len();
            let mut jx = DMatrix::zeros(nq, n);
            let mut jy = DMatrix::zeros(nq, n);
            let mut c = 0;
            for (vx, vy) in &vals {
                jx.columns_mut(c, vx.ncols()).copy_from(vx);
                jy.columns_mut(c, vy.ncols()).copy_from(vy);
                c += vx.ncols();
            }
            let mut wx = jx.clone();
            let mut wy = jy.clone();
            for q in 0..nq {
                wx.row_mut(q).scale_mut(w[q]);
                wy.row_mut(q).scale_mut(w[q]);
            }
            let mut m = (jx.transpose() * wx + jy.transpose() * wy) / edge.length;
            symmetrize(&mut m);
            (dofs, m)
        })
        .collect()
}

/// `[I, -uG_T]^T M_T [I, -uG_T]` on `[theta_T; u_T]`.
fn constraint_block<T: Real>(ddr: &DdrLocal<T>) -> DMatrix<T> {
    let nt = ddr.m_theta.nrows();
    let nu = ddr.ug.ncols();
    let mg = &ddr.m_theta * &ddr.ug;
    let mut out = DMatrix::zeros(nt + nu, nt + nu);
    out.view_mut((0, 0), (nt, nt)).copy_from(&ddr.m_theta);
    out.view_mut((0, nt), (nt, nu)).copy_from(&(-&mg));
    out.view_mut((nt, 0), (nu, nt)).copy_from(&(-mg.transpose()));
    out.view_mut((nt, nt), (nu, nu)).copy_from(&(ddr.ug.transpose() * &mg));
    symmetrize(&mut out);
    out
}

/// `M_T` on theta and `uG_T^T M_T uG_T` on u.
fn l2_pair_block<T: Real>(ddr: &DdrLocal<T>) -> DMatrix<T> {
    let nt = ddr.m_theta.nrows();
    let nu = ddr.ug.ncols();
    let mut out = DMatrix::zeros(nt + nu, nt + nu);
    out.view_mut((0, 0), (nt, nt)).copy_from(&ddr.m_theta);
    let mut g = ddr.ug.transpose() * &ddr.m_theta * &ddr.ug;
    symmetrize(&mut g);
    out.view_mut((nt, nt), (nu, nu)).copy_from(&g);
    out
}

/// Element-by-element assembly with blocks computed in parallel and
/// scattered in element order.
fn assemble_pairs<T: Real>(
    disc: &Discretisation<T>,
    n: usize,
    block: impl Fn(usize) -> (Vec<usize>, DMatrix<T>) + Sync + Send,
    jump_weight: Option<T>,
) -> CsrMatrix<T> {
    let blocks: Vec<_> = (0..disc.ctx.mesh.n_elements()).into_par_iter().map(block).collect();
    let mut coo = CooMatrix::new(n, n);
    for (dofs, m) in &blocks {
        coo.add_block(dofs, dofs, m);
    }
    if let Some(w) = jump_weight {
        for (dofs, m) in jump_blocks(disc) {
            coo.add_block(&dofs, &dofs, &(m * w));
        }
    }
    coo.to_csr()
}

/// `a_h` on `Theta_h^k`.
pub fn assemble_ah<T: Real>(disc: &Discretisation<T>, mat: &MaterialParams<T>) -> CsrMatrix<T> {
    let (b0, b1) = (mat.beta0(), mat.beta1());
    assemble_pairs(
        disc,
        disc.n_theta(),
        |t| (disc.ctx.theta_dofs(t), disc.hho[t].a_local(b0, b1)),
        Some(b0),
    )
}

/// `j_h` on `Theta_h^k` (zero for `k >= 1`).
pub fn assemble_jh<T: Real>(disc: &Discretisation<T>) -> CsrMatrix<T> {
    let mut coo = CooMatrix::new(disc.n_theta(), disc.n_theta());
    for (dofs, m) in jump_blocks(disc) {
        coo.add_block(&dofs, &dofs, &m);
    }
    coo.to_csr()
}

/// DDR L2 product `(.,.)_{Theta,h}`.
pub fn assemble_l2_theta<T: Real>(disc: &Discretisation<T>) -> CsrMatrix<T> {
    assemble_pairs(
        disc,
        disc.n_theta(),
        |t| (disc.ctx.theta_dofs(t), disc.ddr[t].m_theta.clone()),
        None,
    )
}

/// `b_h` on the full unknown vector.
pub fn assemble_bh<T: Real>(disc: &Discretisation<T>, mat: &MaterialParams<T>) -> CsrMatrix<T> {
    let c = mat.shear_weight();
    assemble_pairs(
        disc,
        disc.dim(),
        |t| (disc.pair_dofs(t), constraint_block(&disc.ddr[t]) * c),
        None,
    )
}

/// `A_h = a_h + b_h` on the full unknown vector.
pub fn assemble_system<T: Real>(disc: &Discretisation<T>, mat: &MaterialParams<T>) -> CsrMatrix<T> {
    let (b0, b1, c) = (mat.beta0(), mat.beta1(), mat.shear_weight());
    assemble_pairs(
        disc,
        disc.dim(),
        |t| {
            let nt = disc.ddr[t].m_theta.nrows();
            let mut m = constraint_block(&disc.ddr[t]) * c;
            let mut a = m.view_mut((0, 0), (nt, nt));
            a += disc.hho[t].a_local(b0, b1);
            symmetrize(&mut m);
            (disc.pair_dofs(t), m)
        },
        Some(b0),
    )
}

/// Gram matrix of the discrete energy norm: `A_h` plus
/// `mu ((eta, eta)_Theta + (uG v, uG v)_Theta)`.
pub fn assemble_energy_norm<T: Real>(disc: &Discretisation<T>, mat: &MaterialParams<T>) -> CsrMatrix<T> {
    let (b0, b1, c, mu) = (mat.beta0(), mat.beta1(), mat.shear_weight(), mat.mu());
    assemble_pairs(
        disc,
        disc.dim(),
        |t| {
            let nt = disc.ddr[t].m_theta.nrows();
            let mut m = constraint_block(&disc.ddr[t]) * c + l2_pair_block(&disc.ddr[t]) * mu;
            let mut a = m.view_mut((0, 0), (nt, nt));
            a += disc.hho[t].a_local(b0, b1);
            symmetrize(&mut m);
            (disc.pair_dofs(t), m)
        },
        Some(b0),
    )
}

/// Global discrete gradient `uG_h` as a `Theta x U` matrix.
pub fn global_gradient<T: Real>(disc: &Discretisation<T>) -> CsrMatrix<T> {
    let ctx = &disc.ctx;
    let mut coo = CooMatrix::new(disc.n_theta(), disc.n_u());
    for (t, loc) in disc.ddr.iter().enumerate() {
        let udofs = ctx.u_dofs(t);
        let blk = crate::ddr_ops::vcat(&(&loc.proj_roly * &loc.gt), &(&loc.proj_croly * &loc.gt));
        let o = ctx.theta.element_offset(t);
        let rows: Vec<usize> = (o..o + blk.nrows()).collect();
        coo.add_block(&rows, &udofs, &blk);
    }
    for (e, et) in ctx.edges.iter().enumerate() {
        let edge = &ctx.mesh.edges[e];
        let mut cols: Vec<usize> = (0..ctx.k).map(|j| ctx.u.edge_offset(e) + j).collect();
        cols.push(ctx.u.vertex_offset(edge.vertices[0]));
        cols.push(ctx.u.vertex_offset(edge.vertices[1]));
        let o = ctx.theta.edge_offset(e);
        let rows: Vec<usize> = (o..o + ctx.k + 1).collect();
        coo.add_block(&rows, &cols, &(&et.deriv * &et.trace));
    }
    coo.to_csr()
}

/// `l_h(v) = int f P_U v` as a vector on `U_h^k`.
pub fn assemble_rhs<T: Real>(disc: &Discretisation<T>, f: &(dyn Fn(&Vector2<T>) -> T + Sync)) -> Result<DVector<T>> {
    let ctx = &disc.ctx;
    let nk1 = dim_p2(ctx.k + 1);
    let locals = (0..ctx.mesh.n_elements())
        .into_par_iter()
        .map(|t| {
            let b = &ctx.bases[t];
            let rule = b.rule(ctx.data_degree)?;
            let ev = b.eval(&rule.points);
            let mut mom = DVector::zeros(nk1);
            for (q, p) in rule.points.iter().enumerate() {
                let fw = f(p) * rule.weights[q];
                for i in 0..nk1 {
                    mom[i] += fw * ev.s[(i, q)];
                }
            }
            Ok(disc.ddr[t].pu.transpose() * mom)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DVector::zeros(disc.n_u());
    for (t, l) in locals.iter().enumerate() {
        for (a, &i) in ctx.u_dofs(t).iter().enumerate() {
            out[i] += l[a];
        }
    }
    Ok(out)
}

/// `x^T A y`.
pub fn bilinear<T: Real>(a: &CsrMatrix<T>, x: &DVector<T>, y: &DVector<T>) -> T {
    x.dot(&a.mul_vec(y))
}

/// Discrete energy norm of a full unknown vector, given the Gram matrix from
/// [`assemble_energy_norm`].
pub fn energy_norm<T: Real>(gram: &CsrMatrix<T>, x: &DVector<T>) -> T {
    bilinear(gram, x, x).max(T::zero()).sqrt()
}

/// `E_h = ||x_h - I x|| / ||I x||`.
pub fn relative_error<T: Real>(gram: &CsrMatrix<T>, discrete: &DVector<T>, interpolate: &DVector<T>) -> Result<T> {
    let den = energy_norm(gram, interpolate);
    if den == T::zero() {
        return Err(Error::DivisionByZero(
            "interpolate of the exact solution has zero norm".into(),
        ));
    }
    Ok(energy_norm(gram, &(discrete - interpolate)) / den)
}

/// Reduced system on the free unknowns.
#[derive(Clone, Debug)]
pub struct AssembledSystem<T: Real> {
    pub matrix: CsrMatrix<T>,
    pub rhs: DVector<T>,
    /// Full-size vector carrying the Dirichlet values (zero on free unknowns).
    pub lift: DVector<T>,
    /// Free unknowns, increasing.
    pub free: Vec<usize>,
}

impl<T: Real> AssembledSystem<T> {
    /// Eliminates the boundary unknowns of `a x = load`, their values taken
    /// from `dirichlet` (or zero).
    pub fn new(a: &CsrMatrix<T>, load: &DVector<T>, boundary: &[bool], dirichlet: Option<&DVector<T>>) -> Self {
        let n = a.nrows;
        let mut lift = DVector::zeros(n);
        if let Some(d) = dirichlet {
            for i in 0..n {
                if boundary[i] {
                    lift[i] = d[i];
                }
            }
        }
        let free: Vec<usize> = (0..n).filter(|&i| !boundary[i]).collect();
        let mut col_map = vec![None; n];
        for (j, &i) in free.iter().enumerate() {
            col_map[i] = Some(j);
        }
        let matrix = a.select(&free, &col_map, free.len());
        let al = a.mul_vec(&lift);
        let rhs = DVector::from_iterator(free.len(), free.iter().map(|&i| load[i] - al[i]));
        AssembledSystem {
            matrix,
            rhs,
            lift,
            free,
        }
    }

    /// Solves with the sparse LDL^T factorisation plus a few steps of
    /// iterative refinement.
    pub fn solve(&self) -> Result<(DVector<T>, SolveStats<T>)> {
        let asym = self.matrix.symmetry_error();
        if asym > lit(SYMMETRY_TOL) {
            return Err(Error::SolverFailure(format!(
                "matrix asymmetry {} exceeds tolerance",
                to_f64(asym)
            )));
        }
        let mut x = DVector::zeros(self.free.len());
        let mut stats = SolveStats {
            backward_error: T::zero(),
            rhs_residual: T::zero(),
        };
        if self.rhs.amax() > T::zero() {
            let ldl = LdlFactor::new(&self.matrix)?;
            x = ldl.solve(&self.rhs);
            let mut r = &self.rhs - self.matrix.mul_vec(&x);
            for _ in 0..4 {
                let cand = &x + ldl.solve(&r);
                let rc = &self.rhs - self.matrix.mul_vec(&cand);
                if !(rc.norm() < r.norm()) {
                    break;
                }
                x = cand;
                r = rc;
            }
            let anorm = self.matrix.norm_inf();
            stats.backward_error = r.amax() / (anorm * x.amax() + self.rhs.amax());
            stats.rhs_residual = r.norm() / self.rhs.norm();
        }
        let mut full = self.lift.clone();
        for (j, &i) in self.free.iter().enumerate() {
            full[i] = x[j];
        }
        Ok((full, stats))
    }
}

/// Residual measures of a reduced solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats<T: Real> {
    /// Normwise backward error `||r||_inf / (||A||_inf ||x||_inf + ||b||_inf)`,
    /// checked against [`SOLVER_TOL`].
    pub backward_error: T,
    /// `||r||_2 / ||b||_2`.
    pub rhs_residual: T,
}

/// Result of a solve.
#[derive(Clone, Debug)]
pub struct DiscreteSolution<T: Real> {
    /// Full unknown vector `[theta_h; u_h]`.
    pub x: DVector<T>,
    pub stats: SolveStats<T>,
    pub n_free: usize,
}

/// Assembles `A_h` and `l_h`, imposes the boundary values (clamped when
/// `dirichlet` is `None`) and solves.
pub fn apply_bc_and_solve<T: Real>(
    disc: &Discretisation<T>,
    mat: &MaterialParams<T>,
    f: &(dyn Fn(&Vector2<T>) -> T + Sync),
    dirichlet: Option<&DVector<T>>,
) -> Result<DiscreteSolution<T>> {
    let a = assemble_system(disc, mat);
    let lu = assemble_rhs(disc, f)?;
    let mut load = DVector::zeros(disc.dim());
    load.rows_mut(disc.n_theta(), disc.n_u()).copy_from(&lu);
    let sys = AssembledSystem::new(&a, &load, &disc.boundary_mask(), dirichlet);
    let (x, stats) = sys.solve()?;
    Ok(DiscreteSolution {
        x,
        stats,
        n_free: sys.free.len(),
    })
}

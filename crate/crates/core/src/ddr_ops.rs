//! Element operators of the discrete de Rham layer: displacement gradient
//! `G_T`, displacement reconstruction `P_U`, scalar rotor `R_T`, rotation
//! reconstruction `P_T`, the local discrete gradient `uG_T` and the local L2
//! product on `Theta_T^k`.
//!
//! All matrices act on local unknown vectors (ordering of
//! [`DdrContext::theta_dofs`] and [`DdrContext::u_dofs`]) and return
//! coefficients in the orthonormal element bases. Vector polynomials use the
//! layout `[x block; y block]`.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;

use crate::ddr_spaces::{DdrContext, EdgeRule};
use crate::error::{Error, Result};
use crate::polyspace::{dim_p2, dim_p2i, wdot, BasisEval};
use crate::scalar::{lit, Real};

/// Relative pivot threshold for local solves.
const PIVOT_TOL: f64 = 1e-12;

/// Solves `a x = b` by LU with partial pivoting, rejecting numerically
/// singular systems.
pub(crate) fn solve_local<T: Real>(a: DMatrix<T>, b: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let lu = a.lu();
    let u = lu.u();
    let mut lo = T::max_value().unwrap_or_else(T::one);
    let mut hi = T::zero();
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if u.nrows() > 0 && (hi == T::zero() || lo < hi * lit(PIVOT_TOL)) {
        return Err(Error::SingularLocalSystem(format!(
            "{what}: pivot ratio below threshold"
        )));
    }
    lu.solve(b)
        .ok_or_else(|| Error::SingularLocalSystem(format!("{what}: LU solve failed")))
}

/// Data for one local edge of an element.
pub(crate) struct LocalEdge<'a, T: Real> {
    pub e: usize,
    pub omega: T,
    pub rule: &'a EdgeRule<T>,
    pub ev: BasisEval<T>,
    /// Legendre values of `P^{k+1}(E)` at the rule points, `(k+2) x nq`.
    pub psi: DMatrix<T>,
}

pub(crate) fn local_edges<'a, T: Real>(ctx: &'a DdrContext<T>, t: usize) -> Vec<LocalEdge<'a, T>> {
    let el = &ctx.mesh.elements[t];
    el.edges
        .iter()
        .zip(&el.orientations)
        .map(|(&e, &omega)| {
            let et = &ctx.edges[e];
            LocalEdge {
                e,
                omega,
                rule: &et.rule,
                ev: ctx.bases[t].eval(&et.rule.points),
                psi: et.legendre(&et.rule, ctx.k + 2),
            }
        })
        .collect()
}

fn rows<T: Real>(m: &DMatrix<T>, n: usize) -> DMatrix<T> {
    m.rows(0, n).into_owned()
}

/// Horizontal concatenation `[a, b]`.
pub(crate) fn hcat<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Vertical concatenation `[a; b]`.
pub(crate) fn vcat<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.rows_mut(0, a.nrows()).copy_from(a);
    out.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    out
}

/// Local DDR operators of one element.
#[derive(Clone, Debug)]
pub struct DdrLocal<T: Real> {
    pub t: usize,
    /// `vP^k` coefficients of `G_T v`.
    pub gt: DMatrix<T>,
    /// `P^{k+1}` coefficients of `P_U v`.
    pub pu: DMatrix<T>,
    /// `P^k` coefficients of `R_T eta`.
    pub rt: DMatrix<T>,
    /// `vP^k` coefficients of `P_T eta`.
    pub pt: DMatrix<T>,
    /// Local discrete gradient `uG_T: U_T -> Theta_T`.
    pub ug: DMatrix<T>,
    /// Edge part `S_Theta,T` of the L2 product.
    pub s_theta: DMatrix<T>,
    /// Full local L2 product `M_Theta,T`.
    pub m_theta: DMatrix<T>,
    /// `vP^k -> Roly^{k-1}` and `vP^k -> cRoly^k` projection matrices.
    pub proj_roly: DMatrix<T>,
    pub proj_croly: DMatrix<T>,
}

impl<T: Real> DdrLocal<T> {
    pub fn new(ctx: &DdrContext<T>, t: usize) -> Result<Self> {
        let k = ctx.k;
        let b = &ctx.bases[t];
        let el = &ctx.mesh.elements[t];
        let nk = dim_p2(k);
        let nk1 = dim_p2(k + 1);
        let nkm1 = dim_p2i(k as isize - 1);
        let n_r = ctx.theta.n_roly;
        let n_c = ctx.theta.n_croly;
        let n_theta = ctx.theta.local_dim(el.n_edges());
        let n_u = ctx.u.local_dim(el.n_edges());
        let rule = b.rule(2 * k + 4)?;
        let w = &rule.weights;
        let ev = b.eval(&rule.points);
        let s_k = rows(&ev.s, nk);
        let edges = local_edges(ctx, t);

        // G_T
        let mut gt = DMatrix::zeros(2 * nk, n_u);
        if nkm1 > 0 {
            let s_km1 = rows(&ev.s, nkm1);
            let gx = -wdot(&rows(&ev.sx, nk), &s_km1, w);
            let gy = -wdot(&rows(&ev.sy, nk), &s_km1, w);
            gt.view_mut((0, 0), (nk, nkm1)).copy_from(&gx);
            gt.view_mut((nk, 0), (nk, nkm1)).copy_from(&gy);
        }
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let n = et.normal * le.omega;
            let v = et.trace.transpose() * &le.psi;
            let phi = rows(&le.ev.s, nk);
            let m = wdot(&phi, &v, &le.rule.weights);
            let pos = ctx.u_local_edge_positions(t, i);
            for (c, &p) in pos.iter().enumerate() {
                for j in 0..nk {
                    gt[(j, p)] += m[(j, c)] * n.x;
                    gt[(nk + j, p)] += m[(j, c)] * n.y;
                }
            }
        }

        // P_U: tested against cRoly^{k+2}
        let lhs = wdot(&ev.cdiv, &ev.s, w);
        let m_tau = hcat(&wdot(&ev.cx, &s_k, w), &wdot(&ev.cy, &s_k, w));
        let mut rhs = -(&m_tau * &gt);
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let n = et.normal * le.omega;
            let v = et.trace.transpose() * &le.psi;
            let tau_n = &le.ev.cx * n.x + &le.ev.cy * n.y;
            let m = wdot(&tau_n, &v, &le.rule.weights);
            for (c, &p) in ctx.u_local_edge_positions(t, i).iter().enumerate() {
                for j in 0..nk1 {
                    rhs[(j, p)] += m[(j, c)];
                }
            }
        }
        let pu = solve_local(lhs, &rhs, "P_U").map_err(|e| e.context(format!("element {t}")))?;

        // R_T
        let mut rt = DMatrix::zeros(nk, n_theta);
        if n_r > 0 {
            let rx = rows(&ev.rx, n_r);
            let ry = rows(&ev.ry, n_r);
            let m = wdot(&rows(&ev.sy, nk), &rx, w) - wdot(&rows(&ev.sx, nk), &ry, w);
            rt.view_mut((0, 0), (nk, n_r)).copy_from(&m);
        }
        for (i, le) in edges.iter().enumerate() {
            let off = ctx.theta_local_edge_offset(i);
            let m = wdot(&rows(&le.ev.s, nk), &rows(&le.psi, k + 1), &le.rule.weights) * le.omega;
            let mut blk = rt.view_mut((0, off), (nk, k + 1));
            blk -= m;
        }

        // P_T: tested against cRoly^k + rot P^{k+1} (the Roly^k basis)
        let n_rk = nk1 - 1;
        let lhs = vcat(
            &hcat(&wdot(&rows(&ev.cx, nkm1), &s_k, w), &wdot(&rows(&ev.cy, nkm1), &s_k, w)),
            &hcat(&wdot(&ev.rx, &s_k, w), &wdot(&ev.ry, &s_k, w)),
        );
        let mut rhs = DMatrix::zeros(nkm1 + n_rk, n_theta);
        for c in 0..nkm1 {
            rhs[(c, n_r + c)] = T::one();
        }
        let q_rt = wdot(&ev.rq, &s_k, w) * &rt;
        rhs.view_mut((nkm1, 0), (n_rk, n_theta)).copy_from(&q_rt);
        for (i, le) in edges.iter().enumerate() {
            let off = ctx.theta_local_edge_offset(i);
            let m = wdot(&le.ev.rq, &rows(&le.psi, k + 1), &le.rule.weights) * le.omega;
            let mut blk = rhs.view_mut((nkm1, off), (n_rk, k + 1));
            blk += m;
        }
        let pt = solve_local(lhs, &rhs, "P_T").map_err(|e| e.context(format!("element {t}")))?;

        // projections of vP^k onto Roly^{k-1} and cRoly^k
        let proj_roly = hcat(&wdot(&rows(&ev.rx, n_r), &s_k, w), &wdot(&rows(&ev.ry, n_r), &s_k, w));
        let proj_croly = hcat(&wdot(&rows(&ev.cx, n_c), &s_k, w), &wdot(&rows(&ev.cy, n_c), &s_k, w));

        // uG_T
        let mut ug = DMatrix::zeros(n_theta, n_u);
        ug.view_mut((0, 0), (n_r, n_u)).copy_from(&(&proj_roly * &gt));
        ug.view_mut((n_r, 0), (n_c, n_u)).copy_from(&(&proj_croly * &gt));
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let d = &et.deriv * &et.trace;
            let off = ctx.theta_local_edge_offset(i);
            for (c, &p) in ctx.u_local_edge_positions(t, i).iter().enumerate() {
                for j in 0..=k {
                    ug[(off + j, p)] = d[(j, c)];
                }
            }
        }

        // L2 product
        let mut s_theta = DMatrix::zeros(n_theta, n_theta);
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let off = ctx.theta_local_edge_offset(i);
            let phi = rows(&le.ev.s, nk).transpose();
            let mut d = hcat(&(&phi * et.tangent.x), &(&phi * et.tangent.y)) * &pt;
            let psi = rows(&le.psi, k + 1).transpose();
            let mut blk = d.view_mut((0, off), (psi.nrows(), k + 1));
            blk -= psi;
            let mut dw = d.clone();
            for (q, &wq) in le.rule.weights.iter().enumerate() {
                dw.row_mut(q).scale_mut(wq * et.h);
            }
            s_theta += d.transpose() * dw;
        }
        let mut m_theta = pt.transpose() * &pt + &s_theta;
        symmetrize(&mut m_theta);

        Ok(DdrLocal {
            t,
            gt,
            pu,
            rt,
            pt,
            ug,
            s_theta,
            m_theta,
            proj_roly,
            proj_croly,
        })
    }
}

pub(crate) fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let half: T = lit(0.5);
    let s = (&*m + m.transpose()) * half;
    *m = s;
}

/// Builds the local DDR operators on every element (in parallel, collected
/// in element order).
pub fn build_ddr_locals<T: Real>(ctx: &DdrContext<T>) -> Result<Vec<DdrLocal<T>>> {
    (0..ctx.mesh.n_elements())
        .into_par_iter()
        .map(|t| DdrLocal::new(ctx, t))
        .collect()
}

/// Global discrete gradient `uG_h v` (element blocks from `G_T`, edge blocks
/// from the tangential derivative of the skeleton trace).
pub fn apply_global_gradient<T: Real>(ctx: &DdrContext<T>, locals: &[DdrLocal<T>], u: &DVector<T>) -> DVector<T> {
    let mut out = DVector::zeros(ctx.theta.dim());
    let ne = ctx.theta.n_element_dofs();
    for (t, loc) in locals.iter().enumerate() {
        let ul = crate::ddr_spaces::gather(u, &ctx.u_dofs(t));
        let g = &loc.gt * ul;
        let r = &loc.proj_roly * &g;
        let c = &loc.proj_croly * &g;
        let o = ctx.theta.element_offset(t);
        out.rows_mut(o, r.len()).copy_from(&r);
        out.rows_mut(o + r.len(), c.len()).copy_from(&c);
        debug_assert_eq!(r.len() + c.len(), ne);
    }
    for (e, et) in ctx.edges.iter().enumerate() {
        let d = &et.deriv * ctx.edge_trace(e, u);
        out.rows_mut(ctx.theta.edge_offset(e), ctx.k + 1).copy_from(&d);
    }
    out
}

/// Evaluates a `vP^k` coefficient vector of element `t` at a point.
pub fn eval_vector_poly<T: Real>(ctx: &DdrContext<T>, t: usize, coef: &DVector<T>, p: &Vector2<T>) -> Vector2<T> {
    let n = coef.len() / 2;
    let ev = ctx.bases[t].eval(std::slice::from_ref(p));
    let mut v = Vector2::zeros();
    for i in 0..n {
        v.x += coef[i] * ev.s[(i, 0)];
        v.y += coef[n + i] * ev.s[(i, 0)];
    }
    v
}

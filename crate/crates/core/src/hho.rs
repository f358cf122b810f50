//! Hybrid high-order layer on `Theta_T^k`: embedding into the local HHO
//! space, tensor and symmetric gradients, divergence, the strain
//! reconstruction `p^{k+1}_T`, difference operators and the stabilisation.
//!
//! Tensor coefficients use the blocks `11, 12, 21, 22` (full gradient) or
//! `11, 12, 22` (symmetric, the `12` block taken against the unit-norm
//! element `(e1 e2^T + e2 e1^T)/sqrt 2`), each over the orthonormal `P^k`
//! basis, so Frobenius L2 products are Euclidean products of coefficients.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::ddr_ops::{hcat, local_edges, solve_local, symmetrize, vcat, DdrLocal};
use crate::ddr_spaces::DdrContext;
use crate::error::Result;
use crate::polyspace::{dim_p2, wdot};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug)]
pub struct HhoLocal<T: Real> {
    pub t: usize,
    /// `(P_T eta, (eta_E)_E)` with edge blocks in local edge order.
    pub embedding: DMatrix<T>,
    pub g: DMatrix<T>,
    pub gs: DMatrix<T>,
    pub div: DMatrix<T>,
    /// `vP^{k+1}` coefficients of `p^{k+1}_T eta`.
    pub p: DMatrix<T>,
    /// Local interpolator restricted to `vP^{k+1}`.
    pub interp_poly: DMatrix<T>,
    /// `vP^k` coefficients of `delta_T eta`.
    pub delta_t: DMatrix<T>,
    /// Per local edge, the `2(k+1)` coefficients of `delta_TE - delta_T` on `E`.
    pub delta_e: Vec<DMatrix<T>>,
    pub stab: DMatrix<T>,
    /// Per local edge, values of the two components of `p^{k+1}_T eta` at the
    /// edge quadrature points (`nq x n_theta` each).
    pub p_edge: Vec<(DMatrix<T>, DMatrix<T>)>,
}

impl<T: Real> HhoLocal<T> {
    pub fn new(ctx: &DdrContext<T>, ddr: &DdrLocal<T>) -> Result<Self> {
        let t = ddr.t;
        let k = ctx.k;
        let b = &ctx.bases[t];
        let el = &ctx.mesh.elements[t];
        let nk = dim_p2(k);
        let nk1 = dim_p2(k + 1);
        let n_r = ctx.theta.n_roly;
        let n_c = ctx.theta.n_croly;
        let ned = ctx.theta.n_edge_dofs();
        let n_theta = ctx.theta.local_dim(el.n_edges());
        let rule = b.rule(2 * k + 4)?;
        let w = &rule.weights;
        let ev = b.eval(&rule.points);
        let edges = local_edges(ctx, t);
        let s_k = ev.s.rows(0, nk).into_owned();
        let pt = &ddr.pt;
        let pt_x = pt.rows(0, nk).into_owned();
        let pt_y = pt.rows(nk, nk).into_owned();

        // embedding
        let mut sel = DMatrix::zeros(n_theta - ctx.theta.n_element_dofs(), n_theta);
        for i in 0..sel.nrows() {
            sel[(i, ctx.theta.n_element_dofs() + i)] = T::one();
        }
        let embedding = vcat(pt, &sel);

        // full tensor gradient
        let grads = [ev.sx.rows(0, nk).into_owned(), ev.sy.rows(0, nk).into_owned()];
        let ptc = [&pt_x, &pt_y];
        let mut g = DMatrix::zeros(4 * nk, n_theta);
        for a in 0..2 {
            for bb in 0..2 {
                let blk = 2 * a + bb;
                let m = -(wdot(&grads[bb], &s_k, w) * ptc[a]);
                g.view_mut((blk * nk, 0), (nk, n_theta)).copy_from(&m);
            }
        }
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let n = et.normal * le.omega;
            let (tv, nv) = (et.tangent, et.normal);
            let m = wdot(
                &le.ev.s.rows(0, nk).into_owned(),
                &le.psi.rows(0, k + 1).into_owned(),
                &le.rule.weights,
            );
            let off = ctx.theta_local_edge_offset(i);
            for a in 0..2 {
                for bb in 0..2 {
                    let blk = 2 * a + bb;
                    let mut tb = g.view_mut((blk * nk, off), (nk, k + 1));
                    tb += &m * (n[bb] * tv[a]);
                    let mut nb = g.view_mut((blk * nk, off + k + 1), (nk, k + 1));
                    nb += &m * (n[bb] * nv[a]);
                }
            }
        }
        let r2 = lit::<T>(2.0).sqrt();
        let g11 = g.rows(0, nk).into_owned();
        let g12 = g.rows(nk, nk).into_owned();
        let g21 = g.rows(2 * nk, nk).into_owned();
        let g22 = g.rows(3 * nk, nk).into_owned();
        let gs = vcat(&vcat(&g11, &((&g12 + &g21) / r2)), &g22);
        let div = &g11 + &g22;

        // strain reconstruction: vP^{k+1} basis phi_i e_a
        let s_k1 = ev.s.rows(0, nk1).into_owned();
        let sx1 = ev.sx.rows(0, nk1).into_owned();
        let sy1 = ev.sy.rows(0, nk1).into_owned();
        let half: T = lit(0.5);
        let zero = DMatrix::zeros(nk1, rule.len());
        let e11 = vcat(&sx1, &zero);
        let e12 = vcat(&(&sy1 * half), &(&sx1 * half));
        let e22 = vcat(&zero, &sy1);
        let two: T = lit(2.0);
        let stiff = wdot(&e11, &e11, w) + wdot(&e12, &e12, w) * two + wdot(&e22, &e22, w);
        // int G : grad_s w, with the 12 and 21 blocks both meeting e12
        let rhs = wdot(&e11, &s_k, w) * &g11 + wdot(&e12, &s_k, w) * (&g12 + &g21) + wdot(&e22, &s_k, w) * &g22;

        let mut closure = DMatrix::zeros(3, 2 * nk1);
        let mut closure_rhs = DMatrix::zeros(3, n_theta);
        let mean_phi: Vec<T> = (0..nk1)
            .map(|i| (0..rule.len()).fold(T::zero(), |acc, q| acc + w[q] * ev.s[(i, q)]))
            .collect();
        for i in 0..nk1 {
            let (mut dy, mut dx) = (T::zero(), T::zero());
            for q in 0..rule.len() {
                dy += w[q] * ev.sy[(i, q)];
                dx += w[q] * ev.sx[(i, q)];
            }
            closure[(0, i)] = dy;
            closure[(0, nk1 + i)] = -dx;
        }
        if k >= 1 {
            for i in 0..nk1 {
                closure[(1, i)] = mean_phi[i];
                closure[(2, nk1 + i)] = mean_phi[i];
            }
            let mk = DMatrix::from_row_slice(1, nk, &mean_phi[..nk]);
            closure_rhs.view_mut((1, 0), (1, n_theta)).copy_from(&(&mk * &pt_x));
            closure_rhs.view_mut((2, 0), (1, n_theta)).copy_from(&(&mk * &pt_y));
        }
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let (tv, nv) = (et.tangent, et.normal);
            let off = ctx.theta_local_edge_offset(i);
            for j in 0..=k {
                let mj = (0..le.rule.weights.len()).fold(T::zero(), |acc, q| acc + le.rule.weights[q] * le.psi[(j, q)]);
                // eta_E,1 n_TE,2 - n_TE,1 eta_E,2; the normal part cancels
                closure_rhs[(0, off + j)] += le.omega * mj * (tv.x * nv.y - nv.x * tv.y);
                if k == 0 {
                    closure_rhs[(1, off + j)] += mj * tv.x;
                    closure_rhs[(1, off + k + 1 + j)] += mj * nv.x;
                    closure_rhs[(2, off + j)] += mj * tv.y;
                    closure_rhs[(2, off + k + 1 + j)] += mj * nv.y;
                }
            }
            if k == 0 {
                for (q, &wq) in le.rule.weights.iter().enumerate() {
                    for ii in 0..nk1 {
                        let v = wq * le.ev.s[(ii, q)];
                        closure[(1, ii)] += v;
                        closure[(2, nk1 + ii)] += v;
                    }
                }
            }
        }
        let np = 2 * nk1;
        let mut sys = DMatrix::zeros(np + 3, np + 3);
        sys.view_mut((0, 0), (np, np)).copy_from(&stiff);
        sys.view_mut((np, 0), (3, np)).copy_from(&closure);
        sys.view_mut((0, np), (np, 3)).copy_from(&closure.transpose());
        let full_rhs = vcat(&rhs, &closure_rhs);
        let sol =
            solve_local(sys, &full_rhs, "strain reconstruction").map_err(|e| e.context(format!("element {t}")))?;
        let p = sol.rows(0, np).into_owned();

        // interpolator on vP^{k+1}
        let mut interp_poly = DMatrix::zeros(n_theta, np);
        if n_r > 0 {
            let m = hcat(
                &wdot(&ev.rx.rows(0, n_r).into_owned(), &s_k1, w),
                &wdot(&ev.ry.rows(0, n_r).into_owned(), &s_k1, w),
            );
            interp_poly.view_mut((0, 0), (n_r, np)).copy_from(&m);
        }
        if n_c > 0 {
            let m = hcat(
                &wdot(&ev.cx.rows(0, n_c).into_owned(), &s_k1, w),
                &wdot(&ev.cy.rows(0, n_c).into_owned(), &s_k1, w),
            );
            interp_poly.view_mut((n_r, 0), (n_c, np)).copy_from(&m);
        }
        for (i, le) in edges.iter().enumerate() {
            let et = &ctx.edges[le.e];
            let off = ctx.theta_local_edge_offset(i);
            let m = wdot(
                &le.psi.rows(0, k + 1).into_owned(),
                &le.ev.s.rows(0, nk1).into_owned(),
                &le.rule.weights,
            );
            for (r, dir) in [(0, et.tangent), (k + 1, et.normal)] {
                let blk = hcat(&(&m * dir.x), &(&m * dir.y));
                interp_poly.view_mut((off + r, 0), (k + 1, np)).copy_from(&blk);
            }
        }

        // difference operators and stabilisation
        let mut embed_k = DMatrix::zeros(np, 2 * nk);
        for i in 0..nk {
            embed_k[(i, i)] = T::one();
            embed_k[(nk1 + i, nk + i)] = T::one();
        }
        let delta_t = pt * &interp_poly * (&p - &embed_k * pt);
        let p_minus_delta = &p - &embed_k * &delta_t;
        let mut stab = DMatrix::zeros(n_theta, n_theta);
        let mut delta_e = Vec::with_capacity(edges.len());
        let mut p_edge = Vec::with_capacity(edges.len());
        for (i, le) in edges.iter().enumerate() {
            let off = ctx.theta_local_edge_offset(i);
            let mut c = interp_poly.rows(off, ned) * &p_minus_delta;
            for j in 0..ned {
                c[(j, off + j)] -= T::one();
            }
            stab += c.transpose() * &c;
            delta_e.push(c);
            let phi = le.ev.s.rows(0, nk1).transpose();
            p_edge.push((&phi * p.rows(0, nk1), &phi * p.rows(nk1, nk1)));
        }
        stab /= b.h;
        symmetrize(&mut stab);

        Ok(HhoLocal {
            t,
            embedding,
            g,
            gs,
            div,
            p,
            interp_poly,
            delta_t,
            delta_e,
            stab,
            p_edge,
        })
    }

    /// `beta0 (G_s^T G_s + s_T) + beta1 D^T D`.
    pub fn a_local(&self, beta0: T, beta1: T) -> DMatrix<T> {
        let mut a = (self.gs.transpose() * &self.gs + &self.stab) * beta0 + self.div.transpose() * &self.div * beta1;
        symmetrize(&mut a);
        a
    }
}

pub fn build_hho_locals<T: Real>(ctx: &DdrContext<T>, ddr: &[DdrLocal<T>]) -> Result<Vec<HhoLocal<T>>> {
    ddr.par_iter().map(|d| HhoLocal::new(ctx, d)).collect()
}

//! Checks shared by the property tests and the acceptance runner. Each
//! returns the worst normalised discrepancy it found.

#![allow(dead_code, clippy::needless_range_loop)]

use ddr_plate::ddr_ops::{apply_global_gradient, build_ddr_locals, DdrLocal};
use ddr_plate::ddr_spaces::{interpolate_theta_local, interpolate_theta_tangential, interpolate_u, DdrContext};
use ddr_plate::hho::{build_hho_locals, HhoLocal};
use ddr_plate::manufactured::ExactSolution;
use ddr_plate::mesh::{MeshFamily, PolygonalMesh};
use ddr_plate::polyspace::{dim_p2, exponents, PolySpace};
use ddr_plate::sparse::CooMatrix;
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FAMILIES: [MeshFamily; 3] = [
    MeshFamily::Triangular,
    MeshFamily::Hexagonal,
    MeshFamily::LocallyRefined,
];

pub struct Setup {
    pub ctx: DdrContext<f64>,
    pub ddr: Vec<DdrLocal<f64>>,
    pub hho: Vec<HhoLocal<f64>>,
}

pub fn setup(mesh: PolygonalMesh<f64>, k: usize) -> Setup {
    let ctx = DdrContext::new(mesh, k, 0).unwrap();
    let ddr = build_ddr_locals(&ctx).unwrap();
    let hho = build_hho_locals(&ctx, &ddr).unwrap();
    Setup { ctx, ddr, hho }
}

/// A bivariate polynomial `sum c_ij x^i y^j`.
#[derive(Clone, Debug)]
pub struct Poly2 {
    pub terms: Vec<((usize, usize), f64)>,
}

impl Poly2 {
    pub fn random(deg: usize, rng: &mut ChaCha8Rng) -> Poly2 {
        Poly2 {
            terms: exponents(deg)
                .into_iter()
                .map(|e| (e, rng.random_range(-1.0..1.0)))
                .collect(),
        }
    }

    pub fn monomial(i: usize, j: usize) -> Poly2 {
        Poly2 {
            terms: vec![((i, j), 1.0)],
        }
    }

    pub fn eval(&self, p: &Vector2<f64>) -> f64 {
        self.terms
            .iter()
            .map(|&((i, j), c)| c * p.x.powi(i as i32) * p.y.powi(j as i32))
            .sum()
    }

    pub fn grad(&self, p: &Vector2<f64>) -> Vector2<f64> {
        let mut g = Vector2::zeros();
        for &((i, j), c) in &self.terms {
            if i > 0 {
                g.x += c * i as f64 * p.x.powi(i as i32 - 1) * p.y.powi(j as i32);
            }
            if j > 0 {
                g.y += c * j as f64 * p.x.powi(i as i32) * p.y.powi(j as i32 - 1);
            }
        }
        g
    }
}

/// `uG_h(I_U v)` against the tangential interpolate of `grad v`, with
/// `v` in `{1, x, xy, x^2 y, random P^{k+2}}`. Coefficientwise, relative to
/// `max(1, |rhs|_inf)`.
pub fn commutation_error(s: &Setup, seed: u64) -> f64 {
    let k = s.ctx.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases = [
        Poly2::monomial(0, 0),
        Poly2::monomial(1, 0),
        Poly2::monomial(1, 1),
        Poly2::monomial(2, 1),
        Poly2::random(k + 2, &mut rng),
    ];
    let mut worst: f64 = 0.0;
    for v in &cases {
        let lhs = apply_global_gradient(&s.ctx, &s.ddr, &interpolate_u(&s.ctx, &|p| v.eval(p)).unwrap());
        let rhs = interpolate_theta_tangential(&s.ctx, &|p| v.grad(p)).unwrap();
        worst = worst.max((&lhs - &rhs).amax() / rhs.amax().max(1.0));
    }
    worst
}

/// Matrix form of the Roly / cRoly projections of `P_T` returning the
/// element unknowns.
pub fn pt_projection_error(s: &Setup) -> f64 {
    let nr = s.ctx.theta.n_roly;
    let nc = s.ctx.theta.n_croly;
    let mut worst: f64 = 0.0;
    for loc in &s.ddr {
        let n = loc.pt.ncols();
        let mut sel_r = DMatrix::zeros(nr, n);
        let mut sel_c = DMatrix::zeros(nc, n);
        for i in 0..nr {
            sel_r[(i, i)] = 1.0;
        }
        for i in 0..nc {
            sel_c[(i, nr + i)] = 1.0;
        }
        let scale = loc.pt.amax().max(1.0);
        worst = worst.max((&loc.proj_roly * &loc.pt - sel_r).amax() / scale);
        worst = worst.max((&loc.proj_croly * &loc.pt - sel_c).amax() / scale);
    }
    worst
}

type VectorField = Box<dyn Fn(&Vector2<f64>) -> Vector2<f64> + Sync>;

fn vector_test_fields(k: usize) -> Vec<VectorField> {
    let mut out: Vec<VectorField> = Vec::new();
    for (i, j) in exponents(k + 2) {
        out.push(Box::new(move |p: &Vector2<f64>| {
            Vector2::new(p.x.powi(i as i32) * p.y.powi(j as i32), 0.0)
        }));
        out.push(Box::new(move |p: &Vector2<f64>| {
            Vector2::new(0.0, p.x.powi(i as i32) * p.y.powi(j as i32))
        }));
    }
    out.push(Box::new(|p: &Vector2<f64>| {
        Vector2::new((2.0 * p.x - p.y).sin(), (p.x * p.y).exp())
    }));
    out
}

/// `pi^{k-1}(P_T I_Theta eta) = pi^{k-1} eta` over monomial fields of degree
/// up to `k + 2` and one non-polynomial field (vacuous for `k = 0`).
pub fn pt_lower_projection_error(s: &Setup) -> f64 {
    let k = s.ctx.k;
    if k == 0 {
        return 0.0;
    }
    let nk = dim_p2(k);
    let nkm1 = dim_p2(k - 1);
    let deg = 2 * k + 10;
    let mut worst: f64 = 0.0;
    for (t, loc) in s.ddr.iter().enumerate() {
        let b = &s.ctx.bases[t];
        let rule = b.rule(deg).unwrap();
        for f in vector_test_fields(k) {
            let eta = interpolate_theta_local(&s.ctx, t, deg, &*f).unwrap();
            let p = &loc.pt * eta;
            let ex = b.project_vector(PolySpace::Vector(k - 1), &rule, &*f).unwrap();
            let lhs = DVector::from_iterator(2 * nkm1, p.rows(0, nkm1).iter().chain(p.rows(nk, nkm1).iter()).copied());
            worst = worst.max((lhs - &ex).amax() / ex.amax().max(1.0));
        }
    }
    worst
}

fn random_vector_poly(deg: usize, rng: &mut ChaCha8Rng) -> (Poly2, Poly2) {
    (Poly2::random(deg, rng), Poly2::random(deg, rng))
}

/// `|s_T(I_Theta eta, xi)| / (|eta| |xi|)` for random `eta` in `vP^{k+1}` and
/// `n_xi` random `xi` per element.
pub fn stabilisation_consistency(s: &Setup, n_xi: usize, seed: u64) -> f64 {
    let k = s.ctx.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (t, loc) in s.hho.iter().enumerate() {
        let (a, b) = random_vector_poly(k + 1, &mut rng);
        let eta = interpolate_theta_local(&s.ctx, t, 2 * k + 6, &|p| Vector2::new(a.eval(p), b.eval(p))).unwrap();
        let se = &loc.stab * &eta;
        for _ in 0..n_xi {
            let xi = DVector::from_fn(eta.len(), |_, _| rng.random_range(-1.0..1.0));
            worst = worst.max(xi.dot(&se).abs() / (eta.norm() * xi.norm()));
        }
    }
    worst
}

/// Global `(.,.)_{Theta,h}` against vectors carrying only normal edge
/// components, relative to `|M| |x|`.
pub fn normal_insensitivity(s: &Setup, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.ctx.theta.dim();
    let mut coo = CooMatrix::new(n, n);
    for (t, loc) in s.ddr.iter().enumerate() {
        let d = s.ctx.theta_dofs(t);
        coo.add_block(&d, &d, &loc.m_theta);
    }
    let m = coo.to_csr();
    let k = s.ctx.k;
    let mut x = DVector::zeros(n);
    for e in 0..s.ctx.mesh.n_edges() {
        for j in 0..=k {
            x[s.ctx.theta.edge_offset(e) + k + 1 + j] = rng.random_range(-1.0..1.0);
        }
    }
    m.mul_vec(&x).amax() / (m.max_abs() * x.amax())
}

/// `p^{k+1}_T I_Theta eta = eta` for random `eta` in `vP^{k+1}`.
pub fn reconstruction_exactness(s: &Setup, seed: u64) -> f64 {
    let k = s.ctx.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for (t, loc) in s.hho.iter().enumerate() {
        let (a, b) = random_vector_poly(k + 1, &mut rng);
        let f = |p: &Vector2<f64>| Vector2::new(a.eval(p), b.eval(p));
        let eta = interpolate_theta_local(&s.ctx, t, 2 * k + 6, &f).unwrap();
        let basis = &s.ctx.bases[t];
        let ex = basis
            .project_vector(PolySpace::Vector(k + 1), &basis.rule(2 * k + 6).unwrap(), f)
            .unwrap();
        worst = worst.max((&loc.p * eta - &ex).amax() / ex.amax().max(1.0));
    }
    worst
}

pub fn random_points(n: usize, seed: u64) -> Vec<Vector2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vector2::new(rng.random_range(0.02..0.98), rng.random_range(0.02..0.98)))
        .collect()
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

/// `(4 D(h/2) - D(h)) / 3` with `D` the central difference.
pub fn richardson(g: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let d = |h: f64| (g(h) - g(-h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn partial<F: Fn(&Vector2<f64>) -> f64>(f: F, p: &Vector2<f64>, var: usize, h: f64) -> f64 {
    let e = if var == 0 {
        Vector2::new(1.0, 0.0)
    } else {
        Vector2::new(0.0, 1.0)
    };
    richardson(&|s| f(&(p + e * s)), h)
}

/// Step of the differencing oracle.
pub const FD_STEP: f64 = 1e-4;
const H: f64 = FD_STEP;

pub fn grad_theta_fd(s: &ExactSolution<f64>, p: &Vector2<f64>) -> Matrix2<f64> {
    Matrix2::from_fn(|i, j| partial(|q| s.theta(q)[i], p, j, H))
}

/// Largest of the three strong-form residuals at `p`, each relative to the
/// size of its terms. Derivatives of the closed forms are taken by differencing.
pub fn strong_residual(s: &ExactSolution<f64>, p: &Vector2<f64>) -> f64 {
    let m = s.material;
    let (b0, b1) = (m.beta0(), m.beta1());
    let t = m.thickness;
    let gamma = s.gamma(p);
    let stress = |q: &Vector2<f64>| {
        let g = s.grad_theta(q);
        let sym = (g + g.transpose()) * 0.5;
        sym * b0 + Matrix2::identity() * (b1 * g.trace())
    };
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let div: f64 = (0..2).map(|j| partial(|q| stress(q)[(i, j)], p, j, H)).sum();
        worst = worst.max(rel(-div, gamma[i], div.abs().max(gamma[i].abs())));
        let dg = m.kappa() / (t * t) * (s.grad_u(p)[i] - s.theta(p)[i]);
        worst = worst.max(rel(dg, gamma[i], gamma[i].abs()));
    }
    let div_gamma: f64 = (0..2).map(|j| partial(|q| s.gamma(q)[j], p, j, H)).sum();
    worst.max(rel(-div_gamma, s.f(p), s.f(p).abs()))
}

use nalgebra::{DMatrix, Vector2};

use crate::scalar::{from_usize, Real};

/// Dimension of the bivariate polynomials of total degree at most `deg`.
pub fn dim_p2(deg: usize) -> usize {
    (deg + 1) * (deg + 2) / 2
}

/// Same as [`dim_p2`] with the convention `dim P^{-1} = 0`.
pub fn dim_p2i(deg: isize) -> usize {
    if deg < 0 {
        0
    } else {
        dim_p2(deg as usize)
    }
}

/// Exponent pairs `(i, j)` of `x^i y^j`, ordered by total degree and then by `j`.
pub fn exponents(deg: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p2(deg));
    for d in 0..=deg {
        for j in 0..=d {
            out.push((d - j, j));
        }
    }
    out
}

/// Scaled monomials `((x - c)/h)^alpha` and their gradients at a set of points.
/// Matrices are stored as functions x points.
#[derive(Clone, Debug)]
pub struct MonomialTable<T: Real> {
    pub degree: usize,
    pub xi: Vec<T>,
    pub eta: Vec<T>,
    pub val: DMatrix<T>,
    pub dx: DMatrix<T>,
    pub dy: DMatrix<T>,
}

impl<T: Real> MonomialTable<T> {
    pub fn new(center: &Vector2<T>, h: T, degree: usize, points: &[Vector2<T>]) -> Self {
        let n = dim_p2(degree);
        let q = points.len();
        let mut val = DMatrix::zeros(n, q);
        let mut dx = DMatrix::zeros(n, q);
        let mut dy = DMatrix::zeros(n, q);
        let mut xi = Vec::with_capacity(q);
        let mut eta = Vec::with_capacity(q);
        let exps = exponents(degree);
        let mut px = vec![T::one(); degree + 1];
        let mut py = vec![T::one(); degree + 1];
        for (c, p) in points.iter().enumerate() {
            let a = (p.x - center.x) / h;
            let b = (p.y - center.y) / h;
            xi.push(a);
            eta.push(b);
            for d in 1..=degree {
                px[d] = px[d - 1] * a;
                py[d] = py[d - 1] * b;
            }
            for (r, &(i, j)) in exps.iter().enumerate() {
                val[(r, c)] = px[i] * py[j];
                if i > 0 {
                    dx[(r, c)] = from_usize::<T>(i) * px[i - 1] * py[j] / h;
                }
                if j > 0 {
                    dy[(r, c)] = from_usize::<T>(j) * px[i] * py[j - 1] / h;
                }
            }
        }
        MonomialTable {
            degree,
            xi,
            eta,
            val,
            dx,
            dy,
        }
    }
}

/// `A diag(w) B^T`: the matrix of weighted discrete inner products of the rows.
pub fn wdot<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>, w: &[T]) -> DMatrix<T> {
    let mut aw = a.clone();
    for (c, &wc) in w.iter().enumerate() {
        aw.column_mut(c).scale_mut(wc);
    }
    aw * b.transpose()
}

/// Orthonormal Legendre basis of `P^{n-1}` on an edge of length `h`,
/// parametrised by `s` in `[-1/2, 1/2]`. Returns values and `d/ds`.
pub fn edge_legendre<T: Real>(s: T, n: usize, h: T) -> (Vec<T>, Vec<T>) {
    let x = s + s;
    let mut p = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    if n > 0 {
        p[0] = T::one();
    }
    if n > 1 {
        p[1] = x;
        dp[1] = T::one();
    }
    for j in 1..n.saturating_sub(1) {
        let jf: T = from_usize(j);
        p[j + 1] = ((jf + jf + T::one()) * x * p[j] - jf * p[j - 1]) / (jf + T::one());
        dp[j + 1] = dp[j - 1] + (jf + jf + T::one()) * p[j];
    }
    for j in 0..n {
        let c = (from_usize::<T>(2 * j + 1) / h).sqrt();
        p[j] *= c;
        // chain rule through x = 2s
        dp[j] *= c + c;
    }
    (p, dp)
}

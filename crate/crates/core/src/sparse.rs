//! Coordinate and compressed-row sparse matrices, and a sparse LDL^T
//! factorisation (elimination tree plus up-looking factorisation) with an
//! approximate minimum degree ordering.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct CooMatrix<T: Real> {
    pub nrows: usize,
    pub ncols: usize,
    entries: Vec<(usize, usize, T)>,
}

impl<T: Real> CooMatrix<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooMatrix {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(i < self.nrows && j < self.ncols);
        self.entries.push((i, j, v));
    }

    /// Scatters a dense local block.
    pub fn add_block(&mut self, rows: &[usize], cols: &[usize], block: &DMatrix<T>) {
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                let v = block[(a, b)];
                if v != T::zero() {
                    self.push(i, j, v);
                }
            }
        }
    }

    pub fn append(&mut self, other: CooMatrix<T>) {
        self.entries.extend(other.entries);
    }

    /// Duplicates are summed in insertion order, so equal input sequences
    /// give bitwise-equal matrices.
    pub fn to_csr(&self) -> CsrMatrix<T> {
        let mut count = vec![0usize; self.nrows + 1];
        for &(i, _, _) in &self.entries {
            count[i + 1] += 1;
        }
        for i in 0..self.nrows {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let mut order = vec![0usize; self.entries.len()];
        for (n, &(i, _, _)) in self.entries.iter().enumerate() {
            order[next[i]] = n;
            next[i] += 1;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data = Vec::with_capacity(self.entries.len());
        let mut row: Vec<(usize, T)> = Vec::new();
        for i in 0..self.nrows {
            row.clear();
            row.extend(order[count[i]..count[i + 1]].iter().map(|&n| {
                let (_, j, v) = self.entries[n];
                (j, v)
            }));
            // stable: keeps insertion order among equal columns
            row.sort_by_key(|&(j, _)| j);
            let mut p = 0;
            while p < row.len() {
                let j = row[p].0;
                let mut v = T::zero();
                while p < row.len() && row[p].0 == j {
                    v += row[p].1;
                    p += 1;
                }
                indices.push(j);
                data.push(v);
            }
            indptr[i + 1] = indices.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T: Real> {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(p) => self.data[r.start + p],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &DVector<T>) -> DVector<T> {
        assert_eq!(x.len(), self.ncols);
        DVector::from_fn(self.nrows, |i, _| {
            (self.indptr[i]..self.indptr[i + 1]).fold(T::zero(), |acc, p| acc + self.data[p] * x[self.indices[p]])
        })
    }

    pub fn transpose(&self) -> CsrMatrix<T> {
        let mut coo = CooMatrix::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                coo.push(self.indices[p], i, self.data[p]);
            }
        }
        coo.to_csr()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.nrows).fold(T::zero(), |m, i| {
            m.max(
                self.data[self.indptr[i]..self.indptr[i + 1]]
                    .iter()
                    .fold(T::zero(), |a, v| a + v.abs()),
            )
        })
    }

    /// `max |A - A^T| / max |A|` (zero for the zero matrix).
    pub fn symmetry_error(&self) -> T {
        let scale = self.max_abs();
        if scale == T::zero() {
            return T::zero();
        }
        let mut err = T::zero();
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[p];
                err = err.max((self.data[p] - self.get(j, i)).abs());
            }
        }
        err / scale
    }

    /// Submatrix on the given rows and columns; `col_map[j]` is the new index
    /// of old column `j`, if kept.
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> CsrMatrix<T> {
        let mut indptr = vec![0usize; rows.len() + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for (r, &i) in rows.iter().enumerate() {
            let mut row: Vec<(usize, T)> = (self.indptr[i]..self.indptr[i + 1])
                .filter_map(|p| col_map[self.indices[p]].map(|j| (j, self.data[p])))
                .collect();
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                indices.push(j);
                data.push(v);
            }
            indptr[r + 1] = indices.len();
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols,
            indptr,
            indices,
            data,
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for p in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[p])] += self.data[p];
            }
        }
        m
    }
}

const NONE: usize = usize::MAX;

/// Sparse `P A P^T = L D L^T` factorisation of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct LdlFactor<T: Real> {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    dinv: Vec<T>,
}

impl<T: Real> LdlFactor<T> {
    /// Factorises a symmetric matrix given with both triangles stored.
    pub fn new(a: &CsrMatrix<T>) -> Result<Self> {
        let n = a.nrows;
        if a.ncols != n {
            return Err(Error::SolverFailure("matrix is not square".into()));
        }
        if n == 0 {
            return Ok(LdlFactor {
                n,
                perm: vec![],
                lp: vec![0],
                li: vec![],
                lx: vec![],
                dinv: vec![],
            });
        }
        let (perm, pinv, _) = amd::order::<usize>(n, &a.indptr, &a.indices, &amd::Control::default())
            .map_err(|s| Error::SolverFailure(format!("ordering failed: {s:?}")))?;

        // Upper triangle of P A P^T in compressed columns. A is symmetric so
        // row i of A doubles as column i.
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (jn, &jo) in perm.iter().enumerate() {
            for p in a.indptr[jo]..a.indptr[jo + 1] {
                let i_new = pinv[a.indices[p]];
                if i_new <= jn {
                    cols[jn].push((i_new, a.data[p]));
                }
            }
            cols[jn].sort_by_key(|&(i, _)| i);
        }
        let mut ap = vec![0usize; n + 1];
        let mut ai = Vec::new();
        let mut ax = Vec::new();
        for j in 0..n {
            for &(i, v) in &cols[j] {
                ai.push(i);
                ax.push(v);
            }
            ap[j + 1] = ai.len();
        }

        // elimination tree and column counts
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &i0 in &ai[ap[j]..ap[j + 1]] {
                let mut i = i0;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz_l = lp[n];
        let mut li = vec![0usize; nnz_l];
        let mut lx = vec![T::zero(); nnz_l];
        let mut d = vec![T::zero(); n];
        let mut dinv = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut marked = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut buf = vec![0usize; n];
        let mut next = lp.clone();

        for k in 0..n {
            let mut nnz_y = 0;
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    d[k] = ax[p];
                    continue;
                }
                y[b] = ax[p];
                if marked[b] {
                    continue;
                }
                marked[b] = true;
                buf[0] = b;
                let mut ne = 1;
                let mut nx = etree[b];
                while nx != NONE && nx < k {
                    if marked[nx] {
                        break;
                    }
                    marked[nx] = true;
                    buf[ne] = nx;
                    ne += 1;
                    nx = etree[nx];
                }
                while ne > 0 {
                    ne -= 1;
                    y_idx[nnz_y] = buf[ne];
                    nnz_y += 1;
                }
            }
            for ii in (0..nnz_y).rev() {
                let c = y_idx[ii];
                let slot = next[c];
                let yc = y[c];
                for j in lp[c]..slot {
                    y[li[j]] -= lx[j] * yc;
                }
                li[slot] = k;
                lx[slot] = yc * dinv[c];
                d[k] -= yc * lx[slot];
                next[c] += 1;
                y[c] = T::zero();
                marked[c] = false;
            }
            if d[k] == T::zero() || !d[k].is_finite() {
                return Err(Error::SolverFailure(format!("zero pivot at step {k}")));
            }
            dinv[k] = T::one() / d[k];
        }
        Ok(LdlFactor {
            n,
            perm,
            lp,
            li,
            lx,
            dinv,
        })
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let n = self.n;
        let mut x: Vec<T> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                x[self.li[j]] -= self.lx[j] * xi;
            }
        }
        for i in 0..n {
            x[i] *= self.dinv[i];
        }
        for i in (0..n).rev() {
            let mut xi = x[i];
            for j in self.lp[i]..self.lp[i + 1] {
                xi -= self.lx[j] * x[self.li[j]];
            }
            x[i] = xi;
        }
        let mut out = DVector::zeros(n);
        for i in 0..n {
            out[self.perm[i]] = x[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplacian_2d(m: usize) -> CsrMatrix<f64> {
        let n = m * m;
        let mut coo = CooMatrix::new(n, n);
        for i in 0..m {
            for j in 0..m {
                let r = i * m + j;
                coo.push(r, r, 4.0);
                if i > 0 {
                    coo.push(r, r - m, -1.0);
                }
                if i + 1 < m {
                    coo.push(r, r + m, -1.0);
                }
                if j > 0 {
                    coo.push(r, r - 1, -1.0);
                }
                if j + 1 < m {
                    coo.push(r, r + 1, -1.0);
                }
            }
        }
        coo.to_csr()
    }

    #[test]
    fn duplicates_are_summed() {
        let mut c = CooMatrix::<f64>::new(2, 2);
        c.push(0, 1, 1.0);
        c.push(0, 1, 2.0);
        c.push(1, 0, -1.0);
        let m = c.to_csr();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn laplacian_solve_matches_dense() {
        let a = laplacian_2d(7);
        let b = DVector::from_fn(49, |i, _| (i as f64).sin());
        let x = LdlFactor::new(&a).unwrap().solve(&b);
        let xd = a.to_dense().lu().solve(&b).unwrap();
        assert!((x - xd).amax() < 1e-12);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut c = CooMatrix::<f64>::new(2, 2);
        c.push(0, 0, 1.0);
        c.push(0, 1, 1.0);
        c.push(1, 0, 1.0);
        c.push(1, 1, 1.0);
        assert!(matches!(LdlFactor::new(&c.to_csr()), Err(Error::SolverFailure(_))));
    }

    proptest! {
        #[test]
        fn random_spd_systems(seed in 0u64..1000, n in 1usize..40) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut coo = CooMatrix::new(n, n);
            for i in 0..n {
                coo.push(i, i, n as f64);
            }
            for _ in 0..2 * n {
                let i = rng.random_range(0..n);
                let j = rng.random_range(0..n);
                if i != j {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    coo.push(i, j, v);
                    coo.push(j, i, v);
                }
            }
            let a = coo.to_csr();
            let b = DVector::from_fn(n, |i, _| 1.0 + i as f64);
            let x = LdlFactor::new(&a).unwrap().solve(&b);
            let r = a.mul_vec(&x) - &b;
            prop_assert!(r.amax() <= 1e-12 * b.amax() * n as f64);
        }
    }
}

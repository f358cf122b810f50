use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::monomials::{dim_p2, dim_p2i, wdot, MonomialTable};
use super::quadrature::{polygon_rule, QuadratureRule};
use crate::error::{Error, Result};
use crate::mesh::PolygonalMesh;
use crate::scalar::{lit, Real};

/// Relative pivot below which a raw basis function is considered dependent
/// on the previous ones.
const RANK_TOL: f64 = 1e-12;

/// Target space for an element L2 projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolySpace {
    Scalar(usize),
    Vector(usize),
    Roly(usize),
    CRoly(usize),
    SymTensor(usize),
}

/// Hierarchical L2-orthonormal bases on one element.
///
/// Every family is stored as coefficient rows over the scaled monomials of
/// degree `k + 1`, ordered so that each prefix spans a lower-degree space:
///
/// * `scalar`: P^{k+1}, first `dim P^l` rows span P^l;
/// * `roly`: potentials `q` with field `rot q = (dq/dy, -dq/dx)`, first
///   `dim P^{l+1} - 1` rows span Roly^l, up to l = k;
/// * `croly`: multipliers `m` with field `(x - x_T)/h_T * m`, first
///   `dim P^{l-1}` rows span cRoly^l, up to l = k + 2.
#[derive(Clone, Debug)]
pub struct ElementBasis<T: Real> {
    pub k: usize,
    pub center: Vector2<T>,
    pub h: T,
    pub polygon: Vec<Vector2<T>>,
    pub scalar: DMatrix<T>,
    pub roly: DMatrix<T>,
    pub croly: DMatrix<T>,
}

/// Basis values at a set of points (functions x points).
#[derive(Clone, Debug)]
pub struct BasisEval<T: Real> {
    pub s: DMatrix<T>,
    pub sx: DMatrix<T>,
    pub sy: DMatrix<T>,
    /// Roly potentials `q` (the fields are `rot q`).
    pub rq: DMatrix<T>,
    pub rx: DMatrix<T>,
    pub ry: DMatrix<T>,
    pub cx: DMatrix<T>,
    pub cy: DMatrix<T>,
    pub cdiv: DMatrix<T>,
}

/// Returns `C` with `C G C^T = I`, `C` lower triangular, from a Gram matrix.
fn orthonormalizer<T: Real>(gram: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    let n = gram.nrows();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularGram(format!("{what}: Gram matrix not positive definite")))?;
    let l = chol.l();
    let tol: T = lit(RANK_TOL);
    for i in 0..n {
        if l[(i, i)] * l[(i, i)] < tol * gram[(i, i)] {
            return Err(Error::SingularGram(format!(
                "{what}: function {i} numerically dependent"
            )));
        }
    }
    let mut c = DMatrix::identity(n, n);
    l.solve_lower_triangular_mut(&mut c);
    Ok(c)
}

impl<T: Real> ElementBasis<T> {
    pub fn new(mesh: &PolygonalMesh<T>, t: usize, k: usize) -> Result<Self> {
        let el = &mesh.elements[t];
        Self::from_polygon(mesh.element_points(t), el.center, el.diameter, k)
    }

    pub fn from_polygon(polygon: Vec<Vector2<T>>, center: Vector2<T>, h: T, k: usize) -> Result<Self> {
        let deg = k + 1;
        let n = dim_p2(deg);
        let rule = polygon_rule(&polygon, &center, 2 * k + 4)?;
        let tab = MonomialTable::new(&center, h, deg, &rule.points);
        let w = &rule.weights;

        // Two passes of Cholesky orthonormalisation keep the result
        // orthonormal to rounding even when the monomial Gram is ill-conditioned.
        let twice =
            |raw: DMatrix<T>, comps: &dyn Fn(&DMatrix<T>) -> Vec<DMatrix<T>>, what: &str| -> Result<DMatrix<T>> {
                let gram_of = |coef: &DMatrix<T>| {
                    comps(coef)
                        .iter()
                        .fold(DMatrix::zeros(coef.nrows(), coef.nrows()), |g, v| g + wdot(v, v, w))
                };
                let c1 = orthonormalizer(&gram_of(&raw), what)? * raw;
                let c2 = orthonormalizer(&gram_of(&c1), what)?;
                Ok(c2 * c1)
            };

        let scalar = twice(DMatrix::identity(n, n), &|c| vec![c * &tab.val], "scalar basis")?;

        // Roly^k potentials: monomials of degree 1..=k+1 (drop the constant).
        let mut raw_roly = DMatrix::zeros(n - 1, n);
        for i in 0..n - 1 {
            raw_roly[(i, i + 1)] = T::one();
        }
        let roly = twice(raw_roly, &|c| vec![c * &tab.dy, -(c * &tab.dx)], "Roly basis")?;

        let xi = DMatrix::from_row_slice(1, tab.xi.len(), &tab.xi);
        let eta = DMatrix::from_row_slice(1, tab.eta.len(), &tab.eta);
        let croly = twice(
            DMatrix::identity(n, n),
            &|c| {
                let m = c * &tab.val;
                vec![row_scale(&m, &xi), row_scale(&m, &eta)]
            },
            "cRoly basis",
        )?;

        Ok(ElementBasis {
            k,
            center,
            h,
            polygon,
            scalar,
            roly,
            croly,
        })
    }

    pub fn rule(&self, degree: usize) -> Result<QuadratureRule<T>> {
        polygon_rule(&self.polygon, &self.center, degree)
    }

    pub fn eval(&self, points: &[Vector2<T>]) -> BasisEval<T> {
        let tab = MonomialTable::new(&self.center, self.h, self.k + 1, points);
        let xi = DMatrix::from_row_slice(1, tab.xi.len(), &tab.xi);
        let eta = DMatrix::from_row_slice(1, tab.eta.len(), &tab.eta);
        let m = &self.croly * &tab.val;
        let mx = &self.croly * &tab.dx;
        let my = &self.croly * &tab.dy;
        let two_over_h = lit::<T>(2.0) / self.h;
        let cdiv = &m * two_over_h + row_scale(&mx, &xi) + row_scale(&my, &eta);
        BasisEval {
            s: &self.scalar * &tab.val,
            sx: &self.scalar * &tab.dx,
            sy: &self.scalar * &tab.dy,
            rq: &self.roly * &tab.val,
            rx: &self.roly * &tab.dy,
            ry: -(&self.roly * &tab.dx),
            cx: row_scale(&m, &xi),
            cy: row_scale(&m, &eta),
            cdiv,
        }
    }

    pub fn dim(space: PolySpace) -> usize {
        match space {
            PolySpace::Scalar(l) => dim_p2(l),
            PolySpace::Vector(l) => 2 * dim_p2(l),
            PolySpace::Roly(l) => dim_p2(l + 1) - 1,
            PolySpace::CRoly(l) => dim_p2i(l as isize - 1),
            PolySpace::SymTensor(l) => 3 * dim_p2(l),
        }
    }

    fn check(&self, space: PolySpace) -> Result<()> {
        let ok = match space {
            PolySpace::Scalar(l) | PolySpace::Vector(l) | PolySpace::SymTensor(l) => l <= self.k + 1,
            PolySpace::Roly(l) => l <= self.k,
            PolySpace::CRoly(l) => l <= self.k + 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{space:?} exceeds the basis degree k = {}",
                self.k
            )))
        }
    }

    /// L2 projection of a scalar field; returns coefficients in the
    /// orthonormal basis.
    pub fn project_scalar(
        &self,
        l: usize,
        rule: &QuadratureRule<T>,
        f: impl Fn(&Vector2<T>) -> T,
    ) -> Result<DVector<T>> {
        self.check(PolySpace::Scalar(l))?;
        let ev = self.eval(&rule.points);
        let n = dim_p2(l);
        let mut out = DVector::zeros(n);
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(p) * w;
            for i in 0..n {
                out[i] += ev.s[(i, q)] * v;
            }
        }
        Ok(out)
    }

    /// L2 projection of a vector field onto `Vector(l)` (x block then y
    /// block), `Roly(l)` or `CRoly(l)`.
    pub fn project_vector(
        &self,
        space: PolySpace,
        rule: &QuadratureRule<T>,
        f: impl Fn(&Vector2<T>) -> Vector2<T>,
    ) -> Result<DVector<T>> {
        self.check(space)?;
        let ev = self.eval(&rule.points);
        let n = Self::dim(space);
        let mut out = DVector::zeros(n);
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let v = f(p) * w;
            match space {
                PolySpace::Vector(l) => {
                    let m = dim_p2(l);
                    for i in 0..m {
                        out[i] += ev.s[(i, q)] * v.x;
                        out[m + i] += ev.s[(i, q)] * v.y;
                    }
                }
                PolySpace::Roly(_) => {
                    for i in 0..n {
                        out[i] += ev.rx[(i, q)] * v.x + ev.ry[(i, q)] * v.y;
                    }
                }
                PolySpace::CRoly(_) => {
                    for i in 0..n {
                        out[i] += ev.cx[(i, q)] * v.x + ev.cy[(i, q)] * v.y;
                    }
                }
                PolySpace::Scalar(_) | PolySpace::SymTensor(_) => {
                    return Err(Error::Config(format!("{space:?} is not a vector space")))
                }
            }
        }
        Ok(out)
    }

    /// L2 projection of a symmetric tensor field onto `SymTensor(l)`, with
    /// blocks ordered `11`, `12`, `22`. The `12` block uses the unit-norm
    /// element `(e1 e2^T + e2 e1^T)/sqrt(2)`.
    pub fn project_sym_tensor(
        &self,
        l: usize,
        rule: &QuadratureRule<T>,
        f: impl Fn(&Vector2<T>) -> Matrix2<T>,
    ) -> Result<DVector<T>> {
        self.check(PolySpace::SymTensor(l))?;
        let ev = self.eval(&rule.points);
        let m = dim_p2(l);
        let r2 = lit::<T>(2.0).sqrt();
        let mut out = DVector::zeros(3 * m);
        for (q, (p, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let a = f(p) * w;
            let off = (a[(0, 1)] + a[(1, 0)]) / r2;
            for i in 0..m {
                out[i] += ev.s[(i, q)] * a[(0, 0)];
                out[m + i] += ev.s[(i, q)] * off;
                out[2 * m + i] += ev.s[(i, q)] * a[(1, 1)];
            }
        }
        Ok(out)
    }
}

/// Multiplies every row of `m` entrywise by the single row `r`.
pub(crate) fn row_scale<T: Real>(m: &DMatrix<T>, r: &DMatrix<T>) -> DMatrix<T> {
    let mut out = m.clone();
    for (c, &v) in r.iter().enumerate() {
        out.column_mut(c).scale_mut(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::hexagonal_mesh;

    fn unit_square(k: usize) -> ElementBasis<f64> {
        ElementBasis::from_polygon(
            vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(1.0, 0.0),
                Vector2::new(1.0, 1.0),
                Vector2::new(0.0, 1.0),
            ],
            Vector2::new(0.5, 0.5),
            2f64.sqrt(),
            k,
        )
        .unwrap()
    }

    fn gram(a: &[&DMatrix<f64>], w: &[f64]) -> DMatrix<f64> {
        a.iter()
            .map(|m| wdot(m, m, w))
            .fold(DMatrix::zeros(a[0].nrows(), a[0].nrows()), |g, x| g + x)
    }

    #[test]
    fn families_are_orthonormal_on_a_hexagon() {
        let mesh = hexagonal_mesh::<f64>(2).unwrap();
        for k in 0..4 {
            let b = ElementBasis::new(&mesh, 3, k).unwrap();
            let r = b.rule(2 * k + 4).unwrap();
            let e = b.eval(&r.points);
            for g in [
                gram(&[&e.s], &r.weights),
                gram(&[&e.rx, &e.ry], &r.weights),
                gram(&[&e.cx, &e.cy], &r.weights),
            ] {
                let n = g.nrows();
                assert!((g - DMatrix::identity(n, n)).amax() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn roly_and_croly_span_vector_polynomials() {
        let b = unit_square(2);
        let r = b.rule(8).unwrap();
        let e = b.eval(&r.points);
        for l in 0..=2 {
            let nr = ElementBasis::<f64>::dim(PolySpace::Roly(l));
            let nc = ElementBasis::<f64>::dim(PolySpace::CRoly(l));
            let x = DMatrix::from_fn(
                nr + nc,
                r.len(),
                |i, q| if i < nr { e.rx[(i, q)] } else { e.cx[(i - nr, q)] },
            );
            let y = DMatrix::from_fn(
                nr + nc,
                r.len(),
                |i, q| if i < nr { e.ry[(i, q)] } else { e.cy[(i - nr, q)] },
            );
            let g = gram(&[&x, &y], &r.weights);
            assert_eq!(g.nrows(), 2 * dim_p2(l));
            assert!(g.symmetric_eigenvalues().min() > 1e-6, "l={l}");
        }
    }

    #[test]
    fn projection_reproduces_polynomials() {
        let b = unit_square(1);
        let r = b.rule(6).unwrap();
        let f = |p: &Vector2<f64>| 1.0 + p.x - 2.0 * p.x * p.y;
        let c = b.project_scalar(2, &r, f).unwrap();
        let e = b.eval(&r.points);
        for (q, p) in r.points.iter().enumerate() {
            let v: f64 = (0..c.len()).map(|i| c[i] * e.s[(i, q)]).sum();
            assert!((v - f(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn space_dimensions() {
        assert_eq!(ElementBasis::<f64>::dim(PolySpace::Roly(0)), 2);
        assert_eq!(ElementBasis::<f64>::dim(PolySpace::CRoly(0)), 0);
        assert_eq!(ElementBasis::<f64>::dim(PolySpace::CRoly(1)), 1);
        assert_eq!(
            ElementBasis::<f64>::dim(PolySpace::Roly(1)) + ElementBasis::<f64>::dim(PolySpace::CRoly(1)),
            6
        );
    }

    #[test]
    fn too_high_degree_is_rejected() {
        let b = unit_square(0);
        let r = b.rule(4).unwrap();
        assert!(b.project_vector(PolySpace::Roly(1), &r, |_| Vector2::zeros()).is_err());
    }

    #[test]
    fn collinear_polygon_is_singular() {
        let r = ElementBasis::from_polygon(
            vec![
                Vector2::new(0.0, 0.0),
                Vector2::new(1.0, 0.0),
                Vector2::new(2.0, 1e-300),
            ],
            Vector2::new(1.0, 0.0),
            2.0,
            1,
        );
        assert!(r.is_err());
    }
}

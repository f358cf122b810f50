use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};

/// Points and positive weights integrating polynomials up to `degree` exactly.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T: Real> {
    pub points: Vec<Vector2<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> T {
        self.weights.iter().fold(T::zero(), |a, &w| a + w)
    }

    pub fn integrate(&self, f: impl Fn(&Vector2<T>) -> T) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (p, &w)| acc + w * f(p))
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf: T = from_usize(n);
    let tol = T::default_epsilon() * lit(4.0);
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, refined by Newton on P_n.
        let mut x = (T::pi() * (from_usize::<T>(i) + lit(0.75)) / (nf + lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for j in 2..=n {
                let jf: T = from_usize(j);
                let p2 = ((jf + jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                T::one()
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pnm1 = if n == 1 { T::one() } else { p0 };
            dp = nf * (x * pn - pnm1) / (x * x - T::one());
            let dx = pn / dp;
            x -= dx;
            if dx.abs() <= tol {
                break;
            }
        }
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = x;
        weights[i] = w;
        nodes[n - 1 - i] = -x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on the segment `[a, b]`, exact to `degree`.
pub fn segment_rule<T: Real>(a: &Vector2<T>, b: &Vector2<T>, degree: usize) -> QuadratureRule<T> {
    let n = (degree + 2) / 2;
    let (x, w) = gauss_legendre::<T>(n);
    let half = (b - a).norm() * lit::<T>(0.5);
    let mid = (a + b) * lit::<T>(0.5);
    let dir = (b - a) * lit::<T>(0.5);
    QuadratureRule {
        points: x.iter().map(|&s| mid + dir * s).collect(),
        weights: w.iter().map(|&wi| wi * half).collect(),
        degree,
    }
}

/// Collapsed (Duffy) Gauss product rule on a triangle, exact to `degree`.
pub fn triangle_rule<T: Real>(
    a: &Vector2<T>,
    b: &Vector2<T>,
    c: &Vector2<T>,
    degree: usize,
) -> Result<QuadratureRule<T>> {
    let area = ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)) * lit(0.5);
    if area <= T::zero() {
        return Err(Error::Geometry("degenerate quadrature triangle".into()));
    }
    // The Jacobian of the collapse contributes one extra power of u.
    let (xu, wu) = gauss_legendre::<T>((degree + 3) / 2);
    let (xv, wv) = gauss_legendre::<T>((degree + 2) / 2);
    let half: T = lit(0.5);
    let mut points = Vec::with_capacity(xu.len() * xv.len());
    let mut weights = Vec::with_capacity(xu.len() * xv.len());
    for (&su, &wu) in xu.iter().zip(&wu) {
        let u = (su + T::one()) * half;
        for (&sv, &wv) in xv.iter().zip(&wv) {
            let v = (sv + T::one()) * half;
            points.push(a + ((b - a) * (T::one() - v) + (c - a) * v) * u);
            // 2|T| * u * (1/2)(1/2) from the two affine maps
            weights.push(wu * wv * area * u * half);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Rule on a polygon star-shaped with respect to `center`, built on the fan
/// sub-triangulation (or directly for triangles).
pub fn polygon_rule<T: Real>(pts: &[Vector2<T>], center: &Vector2<T>, degree: usize) -> Result<QuadratureRule<T>> {
    if pts.len() == 3 {
        return triangle_rule(&pts[0], &pts[1], &pts[2], degree);
    }
    let mut rule = QuadratureRule {
        points: Vec::new(),
        weights: Vec::new(),
        degree,
    };
    for i in 0..pts.len() {
        let sub = triangle_rule(center, &pts[i], &pts[(i + 1) % pts.len()], degree)?;
        rule.points.extend(sub.points);
        rule.weights.extend(sub.weights);
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_odd_and_even_powers() {
        for n in 1..12 {
            let (x, w) = gauss_legendre::<f64>(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn unit_triangle_xy() {
        let r = triangle_rule(
            &Vector2::new(0.0f64, 0.0),
            &Vector2::new(1.0, 0.0),
            &Vector2::new(0.0, 1.0),
            2,
        )
        .unwrap();
        assert!((r.integrate(|p| p.x * p.y) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn unit_edge_cubic() {
        let r = segment_rule(&Vector2::new(0.0f64, 0.0), &Vector2::new(1.0, 0.0), 3);
        assert_eq!(r.len(), 2);
        assert!((r.integrate(|p| p.x.powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn regular_hexagon_area() {
        let pts: Vec<_> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                Vector2::new(a.cos(), a.sin())
            })
            .collect();
        let r = polygon_rule(&pts, &Vector2::zeros(), 0).unwrap();
        assert!((r.measure() - 1.5 * 3f64.sqrt()).abs() < 1e-13);
    }
}

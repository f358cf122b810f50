//! Closed-form exact solutions of the clamped-plate problem.
//!
//! Both solutions are built from a potential `v`: `theta = grad v`,
//! `u = v + t^2 w` with `w = -((beta0 + beta1)/kappa) lap v`, so that
//! `gamma = kappa grad w = -(beta0 + beta1) grad lap v` and
//! `f = (beta0 + beta1) lap^2 v`. Derivatives of `v` up to order four are
//! hand-coded.

use nalgebra::{Matrix2, Vector2};

use crate::assembly::MaterialParams;
use crate::polyspace::gauss_legendre;
use crate::scalar::{from_usize, lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionKind {
    /// Polynomial solution with clamped (homogeneous) traces on the unit square.
    Polynomial,
    /// Boundary-layer solution `v = t^3 V(x/t) + sin(pi x) sin(pi y)`.
    Analytical,
}

impl SolutionKind {
    pub fn parse(name: &str) -> Option<SolutionKind> {
        match name {
            "polynomial" => Some(SolutionKind::Polynomial),
            "analytical" => Some(SolutionKind::Analytical),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolutionKind::Polynomial => "polynomial",
            SolutionKind::Analytical => "analytical",
        }
    }
}

/// Which part of the potential to differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Full,
    /// `t^3 V(x/t)` only.
    Layer,
    /// Everything but the layer term.
    Smooth,
}

/// Partial derivatives `d[i][j] = dx^i dy^j v` for `i + j <= 4`.
type Jet<T> = [[T; 5]; 5];

#[derive(Clone, Copy, Debug)]
pub struct ExactSolution<T: Real> {
    pub kind: SolutionKind,
    pub material: MaterialParams<T>,
    pub homogeneous_bc: bool,
}

/// `s^3 (s - 1)^3 = s^6 - 3 s^5 + 3 s^4 - s^3` and its derivatives.
fn bubble<T: Real>(s: T, n: usize) -> T {
    let mut c: Vec<f64> = vec![0.0, 0.0, 0.0, -1.0, 3.0, -3.0, 1.0];
    for _ in 0..n {
        c = c.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect();
    }
    c.iter().rev().fold(T::zero(), |acc, &a| acc * s + lit::<T>(a))
}

/// `d^n/dz^n sin(z)`.
fn dsin<T: Real>(z: T, n: usize) -> T {
    match n % 4 {
        0 => z.sin(),
        1 => z.cos(),
        2 => -z.sin(),
        _ => -z.cos(),
    }
}

fn dcos<T: Real>(z: T, n: usize) -> T {
    dsin(z, n + 1)
}

impl<T: Real> ExactSolution<T> {
    pub fn polynomial(material: MaterialParams<T>) -> Self {
        ExactSolution {
            kind: SolutionKind::Polynomial,
            material,
            homogeneous_bc: true,
        }
    }

    pub fn analytical(material: MaterialParams<T>) -> Self {
        ExactSolution {
            kind: SolutionKind::Analytical,
            material,
            homogeneous_bc: false,
        }
    }

    pub fn new(kind: SolutionKind, material: MaterialParams<T>) -> Self {
        match kind {
            SolutionKind::Polynomial => Self::polynomial(material),
            SolutionKind::Analytical => Self::analytical(material),
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    fn jet(&self, x: &Vector2<T>, part: Part) -> Jet<T> {
        let mut d = [[T::zero(); 5]; 5];
        match self.kind {
            SolutionKind::Polynomial => {
                if part == Part::Layer {
                    return d;
                }
                // no layer term: Smooth and Full coincide
                let third: T = lit(1.0 / 3.0);
                let ax: Vec<T> = (0..5).map(|n| bubble(x.x, n)).collect();
                let ay: Vec<T> = (0..5).map(|n| bubble(x.y, n)).collect();
                for i in 0..5 {
                    for j in 0..5 - i {
                        d[i][j] = third * ax[i] * ay[j];
                    }
                }
            }
            SolutionKind::Analytical => {
                let t = self.material.thickness;
                let (y1, y2) = (x.x / t, x.y / t);
                let mut e = (-y1).exp();
                if e < lit(1e-300) {
                    e = T::zero();
                }
                let pi = T::pi();
                for i in 0..5 {
                    for j in 0..5 - i {
                        // dx^i dy^j [t^3 V(x/t)] = t^{3-i-j} (d1^i d2^j V)(x/t)
                        let sign = if i % 2 == 0 { T::one() } else { -T::one() };
                        let dv = sign * (y1 - from_usize(i)) * e * dcos(y2, j);
                        let tp = t.powi(3 - (i + j) as i32);
                        let mut val = if part == Part::Smooth { T::zero() } else { tp * dv };
                        if part != Part::Layer {
                            let g = pi.powi((i + j) as i32) * dsin(pi * x.x, i) * dsin(pi * x.y, j);
                            val += g;
                        }
                        d[i][j] = val;
                    }
                }
            }
        }
        d
    }

    fn beta_sum(&self) -> T {
        self.material.beta0() + self.material.beta1()
    }

    /// Transverse displacement `u`.
    pub fn u(&self, x: &Vector2<T>) -> T {
        let d = self.jet(x, Part::Full);
        let t = self.material.thickness;
        let c = self.beta_sum() / self.material.kappa();
        d[0][0] - t * t * c * (d[2][0] + d[0][2])
    }

    pub fn grad_u(&self, x: &Vector2<T>) -> Vector2<T> {
        let d = self.jet(x, Part::Full);
        let t = self.material.thickness;
        let c = self.beta_sum() / self.material.kappa();
        Vector2::new(
            d[1][0] - t * t * c * (d[3][0] + d[1][2]),
            d[0][1] - t * t * c * (d[2][1] + d[0][3]),
        )
    }

    /// Rotation `theta`.
    pub fn theta(&self, x: &Vector2<T>) -> Vector2<T> {
        let d = self.jet(x, Part::Full);
        Vector2::new(d[1][0], d[0][1])
    }

    /// `grad theta`, row `i` holding the gradient of `theta_i`.
    pub fn grad_theta(&self, x: &Vector2<T>) -> Matrix2<T> {
        let d = self.jet(x, Part::Full);
        Matrix2::new(d[2][0], d[1][1], d[1][1], d[0][2])
    }

    fn gamma_part(&self, x: &Vector2<T>, part: Part) -> Vector2<T> {
        let d = self.jet(x, part);
        let b = self.beta_sum();
        Vector2::new(-b * (d[3][0] + d[1][2]), -b * (d[2][1] + d[0][3]))
    }

    fn grad_gamma_part(&self, x: &Vector2<T>, part: Part) -> Matrix2<T> {
        let d = self.jet(x, part);
        let b = self.beta_sum();
        let xy = d[3][1] + d[1][3];
        Matrix2::new(-b * (d[4][0] + d[2][2]), -b * xy, -b * xy, -b * (d[2][2] + d[0][4]))
    }

    /// Shear strain `gamma`.
    pub fn gamma(&self, x: &Vector2<T>) -> Vector2<T> {
        self.gamma_part(x, Part::Full)
    }

    pub fn grad_gamma(&self, x: &Vector2<T>) -> Matrix2<T> {
        self.grad_gamma_part(x, Part::Full)
    }

    pub fn div_gamma(&self, x: &Vector2<T>) -> T {
        -self.f(x)
    }

    /// Transverse load `f`. The layer potential is biharmonic, so only the
    /// smooth part contributes and `f` does not depend on `t`.
    pub fn f(&self, x: &Vector2<T>) -> T {
        let d = self.jet(x, Part::Smooth);
        let two: T = lit(2.0);
        self.beta_sum() * (d[4][0] + two * d[2][2] + d[0][4])
    }
}

/// Field measured by [`seminorm_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeField {
    /// The full shear strain.
    ShearStrain,
    /// The contribution of the boundary-layer term `t^3 V(x/t)` alone
    /// (identically zero for the polynomial solution).
    ShearStrainLayer,
    /// The zero field.
    Zero,
}

/// Estimates `||field||_{L2}` (`s = 0`) or `|field|_{H1}` (`s = 1`) on the unit
/// square with a tensor Gauss rule on a grid graded towards `x = 0` at the
/// scale of the thickness.
pub fn seminorm_probe<T: Real>(sol: &ExactSolution<T>, s: usize, field: ProbeField) -> T {
    let t = sol.material.thickness;
    let mut xb: Vec<T> = (0..=16).map(|i| from_usize::<T>(i) / lit(16.0)).collect();
    let mut p = t;
    while p < T::one() {
        xb.push(p);
        p *= lit(2.0);
    }
    xb.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xb.dedup_by(|a, b| (*a - *b).abs() < lit(1e-14));
    let yb: Vec<T> = (0..=16).map(|i| from_usize::<T>(i) / lit(16.0)).collect();
    let (gx, gw) = gauss_legendre::<T>(10);
    let half: T = lit(0.5);
    let part = match field {
        ProbeField::ShearStrain => Part::Full,
        ProbeField::ShearStrainLayer => Part::Layer,
        ProbeField::Zero => return T::zero(),
    };
    let mut acc = T::zero();
    for xs in xb.windows(2) {
        let (xa, xl) = (xs[0], xs[1] - xs[0]);
        for ys in yb.windows(2) {
            let (ya, yl) = (ys[0], ys[1] - ys[0]);
            for (a, wa) in gx.iter().zip(&gw) {
                for (b, wb) in gx.iter().zip(&gw) {
                    let pt = Vector2::new(xa + xl * half * (*a + T::one()), ya + yl * half * (*b + T::one()));
                    let w = *wa * *wb * xl * yl * half * half;
                    let v = if s == 0 {
                        sol.gamma_part(&pt, part).norm_squared()
                    } else {
                        sol.grad_gamma_part(&pt, part).norm_squared()
                    };
                    acc += w * v;
                }
            }
        }
    }
    acc.sqrt()
}

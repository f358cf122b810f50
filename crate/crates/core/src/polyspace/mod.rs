//! Polynomial spaces, quadrature and L2 projections on elements and edges.

pub mod element;
pub mod monomials;
pub mod quadrature;

pub use element::{BasisEval, ElementBasis, PolySpace};
pub use monomials::{dim_p2, dim_p2i, edge_legendre, exponents, wdot, MonomialTable};
pub use quadrature::{gauss_legendre, polygon_rule, segment_rule, triangle_rule, QuadratureRule};

//! Discrete de Rham scheme for Reissner-Mindlin plates on polygonal meshes.
//!
//! The core is generic over the scalar type (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// Index loops mirror the formulas; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod ddr_ops;
pub mod ddr_spaces;
pub mod error;
pub mod harness;
pub mod hho;
pub mod manufactured;
pub mod mesh;
pub mod polyspace;
pub mod scalar;
pub mod sparse;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mesh = mesh::PolygonalMesh<f64>;
pub type Material = assembly::MaterialParams<f64>;
pub type Discretisation = assembly::Discretisation<f64>;
pub type ExactSolution = manufactured::ExactSolution<f64>;

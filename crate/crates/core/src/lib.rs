//! Finite-element solver and diagnostics for double phase Dirichlet problems
//!
//! ```text
//! -div(|∇u|^{p-2}∇u + μ(x)|∇u|^{q-2}∇u) = λ|u|^{p-2}u - f(x, u)  in Ω,  u = 0 on ∂Ω
//! ```
//!
//! on intervals and rectangles with P1 elements. The crate computes the first
//! `p`-Laplacian eigenpair, builds truncated energy functionals for the
//! positive and negative branches, minimizes them, and checks the resulting
//! constant-sign solutions. Interchangeable pieces (reactions, weight fields,
//! descent strategies) live in name-keyed registries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod descent;
pub mod eigen;
pub mod error;
pub mod field;
pub mod function;
pub mod linalg;
pub mod mesh;
pub mod nonlinearity;
pub mod operator;
pub mod orlicz;
pub mod quadrature;
pub mod registry;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use field::Field;
pub use function::{interpolate, FemFunction};
pub use mesh::{build_mesh, Domain, Mesh, Point};
pub use operator::{DualVector, Problem};
pub use orlicz::Exponents;
pub use quadrature::QuadratureRule;
pub use registry::Params;

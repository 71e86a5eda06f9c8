//! Taylor–Hood type finite elements on the structured mesh.

pub mod assembly;
pub mod dirichlet;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{assemble_form, Form};
pub use dirichlet::{apply_dirichlet, apply_tie};
pub use solver::{solve_sparse, Factorization};
pub use space::{FemSpace, SpaceKind};
pub use sparse::SparseOperator;

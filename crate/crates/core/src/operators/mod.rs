//! Graph calculus: inner products, Laplacians, heat semigroups and the
//! infinity Laplacian.

mod heat;
mod infinity;
mod vector;

pub use heat::{
    dissipation_audit, DissipationAudit, GraphOperator, LaplacianKind, Spectrum, DEFAULT_TOL, DENSE_LIMIT, DISSIPATION_NODES,
};
pub use infinity::{infinity_laplacian, infinity_laplacian_solve, infinity_laplacian_solve_with, SweepOrder};
pub use vector::{dirichlet_energy, inner_product_v, VectorOnGraph, Weighting};

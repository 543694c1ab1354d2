//! Localized thresholding energies on Euclidean grids and the approximate
//! monotonicity audit.

mod audit;
mod conv;
mod energy;
mod field;

pub use audit::{monotonicity_audit, AuditGrid, AuditReport, AuditRow, Inequality, DISCRETE_CONSTANT};
pub use energy::{
    heat_convolve, heat_convolve_periodic, heat_tail_bound, localized_energy, tilde_energy, EnergyEvaluator, GridEstimate,
};
pub use field::{standard_bump, standard_bump_hyperplane_integral, BumpFunction, GridField, Lattice};

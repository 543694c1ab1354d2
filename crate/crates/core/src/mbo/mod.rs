//! Multiclass MBO iteration, semi-supervised forcing and thresholding energies.

mod energy;
mod forcing;
mod labels;
mod scheme;
mod sigma;

pub use energy::{forced_energy, thresholding_energy, write_energy_csv, EnergyReport};
pub use forcing::{forcing_from_labels, lipschitz_forcing, two_class_forcing, ForcingField};
pub use labels::{LabelField, LabelMode};
pub use scheme::{diffuse, mbo_run, mbo_step, movement_functional, MboTrajectory, TIE_TOLERANCE};
pub use sigma::{validate_sigma, SurfaceTension};

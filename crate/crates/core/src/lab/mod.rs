//! Sampling, TL2 couplings and the large-data / small-step experiments.

mod density;
mod experiments;
mod sweep;
mod transport;

pub use density::{sample_cloud, stream_seed, CustomDensity, DensityModel};
pub use experiments::{
    degree_convergence_experiment, degree_deviation, dirichlet_consistency_experiment, heat_consistency_experiment,
    heat_tl2_pair, label_agreement, monotonicity_sweep, monotonicity_sweeps, one_step, one_step_consistency_experiment,
    relaxed_monotonicity_audit, OneStepOutcome, PartitionRule, RelaxedResidual, TestFunction, DEFAULT_J_RANGE,
};
pub use sweep::{SweepResult, SweepRow};
pub use transport::{geometric_coupling, hungarian, tl2_distance, TransportMethod, TransportPlan, EXACT_MAX};

//! Principal-strata Monte-Carlo engine.
//!
//! Samples are drawn i.i.d. from a superpopulation of compliers,
//! never-takers and always-takers ([`StrataSpec`]), then tested with the
//! Wald IV and ITT estimators. Each replication owns a ChaCha8 stream keyed
//! by its index, so results do not depend on the worker count.

mod diagnose;
mod engine;
mod estimate;
pub mod scenarios;
mod strata;

pub use diagnose::{
    covariance_diagnostics, stratum_means_from_table, CovarianceReport, ObservedTable,
    StratumMeans, TableCell,
};
pub use engine::{
    parse_grid, simulate_power, simulate_power_with_workers, validate_bounds, SimConfig, SimResult,
    ValidationPoint, VALIDATION_COLUMNS,
};
pub use estimate::{itt_estimate, wald_iv_estimate, IttFit, WaldFit};
pub use strata::{
    arm_variance, asymptotic_ncp, expected_within_arm_variance, generate_into, generate_sample,
    kappa_of_spec, ordered_means_of_spec, population_moments, tau_for_kappa, OrderedMeans,
    OutcomeFamily, PopulationMoments, Sample, StrataSpec, Stratum, SPARSE_STRATUM,
};

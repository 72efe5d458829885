//! Iterated elimination of dominated thresholds and the results built on it.

pub mod engine;
pub mod extension;
pub mod limits;
pub mod monotone;

pub use engine::{
    audit_step, audit_trace, iota_sequence, iterate_bounds, iterate_bounds_ext, iterate_bounds_logconcave,
    iterate_bounds_main, limit_residuals, BoundsState, IotaRound, Residual, SolveOptions, SolveReport, UNIQUE_TOL,
};
pub use extension::{lambda_max, sufficient_sigma_l, Contraction, SigmaLBound};
pub use limits::{
    critical_sigma_f, critical_sigma_f_lower_bound, effort_residual, no_effort_residual, solve_limits_main,
    solve_limits_main_checked, MainLimits,
};
pub use monotone::{verify_monotone_equilibrium, Check, MonotoneReport};

//! Monte Carlo experiments: configuration, replication runner, rate fits
//! and comparisons against the closed-form bounds.

pub mod analysis;
pub mod config;
pub mod experiment;

pub use analysis::{
    compare_to_bound, fit_log_log, fit_rate, merit_csv, quasi_fejer_check, rates_csv,
    ComparisonVerdict, PairCheck, PointVerdict, QuasiFejerCheck, RateFit, SN0Source,
};
pub use config::{log_grid, ExperimentConfig, Mode, OracleConfig, ProblemConfig, Setup};
pub use experiment::{
    run_experiment, DerivedConstants, FejerSummary, GridRow, MonteCarloReport, VERSION,
};

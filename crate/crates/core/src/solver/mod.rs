//! The stochastic forward-backward iteration, its step-size schedules and
//! checks of the conditions under which it converges.

pub mod assumptions;
pub mod fejer;
pub mod iteration;
pub mod schedule;

pub use assumptions::{check_assumptions, chi_sq, series_diverges, AssumptionReport, SeriesMethod};
pub use fejer::{fejer_diagnostics, FejerDiagnostics};
pub use iteration::{run, run_with, step};
pub use schedule::{GammaSchedule, LambdaSchedule, Schedule};

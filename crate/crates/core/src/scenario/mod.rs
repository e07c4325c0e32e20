//! Whole-run orchestration: scenario files, closed-loop flights and the
//! batch commands built on them.

pub mod batch;
pub mod config;
pub mod flight;
pub mod report;

use thiserror::Error;

pub use batch::{
    compare_profiles, monte_carlo_landing, run_budget, run_thermal_sweep, BudgetOutcome, CompareEntry,
    CompareReport, LandingStats, MonteCarloReport, ThermalOutcome,
};
pub use config::Scenario;
pub use flight::{fly, FlightOutput};
pub use report::{compute_report, Outcome, RunMeta, RunReport};

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Bad or inconsistent configuration, including infeasible references.
    #[error("configuration error: {0}")]
    Config(String),
    /// Something that should not happen with a valid configuration.
    #[error("internal fault: {0}")]
    Internal(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ScenarioError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Internal(_) | ScenarioError::Io(_) => 3,
        }
    }
}

//! Simulation designs, population targets, the replication harness and its
//! reports.

mod dgp;
mod harness;
mod report;
mod theta;

pub use dgp::{control_function, draw_toeplitz_gaussian, g, g_prime, generate_sample, logistic, DgpConfig, Design, Sample};
pub use harness::{
    aggregate_metrics, design_plan, replicate_on_sample, replication_rng, replication_sample, run_monte_carlo,
    run_monte_carlo_with, sample_table, Estimate, McSettings, Metrics, ReplicationResults, DEFAULT_FUNCTIONALS,
};
pub use report::{McReport, McRow, CSV_COLUMNS};
pub use theta::{geometric_index_variance, true_theta, ORACLE_DRAWS};

//! Complexity model, SINR metrology, Monte-Carlo runner, and the pieces the
//! command-line tool is built from.

pub mod complexity;
pub mod config;
pub mod metrics;
pub mod montecarlo;
pub mod verify;

pub use complexity::{complexity_sweep, count_mults_mmse, count_mults_mrcmmse, ComplexityReport, ComplexityRow};
pub use metrics::{capacity, measure_sinr, theoretical_gains, to_db};
pub use montecarlo::{run_monte_carlo, ScenarioConfig, SinrPoint, SinrReport};

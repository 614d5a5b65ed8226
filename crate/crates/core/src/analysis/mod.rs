//! Closed-form engine.

pub mod lambert;
pub mod pdf;
pub mod performance;
pub mod residual;
pub mod stm;

pub use lambert::lambert_w0;
pub use pdf::{characteristic_root, pr_buffer_available, LimitingPdf};
pub use performance::{
    analyze, delivery_terms, optimal_rate, optimal_rate_on, outage_probability, rate_grid, relay_params, stability,
    throughput, throughput_at_rate, throughput_derivative, throughput_derivative_printed, OptimalRate, Stability,
    SteadyStateReport,
};
pub use residual::verify_stationarity_residual;
pub use stm::{build_stm, stationary_distribution, RelayParams, StationaryDistribution, Stm};

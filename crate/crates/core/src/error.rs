use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nodes {0} and {1} coincide")]
    CoincidentNodes(&'static str, &'static str),

    /// The buffer process has no stationary distribution (`psi <= 1`, or
    /// equivalently `b * lambda * m <= 1` for the limiting density).
    #[error("unstable regime: psi1 = {psi1}, psi2 = {psi2}")]
    Unstable { psi1: f64, psi2: f64 },

    /// A single buffer with `b * lambda * m <= 1`: no limiting density.
    #[error("buffer has no limiting distribution (b * lambda * m = {psi})")]
    UnstableBuffer { psi: f64 },

    #[error("lambert W argument {0} is below -1/e")]
    LambertDomain(f64),

    /// A transition-matrix entry or a buffer-availability probability left
    /// the unit interval while iterating.
    #[error("state transition matrix has an invalid entry: {0}")]
    NegativeEntry(String),

    #[error("fixed-point iteration did not converge within {0} iterations")]
    MaxIterations(usize),

    /// The energy bookkeeping was asked to spend more than the buffer holds.
    #[error("buffer holds {level} mJ but {requested} mJ was consumed")]
    Overdraw { level: f64, requested: f64 },

    #[error("simulation: {0}")]
    Simulation(String),
}

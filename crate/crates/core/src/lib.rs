//! Analytical and Monte-Carlo models of a four-node cooperative network
//! (source, two energy-harvesting decode-and-forward relays, destination)
//! running an opportunistic-routing protocol.
//!
//! The crate has two engines that are meant to be compared against each
//! other:
//!
//! * [`analysis`] computes the stationary distribution of the candidate
//!   broadcast node (CBN) set, the limiting energy-buffer densities, the
//!   outage probability and the throughput in closed form.
//! * [`sim`] runs the same network slot by slot with Rayleigh-faded links and
//!   exponentially distributed harvests, and collects the empirical
//!   counterparts of every analytical quantity.
//!
//! [`radio`], [`protocol`] and [`energy`] hold the shared building blocks.

pub mod analysis;
pub mod energy;
mod error;
pub mod protocol;
pub mod quad;
pub mod radio;
pub mod sim;

pub use error::{Error, Result};
pub use radio::{LinkSet, NetworkConfig, NodeLayout, Point};

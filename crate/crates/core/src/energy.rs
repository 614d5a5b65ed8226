//! Harvest-store-use energy buffer of one relay.
//!
//! Every slot the buffer gains an exponential harvest; when the protocol
//! picks the relay as broadcaster it also pays its fixed quantum `m`.

use rand::Rng;

use crate::radio::sample_exponential;
use crate::{Error, Result};

/// Stored energy in mJ. Capacity is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct EnergyBuffer {
    level: f64,
}

impl EnergyBuffer {
    pub const fn empty() -> Self {
        Self { level: 0.0 }
    }

    pub fn with_level(level: f64) -> Result<Self> {
        if !(level >= 0.0) {
            return Err(Error::InvalidConfig(format!("buffer level must be >= 0, got {level}")));
        }
        Ok(Self { level })
    }

    #[inline]
    pub fn level(&self) -> f64 {
        self.level
    }

    #[inline]
    pub fn can_afford(&self, m: f64) -> bool {
        self.level >= m
    }

    /// One slot of bookkeeping: `level + harvest - (m if consumed)`.
    ///
    /// The harvest is credited in transmit slots as well. Consuming more
    /// than the stored level is an error.
    #[inline]
    pub fn update(self, consumed: bool, m: f64, harvest: f64) -> Result<Self> {
        let spent = if consumed {
            if self.level < m {
                return Err(Error::Overdraw {
                    level: self.level,
                    requested: m,
                });
            }
            m
        } else {
            0.0
        };
        // (level - spent) >= 0 exactly because level >= m was checked
        Ok(Self {
            level: (self.level - spent) + harvest,
        })
    }
}

/// Energy harvested in one slot: exponential with mean `1 / lambda`.
#[inline]
pub fn sample_harvest<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> f64 {
    sample_exponential(lambda, rng)
}

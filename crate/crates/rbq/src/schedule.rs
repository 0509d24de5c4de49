//! Eventually-constant rate sequences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A positive rate sequence with a finite head and a constant tail.
///
/// The schedule is purely positional: `get(0)` is the first entry. Each
/// queueing model documents how its own index (queue length at service
/// start, count in system, ...) maps onto positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSchedule {
    head: Vec<f64>,
    tail: f64,
}

impl RateSchedule {
    pub fn new(head: Vec<f64>, tail: f64) -> Result<Self> {
        for &r in head.iter().chain(std::iter::once(&tail)) {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Domain(format!(
                    "rate schedule entries must be positive reals, got {r}"
                )));
            }
        }
        Ok(RateSchedule { head, tail })
    }

    /// A schedule that is the same rate everywhere.
    pub fn constant(rate: f64) -> Result<Self> {
        RateSchedule::new(Vec::new(), rate)
    }

    /// Rate at position `idx` (0-based); the tail value beyond the head.
    pub fn get(&self, idx: usize) -> f64 {
        self.head.get(idx).copied().unwrap_or(self.tail)
    }

    pub fn head(&self) -> &[f64] {
        &self.head
    }

    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Drops the first `k` positions: entry `n` of the result is entry
    /// `n + k` of the original.
    pub fn shift(&self, k: usize) -> RateSchedule {
        RateSchedule {
            head: self.head.get(k..).map(<[f64]>::to_vec).unwrap_or_default(),
            tail: self.tail,
        }
    }

    /// True when every entry equals the tail value.
    pub fn is_constant(&self) -> bool {
        self.head.iter().all(|&r| r == self.tail)
    }

    pub fn validate(&self) -> Result<()> {
        RateSchedule::new(self.head.clone(), self.tail).map(|_| ())
    }
}

//! Geometric energy schedule for confining like charges: placing charge `i`
//! costs `e0 * r^i`. Performed sequentially the costs accumulate; split across
//! `k` observers placing charges together, each observer carries an equal
//! share and the task takes one round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySchedule {
    /// Energy of the first charge, in eV.
    pub base_energy: f64,
    pub growth_ratio: f64,
    /// Highest charge index; the schedule has `count + 1` terms.
    pub count: usize,
}

impl EnergySchedule {
    /// 50 eV first charge, 30% growth, charges indexed `0..=10`.
    pub const CONFINEMENT: EnergySchedule = EnergySchedule {
        base_energy: 50.0,
        growth_ratio: 1.3,
        count: 10,
    };

    pub fn new(base_energy: f64, growth_ratio: f64, count: usize) -> Result<Self> {
        let s = Self {
            base_energy,
            growth_ratio,
            count,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_energy.is_finite() && self.base_energy > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "base energy must be positive, got {}",
                self.base_energy
            )));
        }
        if !(self.growth_ratio.is_finite() && self.growth_ratio > 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "growth ratio must exceed 1, got {}",
                self.growth_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributedEnergy {
    pub per_observability: f64,
    pub rounds: u64,
}

pub fn charge_energy(i: usize, s: &EnergySchedule) -> Result<f64> {
    s.validate()?;
    if i > s.count {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: s.count + 1,
        });
    }
    Ok(s.base_energy * s.growth_ratio.powi(i as i32))
}

/// Closed-form sum of every term, `e0 (r^(count+1) - 1) / (r - 1)`.
pub fn total_energy(s: &EnergySchedule) -> Result<f64> {
    s.validate()?;
    let r = s.growth_ratio;
    Ok(s.base_energy * (r.powi(s.count as i32 + 1) - 1.0) / (r - 1.0))
}

/// Equal split of the total across `observers` working in one round.
///
/// `observers` counts independent placers and may be 1 (the sequential
/// machine). It must cover the schedule's `count` charges.
pub fn distributed_energy(s: &EnergySchedule, observers: usize) -> Result<DistributedEnergy> {
    if observers == 0 || s.count > observers {
        return Err(Error::ArityExceeded {
            len: s.count,
            k: observers,
        });
    }
    Ok(DistributedEnergy {
        per_observability: total_energy(s)? / observers as f64,
        rounds: 1,
    })
}

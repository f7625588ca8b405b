//! Deflection sorter: charged particles cross a uniform transverse field and
//! land at offsets that are monotone in their charge-to-inertia key, so one
//! flight through the device is one full-order reading.
//!
//! Units are arbitrary but consistent.

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{CostLedger, KComparator, ObservabilityOrder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub mass: f64,
    pub charge: f64,
    pub speed: f64,
}

impl Particle {
    pub fn new(mass: f64, charge: f64, speed: f64) -> Result<Self> {
        let p = Self {
            mass,
            charge,
            speed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::NonPhysical(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(Error::NonPhysical(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !self.charge.is_finite() {
            return Err(Error::NonPhysical(format!(
                "charge must be finite, got {}",
                self.charge
            )));
        }
        Ok(())
    }

    /// `q / (m v^2)`: the quantity electric deflection is proportional to.
    pub fn electric_key(&self) -> f64 {
        self.charge / (self.mass * self.speed * self.speed)
    }

    /// `q / (m v)`: magnetic curvature per unit field.
    pub fn magnetic_key(&self) -> f64 {
        self.charge / (self.mass * self.speed)
    }
}

/// Device geometry and field. The sign of `field_strength` is the polarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    pub field_strength: f64,
    pub plate_length: f64,
    #[serde(default)]
    pub drift_distance: f64,
}

impl FieldConfig {
    pub fn new(field_strength: f64, plate_length: f64, drift_distance: f64) -> Result<Self> {
        let f = Self {
            field_strength,
            plate_length,
            drift_distance,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.field_strength.is_finite() {
            return Err(Error::NonPhysical("field strength must be finite".into()));
        }
        if !(self.plate_length.is_finite() && self.plate_length > 0.0) {
            return Err(Error::NonPhysical(format!(
                "plate length must be positive, got {}",
                self.plate_length
            )));
        }
        if !(self.drift_distance.is_finite() && self.drift_distance >= 0.0) {
            return Err(Error::NonPhysical(format!(
                "drift distance must be non-negative, got {}",
                self.drift_distance
            )));
        }
        Ok(())
    }

    /// Same geometry, opposite polarity.
    pub fn flipped(&self) -> Self {
        Self {
            field_strength: -self.field_strength,
            ..*self
        }
    }

    /// `L (L/2 + D)`: lever arm shared by both deflection modes.
    fn lever(&self) -> f64 {
        self.plate_length * (self.plate_length / 2.0 + self.drift_distance)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeflectionMode {
    /// Transverse electric field between plates, then field-free drift.
    #[default]
    Electric,
    /// Transverse magnetic field, small-angle approximation.
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionRecord {
    pub particle_index: usize,
    pub displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SortedCharges {
    /// Particle indices ordered by landing offset, lowest first.
    pub permutation: Vec<usize>,
    /// One record per input particle, in input order.
    pub records: Vec<DeflectionRecord>,
}

/// Landing offset `y = qHL(L/2 + D) / (m v^2)` for the electric sorter.
pub fn deflection(p: &Particle, f: &FieldConfig) -> Result<f64> {
    deflection_with_mode(p, f, DeflectionMode::Electric)
}

pub fn deflection_with_mode(p: &Particle, f: &FieldConfig, mode: DeflectionMode) -> Result<f64> {
    p.validate()?;
    f.validate()?;
    let y = match mode {
        // Acceleration qH/m for time L/v inside the plates, then straight drift.
        DeflectionMode::Electric => {
            (p.charge * f.field_strength / p.mass)
                * (f.plate_length / p.speed)
                * (f.plate_length / 2.0 + f.drift_distance)
                / p.speed
        }
        // Curvature qB/(mv) times the same lever arm.
        DeflectionMode::Magnetic => p.magnetic_key() * f.field_strength * f.lever(),
    };
    if !y.is_finite() {
        return Err(Error::NonPhysical(format!(
            "displacement overflowed for {p:?}"
        )));
    }
    Ok(y)
}

/// Sorts up to `k` particles in a single device reading by their landing offset.
pub fn charge_sort(
    particles: &[Particle],
    field: &FieldConfig,
    order: ObservabilityOrder,
    ledger: &mut CostLedger,
) -> Result<SortedCharges> {
    charge_sort_with_mode(particles, field, DeflectionMode::Electric, order, ledger)
}

pub fn charge_sort_with_mode(
    particles: &[Particle],
    field: &FieldConfig,
    mode: DeflectionMode,
    order: ObservabilityOrder,
    ledger: &mut CostLedger,
) -> Result<SortedCharges> {
    let records = particles
        .iter()
        .enumerate()
        .map(|(particle_index, p)| {
            Ok(DeflectionRecord {
                particle_index,
                displacement: deflection_with_mode(p, field, mode)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let offsets: Vec<OrderedFloat<f64>> = records
        .iter()
        .map(|r| OrderedFloat(r.displacement))
        .collect();
    let outcome = KComparator::new(order).compare(&offsets, ledger)?;
    Ok(SortedCharges {
        permutation: outcome.ranking,
        records,
    })
}

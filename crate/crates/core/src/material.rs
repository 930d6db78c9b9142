//! Bilinear tendon stress-strain curve: linear elastic up to yield, then
//! linear strain hardening up to rupture.

use crate::error::{Error, Result};
use crate::units::MM2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialCurve {
    /// Tendon cross-section [m²].
    pub area: f64,
    pub yield_force: f64,
    pub yield_strain: f64,
    pub ultimate_force: f64,
    pub ultimate_strain: f64,
}

impl Default for MaterialCurve {
    /// 63.5 µm polyethylene layflat tubing.
    fn default() -> Self {
        Self {
            area: 3.7 * MM2,
            yield_force: 60.0,
            yield_strain: 0.07,
            ultimate_force: 120.0,
            ultimate_strain: 0.33,
        }
    }
}

impl MaterialCurve {
    pub fn new(
        area: f64,
        yield_force: f64,
        yield_strain: f64,
        ultimate_force: f64,
        ultimate_strain: f64,
    ) -> Result<Self> {
        let curve = Self {
            area,
            yield_force,
            yield_strain,
            ultimate_force,
            ultimate_strain,
        };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area > 0.0) {
            return Err(Error::invalid("material area must be positive"));
        }
        if !(0.0 < self.yield_strain && self.yield_strain < self.ultimate_strain) {
            return Err(Error::invalid(
                "strains must satisfy 0 < yield_strain < ultimate_strain",
            ));
        }
        if !(0.0 < self.yield_force && self.yield_force < self.ultimate_force) {
            return Err(Error::invalid(
                "forces must satisfy 0 < yield_force < ultimate_force",
            ));
        }
        Ok(())
    }

    /// Tension at the given engineering strain.
    pub fn tendon_tension(&self, strain: f64) -> Result<f64> {
        if !(strain >= 0.0) {
            return Err(Error::invalid(format!(
                "strain {strain} must be non-negative"
            )));
        }
        if strain > self.ultimate_strain {
            return Err(Error::Rupture {
                strain,
                ultimate: self.ultimate_strain,
            });
        }
        Ok(if strain <= self.yield_strain {
            self.yield_force * strain / self.yield_strain
        } else {
            let hardening = (self.ultimate_force - self.yield_force)
                / (self.ultimate_strain - self.yield_strain);
            self.yield_force + hardening * (strain - self.yield_strain)
        })
    }

    /// Elastic stiffness of a tendon of the given free length [N/m].
    pub fn tendon_stiffness(&self, free_length: f64) -> Result<f64> {
        if !(free_length > 0.0) {
            return Err(Error::invalid("free length must be positive"));
        }
        Ok(self.yield_force / self.yield_strain / free_length)
    }

    pub fn ultimate_stress(&self) -> f64 {
        self.ultimate_force / self.area
    }
}

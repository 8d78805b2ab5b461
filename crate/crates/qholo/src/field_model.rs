//! Laser parameters, atomic-unit conversion and the single-cycle field.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Atomic unit of intensity in W/cm².
pub const INTENSITY_AU: f64 = 3.50945e16;
/// ω (a.u.) times λ (nm).
pub const OMEGA_NM: f64 = 45.5634;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaserParams {
    pub wavelength_nm: f64,
    /// W/cm²
    pub peak_intensity: f64,
    pub cep: f64,
    /// Ionization potential in hartree.
    pub target_atom_ip: f64,
}

impl Default for LaserParams {
    fn default() -> Self {
        Self {
            wavelength_nm: 1500.0,
            peak_intensity: 1e14,
            cep: 0.0,
            target_atom_ip: 0.5,
        }
    }
}

impl LaserParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_nm > 0.0 && self.wavelength_nm.is_finite()) {
            return domain(format!("wavelength must be positive, got {}", self.wavelength_nm));
        }
        if !(self.peak_intensity > 0.0 && self.peak_intensity.is_finite()) {
            return domain(format!("peak intensity must be positive, got {}", self.peak_intensity));
        }
        if !(self.target_atom_ip > 0.0 && self.target_atom_ip.is_finite()) {
            return domain(format!("ionization potential must be positive, got {}", self.target_atom_ip));
        }
        if !self.cep.is_finite() {
            return domain("cep must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConstants {
    pub e0: f64,
    pub omega: f64,
    pub up: f64,
    pub p_2up: f64,
    pub quiver_amplitude: f64,
}

impl FieldConstants {
    pub fn from_field(e0: f64, omega: f64) -> Self {
        let up = e0 * e0 / (4.0 * omega * omega);
        Self {
            e0,
            omega,
            up,
            p_2up: 2.0 * up.sqrt(),
            quiver_amplitude: e0 / (omega * omega),
        }
    }
}

pub fn to_atomic_units(params: &LaserParams) -> Result<FieldConstants> {
    params.validate()?;
    let e0 = (params.peak_intensity / INTENSITY_AU).sqrt();
    let omega = OMEGA_NM / params.wavelength_nm;
    Ok(FieldConstants::from_field(e0, omega))
}

/// One classical monochromatic cycle, A(t) = (e0/ω) sin(ωt + cep).
///
/// The window starts where the carrier phase is zero, so it always
/// spans the phases [0, 2π) and a CEP change is a pure time shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRealization {
    pub e0: f64,
    pub omega: f64,
    pub cep: f64,
    pub window: (f64, f64),
}

impl FieldRealization {
    pub fn new(e0: f64, omega: f64, cep: f64) -> Result<Self> {
        if !(e0 >= 0.0 && e0.is_finite()) {
            return domain(format!("field amplitude must be nonnegative, got {e0}"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return domain(format!("frequency must be positive, got {omega}"));
        }
        if !cep.is_finite() {
            return domain("cep must be finite");
        }
        let start = -cep / omega;
        Ok(Self {
            e0,
            omega,
            cep,
            window: (start, start + 2.0 * PI / omega),
        })
    }

    pub fn from_constants(c: &FieldConstants, cep: f64) -> Result<Self> {
        Self::new(c.e0, c.omega, cep)
    }

    pub fn a0(&self) -> f64 {
        self.e0 / self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn up(&self) -> f64 {
        self.e0 * self.e0 / (4.0 * self.omega * self.omega)
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.window.0 && t <= self.window.1
    }

    /// Carrier phase ωt + cep, continued to complex t.
    pub fn phase(&self, t: C64) -> C64 {
        t * self.omega + self.cep
    }

    /// Time at which the carrier reaches phase `phi`.
    pub fn time_of_phase(&self, phi: C64) -> C64 {
        (phi - self.cep) / self.omega
    }

    // The analytic continuations below ignore the window gating.

    pub fn a(&self, t: C64) -> C64 {
        self.phase(t).sin() * self.a0()
    }

    /// dA/dt = −E.
    pub fn da(&self, t: C64) -> C64 {
        self.phase(t).cos() * self.e0
    }

    pub fn e(&self, t: C64) -> C64 {
        -self.da(t)
    }

    /// Antiderivative of A.
    pub fn int_a(&self, t: C64) -> C64 {
        -self.phase(t).cos() * (self.a0() / self.omega)
    }

    /// Antiderivative of A².
    pub fn int_a2(&self, t: C64) -> C64 {
        let ph = self.phase(t);
        let a0 = self.a0();
        (ph * 0.5 - (ph * 2.0).sin() * 0.25) * (a0 * a0 / self.omega)
    }
}

/// Gated field and vector potential at real time `t`.
pub fn field_and_potential(t: f64, f: &FieldRealization) -> (f64, f64) {
    if !f.contains(t) {
        return (0.0, 0.0);
    }
    let ph = f.omega * t + f.cep;
    (-f.e0 * ph.cos(), f.a0() * ph.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_constants() {
        let c = to_atomic_units(&LaserParams::default()).unwrap();
        assert!((c.e0 - 0.0533798).abs() < 1e-6);
        assert!((c.omega - 0.0303756).abs() < 1e-6);
    }

    #[test]
    fn rejects_nonpositive_inputs() {
        let mut p = LaserParams::default();
        p.peak_intensity = 0.0;
        assert!(to_atomic_units(&p).is_err());
        p = LaserParams::default();
        p.wavelength_nm = -3.0;
        assert!(to_atomic_units(&p).is_err());
        p = LaserParams::default();
        p.target_atom_ip = 0.0;
        assert!(to_atomic_units(&p).is_err());
    }

    #[test]
    fn window_spans_one_period() {
        let f = FieldRealization::new(0.05, 0.03, 0.7).unwrap();
        let len = f.window.1 - f.window.0;
        assert!((len - f.period()).abs() <= 1e-12 * f.period());
        assert!((f.omega * f.window.0 + f.cep).abs() < 1e-12);
    }
}

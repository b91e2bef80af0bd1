//! Natural gravitational units: `z_g = (hbar^2 / (2 m^2 g))^(1/3)`,
//! `E_g = m g z_g`, `t_g = hbar / E_g`. In these units the stationary
//! equation reads `-psi'' + z psi = E psi`, and `z_g / t_g^2 = g / 2`, which
//! is why classical free fall is `z'' = -2`.

use crate::error::{invalid, Result};

pub const HBAR: f64 = 1.054_571_817e-34;
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
pub const NEUTRON_MASS: f64 = 1.674_927_498_04e-27;
pub const STANDARD_GRAVITY: f64 = 9.806_65;
/// `|mu_n| = 60.3 neV/T`.
pub const NEUTRON_MAGNETIC_MOMENT: f64 = 60.3e-9 * ELECTRON_VOLT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub mass: f64,
    pub gravity: f64,
    /// J/T; needed only to convert field gradients into kick amplitudes.
    pub magnetic_moment: Option<f64>,
    pub z_g: f64,
    pub t_g: f64,
    pub e_g: f64,
}

impl UnitSystem {
    pub fn new(mass: f64, gravity: f64, magnetic_moment: Option<f64>) -> Result<Self> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(mass) || !positive(gravity) || magnetic_moment.is_some_and(|m| !positive(m)) {
            return Err(invalid("mass, gravity and magnetic moment must be positive and finite"));
        }
        let z_g = (HBAR * HBAR / (2.0 * mass * mass * gravity)).cbrt();
        let e_g = mass * gravity * z_g;
        Ok(Self { mass, gravity, magnetic_moment, z_g, t_g: HBAR / e_g, e_g })
    }

    pub fn neutron() -> Self {
        Self::new(NEUTRON_MASS, STANDARD_GRAVITY, Some(NEUTRON_MAGNETIC_MOMENT)).expect("neutron constants are valid")
    }

    /// SI value of one dimensionless unit of `quantity`.
    pub fn scale(&self, quantity: Quantity) -> Result<f64> {
        Ok(match quantity {
            Quantity::Length => self.z_g,
            Quantity::Time => self.t_g,
            Quantity::Energy => self.e_g,
            Quantity::Velocity => self.z_g / self.t_g,
            // a_k = |mu| beta / (m g), so one unit of a_k is m g / |mu| in T/m
            Quantity::Gradient => {
                let mu = self
                    .magnetic_moment
                    .ok_or_else(|| invalid("gradient conversion needs a magnetic moment"))?;
                self.mass * self.gravity / mu
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Length,
    Time,
    Energy,
    Velocity,
    /// Magnetic field gradient (T/m) <-> kick amplitude `a_k`.
    Gradient,
}

impl std::str::FromStr for Quantity {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "length" => Ok(Self::Length),
            "time" => Ok(Self::Time),
            "energy" => Ok(Self::Energy),
            "velocity" => Ok(Self::Velocity),
            "gradient" => Ok(Self::Gradient),
            other => Err(invalid(format!(
                "unknown quantity '{other}' (expected length, time, energy, velocity or gradient)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToSi,
    ToDimensionless,
}

pub fn convert_units(units: &UnitSystem, value: f64, direction: Direction, quantity: Quantity) -> Result<f64> {
    let scale = units.scale(quantity)?;
    Ok(match direction {
        Direction::ToSi => value * scale,
        Direction::ToDimensionless => value / scale,
    })
}

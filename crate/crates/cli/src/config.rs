//! Run configuration. TOML with one table per concern and one `[[kick]]`
//! table per pulse; unknown keys are rejected.

use serde::{Deserialize, Serialize};

use qbounce::classical::InitialDistribution;
use qbounce::spectroscopy::{DelayGrid, KickShape, ScanConfig, SpinMode, Window};
use qbounce::units::{convert_units, Direction, Quantity};
use qbounce::{KickKind, KickPulse, UnitSystem};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ClassicalEcho,
    QuantumEcho,
    Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub units: Option<UnitsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSection>,
    #[serde(default, rename = "kick", skip_serializing_if = "Vec::is_empty")]
    pub kicks: Vec<KickSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsSection {
    /// `neutron` or `custom`.
    pub system: String,
    /// kg, custom systems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// m/s^2, custom systems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    /// J/T, custom systems only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnetic_moment: Option<f64>,
}

impl UnitsSection {
    pub fn resolve(&self) -> Result<UnitSystem, CliError> {
        match self.system.as_str() {
            "neutron" => {
                if self.mass.is_some() || self.gravity.is_some() || self.magnetic_moment.is_some() {
                    return Err(CliError::config("units: the neutron system takes no mass/gravity/magnetic_moment"));
                }
                Ok(UnitSystem::neutron())
            }
            "custom" => {
                let (Some(m), Some(g)) = (self.mass, self.gravity) else {
                    return Err(CliError::config("units: a custom system needs mass and gravity"));
                };
                UnitSystem::new(m, g, self.magnetic_moment).map_err(CliError::from)
            }
            other => Err(CliError::config(format!("units: unknown system '{other}' (neutron or custom)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Gaussian { mu_z: f64, sigma_z: f64 },
    Eigenstate { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub particles: usize,
    pub mu_z: f64,
    pub mu_v: f64,
    pub sigma_z: f64,
    pub sigma_v: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verlet_step: Option<f64>,
    /// Apex height above which a particle is flagged; default `10 mu_z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape_height: Option<f64>,
}

impl EnsembleSection {
    pub fn distribution(&self) -> InitialDistribution {
        InitialDistribution { mu_z: self.mu_z, mu_v: self.mu_v, sigma_z: self.sigma_z, sigma_v: self.sigma_v }
    }

    pub fn escape_height(&self) -> f64 {
        self.escape_height.unwrap_or(10.0 * self.mu_z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl TimeSection {
    pub fn samples(&self) -> Result<Vec<f64>, CliError> {
        if !(self.step > 0.0) || !(self.stop > self.start) || !self.stop.is_finite() || !self.start.is_finite() {
            return Err(CliError::config(format!(
                "time: need start < stop and step > 0, got [{}, {}] step {}",
                self.start, self.stop, self.step
            )));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// `average`, `up` or `down`.
    #[serde(default = "default_spin")]
    pub spin: String,
    #[serde(default)]
    pub impulsive_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_width: Option<f64>,
}

fn default_spin() -> String {
    "average".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// `hann` or `rectangular`.
    #[serde(default = "default_window")]
    pub window: String,
    #[serde(default = "default_pad")]
    pub pad: usize,
    /// Peak floor relative to the strongest peak.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Number of lines `z_i1`, `i = 2..=lines+1`, to match.
    #[serde(default = "default_lines")]
    pub lines: usize,
}

fn default_window() -> String {
    "hann".into()
}
fn default_pad() -> usize {
    8
}
fn default_floor() -> f64 {
    qbounce::spectroscopy::DEFAULT_FLOOR
}
fn default_lines() -> usize {
    5
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { window: default_window(), pad: default_pad(), floor: default_floor(), lines: default_lines() }
    }
}

impl SpectrumSection {
    pub fn window(&self) -> Result<Window, CliError> {
        parse_window(&self.window)
    }
}

pub fn parse_window(name: &str) -> Result<Window, CliError> {
    match name {
        "hann" => Ok(Window::Hann),
        "rectangular" | "rect" | "none" => Ok(Window::Rectangular),
        other => Err(CliError::config(format!("unknown window '{other}' (hann or rectangular)"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickSection {
    /// `magnetic` or `shake`.
    pub kind: String,
    /// Dimensionless amplitude `a_k` (surface height for shakes).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Field gradient in T/m, converted with the unit system's magnetic moment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<f64>,
    pub width: f64,
    /// Pulse centre; omitted in scans, where the kicks sit at 0 and `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
}

impl KickSection {
    pub fn kind(&self) -> Result<KickKind, CliError> {
        match self.kind.as_str() {
            "magnetic" => Ok(KickKind::MagneticGradient),
            "shake" => Ok(KickKind::SurfaceShake),
            other => Err(CliError::config(format!("kick: unknown kind '{other}' (magnetic or shake)"))),
        }
    }

    pub fn amplitude(&self, units: Option<&UnitSystem>) -> Result<f64, CliError> {
        match (self.amplitude, self.gradient) {
            (Some(a), None) => Ok(a),
            (None, Some(g)) => {
                if self.kind()? != KickKind::MagneticGradient {
                    return Err(CliError::config("kick: gradient is only meaningful for magnetic kicks"));
                }
                let units = units.ok_or_else(|| CliError::config("kick: gradient needs a [units] section"))?;
                Ok(convert_units(units, g, Direction::ToDimensionless, Quantity::Gradient)?)
            }
            _ => Err(CliError::config("kick: give exactly one of amplitude or gradient")),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section.as_ref().ok_or_else(|| CliError::config(format!("{:?} mode needs a [{name}] section", self.mode)))
    }

    pub fn expect_mode(&self, mode: Mode) -> Result<(), CliError> {
        if self.mode != mode {
            return Err(CliError::config(format!("config is for {:?}, not {:?}", self.mode, mode)));
        }
        Ok(())
    }

    pub fn units(&self) -> Result<Option<UnitSystem>, CliError> {
        self.units.as_ref().map(UnitsSection::resolve).transpose()
    }

    pub fn states(&self) -> usize {
        self.basis.as_ref().map_or(qbounce::basis::DEFAULT_STATES, |b| b.states)
    }

    pub fn times(&self) -> Result<Vec<f64>, CliError> {
        self.require(&self.time, "time")?.samples()
    }

    pub fn ensemble(&self) -> Result<&EnsembleSection, CliError> {
        self.require(&self.ensemble, "ensemble")
    }

    pub fn initial(&self) -> Result<&InitialSection, CliError> {
        self.require(&self.initial, "initial")
    }

    pub fn spectrum(&self) -> SpectrumSection {
        self.spectrum.clone().unwrap_or_default()
    }

    /// Pulses with explicit centres (echo modes).
    pub fn pulses(&self) -> Result<Vec<KickPulse>, CliError> {
        let units = self.units()?;
        self.kicks
            .iter()
            .map(|k| {
                let center = k.center.ok_or_else(|| CliError::config("kick: center is required in echo modes"))?;
                Ok(KickPulse::new(k.kind()?, k.amplitude(units.as_ref())?, k.width, center)?)
            })
            .collect()
    }

    pub fn scan_config(&self) -> Result<ScanConfig, CliError> {
        let section = self.require(&self.scan, "scan")?;
        if self.kicks.len() != 2 {
            return Err(CliError::config(format!("scan needs exactly two [[kick]] tables, got {}", self.kicks.len())));
        }
        if self.kicks.iter().any(|k| k.center.is_some()) {
            return Err(CliError::config("scan kicks take no center: the first sits at 0, the second at each delay"));
        }
        let kind = self.kicks[0].kind()?;
        if self.kicks[1].kind()? != kind {
            return Err(CliError::config("both scan kicks must be of the same kind"));
        }
        let units = self.units()?;
        let shape = |k: &KickSection| -> Result<KickShape, CliError> { Ok(KickShape::new(k.amplitude(units.as_ref())?, k.width)) };
        let spin = match section.spin.as_str() {
            "average" => SpinMode::Average,
            "up" => SpinMode::Up,
            "down" => SpinMode::Down,
            other => return Err(CliError::config(format!("scan: unknown spin '{other}' (average, up or down)"))),
        };
        let mut cfg = ScanConfig::new(kind, shape(&self.kicks[0])?, shape(&self.kicks[1])?)
            .with_grid(DelayGrid::new(section.start, section.stop, section.step)?)
            .with_spin(spin);
        cfg.impulsive_threshold = section.impulsive_threshold;
        if let Some(s) = section.steps_per_width {
            cfg.steps_per_width = s;
        }
        Ok(cfg)
    }
}

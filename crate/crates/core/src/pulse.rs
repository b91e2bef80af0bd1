//! Gaussian kick pulses and the time-dependent couplings they produce.
//!
//! Both kick kinds enter the Hamiltonian as a time-dependent linear potential
//! `kappa(t) z` on top of gravity:
//!
//! * magnetic gradient: `V = -s beta(t) z`, so `kappa = -s beta(t)`;
//! * surface shake: in the frame comoving with the mirror, `z' = z - h(t)`,
//!   the moving floor becomes fixed and gravity acquires the inertial term
//!   `g_eff = 1 + h''(t) / 2`, so `kappa = h''(t) / 2`. The factor 1/2 is the
//!   same one that makes the classical free fall read `z'' = -2`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Pulses are integrated over `|t - center| <= PULSE_WINDOW * width`;
/// outside, `exp(-36)` is negligible.
pub const PULSE_WINDOW: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KickKind {
    MagneticGradient,
    SurfaceShake,
}

/// Spin projection along the field, `s = +1` or `s = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// One Gaussian pulse `a exp(-(t - t_k)^2 / sigma^2)`.
///
/// For the magnetic kind this is the gradient envelope `beta(t)`; for the
/// surface shake it is the surface height `h(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickPulse {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub kind: KickKind,
}

impl KickPulse {
    pub fn new(kind: KickKind, amplitude: f64, width: f64, center: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(invalid(format!("pulse width must be positive, got {width}")));
        }
        if !amplitude.is_finite() || !center.is_finite() {
            return Err(invalid("pulse amplitude and center must be finite"));
        }
        Ok(Self { amplitude, width, center, kind })
    }

    pub fn magnetic(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        Self::new(KickKind::MagneticGradient, amplitude, width, center)
    }

    pub fn shake(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        Self::new(KickKind::SurfaceShake, amplitude, width, center)
    }

    /// Pulse area `alpha = a sigma sqrt(pi)`.
    pub fn area(&self) -> f64 {
        self.amplitude * self.width * PI.sqrt()
    }

    /// Amplitude giving the pulse area `alpha` at the given width.
    pub fn amplitude_for_area(area: f64, width: f64) -> f64 {
        area / (width * PI.sqrt())
    }

    pub fn profile(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.width;
        self.amplitude * (-u * u).exp()
    }

    pub fn profile_derivative(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.width;
        -2.0 * u / self.width * self.amplitude * (-u * u).exp()
    }

    pub fn profile_second_derivative(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.width;
        self.amplitude * (-u * u).exp() * (4.0 * u * u - 2.0) / (self.width * self.width)
    }

    /// Integration window `[t_k - 6 sigma, t_k + 6 sigma]`.
    pub fn window(&self) -> (f64, f64) {
        let half = PULSE_WINDOW * self.width;
        (self.center - half, self.center + half)
    }

    /// Coefficient `kappa(t)` of the extra linear potential `kappa(t) z`.
    pub fn coupling(&self, t: f64, spin: Spin) -> f64 {
        match self.kind {
            KickKind::MagneticGradient => -spin.sign() * self.profile(t),
            KickKind::SurfaceShake => 0.5 * self.profile_second_derivative(t),
        }
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }
}

/// Total coupling `kappa(t)` of a pulse train.
pub fn coupling(pulses: &[KickPulse], t: f64, spin: Spin) -> f64 {
    pulses.iter().map(|p| p.coupling(t, spin)).sum()
}

/// Effective gravity in the frame comoving with the shaken surface,
/// `g_eff(t) = 1 + h''(t) / 2`. Magnetic pulses do not contribute.
pub fn shake_potential_coefficient(pulses: &[KickPulse], t: f64) -> f64 {
    1.0 + pulses
        .iter()
        .filter(|p| p.kind == KickKind::SurfaceShake)
        .map(|p| 0.5 * p.profile_second_derivative(t))
        .sum::<f64>()
}

/// Surface height `h(t)`; zero without shake pulses.
pub fn surface_height(pulses: &[KickPulse], t: f64) -> f64 {
    pulses.iter().filter(|p| p.kind == KickKind::SurfaceShake).map(|p| p.profile(t)).sum()
}

pub fn surface_velocity(pulses: &[KickPulse], t: f64) -> f64 {
    pulses
        .iter()
        .filter(|p| p.kind == KickKind::SurfaceShake)
        .map(|p| p.profile_derivative(t))
        .sum()
}

/// Union of the pulse windows as sorted, disjoint intervals.
pub fn merged_windows(pulses: &[KickPulse]) -> Vec<(f64, f64)> {
    let mut windows: Vec<(f64, f64)> = pulses.iter().map(KickPulse::window).collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(windows.len());
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }
    merged
}

/// Smallest width among the pulses whose windows intersect `[a, b]`.
pub(crate) fn active_width(pulses: &[KickPulse], a: f64, b: f64) -> Option<f64> {
    pulses
        .iter()
        .filter(|p| {
            let (lo, hi) = p.window();
            lo < b && hi > a
        })
        .map(|p| p.width)
        .reduce(f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureOptions};

    #[test]
    fn area_matches_gaussian_integral() {
        let p = KickPulse::magnetic(0.5, 0.5, 60.0).unwrap();
        let (lo, hi) = (p.center - 12.0, p.center + 12.0);
        let (num, _, _) = integrate(|t| p.profile(t), lo, hi, QuadratureOptions::default());
        assert!((num - p.area()).abs() < 1e-12);
        assert!((p.area() - 0.443_113_462_726_379_2).abs() < 1e-12);
    }

    #[test]
    fn flat_surface_has_unit_gravity() {
        let flat = [KickPulse::shake(0.0, 0.2, 0.0).unwrap(), KickPulse::shake(0.0, 0.2, 5.0).unwrap()];
        for t in [-3.0, 0.0, 0.1, 5.0, 40.0] {
            assert_eq!(shake_potential_coefficient(&flat, t), 1.0);
        }
    }

    #[test]
    fn shake_coupling_integrates_to_zero() {
        let p = KickPulse::shake(1.5, 1.0, 0.0).unwrap();
        let pulses = [p];
        let (lo, hi) = p.window();
        let (v, _, _) = integrate(
            |t| shake_potential_coefficient(&pulses, t) - 1.0,
            lo,
            hi,
            QuadratureOptions::default(),
        );
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let p = KickPulse::shake(0.6, 0.2, 0.3).unwrap();
        let h = 1e-4;
        for t in [-0.2, 0.1, 0.3, 0.45, 0.9] {
            let fd = (p.profile(t + h) - 2.0 * p.profile(t) + p.profile(t - h)) / (h * h);
            assert!((fd - p.profile_second_derivative(t)).abs() < 1e-5);
            let h1 = 1e-5;
            let fd1 = (p.profile(t + h1) - p.profile(t - h1)) / (2.0 * h1);
            assert!((fd1 - p.profile_derivative(t)).abs() < 1e-7);
        }
    }

    #[test]
    fn windows_merge() {
        let a = KickPulse::magnetic(1.0, 0.2, 0.0).unwrap();
        let b = KickPulse::magnetic(1.0, 0.2, 2.0).unwrap();
        let c = KickPulse::magnetic(1.0, 0.2, 10.0).unwrap();
        let w = merged_windows(&[c, a, b]);
        assert_eq!(w.len(), 2);
        assert!((w[0].0 + 1.2).abs() < 1e-12 && (w[0].1 - 3.2).abs() < 1e-12);
        assert_eq!(active_width(&[a, c], 5.0, 6.0), None);
    }

    #[test]
    fn rejects_bad_width() {
        assert!(KickPulse::magnetic(1.0, 0.0, 0.0).is_err());
        assert!(KickPulse::shake(1.0, -1.0, 0.0).is_err());
    }
}

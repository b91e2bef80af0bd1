use num_complex::Complex64;

use crate::basis::EigenBasis;
use crate::error::{invalid, Result};
use crate::parallel;
use crate::propagator::{free_evolve, KickOperator, Propagator, DEFAULT_STEPS_PER_WIDTH};
use crate::pulse::{KickKind, KickPulse, Spin, PULSE_WINDOW};
use crate::state::StateVector;

/// Amplitude and width of one Gaussian kick in a delay scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickShape {
    pub amplitude: f64,
    pub width: f64,
}

impl KickShape {
    pub fn new(amplitude: f64, width: f64) -> Self {
        Self { amplitude, width }
    }

    /// Shape with pulse area `alpha` at the given width.
    pub fn with_area(area: f64, width: f64) -> Self {
        Self { amplitude: KickPulse::amplitude_for_area(area, width), width }
    }

    pub fn area(&self) -> f64 {
        self.amplitude * self.width * std::f64::consts::PI.sqrt()
    }

    fn pulse(&self, kind: KickKind, center: f64) -> Result<KickPulse> {
        KickPulse::new(kind, self.amplitude, self.width, center)
    }
}

/// Which spin branches enter the recorded population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpinMode {
    /// Equal-weight average over `s = +1` and `s = -1`.
    #[default]
    Average,
    Up,
    Down,
}

impl SpinMode {
    fn spins(self, kind: KickKind) -> &'static [Spin] {
        match (kind, self) {
            // a shake does not couple to the spin
            (KickKind::SurfaceShake, _) | (_, SpinMode::Up) => &[Spin::Up],
            (_, SpinMode::Down) => &[Spin::Down],
            (_, SpinMode::Average) => &[Spin::Up, Spin::Down],
        }
    }
}

/// Uniform delay grid `start, start + step, ..., stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl DelayGrid {
    pub const DEFAULT: Self = Self { start: 2.0, stop: 150.0, step: 0.05 };

    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let grid = Self { start, stop, step };
        grid.validate()?;
        Ok(grid)
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.stop > self.start) || !(self.start >= 0.0) || !self.stop.is_finite() {
            return Err(invalid(format!(
                "delay grid needs 0 <= start < stop and step > 0, got [{}, {}] step {}",
                self.start, self.stop, self.step
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delays(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl Default for DelayGrid {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub kind: KickKind,
    /// First kick, centred at `t = 0`.
    pub first: KickShape,
    /// Second kick, centred at `t = tau`.
    pub second: KickShape,
    pub grid: DelayGrid,
    pub spin: SpinMode,
    /// Magnetic kicks with `width <= impulsive_threshold` are applied as
    /// `exp(i alpha s Z)` instead of being integrated. Zero integrates all.
    pub impulsive_threshold: f64,
    pub steps_per_width: f64,
}

impl ScanConfig {
    pub fn new(kind: KickKind, first: KickShape, second: KickShape) -> Self {
        Self {
            kind,
            first,
            second,
            grid: DelayGrid::DEFAULT,
            spin: SpinMode::Average,
            impulsive_threshold: 0.0,
            steps_per_width: DEFAULT_STEPS_PER_WIDTH,
        }
    }

    pub fn with_grid(mut self, grid: DelayGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_spin(mut self, spin: SpinMode) -> Self {
        self.spin = spin;
        self
    }

    fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for k in [self.first, self.second] {
            if !(k.width > 0.0) || !k.width.is_finite() || !k.amplitude.is_finite() {
                return Err(invalid(format!("bad kick shape {k:?}")));
            }
        }
        Ok(())
    }

    fn impulsive(&self, shape: &KickShape) -> bool {
        self.kind == KickKind::MagneticGradient && shape.width <= self.impulsive_threshold
    }

    /// Delays below this are marked: the two pulses overlap noticeably.
    pub fn overlap_limit(&self) -> f64 {
        3.0 * (self.first.width + self.second.width)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayScan {
    pub delays: Vec<f64>,
    /// Ground-state population `|c_1|^2` after the second kick.
    pub populations: Vec<f64>,
    /// Delays at which the pulses overlap (`tau < 3 (sigma_1 + sigma_2)`).
    pub flagged: Vec<bool>,
}

impl DelayScan {
    pub fn from_samples(delays: Vec<f64>, populations: Vec<f64>) -> Self {
        let flagged = vec![false; delays.len()];
        Self { delays, populations, flagged }
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Grid spacing, or an error if the delays are not uniformly spaced.
    pub fn step(&self) -> Result<f64> {
        uniform_step(&self.delays)
    }
}

pub(crate) fn uniform_step(delays: &[f64]) -> Result<f64> {
    if delays.len() < 2 {
        return Err(crate::Error::TooFewSamples { needed: 2, got: delays.len() });
    }
    let n = delays.len();
    let step = (delays[n - 1] - delays[0]) / (n - 1) as f64;
    // grids written with a few significant digits still count as uniform
    let tol = 1e-6 * step;
    let uniform = step > 0.0 && delays.iter().enumerate().all(|(k, &t)| (t - (delays[0] + k as f64 * step)).abs() <= tol);
    if uniform {
        Ok(step)
    } else {
        Err(crate::Error::NonUniformGrid)
    }
}

fn average_branches(branches: Vec<Vec<f64>>) -> Vec<f64> {
    let weight = 1.0 / branches.len() as f64;
    let mut out = vec![0.0; branches[0].len()];
    for b in &branches {
        for (o, p) in out.iter_mut().zip(b) {
            *o += weight * p;
        }
    }
    out
}

/// Full two-kick scan starting from the ground state.
///
/// The first pulse is propagated once; the second is represented by row 1 of
/// its propagator, obtained by running `e_1` backwards through the pulse
/// window. Each delay then costs one phase-weighted dot product. Delays at
/// which the 6-sigma windows overlap are propagated jointly.
pub fn scan_delay(basis: &EigenBasis, config: &ScanConfig) -> Result<DelayScan> {
    config.validate()?;
    let delays = config.grid.delays();
    let mut branches = Vec::new();
    for &spin in config.spin.spins(config.kind) {
        branches.push(scan_branch(basis, config, spin, &delays)?);
    }
    let flagged = delays.iter().map(|&t| t < config.overlap_limit()).collect();
    Ok(DelayScan { populations: average_branches(branches), delays, flagged })
}

fn scan_branch(basis: &EigenBasis, config: &ScanConfig, spin: Spin, delays: &[f64]) -> Result<Vec<f64>> {
    let m = basis.len();
    let kind = config.kind;
    let (imp1, imp2) = (config.impulsive(&config.first), config.impulsive(&config.second));
    let half = |imp: bool, s: &KickShape| if imp { 0.0 } else { PULSE_WINDOW * s.width };
    let (w1, w2) = (half(imp1, &config.first), half(imp2, &config.second));

    let mut after_first = StateVector::ground(m);
    if imp1 {
        after_first = KickOperator::new(basis, config.first.area(), spin, kind)?.apply(&after_first);
    } else {
        after_first.time = -w1;
        let p1 = config.first.pulse(kind, 0.0)?;
        Propagator::new(basis, &[p1], spin).with_steps_per_width(config.steps_per_width).advance(&mut after_first, w1)?;
    }

    // row 1 of the second pulse's propagator from -w2 to +w2 (pulse centred at 0)
    let row: Vec<Complex64> = if imp2 {
        let op = KickOperator::new(basis, config.second.area(), spin, kind)?;
        (1..=m).map(|j| op.element(1, j)).collect()
    } else {
        let p2 = config.second.pulse(kind, 0.0)?;
        let mut back = StateVector::ground(m);
        back.time = w2;
        Propagator::new(basis, &[p2], spin).with_steps_per_width(config.steps_per_width).advance(&mut back, -w2)?;
        back.coeffs.iter().map(|c| c.conj()).collect()
    };
    let weighted: Vec<Complex64> = row.iter().zip(&after_first.coeffs).map(|(r, c)| r * c).collect();

    let results = parallel::map_indices(delays.len(), |k| {
        let tau = delays[k];
        let gap = tau - w1 - w2;
        if gap >= 0.0 {
            let c1: Complex64 = weighted
                .iter()
                .zip(basis.zeros())
                .map(|(w, z)| w * Complex64::from_polar(1.0, -z * gap))
                .sum();
            Ok(c1.norm_sqr())
        } else {
            joint_population(basis, config, spin, tau)
        }
    });
    results.into_iter().collect()
}

/// Population after integrating both (overlapping) pulses together.
fn joint_population(basis: &EigenBasis, config: &ScanConfig, spin: Spin, tau: f64) -> Result<f64> {
    let p1 = config.first.pulse(config.kind, 0.0)?;
    let p2 = config.second.pulse(config.kind, tau)?;
    let mut state = StateVector::ground(basis.len());
    state.time = p1.window().0.min(p2.window().0);
    let end = p1.window().1.max(p2.window().1);
    Propagator::new(basis, &[p1, p2], spin).with_steps_per_width(config.steps_per_width).advance(&mut state, end)?;
    Ok(state.population(1))
}

/// Scan in the impulsive limit: `c_1(tau) = sum_i P(alpha_2)_{1i} e^{-i z_i tau} P(alpha_1)_{i1}`.
pub fn impulsive_scan_analytic(
    basis: &EigenBasis,
    alpha1: f64,
    alpha2: f64,
    delays: &[f64],
    kind: KickKind,
    spin: SpinMode,
) -> Result<DelayScan> {
    let mut branches = Vec::new();
    for &s in spin.spins(kind) {
        let p1 = KickOperator::new(basis, alpha1, s, kind)?;
        let p2 = KickOperator::new(basis, alpha2, s, kind)?;
        let weights: Vec<Complex64> = (1..=basis.len()).map(|i| p2.element(1, i) * p1.element(i, 1)).collect();
        branches.push(
            delays
                .iter()
                .map(|&tau| {
                    let mut c = StateVector::new(weights.clone(), 0.0);
                    free_evolve(basis, &mut c, tau);
                    c.coeffs.iter().sum::<Complex64>().norm_sqr()
                })
                .collect(),
        );
    }
    Ok(DelayScan::from_samples(delays.to_vec(), average_branches(branches)))
}

/// First-order kick amplitudes `P_{i1}`, `i = 1..M`, referenced to the pulse
/// centre. Off-diagonal entries carry the Gaussian spectral factor
/// `exp(-w^2 sigma^2 / 4)` at `w = z_i - z_1`; the diagonal is fixed by
/// unitarity (plus the first-order phase for magnetic kicks).
pub fn first_order_amplitudes(basis: &EigenBasis, kind: KickKind, shape: KickShape, spin: Spin) -> Vec<Complex64> {
    let z = basis.position();
    let zeros = basis.zeros();
    let sigma = shape.width;
    let mut amps: Vec<Complex64> = (0..basis.len())
        .map(|i| {
            if i == 0 {
                return Complex64::new(0.0, 0.0);
            }
            let w = zeros[i] - zeros[0];
            let spectral = (-w * w * sigma * sigma / 4.0).exp();
            let strength = match kind {
                KickKind::MagneticGradient => spin.sign() * shape.area(),
                // the coupling h''/2 has spectrum -w^2 h(w) / 2
                KickKind::SurfaceShake => 0.5 * w * w * shape.area(),
            };
            Complex64::new(0.0, strength * z[(i, 0)] * spectral)
        })
        .collect();
    let leaked: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let phase = match kind {
        KickKind::MagneticGradient => spin.sign() * shape.area() * z[(0, 0)],
        KickKind::SurfaceShake => 0.0,
    };
    amps[0] = Complex64::from_polar((1.0 - leaked).max(0.0).sqrt(), phase);
    amps
}

/// Weak-kick scan: `|c_1|^2 ~ 2 Re[a_1^* sum_i a_i e^{-i z_i1 tau}] - |a_1|^2`
/// with `a_i = P^(2)_{1i} P^(1)_{i1}` from first-order amplitudes. Only the
/// ground-to-excited frequencies `z_i1` appear.
pub fn perturbative_scan(basis: &EigenBasis, config: &ScanConfig) -> Result<DelayScan> {
    config.validate()?;
    let delays = config.grid.delays();
    let zeros = basis.zeros();
    let mut branches = Vec::new();
    for &spin in config.spin.spins(config.kind) {
        let p1 = first_order_amplitudes(basis, config.kind, config.first, spin);
        let p2 = first_order_amplitudes(basis, config.kind, config.second, spin);
        let a: Vec<Complex64> = p1.iter().zip(&p2).map(|(x, y)| x * y).collect();
        let a1 = a[0];
        branches.push(
            delays
                .iter()
                .map(|&tau| {
                    let sum: Complex64 = a
                        .iter()
                        .zip(zeros)
                        .map(|(ai, z)| ai * Complex64::from_polar(1.0, -(z - zeros[0]) * tau))
                        .sum();
                    2.0 * (a1.conj() * sum).re - a1.norm_sqr()
                })
                .collect(),
        );
    }
    let flagged = delays.iter().map(|&t| t < config.overlap_limit()).collect();
    Ok(DelayScan { populations: average_branches(branches), delays, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short_grid() -> DelayGrid {
        DelayGrid::new(2.0, 20.0, 0.25).unwrap()
    }

    #[test]
    fn grid_is_uniform_and_inclusive() {
        let g = DelayGrid::DEFAULT;
        let d = g.delays();
        assert_eq!(d.len(), 2961);
        assert_eq!(d[0], 2.0);
        assert!((d[d.len() - 1] - 150.0).abs() < 1e-12);
        assert!(uniform_step(&d).is_ok());
        assert!(uniform_step(&[0.0, 1.0, 2.5]).is_err());
        assert!(DelayGrid::new(5.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn zero_kicks_leave_ground_state() {
        let b = EigenBasis::new(20).unwrap();
        let cfg = ScanConfig::new(KickKind::MagneticGradient, KickShape::new(0.0, 0.2), KickShape::new(0.0, 0.2))
            .with_grid(short_grid());
        let s = scan_delay(&b, &cfg).unwrap();
        assert!(s.populations.iter().all(|p| (p - 1.0).abs() < 1e-12));
        let p = perturbative_scan(&b, &cfg).unwrap();
        assert!(p.populations.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn second_kick_off_gives_constant_population() {
        let b = EigenBasis::new(20).unwrap();
        for kind in [KickKind::MagneticGradient, KickKind::SurfaceShake] {
            let cfg = ScanConfig::new(kind, KickShape::new(0.8, 0.2), KickShape::new(0.0, 0.2)).with_grid(short_grid());
            let s = scan_delay(&b, &cfg).unwrap();
            let p0 = s.populations[0];
            assert!(p0 < 0.999);
            assert!(s.populations.iter().all(|p| (p - p0).abs() < 1e-10), "{kind:?}");
        }
    }

    #[test]
    fn cached_path_matches_joint_integration() {
        let b = EigenBasis::new(16).unwrap();
        for kind in [KickKind::MagneticGradient, KickKind::SurfaceShake] {
            let cfg = ScanConfig::new(kind, KickShape::new(1.0, 0.2), KickShape::new(0.7, 0.3)).with_spin(SpinMode::Down);
            for tau in [3.5, 7.25] {
                let fast = scan_branch(&b, &cfg, Spin::Down, &[tau]).unwrap()[0];
                let slow = joint_population(&b, &cfg, Spin::Down, tau).unwrap();
                assert!((fast - slow).abs() < 1e-9, "{kind:?} {tau}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn overlapping_delays_are_flagged() {
        let b = EigenBasis::new(10).unwrap();
        let cfg = ScanConfig::new(KickKind::MagneticGradient, KickShape::new(1.0, 0.2), KickShape::new(1.0, 0.2))
            .with_grid(DelayGrid::new(0.5, 3.0, 0.5).unwrap());
        let s = scan_delay(&b, &cfg).unwrap();
        assert_eq!(s.flagged, vec![true, true, false, false, false, false]);
        assert!(s.populations.iter().all(|p| (0.0..=1.0 + 1e-12).contains(p)));
    }

    #[test]
    fn equal_impulsive_kicks_reduce_to_squared_elements() {
        let b = EigenBasis::new(20).unwrap();
        let alpha = 0.3;
        let delays = [0.0, 1.3, 4.7];
        let scan = impulsive_scan_analytic(&b, alpha, alpha, &delays, KickKind::MagneticGradient, SpinMode::Up).unwrap();
        let p = KickOperator::new(&b, alpha, Spin::Up, KickKind::MagneticGradient).unwrap();
        for (k, &tau) in delays.iter().enumerate() {
            let c: Complex64 = (1..=20)
                .map(|i| p.element(1, i).powi(2) * Complex64::from_polar(1.0, -b.zeros()[i - 1] * tau))
                .sum();
            assert!((c.norm_sqr() - scan.populations[k]).abs() < 1e-14);
        }
        let weak = impulsive_scan_analytic(&b, 1e-7, 1e-7, &delays, KickKind::MagneticGradient, SpinMode::Average).unwrap();
        assert!(weak.populations.iter().all(|p| (p - 1.0).abs() < 1e-12));
    }

    #[test]
    fn first_order_amplitudes_are_normalized() {
        let b = EigenBasis::new(30).unwrap();
        for kind in [KickKind::MagneticGradient, KickKind::SurfaceShake] {
            let a = first_order_amplitudes(&b, kind, KickShape::with_area(0.05, 0.2), Spin::Up);
            let norm: f64 = a.iter().map(|x| x.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }
}

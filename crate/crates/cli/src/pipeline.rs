use serde::Serialize;

use qbounce::airy::MAX_ZEROS;
use qbounce::classical::{self, ClassicalEnsemble, HeightSeries, Kicks};
use qbounce::propagator::{echo_trace, EchoTrace};
use qbounce::signal::{envelope_peak, oscillation_envelope, window_max, window_mean, EnvelopePeak};
use qbounce::spectroscopy::{
    find_peaks_and_match, retrieve_amplitudes, scan_delay, spectrum, DelayScan, PeakReport, Retrieval, Spectrum,
    DEFAULT_MAX_CONDITION,
};
use qbounce::{EigenBasis, KickPulse, Spin, StateVector};

use crate::config::{InitialSection, Mode, SpectrumSection};
use crate::{CliError, RunConfig};

/// Change of an observable when the basis is doubled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    pub states: usize,
    pub doubled: usize,
    pub max_abs_change: f64,
    /// `max_abs_change` over the largest magnitude of the observable.
    pub relative_change: f64,
}

impl Convergence {
    fn between(states: usize, doubled: usize, a: &[f64], b: &[f64]) -> Self {
        let max_abs_change = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        Self { states, doubled, max_abs_change, relative_change: max_abs_change / scale }
    }

    pub fn describe(&self) -> String {
        format!(
            "basis convergence M={} -> {}: max |change| {:.3e}, relative {:.3e}",
            self.states, self.doubled, self.max_abs_change, self.relative_change
        )
    }
}

fn doubled(states: usize) -> Option<usize> {
    let d = (2 * states).min(MAX_ZEROS);
    (d > states).then_some(d)
}

#[derive(Debug, Clone)]
pub struct QuantumRun {
    pub trace: EchoTrace,
    pub states: usize,
    pub captured_norm: f64,
    pub warnings: Vec<String>,
    pub convergence: Option<Convergence>,
}

fn initial_state(basis: &EigenBasis, initial: &InitialSection, t0: f64) -> Result<(StateVector, f64, Option<String>), CliError> {
    match *initial {
        InitialSection::Gaussian { mu_z, sigma_z } => {
            let p = basis.project_gaussian(mu_z, sigma_z)?;
            let mut state = p.state;
            state.time = t0;
            Ok((state, p.captured_norm, p.warning))
        }
        InitialSection::Eigenstate { n } => {
            if n == 0 || n > basis.len() {
                return Err(CliError::config(format!("initial eigenstate {n} outside 1..={}", basis.len())));
            }
            let mut state = StateVector::eigenstate(basis.len(), n);
            state.time = t0;
            Ok((state, 1.0, None))
        }
    }
}

fn trace_for(cfg: &RunConfig, states: usize, times: &[f64], pulses: &[KickPulse]) -> Result<(EchoTrace, f64, Option<String>), CliError> {
    let basis = EigenBasis::new(states)?;
    let (initial, captured, warning) = initial_state(&basis, cfg.initial()?, times[0])?;
    Ok((echo_trace(&basis, &initial, pulses, times)?, captured, warning))
}

pub fn quantum_echo(cfg: &RunConfig, check_convergence: bool) -> Result<QuantumRun, CliError> {
    cfg.expect_mode(Mode::QuantumEcho)?;
    let times = cfg.times()?;
    let pulses = cfg.pulses()?;
    let states = cfg.states();
    let (trace, captured_norm, warning) = trace_for(cfg, states, &times, &pulses)?;
    let mut warnings: Vec<String> = warning.into_iter().collect();
    let worst = trace.norm_error.iter().copied().fold(0.0, f64::max);
    if worst > 1e-9 {
        warnings.push(format!("norm drift {worst:.3e} exceeds 1e-9"));
    }
    let convergence = match doubled(states).filter(|_| check_convergence) {
        Some(d) => {
            let (big, _, _) = trace_for(cfg, d, &times, &pulses)?;
            Some(Convergence::between(states, d, &trace.average, &big.average))
        }
        None => None,
    };
    Ok(QuantumRun { trace, states, captured_norm, warnings, convergence })
}

#[derive(Debug, Clone)]
pub struct ClassicalRun {
    pub series: HeightSeries,
    pub ensemble: ClassicalEnsemble,
    pub seed: u64,
}

pub fn seed(cfg: &RunConfig, seed_override: Option<u64>) -> u64 {
    seed_override.or(cfg.seed).unwrap_or(0)
}

pub fn classical_echo(cfg: &RunConfig, seed_override: Option<u64>) -> Result<ClassicalRun, CliError> {
    cfg.expect_mode(Mode::ClassicalEcho)?;
    let section = cfg.ensemble()?;
    let seed = seed(cfg, seed_override);
    let mut ensemble = classical::sample_initial(section.particles, section.distribution(), seed)?;
    let times = cfg.times()?;
    ensemble.time = times[0];
    let series =
        classical::mean_height_series(&ensemble, &cfg.pulses()?, &times, section.verlet_step, section.escape_height())?;
    Ok(ClassicalRun { series, ensemble, seed })
}

/// Phase-space snapshot: `(z, v, spin)` of every particle at time `t`.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub particles: Vec<(f64, f64, Spin)>,
}

pub fn classical_snapshots(run: &ClassicalRun, cfg: &RunConfig, at: &[f64]) -> Result<Vec<Snapshot>, CliError> {
    let section = cfg.ensemble()?;
    let pulses = cfg.pulses()?;
    let kicks = Kicks::new(&pulses, section.verlet_step)?;
    let mut sorted = at.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first().is_some_and(|&t| t < run.ensemble.time) {
        return Err(CliError::config("snapshot times must not precede the initial ensemble"));
    }
    let spins: &[Spin] = if pulses.iter().any(|p| p.kind == qbounce::KickKind::MagneticGradient) {
        &[Spin::Up, Spin::Down]
    } else {
        &[Spin::Up]
    };
    let mut out: Vec<Snapshot> = sorted.iter().map(|&time| Snapshot { time, particles: Vec::new() }).collect();
    for &spin in spins {
        let mut e = run.ensemble.clone().with_spin(spin);
        for snap in out.iter_mut() {
            if snap.time > e.time {
                classical::propagate(&mut e, &kicks, snap.time, section.escape_height())?;
            }
            snap.particles.extend(e.z.iter().zip(&e.v).map(|(&z, &v)| (kicks.lab_height(z, snap.time), v, spin)));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ScanRun {
    pub scan: DelayScan,
    pub states: usize,
    pub convergence: Option<Convergence>,
}

pub fn delay_scan(cfg: &RunConfig, check_convergence: bool) -> Result<ScanRun, CliError> {
    cfg.expect_mode(Mode::Scan)?;
    let config = cfg.scan_config()?;
    let states = cfg.states();
    let scan = scan_delay(&EigenBasis::new(states)?, &config)?;
    let convergence = match doubled(states).filter(|_| check_convergence) {
        Some(d) => {
            let big = scan_delay(&EigenBasis::new(d)?, &config)?;
            Some(Convergence::between(states, d, &scan.populations, &big.populations))
        }
        None => None,
    };
    Ok(ScanRun { scan, states, convergence })
}

#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: Spectrum,
    pub report: PeakReport,
}

pub fn analyze_spectrum(
    delays: &[f64],
    populations: &[f64],
    section: &SpectrumSection,
    states: usize,
) -> Result<SpectrumRun, CliError> {
    let basis_transitions = transitions(states)?;
    let spectrum = spectrum(delays, populations, section.window()?, section.pad)?;
    let report = find_peaks_and_match(&spectrum, &basis_transitions, section.lines, section.floor)?;
    Ok(SpectrumRun { spectrum, report })
}

/// `z_i - z_1` for `i = 2..=states`, straight from the Airy zeros.
pub fn transitions(states: usize) -> Result<Vec<f64>, CliError> {
    let zeros = qbounce::airy::airy_zeros(states.max(2))?;
    Ok(zeros[1..].iter().map(|z| z - zeros[0]).collect())
}

pub fn retrieve(delays: &[f64], populations: &[f64], lines: usize, states: usize) -> Result<Retrieval, CliError> {
    Ok(retrieve_amplitudes(delays, populations, &transitions(states)?, lines, DEFAULT_MAX_CONDITION)?)
}

/// Envelope statistics around an expected echo.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EchoSummary {
    pub kick_time: f64,
    pub window: f64,
    /// Envelope maximum in `[2 t_k - 10, 2 t_k + 10]`.
    pub echo_time: f64,
    pub echo_value: f64,
    pub echo_interior: bool,
    /// Envelope over `[1.5 t_k, 1.8 t_k]`.
    pub dead_zone_mean: f64,
    pub dead_zone_max: f64,
    /// Envelope maximum in `[3 t_k - 10, 3 t_k + 10]`, if sampled.
    pub recurrence_time: Option<f64>,
    pub recurrence_value: Option<f64>,
    pub recurrence_interior: Option<bool>,
}

pub fn echo_summary(times: &[f64], values: &[f64], window: f64, kick_time: f64) -> Option<EchoSummary> {
    let dt = times.get(1)? - times[0];
    let env = oscillation_envelope(values, dt, window);
    let echo = envelope_peak(times, &env, 2.0 * kick_time - 10.0, 2.0 * kick_time + 10.0)?;
    let rec: Option<EnvelopePeak> = envelope_peak(times, &env, 3.0 * kick_time - 10.0, 3.0 * kick_time + 10.0);
    Some(EchoSummary {
        kick_time,
        window,
        echo_time: echo.time,
        echo_value: echo.value,
        echo_interior: echo.interior,
        dead_zone_mean: window_mean(times, &env, 1.5 * kick_time, 1.8 * kick_time)?,
        dead_zone_max: window_max(times, &env, 1.5 * kick_time, 1.8 * kick_time)?,
        recurrence_time: rec.map(|r| r.time),
        recurrence_value: rec.map(|r| r.value),
        recurrence_interior: rec.map(|r| r.interior),
    })
}

/// Envelope window for a configuration: one bounce period `2 sqrt(mu_z)` for
/// a packet released at height `mu_z`, otherwise the `1 -> 2` beat period.
pub fn envelope_window(cfg: &RunConfig) -> f64 {
    let mu = match (&cfg.initial, &cfg.ensemble) {
        (Some(InitialSection::Gaussian { mu_z, .. }), _) => Some(*mu_z),
        (_, Some(e)) => Some(e.mu_z),
        _ => None,
    };
    match mu {
        Some(mu) => 2.0 * mu.sqrt(),
        None => {
            let z = qbounce::airy::airy_zeros(2).expect("two zeros");
            2.0 * std::f64::consts::PI / (z[1] - z[0])
        }
    }
}

/// Centre of the last kick, the one that triggers the echo.
pub fn echo_kick_time(cfg: &RunConfig) -> Option<f64> {
    cfg.kicks.iter().filter_map(|k| k.center).reduce(f64::max)
}

//! Browser demo: three operations exported through wasm-bindgen. The plain
//! functions in [`demo`] do the work and are tested natively; the exported
//! wrappers only convert errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use wasm_bindgen::prelude::*;

pub mod demo {
    use qbounce::propagator::echo_trace;
    use qbounce::spectroscopy::{find_peaks_and_match, scan_delay, spectrum, DelayGrid, KickShape, ScanConfig, SpinMode, Window};
    use qbounce::{EigenBasis, KickKind, KickPulse};

    pub type Result<T> = std::result::Result<T, String>;

    fn err(e: qbounce::Error) -> String {
        e.to_string()
    }

    /// Eigenstates sampled on `points` heights in `[0, z_max]`, shifted by
    /// their energies so they stack like a level diagram.
    #[derive(Debug, Clone)]
    pub struct Levels {
        pub heights: Vec<f64>,
        pub energies: Vec<f64>,
        /// Row-major, one row of `heights.len()` values per state.
        pub curves: Vec<f64>,
    }

    pub fn eigenstates(count: usize, z_max: f64, points: usize) -> Result<Levels> {
        if points < 2 || !(z_max > 0.0) {
            return Err("need at least two points and a positive height range".into());
        }
        let basis = EigenBasis::new(count).map_err(err)?;
        let heights: Vec<f64> = (0..points).map(|k| z_max * k as f64 / (points - 1) as f64).collect();
        let mut curves = Vec::with_capacity(count * points);
        for n in 1..=count {
            for &z in &heights {
                curves.push(basis.zeros()[n - 1] + basis.eval_eigenstate(n, z).map_err(err)?);
            }
        }
        Ok(Levels { heights, energies: basis.zeros().to_vec(), curves })
    }

    /// Spin-averaged `<z>(t)` of a Gaussian packet kicked once by a magnetic pulse.
    #[derive(Debug, Clone)]
    pub struct Echo {
        pub times: Vec<f64>,
        pub average: Vec<f64>,
        pub spin_up: Vec<f64>,
        pub spin_down: Vec<f64>,
    }

    #[allow(clippy::too_many_arguments)]
    pub fn quantum_echo(
        states: usize,
        mu_z: f64,
        sigma_z: f64,
        amplitude: f64,
        width: f64,
        kick_time: f64,
        t_max: f64,
        dt: f64,
    ) -> Result<Echo> {
        if !(dt > 0.0) || !(t_max > 0.0) || t_max / dt > 1e6 {
            return Err("need 0 < dt and at most 1e6 samples".into());
        }
        let basis = EigenBasis::new(states).map_err(err)?;
        let initial = basis.project_gaussian(mu_z, sigma_z).map_err(err)?.state;
        let pulses = [KickPulse::new(KickKind::MagneticGradient, amplitude, width, kick_time).map_err(err)?];
        let n = (t_max / dt).floor() as usize + 1;
        let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let t = echo_trace(&basis, &initial, &pulses, &times).map_err(err)?;
        Ok(Echo { times: t.times, average: t.average, spin_up: t.spin_up, spin_down: t.spin_down })
    }

    /// Delay scan, its spectrum, and the lines matched to `z_i - z_1`.
    #[derive(Debug, Clone)]
    pub struct ScanSpectrum {
        pub delays: Vec<f64>,
        pub populations: Vec<f64>,
        pub frequencies: Vec<f64>,
        pub amplitudes: Vec<f64>,
        /// `(i, measured, theory, relative error %)` flattened.
        pub lines: Vec<f64>,
    }

    #[allow(clippy::too_many_arguments)]
    pub fn scan_spectrum(
        states: usize,
        shake: bool,
        a1: f64,
        a2: f64,
        width: f64,
        tau_max: f64,
        step: f64,
        floor: f64,
    ) -> Result<ScanSpectrum> {
        let basis = EigenBasis::new(states).map_err(err)?;
        let kind = if shake { KickKind::SurfaceShake } else { KickKind::MagneticGradient };
        let cfg = ScanConfig::new(kind, KickShape::new(a1, width), KickShape::new(a2, width))
            .with_grid(DelayGrid::new(2.0, tau_max, step).map_err(err)?)
            .with_spin(SpinMode::Up);
        let scan = scan_delay(&basis, &cfg).map_err(err)?;
        let spec = spectrum(&scan.delays, &scan.populations, Window::Hann, 8).map_err(err)?;
        let report = find_peaks_and_match(&spec, &basis.transitions(), 5.min(states - 1), floor).map_err(err)?;
        let lines = report
            .matches
            .iter()
            .flat_map(|m| [m.i as f64, m.measured, m.theory, m.relative_error_percent])
            .collect();
        Ok(ScanSpectrum {
            delays: scan.delays,
            populations: scan.populations,
            frequencies: spec.frequencies,
            amplitudes: spec.amplitudes,
            lines,
        })
    }
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct Levels(demo::Levels);

#[wasm_bindgen]
impl Levels {
    #[wasm_bindgen(getter)]
    pub fn heights(&self) -> Vec<f64> {
        self.0.heights.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn energies(&self) -> Vec<f64> {
        self.0.energies.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn curves(&self) -> Vec<f64> {
        self.0.curves.clone()
    }
}

#[wasm_bindgen]
pub fn eigenstates(count: usize, z_max: f64, points: usize) -> Result<Levels, JsError> {
    demo::eigenstates(count, z_max, points).map(Levels).map_err(js)
}

#[wasm_bindgen]
pub struct Echo(demo::Echo);

#[wasm_bindgen]
impl Echo {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn average(&self) -> Vec<f64> {
        self.0.average.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn spin_up(&self) -> Vec<f64> {
        self.0.spin_up.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn spin_down(&self) -> Vec<f64> {
        self.0.spin_down.clone()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn quantum_echo(
    states: usize,
    mu_z: f64,
    sigma_z: f64,
    amplitude: f64,
    width: f64,
    kick_time: f64,
    t_max: f64,
    dt: f64,
) -> Result<Echo, JsError> {
    demo::quantum_echo(states, mu_z, sigma_z, amplitude, width, kick_time, t_max, dt).map(Echo).map_err(js)
}

#[wasm_bindgen]
pub struct ScanSpectrum(demo::ScanSpectrum);

#[wasm_bindgen]
impl ScanSpectrum {
    #[wasm_bindgen(getter)]
    pub fn delays(&self) -> Vec<f64> {
        self.0.delays.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn populations(&self) -> Vec<f64> {
        self.0.populations.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn frequencies(&self) -> Vec<f64> {
        self.0.frequencies.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn amplitudes(&self) -> Vec<f64> {
        self.0.amplitudes.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn lines(&self) -> Vec<f64> {
        self.0.lines.clone()
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn scan_spectrum(
    states: usize,
    shake: bool,
    a1: f64,
    a2: f64,
    width: f64,
    tau_max: f64,
    step: f64,
    floor: f64,
) -> Result<ScanSpectrum, JsError> {
    demo::scan_spectrum(states, shake, a1, a2, width, tau_max, step, floor).map(ScanSpectrum).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::demo;

    #[test]
    fn levels_stack_at_their_energies() {
        let l = demo::eigenstates(3, 12.0, 121).unwrap();
        assert_eq!(l.curves.len(), 3 * 121);
        // every state vanishes at the floor, so each curve starts at its energy
        for n in 0..3 {
            assert!((l.curves[n * 121] - l.energies[n]).abs() < 1e-12);
        }
        assert!(demo::eigenstates(3, 12.0, 1).is_err());
    }

    #[test]
    fn echo_trace_shows_echo_after_kick() {
        let e = demo::quantum_echo(40, 20.0, 8.0, 0.5, 0.5, 60.0, 140.0, 0.1).unwrap();
        assert_eq!(e.times.len(), 1401);
        assert!((e.average[0] - e.spin_up[0]).abs() < 1e-12);
        let env = qbounce::signal::oscillation_envelope(&e.average, 0.1, 2.0 * 20f64.sqrt());
        let peak = qbounce::signal::envelope_peak(&e.times, &env, 110.0, 130.0).unwrap();
        let dead = qbounce::signal::window_max(&e.times, &env, 90.0, 108.0).unwrap();
        assert!(peak.interior && peak.value > 1.5 * dead, "{peak:?} vs {dead}");
        assert!(demo::quantum_echo(40, 20.0, 8.0, 0.5, 0.5, 60.0, 140.0, 0.0).is_err());
    }

    #[test]
    fn scan_finds_transition_lines() {
        let s = demo::scan_spectrum(20, false, 2.0, 1.0, 0.2, 80.0, 0.05, 0.001).unwrap();
        assert_eq!(s.lines.len() % 4, 0);
        assert!(s.lines.len() >= 12);
        for l in s.lines.chunks(4) {
            assert!(l[3].abs() < 2.0, "{l:?}");
        }
    }
}

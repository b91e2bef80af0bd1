use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use super::scan::uniform_step;
use crate::error::{invalid, Error, Result};

/// Shortest series accepted by [`spectrum`].
pub const MIN_SAMPLES: usize = 256;

/// Default noise floor for peak picking, relative to the global maximum.
pub const DEFAULT_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    Rectangular,
    #[default]
    Hann,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Angular frequencies `2 pi k / (n_padded * dtau)`, `k = 0..n_padded/2`.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }
}

/// Magnitude spectrum of a uniformly sampled signal after removing its mean,
/// applying `window` and zero-padding to `pad` times the length (rounded up
/// to a power of two).
pub fn spectrum(delays: &[f64], values: &[f64], window: Window, pad: usize) -> Result<Spectrum> {
    if delays.len() != values.len() {
        return Err(invalid("delays and values differ in length"));
    }
    if values.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_SAMPLES, got: values.len() });
    }
    let step = uniform_step(delays)?;
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let padded = (n * pad.max(1)).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); padded];
    for (k, (b, v)) in buf.iter_mut().zip(values).enumerate() {
        let w = match window {
            Window::Rectangular => 1.0,
            Window::Hann => 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos(),
        };
        *b = Complex::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let half = padded / 2 + 1;
    let dw = 2.0 * PI / (padded as f64 * step);
    Ok(Spectrum {
        frequencies: (0..half).map(|k| k as f64 * dw).collect(),
        amplitudes: buf[..half].iter().map(|c| c.norm() / n as f64).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub omega: f64,
    pub amplitude: f64,
}

/// A spectral line matched to the transition `z_i - z_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMatch {
    pub i: usize,
    pub measured: f64,
    pub theory: f64,
    /// `100 (measured - theory) / theory`.
    pub relative_error_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeakReport {
    /// All peaks above the floor, sorted by frequency.
    pub peaks: Vec<Peak>,
    /// One entry per requested line that received a peak, by `i`.
    pub matches: Vec<LineMatch>,
    pub warning: Option<String>,
}

/// Picks local maxima above `floor` times the global maximum, refines them by
/// a parabola through the log-magnitudes of the three top bins, and assigns
/// each to the nearest of the transitions `transitions[k] = z_{k+2} - z_1`.
/// Each of the first `count` lines keeps its strongest assigned peak.
pub fn find_peaks_and_match(spec: &Spectrum, transitions: &[f64], count: usize, floor: f64) -> Result<PeakReport> {
    if count > transitions.len() {
        return Err(invalid(format!("asked for {count} lines but only {} transitions are known", transitions.len())));
    }
    let a = &spec.amplitudes;
    let dw = spec.resolution();
    let max = a.iter().skip(1).copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if max > 0.0 {
        for k in 1..a.len().saturating_sub(1) {
            if a[k] > a[k - 1] && a[k] >= a[k + 1] && a[k] >= floor * max {
                let (l0, l1, l2) = (a[k - 1].max(1e-300).ln(), a[k].ln(), a[k + 1].max(1e-300).ln());
                let curvature = l0 - 2.0 * l1 + l2;
                let shift = if curvature < 0.0 { (0.5 * (l0 - l2) / curvature).clamp(-0.5, 0.5) } else { 0.0 };
                let height = (l1 - 0.25 * (l0 - l2) * shift).exp();
                peaks.push(Peak { omega: (k as f64 + shift) * dw, amplitude: height });
            }
        }
    }
    let mut best: Vec<Option<Peak>> = vec![None; count];
    for p in &peaks {
        let nearest = transitions
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - p.omega).abs().total_cmp(&(y.1 - p.omega).abs()))
            .map(|(k, _)| k);
        if let Some(k) = nearest.filter(|&k| k < count) {
            if best[k].is_none_or(|b| p.amplitude > b.amplitude) {
                best[k] = Some(*p);
            }
        }
    }
    let matches: Vec<LineMatch> = best
        .iter()
        .enumerate()
        .filter_map(|(k, p)| {
            p.map(|p| LineMatch {
                i: k + 2,
                measured: p.omega,
                theory: transitions[k],
                relative_error_percent: 100.0 * (p.omega - transitions[k]) / transitions[k],
            })
        })
        .collect();
    let warning = (matches.len() < count).then(|| {
        let missing: Vec<String> =
            best.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(k, _)| (k + 2).to_string()).collect();
        format!("no peak above the floor for line(s) i = {}", missing.join(", "))
    });
    Ok(PeakReport { peaks, matches, warning })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| 2.0 + k as f64 * dt).collect()
    }

    #[test]
    fn pure_tone_peaks_at_its_frequency() {
        let t = grid(2961, 0.05);
        let x: Vec<f64> = t.iter().map(|t| (1.75 * t).cos()).collect();
        for window in [Window::Hann, Window::Rectangular] {
            let s = spectrum(&t, &x, window, 8).unwrap();
            let r = find_peaks_and_match(&s, &[1.75, 3.182], 1, DEFAULT_FLOOR).unwrap();
            assert_eq!(r.matches.len(), 1);
            assert!((r.matches[0].measured - 1.75).abs() < s.resolution(), "{window:?} {:?}", r.matches);
        }
    }

    #[test]
    fn constant_signal_has_no_peaks() {
        let t = grid(512, 0.05);
        let s = spectrum(&t, &vec![0.7; 512], Window::Hann, 4).unwrap();
        let r = find_peaks_and_match(&s, &[1.75], 1, DEFAULT_FLOOR).unwrap();
        assert!(r.peaks.is_empty());
        assert!(r.warning.is_some());
    }

    #[test]
    fn frequency_axis_and_errors() {
        let t = grid(300, 0.1);
        let s = spectrum(&t, &vec![0.0; 300], Window::Rectangular, 1).unwrap();
        assert!((s.resolution() - 2.0 * PI / (512.0 * 0.1)).abs() < 1e-15);
        assert!(matches!(spectrum(&t[..100], &[0.0; 100], Window::Hann, 1), Err(Error::TooFewSamples { .. })));
        let mut bad = t.clone();
        bad[150] += 0.03;
        assert!(matches!(spectrum(&bad, &vec![0.0; 300], Window::Hann, 1), Err(Error::NonUniformGrid)));
    }

    #[test]
    fn lines_keep_their_strongest_peak() {
        let t = grid(4000, 0.05);
        let x: Vec<f64> = t.iter().map(|t| (1.75 * t).cos() + 0.3 * (1.43 * t).cos() + 0.5 * (3.182 * t).sin()).collect();
        let s = spectrum(&t, &x, Window::Hann, 8).unwrap();
        let r = find_peaks_and_match(&s, &[1.75, 3.182, 4.449], 3, DEFAULT_FLOOR).unwrap();
        assert_eq!(r.matches.iter().map(|m| m.i).collect::<Vec<_>>(), vec![2, 3]);
        assert!(r.matches.iter().all(|m| m.relative_error_percent.abs() < 0.5));
        assert!(r.warning.unwrap().contains("i = 4"));
        assert!(r.peaks.windows(2).all(|w| w[0].omega < w[1].omega));
    }
}

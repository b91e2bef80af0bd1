//! Envelope analysis of oscillating traces such as `<z>(t)`.
//!
//! The envelope at `t` is `sqrt(2)` times the RMS of the detrended signal in a
//! centred window; detrending subtracts a centred moving average over the same
//! window. For a sinusoid the result is its amplitude.

/// Centred moving average with `half` samples on each side (truncated at edges).
pub fn moving_average(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Oscillation amplitude of `values` sampled every `dt`, using a window of
/// duration `window` (typically one oscillation period).
pub fn oscillation_envelope(values: &[f64], dt: f64, window: f64) -> Vec<f64> {
    let half = ((0.5 * window / dt).round() as usize).max(1);
    let trend = moving_average(values, half);
    let squares: Vec<f64> = values.iter().zip(&trend).map(|(v, m)| (v - m).powi(2)).collect();
    moving_average(&squares, half).into_iter().map(|p| (2.0 * p).sqrt()).collect()
}

/// Largest envelope value in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePeak {
    pub time: f64,
    pub value: f64,
    /// The maximum is a true local maximum rather than sitting on a window edge.
    pub interior: bool,
}

fn in_window(times: &[f64], lo: f64, hi: f64) -> impl Iterator<Item = usize> + '_ {
    times.iter().enumerate().filter(move |(_, &t)| t >= lo && t <= hi).map(|(i, _)| i)
}

pub fn envelope_peak(times: &[f64], envelope: &[f64], lo: f64, hi: f64) -> Option<EnvelopePeak> {
    let idx: Vec<usize> = in_window(times, lo, hi).collect();
    let best = *idx.iter().max_by(|&&a, &&b| envelope[a].total_cmp(&envelope[b]))?;
    let interior = best != idx[0] && best != idx[idx.len() - 1];
    Some(EnvelopePeak { time: times[best], value: envelope[best], interior })
}

/// Largest envelope value in `[lo, hi]`.
pub fn window_max(times: &[f64], envelope: &[f64], lo: f64, hi: f64) -> Option<f64> {
    in_window(times, lo, hi).map(|i| envelope[i]).reduce(f64::max)
}

pub fn window_mean(times: &[f64], envelope: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let idx: Vec<usize> = in_window(times, lo, hi).collect();
    if idx.is_empty() {
        return None;
    }
    Some(idx.iter().map(|&i| envelope[i]).sum::<f64>() / idx.len() as f64)
}

/// Centre of an echo in `[lo, hi]`: the peak of the cross-correlation of the
/// squared detrended signal with a Gaussian of the given width.
pub fn echo_center(times: &[f64], values: &[f64], period: f64, lo: f64, hi: f64, width: f64) -> Option<f64> {
    if times.len() < 2 {
        return None;
    }
    let dt = times[1] - times[0];
    let half = ((0.5 * period / dt).round() as usize).max(1);
    let trend = moving_average(values, half);
    let power: Vec<f64> = values.iter().zip(&trend).map(|(v, m)| (v - m).powi(2)).collect();
    let reach = (4.0 * width / dt).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach).map(|k| (-(k as f64 * dt / width).powi(2)).exp()).collect();
    let n = power.len() as isize;
    in_window(times, lo, hi)
        .map(|i| {
            let mut acc = 0.0;
            for (kk, w) in kernel.iter().enumerate() {
                let j = i as isize + kk as isize - reach;
                if (0..n).contains(&j) {
                    acc += w * power[j as usize];
                }
            }
            (times[i], acc)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_of_modulated_sine() {
        let dt = 0.01;
        let times: Vec<f64> = (0..20000).map(|i| i as f64 * dt).collect();
        let env_true = |t: f64| 1.0 + 0.5 * (-((t - 120.0) / 10.0).powi(2)).exp();
        let values: Vec<f64> = times.iter().map(|&t| 3.0 + env_true(t) * (2.0 * t).sin()).collect();
        let env = oscillation_envelope(&values, dt, std::f64::consts::PI);
        for i in (2000..18000).step_by(500) {
            assert!((env[i] - env_true(times[i])).abs() < 0.02, "t = {}", times[i]);
        }
        let peak = envelope_peak(&times, &env, 100.0, 140.0).unwrap();
        assert!(peak.interior);
        assert!((peak.time - 120.0).abs() < 1.0);
        let center = echo_center(&times, &values, std::f64::consts::PI, 100.0, 140.0, 3.0).unwrap();
        assert!((center - 120.0).abs() < 1.0);
        assert!(window_max(&times, &env, 10.0, 20.0).unwrap() < 1.05);
        assert!((window_mean(&times, &env, 10.0, 20.0).unwrap() - 1.0).abs() < 0.02);
    }

    #[test]
    fn edge_maximum_is_not_interior() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let env: Vec<f64> = times.clone();
        let peak = envelope_peak(&times, &env, 10.0, 20.0).unwrap();
        assert!(!peak.interior);
        assert_eq!(peak.time, 20.0);
    }
}

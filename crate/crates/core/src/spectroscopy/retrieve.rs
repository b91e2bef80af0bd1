//! Partial reconstruction of the first kick's amplitudes from a weak-kick
//! scan. With equal kicks the population reads
//! `|P11|^4 + sum_i 2 |P11|^2 |P1i|^2 cos(z_i1 tau - 2 theta_i)`, where
//! `theta_i = arg P1i - arg P11`. Fitting the known frequencies gives the
//! magnitudes and `theta_i` up to a multiple of `pi`.

use nalgebra::{DMatrix, DVector};

use super::scan::uniform_step;
use crate::error::{invalid, Error, Result};

/// Largest singular-value ratio accepted for the design matrix.
pub const DEFAULT_MAX_CONDITION: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievedAmplitude {
    pub i: usize,
    /// `|P_1i|`.
    pub magnitude: f64,
    /// `arg P_1i - arg P_11` in `(-pi/2, pi/2]`; the true value may differ by `pi`.
    pub phase: f64,
    /// Fitted cosine amplitude and phase of the `z_i1` line.
    pub line_amplitude: f64,
    pub line_phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    /// `|P_11|`, taken real and positive.
    pub ground: f64,
    pub amplitudes: Vec<RetrievedAmplitude>,
    pub residual_rms: f64,
    pub condition: f64,
    /// Every phase is determined only modulo `pi`.
    pub phase_ambiguity: f64,
}

/// Least-squares fit of `const + sum_i A_i cos(z_i1 tau + phi_i)` for the
/// lines `i = 2..=count+1`, `transitions[k] = z_{k+2} - z_1`.
pub fn retrieve_amplitudes(
    delays: &[f64],
    populations: &[f64],
    transitions: &[f64],
    count: usize,
    max_condition: f64,
) -> Result<Retrieval> {
    if delays.len() != populations.len() {
        return Err(invalid("delays and populations differ in length"));
    }
    if count == 0 || count > transitions.len() {
        return Err(invalid(format!("line count {count} outside 1..={}", transitions.len())));
    }
    let cols = 1 + 2 * count;
    if delays.len() < 2 * cols {
        return Err(Error::TooFewSamples { needed: 2 * cols, got: delays.len() });
    }
    uniform_step(delays)?;
    let design = DMatrix::from_fn(delays.len(), cols, |r, c| {
        let tau = delays[r];
        match c {
            0 => 1.0,
            _ if c % 2 == 1 => (transitions[(c - 1) / 2] * tau).cos(),
            _ => (transitions[(c - 2) / 2] * tau).sin(),
        }
    });
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > max_condition {
        return Err(Error::IllConditioned { condition });
    }
    let rhs = DVector::from_column_slice(populations);
    let coef = svd.solve(&rhs, 0.0).map_err(|e| invalid(e.to_string()))?;
    let residual = &design * &coef - &rhs;
    let residual_rms = (residual.norm_squared() / delays.len() as f64).sqrt();

    let constant = coef[0];
    if !(constant > 0.0) {
        return Err(invalid(format!("fitted constant {constant} is not positive; kicks too strong for the weak-kick model")));
    }
    let ground_sq = constant.sqrt();
    let amplitudes = (0..count)
        .map(|k| {
            // C cos + S sin = A cos(w tau + phi) with C = A cos phi, S = -A sin phi
            let (c, s) = (coef[1 + 2 * k], coef[2 + 2 * k]);
            let line_amplitude = c.hypot(s);
            let line_phase = (-s).atan2(c);
            RetrievedAmplitude {
                i: k + 2,
                magnitude: (line_amplitude / (2.0 * ground_sq)).sqrt(),
                phase: wrap_half_pi(-0.5 * line_phase),
                line_amplitude,
                line_phase,
            }
        })
        .collect();
    Ok(Retrieval { ground: ground_sq.sqrt(), amplitudes, residual_rms, condition, phase_ambiguity: std::f64::consts::PI })
}

/// Maps an angle into `(-pi/2, pi/2]`.
fn wrap_half_pi(x: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let mut y = x.rem_euclid(PI);
    if y > FRAC_PI_2 {
        y -= PI;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn recovers_synthetic_lines() {
        let w = [1.75, 3.182, 4.449];
        let (p11, p): (f64, [(f64, f64); 3]) = (0.98, [(0.1, 0.4), (0.05, -1.2), (0.02, 1.5)]);
        let delays: Vec<f64> = (0..3000).map(|k| 2.0 + 0.05 * k as f64).collect();
        let pops: Vec<f64> = delays
            .iter()
            .map(|&t| {
                p11.powi(4)
                    + p.iter().zip(&w).map(|(&(m, th), &w)| 2.0 * p11 * p11 * m * m * (w * t - 2.0 * th).cos()).sum::<f64>()
            })
            .collect();
        let r = retrieve_amplitudes(&delays, &pops, &w, 3, DEFAULT_MAX_CONDITION).unwrap();
        assert!((r.ground - p11).abs() < 1e-12);
        for (got, &(m, th)) in r.amplitudes.iter().zip(&p) {
            assert!((got.magnitude - m).abs() < 1e-12);
            assert!((wrap_half_pi(got.phase - th)).abs() < 1e-10, "{} vs {th}", got.phase);
        }
        assert!(r.residual_rms < 1e-12);
        assert_eq!(r.phase_ambiguity, PI);
    }

    #[test]
    fn unresolvable_lines_are_ill_conditioned() {
        let delays: Vec<f64> = (0..100).map(|k| 0.01 * k as f64).collect();
        let pops = vec![1.0; 100];
        let r = retrieve_amplitudes(&delays, &pops, &[1.75, 1.7501], 2, DEFAULT_MAX_CONDITION);
        assert!(matches!(r, Err(Error::IllConditioned { .. })), "{r:?}");
    }

    #[test]
    fn wrapping() {
        assert!((wrap_half_pi(PI) - 0.0).abs() < 1e-15);
        assert!((wrap_half_pi(-2.0) - (PI - 2.0)).abs() < 1e-15);
        assert!((wrap_half_pi(PI / 2.0) - PI / 2.0).abs() < 1e-15);
    }
}
